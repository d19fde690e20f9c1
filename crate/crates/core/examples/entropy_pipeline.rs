use sensor_anomaly::entropy::{beta_entropy_closed_form, gaussian_entropy_closed_form};
use sensor_anomaly::{EntropyPipeline, GeneratorSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        ("N(0, 1)", GeneratorSpec::gaussian(1, 0.0, 1.0), gaussian_entropy_closed_form(1.0)?),
        ("Beta(4, 4)", GeneratorSpec::beta(1, 4.0, 4.0), beta_entropy_closed_form(4.0, 4.0)?),
        ("Beta(4, 4)^2", GeneratorSpec::beta(2, 4.0, 4.0), 2.0 * beta_entropy_closed_form(4.0, 4.0)?),
    ];
    let pipeline = EntropyPipeline::default();
    for (name, generator, truth) in cases {
        let data = generator.generate(10_000, 1)?;
        let out = pipeline.run(&data, 1)?;
        println!(
            "{name:<13} plug-in {:+.4}  corrected {:+.4}  true {:+.4}  (k = {})",
            out.plug_in.value, out.corrected.value, truth, out.plug_in.k
        );
    }
    Ok(())
}
