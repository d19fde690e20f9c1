use sensor_anomaly::evaluation::{qq_against_normal, replicate, sweep_csv};
use sensor_anomaly::{convergence_sweep, EntropyPipeline, GeneratorSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let generator = GeneratorSpec::gaussian(1, 0.0, 1.0);
    let pipeline = EntropyPipeline::default();
    let rows = convergence_sweep(&generator, &pipeline, &[400, 2000, 10_000], 20, None, 0)?;
    print!("{}", sweep_csv(&rows));
    for r in &rows {
        println!("n = {:>5}: variance {:.6}", r.size, r.variance);
    }

    let estimates = replicate(&generator, &pipeline, 1000, 50, 0)?.plug_in_values();
    println!("q-q correlation of 50 estimates {:.4}", qq_against_normal(&estimates)?.correlation);
    Ok(())
}
