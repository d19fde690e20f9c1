use sensor_anomaly::divergence::{compare_densities, ProfileConfig};
use sensor_anomaly::synthetic::gen_gaussian;
use sensor_anomaly::{bhattacharyya, EntropyPipeline, GaussianSummary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let normal = gen_gaussian(10_000, 1, &[0.0], 1.0, 1)?;
    let test = gen_gaussian(10_000, 1, &[2.0], 1.0, 2)?;

    // entropy cannot see a pure mean shift
    let pipeline = EntropyPipeline::default();
    let (ha, hb) = (pipeline.run(&normal, 1)?.plug_in.value, pipeline.run(&test, 1)?.plug_in.value);
    println!("entropies {ha:.4} vs {hb:.4}");

    let whole = bhattacharyya(&GaussianSummary::from_dataset(&normal)?, &GaussianSummary::from_dataset(&test)?)?;
    println!("whole-set Bhattacharyya {whole:.4}");

    let config = ProfileConfig {
        window_len: Some(20),
        ..Default::default()
    };
    let cmp = compare_densities(&normal, &test, &config, 1)?;
    let mut ranked: Vec<(f64, f64)> = cmp.profile.window_starts.iter().copied().zip(cmp.profile.distances.iter().copied()).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("{} windows; largest distances:", ranked.len());
    for (start, d) in ranked.iter().take(5) {
        println!("  x = {start:+.3}  d = {d:.4}");
    }
    Ok(())
}
