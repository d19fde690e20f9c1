use sensor_anomaly::divergence::{compare_densities, ProfileConfig};
use sensor_anomaly::synthetic::gen_gaussian;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let normal = gen_gaussian(10_000, 1, &[0.0], 1.0, 3)?;
    let test = gen_gaussian(10_000, 1, &[1.0], 1.0, 4)?;
    let config = ProfileConfig {
        grid_len: Some(4096),
        ..Default::default()
    };
    let kl = compare_densities(&normal, &test, &config, 3)?.kl_test_normal()?;
    println!("KL(test || normal) = {:.4}", kl.value);
    println!("  from the overlap   {:.4}", kl.value - kl.floored_contribution);
    println!("  from {} floored grid points {:.4}", kl.floored, kl.floored_contribution);
    Ok(())
}
