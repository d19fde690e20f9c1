use sensor_anomaly::synthetic::gen_beta;
use sensor_anomaly::{boundary_correct, default_k, estimate_density, renormalize, split_dataset, SupportBounds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = gen_beta(4000, 1, 1.0, 1.0, 7)?;
    let split = split_dataset(&data, 0.5, 7)?;
    let k = default_k(split.reference.len());

    let raw = estimate_density(&split.evaluation, &split.reference, k)?;
    let corrected = boundary_correct(&raw, &split.reference, &SupportBounds::unit_cube(1), k)?;
    let density = renormalize(&corrected)?;

    let mean_err = |v: &[f64]| v.iter().map(|f| (f - 1.0).abs()).sum::<f64>() / v.len() as f64;
    println!("k = {k}, {} points replaced at the bounds", corrected.boundary_replaced.len());
    println!("mean |f - 1| raw       {:.4}", mean_err(&raw.values));
    println!("mean |f - 1| corrected {:.4}", mean_err(&corrected.values));
    println!("mean |f - 1| final     {:.4}", mean_err(&density.values));
    Ok(())
}
