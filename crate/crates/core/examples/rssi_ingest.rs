use sensor_anomaly::ingest::{synthetic_session, MotionPipeline, SessionSpec};
use sensor_anomaly::synchronize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let session = synthetic_session(&SessionSpec::default(), 5)?;
    let matrix = synchronize(&session.records, &session.grid)?;
    println!(
        "{} records -> {} instants x {} pairs ({} sensors)",
        session.records.len(),
        matrix.instants(),
        matrix.pairs(),
        matrix.sensors()
    );

    let out = MotionPipeline::default().run(&matrix, Some(&session.truth), 5)?;
    let (fa, det) = out.report.rates().unwrap_or((f64::NAN, f64::NAN));
    let flagged: Vec<usize> = out.report.flagged().collect();
    println!("flagged instants {flagged:?}");
    println!("false alarm {fa:.3}, detection {det:.3}");
    Ok(())
}
