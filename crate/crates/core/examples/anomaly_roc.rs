use sensor_anomaly::evaluation::AnomalyExperiment;
use sensor_anomaly::{detect_series, threshold_from_training, AnomalySpec, EntropyPipeline, GeneratorSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let experiment = AnomalyExperiment {
        generator: GeneratorSpec::beta(1, 4.0, 4.0),
        pipeline: EntropyPipeline::default(),
        instants: 100,
        anomalous_instants: 20,
        points_per_instant: 100,
        anomaly: AnomalySpec::default(),
    };
    let out = experiment.run(42)?;
    println!("AUC {:.4}", out.roc.auc);
    println!("detection at 5% false alarms {:.3}", out.roc.detection_at(0.05));

    // threshold from the clean instants only, then score the whole session
    let clean: Vec<f64> = out.scores.iter().zip(&out.labels).filter(|(_, l)| !**l).map(|(s, _)| *s).collect();
    let threshold = threshold_from_training(&clean, 0.05)?;
    let report = detect_series(&out.scores, &threshold, Some(&out.labels))?;
    let (fa, det) = report.rates().unwrap_or((f64::NAN, f64::NAN));
    println!("threshold {:.4}: false alarm {fa:.3}, detection {det:.3}", threshold.value);
    Ok(())
}
