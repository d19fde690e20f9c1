//! ROC/AUC, q-q diagnostics against the standard normal, convergence sweeps,
//! and a seeded harness that turns injected anomalies into ROC inputs.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{confidence_interval, EntropyEstimate, EntropyPipeline, EstimateEnsemble};
use crate::error::{Error, Result};
use crate::special::normal_quantile;
use crate::synthetic::{inject_anomalies, rng_for, AnomalySpec, GeneratorSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false_alarm, detection)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Threshold producing each point; a score is flagged when `score > threshold`.
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

impl RocCurve {
    /// `threshold,fa,det` rows.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("threshold,fa,det\n");
        for (t, (fa, det)) in self.thresholds.iter().zip(&self.points) {
            out.push_str(&format!("{t},{fa},{det}\n"));
        }
        out
    }

    /// Detection rate at the smallest false-alarm rate not below `fa`.
    pub fn detection_at(&self, fa: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.0 <= fa)
            .map(|p| p.1)
            .fold(0.0, f64::max)
    }
}

/// Exact ROC over every distinct score value (plus `+inf` and `-inf`).
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores", "NaN score"));
    }
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let value = scores[order[i]];
        // flagging "> value" excludes this group; record that point first
        thresholds.push(value);
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        while i < order.len() && scores[order[i]] == value {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
    }
    thresholds.push(f64::NEG_INFINITY);
    points.push((1.0, 1.0));

    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    Ok(RocCurve {
        points,
        thresholds,
        auc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqDiagnostic {
    pub sample_quantiles: Vec<f64>,
    pub normal_quantiles: Vec<f64>,
    pub correlation: f64,
}

impl QqDiagnostic {
    /// `normal_q,sample_q` rows.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("normal_q,sample_q\n");
        for (n, s) in self.normal_quantiles.iter().zip(&self.sample_quantiles) {
            out.push_str(&format!("{n},{s}\n"));
        }
        out
    }
}

/// Sorted samples against `Phi^-1((i - 0.5) / n)`, with their Pearson correlation.
pub fn qq_against_normal(samples: &[f64]) -> Result<QqDiagnostic> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, have: n });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[n - 1] {
        return Err(Error::DegenerateVariance);
    }
    let normal: Vec<f64> = (1..=n)
        .map(|i| normal_quantile((i as f64 - 0.5) / n as f64))
        .collect();
    let correlation = pearson(&normal, &sorted);
    Ok(QqDiagnostic {
        sample_quantiles: sorted,
        normal_quantiles: normal,
        correlation,
    })
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Plug-in and bias-corrected estimates of `realizations` independent datasets.
#[derive(Debug, Clone)]
pub struct Replicates {
    pub plug_in: Vec<EntropyEstimate>,
    pub corrected: Vec<EntropyEstimate>,
}

impl Replicates {
    pub fn plug_in_values(&self) -> Vec<f64> {
        self.plug_in.iter().map(|e| e.value).collect()
    }

    pub fn corrected_values(&self) -> Vec<f64> {
        self.corrected.iter().map(|e| e.value).collect()
    }
}

/// Runs the pipeline on `realizations` datasets of size `n`. Realization `i` draws
/// its data with seed `base_seed + i`.
pub fn replicate(
    generator: &GeneratorSpec,
    pipeline: &EntropyPipeline,
    n: usize,
    realizations: usize,
    base_seed: u64,
) -> Result<Replicates> {
    let results: Vec<Result<(EntropyEstimate, EntropyEstimate)>> = (0..realizations)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let data = generator.generate(n, seed)?;
            let out = pipeline.run(&data, seed)?;
            Ok((out.plug_in, out.corrected))
        })
        .collect();
    let mut plug_in = Vec::with_capacity(realizations);
    let mut corrected = Vec::with_capacity(realizations);
    for (i, r) in results.into_iter().enumerate() {
        let (p, c) = r.map_err(|e| Error::Pipeline {
            size: n,
            realization: i,
            source: Box::new(e),
        })?;
        plug_in.push(p);
        corrected.push(c);
    }
    Ok(Replicates { plug_in, corrected })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub mean: f64,
    pub variance: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub true_value: Option<f64>,
    /// Mean of the bias-corrected estimates, reported next to the plug-in mean.
    pub mean_corrected: f64,
}

/// `size,mean,ci_lower,ci_upper,true_value` rows.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("size,mean,ci_lower,ci_upper,true_value\n");
    for r in rows {
        let truth = r.true_value.map(|t| t.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{truth}\n", r.size, r.mean, r.ci_lower, r.ci_upper));
    }
    out
}

/// Entropy mean, variance and 95% interval per dataset size.
pub fn convergence_sweep(
    generator: &GeneratorSpec,
    pipeline: &EntropyPipeline,
    sizes: &[usize],
    realizations: usize,
    truth: Option<f64>,
    base_seed: u64,
) -> Result<Vec<SweepRow>> {
    if realizations < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            have: realizations,
        });
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("sizes", "must be strictly ascending"));
    }
    let truth = truth.or_else(|| generator.true_entropy());
    sizes
        .iter()
        .map(|&size| {
            let reps = replicate(generator, pipeline, size, realizations, base_seed)?;
            let plug_in = EstimateEnsemble::new(reps.plug_in)?;
            let corrected = EstimateEnsemble::new(reps.corrected)?;
            let (ci_lower, ci_upper) = confidence_interval(&plug_in, 0.95)?;
            Ok(SweepRow {
                size,
                mean: plug_in.mean,
                variance: plug_in.variance,
                ci_lower,
                ci_upper,
                true_value: truth,
                mean_corrected: corrected.mean,
            })
        })
        .collect()
}

/// A synthetic monitoring session: one dataset per time instant, some instants
/// contaminated by the injector. Each instant is scored by its bias-corrected
/// entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyExperiment {
    pub generator: GeneratorSpec,
    pub pipeline: EntropyPipeline,
    pub instants: usize,
    pub anomalous_instants: usize,
    pub points_per_instant: usize,
    /// Injector settings; its seed is replaced by a per-instant derived seed.
    pub anomaly: AnomalySpec,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
    pub roc: RocCurve,
}

impl AnomalyExperiment {
    /// Instant `t` uses data seed `base_seed + t` and injector seed
    /// `(base_seed + t) ^ 0xA5A5_A5A5`; the anomalous instants are a seeded
    /// permutation prefix.
    pub fn run(&self, base_seed: u64) -> Result<ExperimentOutcome> {
        if self.anomalous_instants == 0 || self.anomalous_instants >= self.instants {
            return Err(Error::invalid("anomalous_instants", "both classes must be present"));
        }
        let mut order: Vec<usize> = (0..self.instants).collect();
        order.shuffle(&mut rng_for(base_seed ^ 0x0005_EED0_F1AB));
        let mut labels = vec![false; self.instants];
        for &t in &order[..self.anomalous_instants] {
            labels[t] = true;
        }
        let scores: Vec<Result<f64>> = (0..self.instants)
            .into_par_iter()
            .map(|t| {
                let seed = base_seed.wrapping_add(t as u64);
                let mut data = self.generator.generate(self.points_per_instant, seed)?;
                if labels[t] {
                    let spec = AnomalySpec {
                        seed: seed ^ 0xA5A5_A5A5,
                        ..self.anomaly
                    };
                    data = inject_anomalies(&data, &spec)?.0;
                }
                Ok(self.pipeline.run(&data, seed)?.corrected.value)
            })
            .collect();
        let scores = scores.into_iter().collect::<Result<Vec<f64>>>()?;
        let roc = roc_curve(&scores, &labels)?;
        Ok(ExperimentOutcome { scores, labels, roc })
    }
}
