//! Thresholded anomaly decisions over score series and distance profiles.

use serde::{Deserialize, Serialize};

use crate::divergence::DistanceProfile;
use crate::entropy::mean_and_variance;
use crate::error::{Error, Result};
use crate::special::upper_z;

/// `value = mu + z_{alpha/2} * sigma`, fitted on normal-condition scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub alpha: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl Threshold {
    pub fn new(mu: f64, sigma: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("{sigma} must be nonnegative")));
        }
        Ok(Self {
            value: mu + upper_z(alpha / 2.0) * sigma,
            alpha,
            mu,
            sigma,
        })
    }

    pub fn z(&self) -> f64 {
        upper_z(self.alpha / 2.0)
    }
}

pub fn threshold_from_training(training_scores: &[f64], alpha: f64) -> Result<Threshold> {
    if training_scores.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            have: training_scores.len(),
        });
    }
    let (mu, var) = mean_and_variance(training_scores);
    Threshold::new(mu, var.sqrt(), alpha)
}

/// Which side of the training distribution counts as anomalous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// `score > mu + z sigma`.
    #[default]
    Upper,
    /// `|score - mu| > z sigma`.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub flags: Vec<bool>,
    pub threshold: Threshold,
    pub tail: Tail,
    pub ground_truth: Option<Vec<bool>>,
}

impl DetectionReport {
    pub fn flagged(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices
            .iter()
            .zip(&self.flags)
            .filter_map(|(&i, &f)| f.then_some(i))
    }

    /// `(false_alarm_rate, detection_rate)` against the attached ground truth.
    pub fn rates(&self) -> Option<(f64, f64)> {
        let truth = self.ground_truth.as_ref()?;
        let (mut fp, mut neg, mut tp, mut pos) = (0usize, 0usize, 0usize, 0usize);
        for (&flag, &t) in self.flags.iter().zip(truth) {
            if t {
                pos += 1;
                tp += usize::from(flag);
            } else {
                neg += 1;
                fp += usize::from(flag);
            }
        }
        let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Some((rate(fp, neg), rate(tp, pos)))
    }

    /// `index,score,flag,truth` rows; `truth` is empty when absent.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("index,score,flag,truth\n");
        for (j, ((i, s), f)) in self.indices.iter().zip(&self.scores).zip(&self.flags).enumerate() {
            let truth = self
                .ground_truth
                .as_ref()
                .map(|t| u8::from(t[j]).to_string())
                .unwrap_or_default();
            out.push_str(&format!("{i},{s},{},{truth}\n", u8::from(*f)));
        }
        out
    }
}

pub fn detect_series(scores: &[f64], threshold: &Threshold, ground_truth: Option<&[bool]>) -> Result<DetectionReport> {
    detect_series_with(scores, threshold, ground_truth, Tail::Upper)
}

pub fn detect_series_with(
    scores: &[f64],
    threshold: &Threshold,
    ground_truth: Option<&[bool]>,
    tail: Tail,
) -> Result<DetectionReport> {
    if scores.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(t) = ground_truth {
        if t.len() != scores.len() {
            return Err(Error::LengthMismatch {
                left: scores.len(),
                right: t.len(),
            });
        }
    }
    let flags = scores
        .iter()
        .map(|&s| match tail {
            Tail::Upper => s > threshold.value,
            Tail::Both => (s - threshold.mu).abs() > threshold.value - threshold.mu,
        })
        .collect();
    Ok(DetectionReport {
        indices: (0..scores.len()).collect(),
        scores: scores.to_vec(),
        flags,
        threshold: *threshold,
        tail,
        ground_truth: ground_truth.map(<[bool]>::to_vec),
    })
}

/// Standardizes `scores` with the mean and `n - 1` standard deviation of `training`.
pub fn normalize_against(scores: &[f64], training: &[f64]) -> Result<Vec<f64>> {
    if training.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            have: training.len(),
        });
    }
    let (mu, var) = mean_and_variance(training);
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let sd = var.sqrt();
    Ok(scores.iter().map(|s| (s - mu) / sd).collect())
}

/// Scores divided by their largest absolute value, paired with 0/1 truth.
pub fn scan_statistic(scores: &[f64], ground_truth: &[bool]) -> Result<Vec<(f64, u8)>> {
    if scores.len() != ground_truth.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: ground_truth.len(),
        });
    }
    let max_abs = scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if !(max_abs > 0.0) {
        return Err(Error::invalid("scores", "all zero"));
    }
    Ok(scores
        .iter()
        .zip(ground_truth)
        .map(|(s, &t)| (s / max_abs, u8::from(t)))
        .collect())
}

/// Windows whose distance strictly exceeds `threshold`, as `(x_start, distance)`.
pub fn detect_windows(profile: &DistanceProfile, threshold: f64) -> Result<Vec<(f64, f64)>> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid("threshold", format!("{threshold} must be nonnegative")));
    }
    Ok(profile
        .window_starts
        .iter()
        .zip(&profile.distances)
        .filter(|(_, &d)| d > threshold)
        .map(|(&x, &d)| (x, d))
        .collect())
}
