//! Plug-in Shannon entropy from a k-NN density, its digamma bias correction,
//! closed-form reference entropies and ensemble statistics.
//!
//! All entropies are in nats.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::dataset::{split_dataset, Dataset, SplitDataset};
use crate::density::{
    boundary_correct, default_k, estimate_density, grid_integral, linspace, DensityEstimate, SupportBounds,
};
use crate::error::{Error, Result};
use crate::special::{digamma, ln_beta, upper_z};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub k: usize,
    pub n_eval: usize,
    pub m_ref: usize,
    pub bias_corrected: bool,
    pub renormalized: bool,
}

/// Sample mean of `-ln f_i`. Every value must be finite and strictly positive.
pub fn plug_in_entropy(density_values: &[f64]) -> Result<f64> {
    if density_values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sum = 0.0;
    for (index, &value) in density_values.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveDensity { index, value });
        }
        sum -= value.ln();
    }
    Ok(sum / density_values.len() as f64)
}

impl EntropyEstimate {
    /// Plug-in estimate from a density evaluated on the evaluation set.
    pub fn plug_in(estimate: &DensityEstimate) -> Result<Self> {
        Ok(Self {
            value: plug_in_entropy(&estimate.values)?,
            k: estimate.k,
            n_eval: estimate.len(),
            m_ref: estimate.m_ref,
            bias_corrected: false,
            renormalized: estimate.renormalized,
        })
    }
}

/// Additive k-NN bias correction `ln(k - 1) - psi(k - 1)`.
pub fn bias_correction(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid("k", format!("{k} < 2")));
    }
    let km1 = (k - 1) as f64;
    Ok(km1.ln() - digamma(km1))
}

pub fn bias_corrected_entropy(est: &EntropyEstimate) -> Result<EntropyEstimate> {
    if est.bias_corrected {
        return Err(Error::invalid("estimate", "already bias-corrected"));
    }
    Ok(EntropyEstimate {
        value: est.value + bias_correction(est.k)?,
        bias_corrected: true,
        ..*est
    })
}

/// `0.5 * ln(2 pi e sigma^2)`.
pub fn gaussian_entropy_closed_form(sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::invalid("sigma2", format!("{sigma2} must be positive")));
    }
    Ok(0.5 * (2.0 * PI * E * sigma2).ln())
}

/// Differential entropy of Beta(alpha, beta).
pub fn beta_entropy_closed_form(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::invalid("beta parameters", format!("({alpha}, {beta}) must be positive")));
    }
    Ok(ln_beta(alpha, beta) - (alpha - 1.0) * digamma(alpha) - (beta - 1.0) * digamma(beta)
        + (alpha + beta - 2.0) * digamma(alpha + beta))
}

/// Independent realizations of an entropy estimate.
#[derive(Debug, Clone)]
pub struct EstimateEnsemble {
    pub estimates: Vec<EntropyEstimate>,
    pub mean: f64,
    /// Sample variance, `R - 1` denominator.
    pub variance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub estimates: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub corrected: bool,
}

impl EstimateEnsemble {
    pub fn new(estimates: Vec<EntropyEstimate>) -> Result<Self> {
        if estimates.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                have: estimates.len(),
            });
        }
        let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
        let (mean, variance) = mean_and_variance(&values);
        Ok(Self {
            estimates,
            mean,
            variance,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.value).collect()
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    /// JSON-facing summary. Metadata is taken from the first realization.
    pub fn record(&self) -> EnsembleRecord {
        let first = &self.estimates[0];
        EnsembleRecord {
            estimates: self.values(),
            mean: self.mean,
            variance: self.variance,
            k: first.k,
            n: first.n_eval,
            m: first.m_ref,
            corrected: first.bias_corrected,
        }
    }
}

/// Sample mean and `n - 1` variance. Returns variance 0 for fewer than two values.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// `(x_i - mean) / sqrt(variance)` for each realization.
pub fn normalized_scores(ensemble: &EstimateEnsemble) -> Result<Vec<f64>> {
    if !(ensemble.variance > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let sd = ensemble.variance.sqrt();
    Ok(ensemble
        .estimates
        .iter()
        .map(|e| (e.value - ensemble.mean) / sd)
        .collect())
}

/// Normal-theory interval `mean -/+ z * sqrt(variance / R)` at the given level.
pub fn confidence_interval(ensemble: &EstimateEnsemble, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level", format!("{level} not in (0, 1)")));
    }
    if !(ensemble.variance > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let z = upper_z((1.0 - level) / 2.0);
    let half = z * (ensemble.variance / ensemble.len() as f64).sqrt();
    Ok((ensemble.mean - half, ensemble.mean + half))
}

/// Leading-order bias and variance constants of the plug-in estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub c1: f64,
    pub c2: f64,
    pub c4: f64,
    pub c5: f64,
    pub dim: usize,
}

/// `bias = c1 (k/m)^(1/d) + c2 / k`, `variance = c4 / n + c5 / m`.
pub fn predicted_rates(model: &RateModel, k: usize, m: usize, n: usize) -> Result<(f64, f64)> {
    if k == 0 || m == 0 || n == 0 || model.dim == 0 {
        return Err(Error::invalid("rates", "k, m, n and dim must be positive"));
    }
    let (k, m, n) = (k as f64, m as f64, n as f64);
    let bias = model.c1 * (k / m).powf(1.0 / model.dim as f64) + model.c2 / k;
    let variance = model.c4 / n + model.c5 / m;
    Ok((bias, variance))
}

/// Split, estimate, optionally correct and renormalize, then average `-ln f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyPipeline {
    /// Fraction of points used as the evaluation set.
    pub split_fraction: f64,
    /// Neighbour rank; `ceil(sqrt(M))` when unset.
    pub k: Option<usize>,
    /// Support bounds for boundary correction; none means no correction.
    pub bounds: Option<SupportBounds>,
    /// Normalize the density to unit integral. Defaults to on for 1-D data and
    /// off otherwise.
    pub renormalize: Option<bool>,
    /// Points in the normalization grid; defaults to the reference size.
    pub grid_len: Option<usize>,
}

impl Default for EntropyPipeline {
    fn default() -> Self {
        Self {
            split_fraction: 0.5,
            k: None,
            bounds: None,
            renormalize: None,
            grid_len: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub plug_in: EntropyEstimate,
    pub corrected: EntropyEstimate,
    pub density: DensityEstimate,
    /// Integral the raw density was divided by, when renormalized.
    pub normalizer: Option<f64>,
}

/// Seed used for the split inside [`EntropyPipeline::run`], derived from the run seed.
pub fn split_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

impl EntropyPipeline {
    pub fn with_bounds(mut self, bounds: SupportBounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn run(&self, data: &Dataset, seed: u64) -> Result<PipelineOutput> {
        let split = split_dataset(data, self.split_fraction, split_seed(seed))?;
        self.run_split(&split)
    }

    pub fn resolved_k(&self, m_ref: usize) -> usize {
        self.k.unwrap_or_else(|| default_k(m_ref).max(2))
    }

    pub fn run_split(&self, split: &SplitDataset) -> Result<PipelineOutput> {
        let reference = &split.reference;
        let k = self.resolved_k(reference.len());
        let mut density = estimate_density(&split.evaluation, reference, k)?;
        if let Some(bounds) = &self.bounds {
            density = boundary_correct(&density, reference, bounds, k)?;
        }
        let dim = reference.dim();
        let mut normalizer = None;
        if self.renormalize.unwrap_or(dim == 1) {
            let z = self.normalization_integral(reference, k)?;
            for v in &mut density.values {
                *v /= z;
            }
            density.renormalized = true;
            normalizer = Some(z);
        }
        let plug_in = EntropyEstimate::plug_in(&density)?;
        let corrected = bias_corrected_entropy(&plug_in)?;
        Ok(PipelineOutput {
            plug_in,
            corrected,
            density,
            normalizer,
        })
    }

    /// Rectangular-rule integral of the density over a uniform grid spanning the
    /// reference range.
    fn normalization_integral(&self, reference: &Dataset, k: usize) -> Result<f64> {
        if reference.dim() != 1 {
            return Err(Error::invalid("renormalize", "only defined for 1-D data"));
        }
        let xs = reference.as_flat();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let n = self.grid_len.unwrap_or(reference.len()).max(2);
        let grid = Dataset::from_values(&linspace(lo, hi, n), "normalization grid")?;
        let mut on_grid = estimate_density(&grid, reference, k)?;
        if let Some(bounds) = &self.bounds {
            on_grid = boundary_correct(&on_grid, reference, bounds, k)?;
        }
        let z = grid_integral(grid.as_flat(), &on_grid.values)?;
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::invalid("renormalize", format!("integral is {z}")));
        }
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn est(value: f64, k: usize) -> EntropyEstimate {
        EntropyEstimate {
            value,
            k,
            n_eval: 10,
            m_ref: 10,
            bias_corrected: false,
            renormalized: false,
        }
    }

    #[test]
    fn plug_in_examples() {
        assert_eq!(plug_in_entropy(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((plug_in_entropy(&[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(
            plug_in_entropy(&[1.0, 0.0]),
            Err(Error::NonPositiveDensity { index: 1, .. })
        ));
        assert!(plug_in_entropy(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn bias_correction_examples() {
        let c2 = bias_corrected_entropy(&est(1.0, 2)).unwrap();
        assert!((c2.value - 1.0 - 0.5772156649015329).abs() < 1e-10);
        assert!(c2.bias_corrected);
        assert!((bias_correction(50).unwrap() - 0.010238787948040536).abs() < 1e-10);
        assert!(bias_corrected_entropy(&est(1.0, 1)).is_err());
        assert!(bias_corrected_entropy(&c2).is_err());

        let ks = [2, 5, 10, 50, 200, 1000];
        let corr: Vec<f64> = ks.iter().map(|&k| bias_correction(k).unwrap()).collect();
        assert!(corr.windows(2).all(|w| w[1] < w[0]));
        assert!(corr.iter().all(|&c| c > 0.0));
    }

    #[test]
    fn closed_forms() {
        assert!((gaussian_entropy_closed_form(1.0).unwrap() - 1.4189385332046727).abs() < 1e-12);
        assert!((gaussian_entropy_closed_form(2.0).unwrap() - 1.7655121234846454).abs() < 1e-12);
        assert!(gaussian_entropy_closed_form(1.0 / (2.0 * PI * E)).unwrap().abs() < 1e-15);
        assert!(gaussian_entropy_closed_form(0.0).is_err());

        let b44 = beta_entropy_closed_form(4.0, 4.0).unwrap();
        assert!((b44 + 0.38449956546644716).abs() < 1e-9);
        assert!(beta_entropy_closed_form(1.0, 1.0).unwrap().abs() < 1e-12);
        assert!((beta_entropy_closed_form(2.0, 5.0).unwrap() + 0.4845307149954887).abs() < 1e-9);
        assert!(beta_entropy_closed_form(-1.0, 1.0).is_err());
    }

    #[test]
    fn ensemble_scores_and_interval() {
        let ens = EstimateEnsemble::new(vec![est(1.0, 5), est(3.0, 5)]).unwrap();
        assert_eq!((ens.mean, ens.variance), (2.0, 2.0));
        let z = normalized_scores(&ens).unwrap();
        assert!((z[0] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((z[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

        let flat = EstimateEnsemble::new(vec![est(1.0, 5); 3]).unwrap();
        assert!(matches!(normalized_scores(&flat), Err(Error::DegenerateVariance)));
        assert!(confidence_interval(&flat, 0.95).is_err());

        let mut ens = EstimateEnsemble::new(vec![est(0.0, 5); 100]).unwrap();
        ens.mean = 1.0;
        ens.variance = 0.04;
        let (lo, hi) = confidence_interval(&ens, 0.95).unwrap();
        assert!((lo - 0.9608007203).abs() < 1e-9);
        assert!((hi - 1.0391992797).abs() < 1e-9);
    }

    #[test]
    fn rate_model() {
        let zero = RateModel {
            c1: 0.0,
            c2: 0.0,
            c4: 0.0,
            c5: 0.0,
            dim: 1,
        };
        assert_eq!(predicted_rates(&zero, 3, 4, 5).unwrap(), (0.0, 0.0));
        let m = RateModel {
            c1: 1.0,
            c2: 1.0,
            c4: 2.0,
            c5: 3.0,
            dim: 1,
        };
        let (bias, var) = predicted_rates(&m, 10, 1000, 500).unwrap();
        assert!((bias - 0.11).abs() < 1e-15);
        let (_, var2) = predicted_rates(&m, 10, 2000, 1000).unwrap();
        assert_eq!(var2, var / 2.0);
    }

    proptest! {
        #[test]
        fn plug_in_is_permutation_invariant(mut v in prop::collection::vec(0.01f64..10.0, 1..50), seed in 0u64..1000) {
            use rand::{seq::SliceRandom, SeedableRng};
            let a = plug_in_entropy(&v).unwrap();
            v.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = plug_in_entropy(&v).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn correction_depends_only_on_k(value in -5.0f64..5.0, k in 2usize..2000) {
            let out = bias_corrected_entropy(&est(value, k)).unwrap();
            let km1 = (k - 1) as f64;
            prop_assert!(((out.value - value) - (km1.ln() - digamma(km1))).abs() < 1e-12);
        }

        #[test]
        fn gaussian_entropy_scales_with_log_c(sigma2 in 1e-3f64..1e3, c in 1e-2f64..1e2) {
            let lhs = gaussian_entropy_closed_form(c * c * sigma2).unwrap();
            let rhs = gaussian_entropy_closed_form(sigma2).unwrap() + c.ln();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
