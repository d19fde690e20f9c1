//! Seeded test-distribution generators, their analytic densities, and the
//! anomaly injector.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)` (crate
//! `rand_chacha`). The mixture generator uses ChaCha streams 1 and 2 of the same
//! seed for the component choice and the uniform component, so its Beta draws
//! follow exactly the sequence of [`gen_beta`] with the same seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::density::SupportBounds;
use crate::entropy::{beta_entropy_closed_form, gaussian_entropy_closed_form, mean_and_variance};
use crate::error::{Error, Result};
use crate::special::ln_beta;

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` points with independent `N(mu_j, sigma2)` coordinates. A one-element `mu`
/// is broadcast to every axis.
pub fn gen_gaussian(n: usize, dim: usize, mu: &[f64], sigma2: f64, seed: u64) -> Result<Dataset> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::invalid("sigma2", format!("{sigma2} must be positive")));
    }
    check_shape(n, dim)?;
    if mu.len() != 1 && mu.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: mu.len(),
        });
    }
    let sd = sigma2.sqrt();
    let mut rng = rng_for(seed);
    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..n {
        for j in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            coords.push(mu[j % mu.len()] + sd * z);
        }
    }
    Dataset::from_flat(coords, dim, format!("gaussian(mu={mu:?}, sigma2={sigma2}, seed={seed})"))
}

pub fn gen_beta(n: usize, dim: usize, alpha: f64, beta: f64, seed: u64) -> Result<Dataset> {
    check_beta(alpha, beta)?;
    check_shape(n, dim)?;
    let mut rng = rng_for(seed);
    let sampler = beta_sampler(alpha, beta)?;
    let coords = (0..n * dim).map(|_| sampler.sample(&mut rng)).collect();
    Dataset::from_flat(coords, dim, format!("beta({alpha}, {beta}, seed={seed})"))
}

fn check_shape(n: usize, dim: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    Ok(())
}

fn beta_sampler(alpha: f64, beta: f64) -> Result<Beta<f64>> {
    check_beta(alpha, beta)?;
    Beta::new(alpha, beta).map_err(|e| Error::invalid("beta parameters", e.to_string()))
}

fn check_beta(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::invalid("beta parameters", format!("({alpha}, {beta}) must be positive")));
    }
    Ok(())
}

/// `p * Beta(alpha, beta) + (1 - p) * Uniform`, on `[0, 1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub p: f64,
    pub beta_alpha: f64,
    pub beta_beta: f64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid("p", format!("{} not in [0, 1]", self.p)));
        }
        check_beta(self.beta_alpha, self.beta_beta)
    }
}

pub fn gen_mixture(n: usize, spec: &MixtureSpec, dim: usize, seed: u64) -> Result<Dataset> {
    gen_mixture_labeled(n, spec, dim, seed).map(|(d, _)| d)
}

/// Mixture draws plus a per-point flag telling whether the Beta component was used.
pub fn gen_mixture_labeled(n: usize, spec: &MixtureSpec, dim: usize, seed: u64) -> Result<(Dataset, Vec<bool>)> {
    spec.validate()?;
    check_shape(n, dim)?;
    let sampler = beta_sampler(spec.beta_alpha, spec.beta_beta)?;
    let mut beta_rng = rng_for(seed);
    let mut choice_rng = rng_for(seed);
    choice_rng.set_stream(1);
    let mut uniform_rng = rng_for(seed);
    uniform_rng.set_stream(2);
    let mut coords = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let from_beta = spec.p >= 1.0 || choice_rng.random::<f64>() < spec.p;
        labels.push(from_beta);
        for _ in 0..dim {
            coords.push(if from_beta {
                sampler.sample(&mut beta_rng)
            } else {
                uniform_rng.random::<f64>()
            });
        }
    }
    let data = Dataset::from_flat(coords, dim, format!("mixture({spec:?}, seed={seed})"))?;
    Ok((data, labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Gaussian { mu: f64, sigma2: f64 },
    Beta { alpha: f64, beta: f64 },
    Mixture(MixtureSpec),
}

/// A distribution together with a dimension: everything needed to draw datasets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub distribution: Distribution,
    pub dim: usize,
}

impl GeneratorSpec {
    pub fn gaussian(dim: usize, mu: f64, sigma2: f64) -> Self {
        Self {
            distribution: Distribution::Gaussian { mu, sigma2 },
            dim,
        }
    }

    pub fn beta(dim: usize, alpha: f64, beta: f64) -> Self {
        Self {
            distribution: Distribution::Beta { alpha, beta },
            dim,
        }
    }

    pub fn mixture(dim: usize, spec: MixtureSpec) -> Self {
        Self {
            distribution: Distribution::Mixture(spec),
            dim,
        }
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        match self.distribution {
            Distribution::Gaussian { mu, sigma2 } => gen_gaussian(n, self.dim, &[mu], sigma2, seed),
            Distribution::Beta { alpha, beta } => gen_beta(n, self.dim, alpha, beta, seed),
            Distribution::Mixture(spec) => gen_mixture(n, &spec, self.dim, seed),
        }
    }

    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        analytic_pdf(&self.distribution, x)
    }

    /// `[0, 1]^d` for bounded kinds, none for the Gaussian.
    pub fn support_bounds(&self) -> Option<SupportBounds> {
        match self.distribution {
            Distribution::Gaussian { .. } => None,
            _ => Some(SupportBounds::unit_cube(self.dim)),
        }
    }

    /// Differential entropy in nats: closed form for Gaussian and Beta,
    /// quadrature for the mixture in one or two dimensions.
    pub fn true_entropy(&self) -> Option<f64> {
        let d = self.dim as f64;
        match self.distribution {
            Distribution::Gaussian { sigma2, .. } => gaussian_entropy_closed_form(sigma2).ok().map(|h| d * h),
            Distribution::Beta { alpha, beta } => beta_entropy_closed_form(alpha, beta).ok().map(|h| d * h),
            Distribution::Mixture(spec) => mixture_entropy_numeric(&spec, self.dim, 1000).ok(),
        }
    }
}

/// Exact density; product over independent coordinates for `d >= 2`.
pub fn analytic_pdf(distribution: &Distribution, x: &[f64]) -> Result<f64> {
    match *distribution {
        Distribution::Gaussian { mu, sigma2 } => {
            if !(sigma2 > 0.0) {
                return Err(Error::invalid("sigma2", format!("{sigma2} must be positive")));
            }
            let norm = (2.0 * std::f64::consts::PI * sigma2).sqrt();
            Ok(x.iter()
                .map(|&xi| (-(xi - mu) * (xi - mu) / (2.0 * sigma2)).exp() / norm)
                .product())
        }
        Distribution::Beta { alpha, beta } => {
            check_beta(alpha, beta)?;
            check_unit_support(x)?;
            Ok(x.iter().map(|&xi| beta_pdf(xi, alpha, beta)).product())
        }
        Distribution::Mixture(spec) => {
            spec.validate()?;
            check_unit_support(x)?;
            let fb: f64 = x
                .iter()
                .map(|&xi| beta_pdf(xi, spec.beta_alpha, spec.beta_beta))
                .product();
            Ok(spec.p * fb + (1.0 - spec.p))
        }
    }
}

fn check_unit_support(x: &[f64]) -> Result<()> {
    if x.iter().all(|xi| (0.0..=1.0).contains(xi)) {
        Ok(())
    } else {
        Err(Error::invalid("x", format!("{x:?} outside [0, 1]^d")))
    }
}

fn beta_pdf(x: f64, alpha: f64, beta: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        // boundary limits: only finite/nonzero when the exponent is zero
        let at_zero = x <= 0.0;
        let expo = if at_zero { alpha - 1.0 } else { beta - 1.0 };
        return if expo == 0.0 {
            (-ln_beta(alpha, beta)).exp()
        } else if expo > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    ((alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() - ln_beta(alpha, beta)).exp()
}

/// Differential entropy of the Beta/uniform mixture by midpoint quadrature
/// (`cells` per axis; `dim` is 1 or 2).
pub fn mixture_entropy_numeric(spec: &MixtureSpec, dim: usize, cells: usize) -> Result<f64> {
    spec.validate()?;
    let h = 1.0 / cells as f64;
    let fb: Vec<f64> = (0..cells)
        .map(|i| beta_pdf((i as f64 + 0.5) * h, spec.beta_alpha, spec.beta_beta))
        .collect();
    let term = |f: f64| if f > 0.0 { -f * f.ln() } else { 0.0 };
    match dim {
        1 => Ok(fb.iter().map(|&b| term(spec.p * b + 1.0 - spec.p)).sum::<f64>() * h),
        2 => {
            let mut acc = 0.0;
            for &a in &fb {
                for &b in &fb {
                    acc += term(spec.p * a * b + 1.0 - spec.p);
                }
            }
            Ok(acc * h * h)
        }
        _ => Err(Error::invalid("dim", "numeric mixture entropy supports d = 1 or 2")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    /// Shift by `magnitude` sample standard deviations, random sign per axis.
    Extreme,
    /// Set to zero.
    Missing,
    ConstantIncrement,
    /// Add `Uniform(0, magnitude)` per axis.
    VariableIncrement,
    /// Copy the point at another randomly chosen index.
    Repetition,
    /// Add `magnitude` to every point.
    SubtleShift,
}

impl std::str::FromStr for AnomalyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "extreme" => Self::Extreme,
            "missing" => Self::Missing,
            "constant_increment" => Self::ConstantIncrement,
            "variable_increment" => Self::VariableIncrement,
            "repetition" => Self::Repetition,
            "subtle_shift" => Self::SubtleShift,
            other => return Err(Error::invalid("anomaly kind", other.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalySpec {
    pub kind: AnomalyKind,
    pub fraction: f64,
    pub magnitude: f64,
    pub seed: u64,
}

impl Default for AnomalySpec {
    /// Extreme values at 5% contamination, 10 standard deviations.
    fn default() -> Self {
        Self {
            kind: AnomalyKind::Extreme,
            fraction: 0.05,
            magnitude: 10.0,
            seed: 0,
        }
    }
}

/// Modifies `ceil(fraction * n)` seeded-random points (all points for
/// [`AnomalyKind::SubtleShift`]) and returns the truth mask.
pub fn inject_anomalies(data: &Dataset, spec: &AnomalySpec) -> Result<(Dataset, Vec<bool>)> {
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let fraction = if spec.kind == AnomalyKind::SubtleShift {
        1.0
    } else {
        spec.fraction
    };
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid("fraction", format!("{fraction} not in (0, 1]")));
    }
    if fraction * (n as f64) < 1.0 {
        return Err(Error::invalid("fraction", format!("{fraction} of {n} points is below one point")));
    }
    if spec.kind == AnomalyKind::Repetition && n < 2 {
        return Err(Error::InsufficientData { needed: 2, have: n });
    }
    let count = ((fraction * n as f64).ceil() as usize).min(n);
    let dim = data.dim();
    let mut rng = rng_for(spec.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut targets = order[..count].to_vec();
    targets.sort_unstable();

    let sds: Vec<f64> = (0..dim).map(|j| mean_and_variance(&data.column(j)).1.sqrt()).collect();
    let mut coords = data.as_flat().to_vec();
    let mut truth = vec![false; n];
    for &i in &targets {
        truth[i] = true;
        let row = i * dim..(i + 1) * dim;
        match spec.kind {
            AnomalyKind::Extreme => {
                for (j, c) in coords[row].iter_mut().enumerate() {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    *c += sign * spec.magnitude * sds[j];
                }
            }
            AnomalyKind::Missing => coords[row].fill(0.0),
            AnomalyKind::ConstantIncrement | AnomalyKind::SubtleShift => {
                coords[row].iter_mut().for_each(|c| *c += spec.magnitude)
            }
            AnomalyKind::VariableIncrement => {
                for c in &mut coords[row] {
                    *c += spec.magnitude * rng.random::<f64>();
                }
            }
            AnomalyKind::Repetition => {
                let mut src = rng.random_range(0..n - 1);
                if src >= i {
                    src += 1;
                }
                let source = data.point(src).to_vec();
                coords[row].copy_from_slice(&source);
            }
        }
    }
    let out = Dataset::from_flat(coords, dim, format!("{} + {:?}", data.provenance, spec.kind))?;
    Ok((out, truth))
}
