//! Bhattacharyya distance (Gaussian closed form and windowed profile over
//! density values) and Kullback-Leibler divergence between gridded densities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::density::{linspace, resample_on_grid, DensityEstimate};
use crate::entropy::{mean_and_variance, EntropyPipeline};
use crate::error::{Error, Result};

/// Variance used in a window whose sample variance is exactly zero.
pub const ZERO_VARIANCE_FLOOR: f64 = 2e-5;

/// Replacement for `q` where `p > 0` and `q == 0`.
pub const KL_Q_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianSummary {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: covariance.nrows(),
            });
        }
        if covariance != covariance.transpose() {
            return Err(Error::invalid("covariance", "not symmetric"));
        }
        Ok(Self { mean, covariance })
    }

    pub fn univariate(mean: f64, variance: f64) -> Self {
        Self {
            mean: DVector::from_element(1, mean),
            covariance: DMatrix::from_element(1, 1, variance),
        }
    }

    /// Sample mean and `n - 1` covariance of a dataset.
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        let n = data.len();
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, have: n });
        }
        let d = data.dim();
        let mut mean = DVector::zeros(d);
        for p in data.points() {
            mean += DVector::from_column_slice(p);
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(d, d);
        for p in data.points() {
            let c = DVector::from_column_slice(p) - &mean;
            cov += &c * c.transpose();
        }
        cov /= (n - 1) as f64;
        // exact symmetry
        let cov = (&cov + cov.transpose()) * 0.5;
        Self::new(mean, cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn ln_det_pd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// Bhattacharyya distance between two Gaussians.
pub fn bhattacharyya(p: &GaussianSummary, q: &GaussianSummary) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    if p.dim() == 1 {
        let (vp, vq) = (p.covariance[(0, 0)], q.covariance[(0, 0)]);
        if !(vp > 0.0 && vq > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        return Ok(bhattacharyya_1d(p.mean[0], vp, q.mean[0], vq));
    }
    let avg = (&p.covariance + &q.covariance) * 0.5;
    let chol = avg.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let diff = &p.mean - &q.mean;
    let solved = chol.solve(&diff);
    let mahalanobis = diff.dot(&solved);
    let ln_det_avg = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let ln_det_p = ln_det_pd(&p.covariance)?;
    let ln_det_q = ln_det_pd(&q.covariance)?;
    Ok(mahalanobis / 8.0 + 0.5 * (ln_det_avg - 0.5 * (ln_det_p + ln_det_q)))
}

/// Scalar form: `(m1-m2)^2 / (4 (v1+v2)) + 0.5 ln(((v1+v2)/2) / sqrt(v1 v2))`.
pub fn bhattacharyya_1d(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    let sum = v1 + v2;
    let dm = m1 - m2;
    0.125 * dm * dm * (2.0 / sum) + 0.5 * ((sum / 2.0) / (v1 * v2).sqrt()).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    /// Grid abscissa of the first point of each window.
    pub window_starts: Vec<f64>,
    pub distances: Vec<f64>,
    pub window_len: usize,
    pub stride: usize,
    pub grid_size: usize,
    /// Window variances that hit [`ZERO_VARIANCE_FLOOR`] (counting both sides).
    pub floor_hits: usize,
}

impl DistanceProfile {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }

    /// `window_start,distance` rows.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("window_start,distance\n");
        for (x, d) in self.window_starts.iter().zip(&self.distances) {
            out.push_str(&format!("{x},{d}\n"));
        }
        out
    }
}

/// Per-window Bhattacharyya distance between two densities sampled on a common
/// grid, treating the density values inside each window as samples.
///
/// Windows start at `0, stride, 2 * stride, ...` and only whole windows are
/// used. `stride = window_len` gives consecutive non-overlapping windows.
pub fn windowed_bhattacharyya(
    pdf_a: &[f64],
    pdf_b: &[f64],
    grid: &[f64],
    window_len: usize,
    stride: usize,
) -> Result<DistanceProfile> {
    let b = grid.len();
    if pdf_a.len() != b || pdf_b.len() != b {
        return Err(Error::LengthMismatch {
            left: pdf_a.len().max(pdf_b.len()),
            right: b,
        });
    }
    if window_len < 2 {
        return Err(Error::invalid("window_len", format!("{window_len} < 2")));
    }
    if window_len > b {
        return Err(Error::invalid("window_len", format!("{window_len} exceeds grid size {b}")));
    }
    if stride == 0 {
        return Err(Error::invalid("stride", "must be positive"));
    }
    let mut starts = Vec::new();
    let mut distances = Vec::new();
    let mut floor_hits = 0;
    let mut floored = |v: f64| {
        if v == 0.0 {
            floor_hits += 1;
            ZERO_VARIANCE_FLOOR
        } else {
            v
        }
    };
    let mut i = 0;
    while i + window_len <= b {
        let (ma, va) = mean_and_variance(&pdf_a[i..i + window_len]);
        let (mb, vb) = mean_and_variance(&pdf_b[i..i + window_len]);
        let (va, vb) = (floored(va), floored(vb));
        starts.push(grid[i]);
        distances.push(bhattacharyya_1d(ma, va, mb, vb));
        i += stride;
    }
    Ok(DistanceProfile {
        window_starts: starts,
        distances,
        window_len,
        stride,
        grid_size: b,
        floor_hits,
    })
}

/// How two 1-D datasets are turned into densities on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    /// Split and k-NN settings used for each dataset's density.
    pub pipeline: EntropyPipeline,
    /// Defaults to the neighbour rank `k` of the normal set.
    pub window_len: Option<usize>,
    /// Defaults to `window_len`.
    pub stride: Option<usize>,
    /// Grid points over the union range; defaults to the larger dataset size.
    pub grid_len: Option<usize>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            pipeline: EntropyPipeline {
                renormalize: Some(true),
                ..EntropyPipeline::default()
            },
            window_len: None,
            stride: None,
            grid_len: None,
        }
    }
}

/// Both densities on the common grid and their windowed distance profile.
#[derive(Debug, Clone)]
pub struct DensityComparison {
    pub grid: Vec<f64>,
    pub pdf_normal: Vec<f64>,
    pub pdf_test: Vec<f64>,
    pub profile: DistanceProfile,
}

impl DensityComparison {
    /// `KL(test || normal)` after renormalizing both densities on the grid.
    pub fn kl_test_normal(&self) -> Result<KlResult> {
        let p = normalize_on_grid(&self.pdf_test, &self.grid)?;
        let q = normalize_on_grid(&self.pdf_normal, &self.grid)?;
        kl_divergence(&p, &q, &self.grid)
    }
}

/// Estimates each dataset's density (normal with `seed`, test with `seed + 1`),
/// resamples both onto a uniform grid spanning the two evaluation ranges, and
/// computes the windowed Bhattacharyya profile.
pub fn compare_densities(normal: &Dataset, test: &Dataset, config: &ProfileConfig, seed: u64) -> Result<DensityComparison> {
    if normal.dim() != 1 || test.dim() != 1 {
        return Err(Error::invalid("datasets", "density profiles are 1-D only"));
    }
    let a = config.pipeline.run(normal, seed)?.density;
    let b = config.pipeline.run(test, seed.wrapping_add(1))?.density;
    let range = |d: &DensityEstimate| {
        d.eval_points
            .as_flat()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    };
    let ((lo_a, hi_a), (lo_b, hi_b)) = (range(&a), range(&b));
    let grid_len = config.grid_len.unwrap_or(normal.len().max(test.len()));
    if grid_len < 2 {
        return Err(Error::invalid("grid_len", "need at least 2 grid points"));
    }
    let grid = linspace(lo_a.min(lo_b), hi_a.max(hi_b), grid_len);
    let pdf_normal = resample_on_grid(&a, &grid)?;
    let pdf_test = resample_on_grid(&b, &grid)?;
    let window_len = config.window_len.unwrap_or(a.k);
    let stride = config.stride.unwrap_or(window_len);
    let profile = windowed_bhattacharyya(&pdf_normal, &pdf_test, &grid, window_len, stride)?;
    Ok(DensityComparison {
        grid,
        pdf_normal,
        pdf_test,
        profile,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlResult {
    pub value: f64,
    /// Grid points where `p > 0` met `q == 0` and `q` was floored.
    pub floored: usize,
    /// Part of `value` contributed by the floored points.
    pub floored_contribution: f64,
}

/// Rectangular-rule `sum p ln(p / q) dx` over a uniform grid.
pub fn kl_divergence(pdf_p: &[f64], pdf_q: &[f64], grid: &[f64]) -> Result<KlResult> {
    if pdf_p.len() != pdf_q.len() || pdf_p.len() != grid.len() {
        return Err(Error::LengthMismatch {
            left: pdf_p.len(),
            right: pdf_q.len().min(grid.len()),
        });
    }
    if pdf_p.iter().chain(pdf_q).any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("pdf", "values must be finite and nonnegative"));
    }
    let dx = uniform_step(grid)?;
    let mut floored = 0;
    let mut sum = 0.0;
    let mut floored_sum = 0.0;
    for (&p, &q) in pdf_p.iter().zip(pdf_q) {
        if p > 0.0 {
            if q > 0.0 {
                sum += p * (p / q).ln();
            } else {
                floored += 1;
                let term = p * (p / KL_Q_FLOOR).ln();
                sum += term;
                floored_sum += term;
            }
        }
    }
    Ok(KlResult {
        value: sum * dx,
        floored,
        floored_contribution: floored_sum * dx,
    })
}

/// Step of a uniform grid (relative tolerance 1e-6). Single-point grids have step 1.
pub fn uniform_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Ok(1.0);
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::invalid("grid", "must be strictly increasing"));
    }
    for (index, w) in grid.windows(2).enumerate() {
        let other = w[1] - w[0];
        if (other - step).abs() > 1e-6 * step {
            return Err(Error::NonUniformGrid { step, other, index });
        }
    }
    Ok(step)
}

/// Divides `values` by their rectangular-rule integral over `grid`.
pub fn normalize_on_grid(values: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let dx = uniform_step(grid)?;
    let z = values.iter().sum::<f64>() * dx;
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::invalid("pdf", format!("integral is {z}")));
    }
    Ok(values.iter().map(|v| v / z).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uni(m: f64, v: f64) -> GaussianSummary {
        GaussianSummary::univariate(m, v)
    }

    #[test]
    fn bhattacharyya_hand_examples() {
        assert_eq!(bhattacharyya(&uni(0.3, 2.0), &uni(0.3, 2.0)).unwrap(), 0.0);
        assert!((bhattacharyya(&uni(0.0, 1.0), &uni(2.0, 1.0)).unwrap() - 0.5).abs() < 1e-12);
        let expected = 0.5 * (2.5f64 / 2.0).ln();
        assert!((bhattacharyya(&uni(0.0, 1.0), &uni(0.0, 4.0)).unwrap() - expected).abs() < 1e-12);
        assert!(bhattacharyya(&uni(0.0, 0.0), &uni(0.0, 1.0)).is_err());
    }

    #[test]
    fn multivariate_matches_product_of_independent_axes() {
        // independent axes: distance is the sum of per-axis distances
        let p = GaussianSummary::new(
            DVector::from_vec(vec![0.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]),
        )
        .unwrap();
        let q = GaussianSummary::new(
            DVector::from_vec(vec![2.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        let expected = 0.5 + 0.5 * (2.5f64 / 2.0).ln();
        assert!((bhattacharyya(&p, &q).unwrap() - expected).abs() < 1e-12);
        assert_eq!(bhattacharyya(&p, &q).unwrap(), bhattacharyya(&q, &p).unwrap());
        assert!(bhattacharyya(&p, &uni(0.0, 1.0)).is_err());
        let singular = GaussianSummary::new(DVector::zeros(2), DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!(matches!(bhattacharyya(&p, &singular), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn windowed_examples() {
        let grid = [0.0, 1.0];
        let p = windowed_bhattacharyya(&[0.2, 0.4], &[0.3, 0.5], &grid, 2, 2).unwrap();
        assert!((p.distances[0] - 0.0625).abs() < 1e-12);
        assert_eq!(p.window_starts, vec![0.0]);

        let c: f64 = 0.3;
        let p = windowed_bhattacharyya(&[0.0, 0.0], &[c, c], &grid, 2, 2).unwrap();
        let expected = 0.125 * c * c * (2.0 / (2.0 * ZERO_VARIANCE_FLOOR));
        assert!((p.distances[0] - expected).abs() < 1e-9);
        assert_eq!(p.floor_hits, 2);
    }

    #[test]
    fn windowed_layout_and_errors() {
        let grid: Vec<f64> = (0..10).map(f64::from).collect();
        let a: Vec<f64> = grid.iter().map(|x| x * x).collect();
        let p = windowed_bhattacharyya(&a, &a, &grid, 3, 3).unwrap();
        assert_eq!(p.window_starts, vec![0.0, 3.0, 6.0]);
        assert!(p.distances.iter().all(|d| *d == 0.0));
        let sliding = windowed_bhattacharyya(&a, &a, &grid, 3, 1).unwrap();
        assert_eq!(sliding.len(), 8);
        assert!(windowed_bhattacharyya(&a, &a, &grid, 11, 11).is_err());
        assert!(windowed_bhattacharyya(&a, &a[1..], &grid, 2, 2).is_err());
        assert!(windowed_bhattacharyya(&a, &a, &grid, 1, 1).is_err());
    }

    #[test]
    fn kl_examples() {
        let r = kl_divergence(&[0.5, 0.5], &[0.25, 0.75], &[0.0, 1.0]).unwrap();
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((r.value - expected).abs() < 1e-12);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5], &[0.0, 1.0]).unwrap().value, 0.0);
        let r = kl_divergence(&[0.5, 0.5], &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(r.floored, 1);
        assert!(kl_divergence(&[-0.1, 1.1], &[0.5, 0.5], &[0.0, 1.0]).is_err());
        assert!(matches!(
            kl_divergence(&[0.3, 0.3, 0.4], &[0.3, 0.3, 0.4], &[0.0, 1.0, 3.0]),
            Err(Error::NonUniformGrid { .. })
        ));
    }

    proptest! {
        #[test]
        fn bhattacharyya_symmetric_nonnegative(
            m1 in -10.0f64..10.0, v1 in 0.01f64..10.0,
            m2 in -10.0f64..10.0, v2 in 0.01f64..10.0,
        ) {
            let ab = bhattacharyya(&uni(m1, v1), &uni(m2, v2)).unwrap();
            let ba = bhattacharyya(&uni(m2, v2), &uni(m1, v1)).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab >= -1e-12);
        }

        #[test]
        fn bhattacharyya_affine_invariant(
            m1 in -10.0f64..10.0, v1 in 0.01f64..10.0,
            m2 in -10.0f64..10.0, v2 in 0.01f64..10.0,
            a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], b in -10.0f64..10.0,
        ) {
            let base = bhattacharyya(&uni(m1, v1), &uni(m2, v2)).unwrap();
            let mapped = bhattacharyya(&uni(a * m1 + b, a * a * v1), &uni(a * m2 + b, a * a * v2)).unwrap();
            prop_assert!((base - mapped).abs() < 1e-9 * (1.0 + base));
        }

        #[test]
        fn self_profile_is_zero(values in prop::collection::vec(0.0f64..3.0, 4..60), w in 2usize..4) {
            let grid: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
            let p = windowed_bhattacharyya(&values, &values, &grid, w, w).unwrap();
            prop_assert!(p.distances.iter().all(|d| *d == 0.0));
        }

        #[test]
        fn kl_gibbs(p in prop::collection::vec(0.0f64..1.0, 3..40), q in prop::collection::vec(0.01f64..1.0, 3..40)) {
            let n = p.len().min(q.len());
            prop_assume!(p[..n].iter().sum::<f64>() > 0.0);
            let grid: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
            let pn = normalize_on_grid(&p[..n], &grid).unwrap();
            let qn = normalize_on_grid(&q[..n], &grid).unwrap();
            prop_assert!(kl_divergence(&pn, &qn, &grid).unwrap().value >= -1e-9);
        }
    }
}
