//! Data-split k-nearest-neighbour density estimation.
//!
//! For a query `x`, a reference set of size `M` and the distance `r_k(x)` to the
//! k-th nearest reference point, the estimate is
//!
//! ```text
//! f(x) = (k - 1) / (M * V_d(r_k(x)))
//! ```
//!
//! where `V_d(r)` is the volume of the Euclidean `d`-ball of radius `r`.
//! Neighbour search is exact. One-dimensional references are searched through a
//! sorted copy; higher dimensions use a brute-force partial selection.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Smallest integer `k` with `k * k >= m`.
pub fn default_k(m: usize) -> usize {
    let mut k = (m as f64).sqrt().ceil() as usize;
    while k > 1 && (k - 1) * (k - 1) >= m {
        k -= 1;
    }
    while k * k < m {
        k += 1;
    }
    k.max(1)
}

/// Volume of the `dim`-dimensional Euclidean ball of the given radius.
pub fn ball_volume(radius: f64, dim: usize) -> f64 {
    match dim {
        1 => 2.0 * radius,
        2 => PI * radius * radius,
        3 => 4.0 / 3.0 * PI * radius.powi(3),
        d => {
            let half = d as f64 / 2.0;
            (half * PI.ln() - ln_gamma(half + 1.0)).exp() * radius.powi(d as i32)
        }
    }
}

/// Evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut grid: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            grid[n - 1] = hi;
            grid
        }
    }
}

/// Per-axis support limits. Infinite entries mean "unbounded on that side".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SupportBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::LengthMismatch {
                left: lower.len(),
                right: upper.len(),
            });
        }
        for (l, u) in lower.iter().zip(&upper) {
            if l.is_nan() || u.is_nan() || (l.is_finite() && u.is_finite() && l >= u) {
                return Err(Error::invalid("bounds", format!("lower {l} must be below upper {u}")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    /// `[0, 1]^dim`.
    pub fn unit_cube(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// True when the ball of `radius` around `x` crosses a finite bound.
    /// Points outside the bounds always count as crossing.
    pub fn ball_crosses(&self, x: &[f64], radius: f64) -> bool {
        x.iter().enumerate().any(|(j, &xj)| {
            let lo = self.lower[j];
            let hi = self.upper[j];
            (lo.is_finite() && radius > xj - lo) || (hi.is_finite() && radius > hi - xj)
        })
    }
}

/// Density values at a set of evaluation points.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub eval_points: Dataset,
    pub values: Vec<f64>,
    /// k-th nearest-neighbour distance of each evaluation point.
    pub radii: Vec<f64>,
    pub k: usize,
    pub m_ref: usize,
    pub dim: usize,
    pub corrected: bool,
    pub renormalized: bool,
    /// Points whose k-NN radius was zero and took a neighbour's value.
    pub saturated: Vec<usize>,
    /// Points replaced by boundary correction.
    pub boundary_replaced: Vec<usize>,
}

/// Sidecar metadata written next to a density CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityMeta {
    pub k: usize,
    pub m_ref: usize,
    pub n_eval: usize,
    pub dim: usize,
    pub corrected: bool,
    pub renormalized: bool,
    pub saturated: usize,
    pub boundary_replaced: usize,
}

impl DensityEstimate {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn meta(&self) -> DensityMeta {
        DensityMeta {
            k: self.k,
            m_ref: self.m_ref,
            n_eval: self.len(),
            dim: self.dim,
            corrected: self.corrected,
            renormalized: self.renormalized,
            saturated: self.saturated.len(),
            boundary_replaced: self.boundary_replaced.len(),
        }
    }

    /// CSV with the coordinate columns followed by `pdf`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        header.push("pdf".into());
        out.push_str(&header.join(","));
        out.push('\n');
        let mut row = Vec::with_capacity(self.dim + 1);
        for (p, v) in self.eval_points.points().zip(&self.values) {
            row.clear();
            row.extend_from_slice(p);
            row.push(*v);
            crate::dataset::push_row(&mut out, &row);
        }
        out
    }
}

/// Exact k-th nearest-neighbour distance queries against a fixed reference set.
#[derive(Debug, Clone)]
pub struct KnnIndex<'a> {
    reference: &'a Dataset,
    sorted: Option<Vec<f64>>,
}

impl<'a> KnnIndex<'a> {
    pub fn new(reference: &'a Dataset) -> Self {
        let sorted = (reference.dim() == 1).then(|| {
            let mut v = reference.as_flat().to_vec();
            v.sort_by(f64::total_cmp);
            v
        });
        Self { reference, sorted }
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    /// k-th smallest distance from `query` to the reference points (1-based `k`,
    /// duplicates counted with multiplicity). `scratch` is reused between calls.
    pub fn kth_distance(&self, query: &[f64], k: usize, scratch: &mut Vec<f64>) -> f64 {
        debug_assert!(k >= 1 && k <= self.len());
        match &self.sorted {
            Some(sorted) => kth_distance_sorted(sorted, query[0], k),
            None => {
                scratch.clear();
                scratch.extend(self.reference.points().map(|r| squared_distance(query, r)));
                let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
                kth.sqrt()
            }
        }
    }
}

fn kth_distance_sorted(sorted: &[f64], q: f64, k: usize) -> f64 {
    let m = sorted.len();
    let mut hi = sorted.partition_point(|&r| r < q);
    let mut lo = hi;
    let mut kth = 0.0;
    for _ in 0..k {
        let left = (lo > 0).then(|| q - sorted[lo - 1]);
        let right = (hi < m).then(|| sorted[hi] - q);
        kth = match (left, right) {
            (Some(l), Some(r)) if l <= r => {
                lo -= 1;
                l
            }
            (_, Some(r)) => {
                hi += 1;
                r
            }
            (Some(l), None) => {
                lo -= 1;
                l
            }
            (None, None) => unreachable!("k exceeds reference size"),
        };
    }
    kth
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Brute-force k-th nearest-neighbour distance (Euclidean).
pub fn kth_nn_distance(query: &[f64], reference: &Dataset, k: usize) -> Result<f64> {
    if query.len() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            found: query.len(),
        });
    }
    if k == 0 {
        return Err(Error::invalid("k", "must be positive"));
    }
    if k > reference.len() {
        return Err(Error::KTooLarge {
            k,
            size: reference.len(),
        });
    }
    let mut d: Vec<f64> = reference
        .points()
        .map(|r| squared_distance(query, r).sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    Ok(d[k - 1])
}

/// Evaluates the k-NN density of `reference` at every point of `eval_points`.
///
/// Points whose k-NN radius is exactly zero take the value of the nearest
/// evaluation point with a positive radius and are listed in `saturated`.
pub fn estimate_density(eval_points: &Dataset, reference: &Dataset, k: usize) -> Result<DensityEstimate> {
    if k < 2 {
        return Err(Error::invalid("k", format!("{k} < 2, numerator k - 1 must be positive")));
    }
    if reference.is_empty() || eval_points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if eval_points.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            found: eval_points.dim(),
        });
    }
    let m = reference.len();
    if k > m {
        return Err(Error::KTooLarge { k, size: m });
    }
    let dim = reference.dim();
    let index = KnnIndex::new(reference);
    let n = eval_points.len();
    let radii: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(if dim == 1 { 0 } else { m }),
            |scratch, i| index.kth_distance(eval_points.point(i), k, scratch),
        )
        .collect();

    let numerator = (k - 1) as f64;
    let mut values: Vec<f64> = radii
        .iter()
        .map(|&r| {
            if r > 0.0 {
                numerator / (m as f64 * ball_volume(r, dim))
            } else {
                f64::NAN
            }
        })
        .collect();

    let saturated: Vec<usize> = (0..n).filter(|&i| radii[i] <= 0.0).collect();
    if !saturated.is_empty() {
        let donors: Vec<usize> = (0..n).filter(|&i| radii[i] > 0.0).collect();
        if donors.is_empty() {
            return Err(Error::DuplicateSaturation);
        }
        let fills = nearest_donor_values(eval_points, &saturated, &donors, &values);
        for (&i, v) in saturated.iter().zip(fills) {
            values[i] = v;
        }
    }

    Ok(DensityEstimate {
        eval_points: eval_points.clone(),
        values,
        radii,
        k,
        m_ref: m,
        dim,
        corrected: false,
        renormalized: false,
        saturated,
        boundary_replaced: Vec::new(),
    })
}

/// For each target, the value of the nearest donor (Euclidean; ties to the lowest index).
fn nearest_donor_values(points: &Dataset, targets: &[usize], donors: &[usize], values: &[f64]) -> Vec<f64> {
    targets
        .par_iter()
        .map(|&t| {
            let x = points.point(t);
            let mut best = donors[0];
            let mut best_d = f64::INFINITY;
            for &j in donors {
                let d = squared_distance(x, points.point(j));
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            values[best]
        })
        .collect()
}

/// Replaces values of points whose k-NN ball crosses a finite support bound with
/// the value of the nearest evaluation point whose ball lies inside the bounds.
pub fn boundary_correct(
    estimate: &DensityEstimate,
    reference: &Dataset,
    bounds: &SupportBounds,
    k: usize,
) -> Result<DensityEstimate> {
    if estimate.k != k || estimate.m_ref != reference.len() {
        return Err(Error::invalid(
            "estimate",
            format!(
                "built with k={}, M={}, correction asked for k={k}, M={}",
                estimate.k,
                estimate.m_ref,
                reference.len()
            ),
        ));
    }
    if bounds.dim() != estimate.dim || reference.dim() != estimate.dim {
        return Err(Error::DimensionMismatch {
            expected: estimate.dim,
            found: bounds.dim(),
        });
    }
    let points = &estimate.eval_points;
    let (crossing, interior): (Vec<usize>, Vec<usize>) = (0..estimate.len())
        .partition(|&i| bounds.ball_crosses(points.point(i), estimate.radii[i]));

    let mut out = estimate.clone();
    out.corrected = true;
    if crossing.is_empty() {
        return Ok(out);
    }
    if interior.is_empty() {
        return Err(Error::NoInteriorPoint);
    }
    let fills = nearest_donor_values(points, &crossing, &interior, &estimate.values);
    for (&i, v) in crossing.iter().zip(fills) {
        out.values[i] = v;
    }
    out.boundary_replaced = crossing;
    Ok(out)
}

/// Rectangular-rule integral `sum(f_i) * dx` over a 1-D point set, with
/// `dx = (max - min) / (n - 1)` (the step of a uniform grid).
pub fn grid_integral(xs: &[f64], values: &[f64]) -> Result<f64> {
    if xs.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: values.len(),
        });
    }
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if xs.len() < 2 || !(hi > lo) {
        return Err(Error::InsufficientData {
            needed: 2,
            have: if xs.is_empty() { 0 } else { 1 },
        });
    }
    let dx = (hi - lo) / (xs.len() - 1) as f64;
    Ok(values.iter().sum::<f64>() * dx)
}

/// Scales a 1-D estimate so its rectangular-rule integral over the evaluation
/// grid equals one.
pub fn renormalize(estimate: &DensityEstimate) -> Result<DensityEstimate> {
    if estimate.dim != 1 {
        return Err(Error::invalid("estimate", "renormalization is 1-D only"));
    }
    let integral = grid_integral(estimate.eval_points.as_flat(), &estimate.values)?;
    if !(integral > 0.0) || !integral.is_finite() {
        return Err(Error::invalid("estimate", format!("integral is {integral}")));
    }
    let mut out = estimate.clone();
    for v in &mut out.values {
        *v /= integral;
    }
    out.renormalized = true;
    Ok(out)
}

/// Linear interpolation of a 1-D estimate onto `grid`; zero outside the
/// estimate's `[min, max]` range.
pub fn resample_on_grid(estimate: &DensityEstimate, grid: &[f64]) -> Result<Vec<f64>> {
    if estimate.dim != 1 {
        return Err(Error::invalid("estimate", "resampling is 1-D only"));
    }
    resample_pairs(estimate.eval_points.as_flat(), &estimate.values, grid)
}

/// Piecewise-linear interpolation of `(xs, ys)` onto `grid`. Duplicate `xs` are
/// averaged.
pub fn resample_pairs(xs: &[f64], ys: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("grid", "must be sorted ascending"));
    }
    let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    let mut run = 0usize;
    for (x, y) in pairs {
        match knots.last_mut() {
            Some(last) if last.0 == x => {
                run += 1;
                last.1 += (y - last.1) / run as f64;
            }
            _ => {
                run = 1;
                knots.push((x, y));
            }
        }
    }
    if knots.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            have: knots.len(),
        });
    }
    let lo = knots[0].0;
    let hi = knots[knots.len() - 1].0;
    Ok(grid
        .iter()
        .map(|&g| {
            if g < lo || g > hi {
                return 0.0;
            }
            let j = knots.partition_point(|&(x, _)| x < g);
            let (x1, y1) = knots[j];
            if x1 == g {
                return y1;
            }
            let (x0, y0) = knots[j - 1];
            y0 + (y1 - y0) * (g - x0) / (x1 - x0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds1(v: &[f64]) -> Dataset {
        Dataset::from_values(v, "test").unwrap()
    }

    fn square() -> Dataset {
        Dataset::from_points(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            "square",
        )
        .unwrap()
    }

    #[test]
    fn kth_distance_hand_examples() {
        let r = ds1(&[0.0, 1.0, 2.0, 4.0]);
        assert_eq!(kth_nn_distance(&[1.5], &r, 2).unwrap(), 0.5);
        assert_eq!(kth_nn_distance(&[1.0], &r, 1).unwrap(), 0.0);
        let d = kth_nn_distance(&[0.5, 0.5], &square(), 2).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(kth_nn_distance(&[0.0], &r, 5), Err(Error::KTooLarge { .. })));
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(ball_volume(1.0, 1), 2.0);
        assert!((ball_volume(1.0, 2) - PI).abs() < 1e-15);
        assert!((ball_volume(0.5, 2) - PI / 4.0).abs() < 1e-15);
        assert!((ball_volume(1.0, 3) - 4.0 / 3.0 * PI).abs() < 1e-15);
        // d = 4: pi^2 / 2
        assert!((ball_volume(1.0, 4) - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn default_k_is_ceil_sqrt() {
        assert_eq!(default_k(5000), 71);
        assert_eq!(default_k(2500), 50);
        assert_eq!(default_k(91), 10);
        assert_eq!(default_k(1), 1);
    }

    #[test]
    fn density_hand_examples() {
        // radius 0.5, length 1: (2 - 1) / (4 * 1)
        let est = estimate_density(&ds1(&[1.5]), &ds1(&[0.0, 1.0, 2.0, 4.0]), 2).unwrap();
        assert!((est.values[0] - 0.25).abs() < 1e-15);
        let q = Dataset::from_points(&[vec![0.5, 0.5]], "q").unwrap();
        let est = estimate_density(&q, &square(), 2).unwrap();
        assert!((est.values[0] - 1.0 / (4.0 * PI * 0.5)).abs() < 1e-12);
        assert!(!est.corrected && !est.renormalized);
    }

    #[test]
    fn density_rejects_small_k() {
        let r = ds1(&[0.0, 1.0]);
        assert!(estimate_density(&r, &r, 1).is_err());
        assert!(matches!(estimate_density(&r, &r, 3), Err(Error::KTooLarge { .. })));
    }

    #[test]
    fn duplicate_saturation_borrows_nearest_positive_radius() {
        // three copies of 0 in the reference: k = 2 radius at 0 is zero
        let reference = ds1(&[0.0, 0.0, 0.0, 5.0]);
        let eval = ds1(&[0.0, 1.0, 3.0]);
        let est = estimate_density(&eval, &reference, 2).unwrap();
        assert_eq!(est.saturated, vec![0]);
        assert_eq!(est.values[0], est.values[1]);
        assert!(est.values.iter().all(|v| v.is_finite() && *v > 0.0));

        let all_dup = ds1(&[2.0, 2.0, 2.0]);
        assert!(matches!(
            estimate_density(&ds1(&[2.0]), &all_dup, 2),
            Err(Error::DuplicateSaturation)
        ));
    }

    #[test]
    fn boundary_correction_unbounded_is_identity() {
        let reference = ds1(&[0.1, 0.2, 0.4, 0.5, 0.9]);
        let eval = ds1(&[0.05, 0.3, 0.7]);
        let est = estimate_density(&eval, &reference, 3).unwrap();
        let out = boundary_correct(&est, &reference, &SupportBounds::unbounded(1), 3).unwrap();
        assert_eq!(out.values, est.values);
        assert!(out.corrected);
        assert!(out.boundary_replaced.is_empty());
    }

    #[test]
    fn boundary_correction_replaces_crossing_points() {
        let reference = ds1(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        let eval = ds1(&[0.02, 0.5, 0.45, 0.97]);
        let est = estimate_density(&eval, &reference, 3).unwrap();
        let out = boundary_correct(&est, &reference, &SupportBounds::unit_cube(1), 3).unwrap();
        for &i in &out.boundary_replaced {
            let x = eval.point(i)[0];
            assert!(est.radii[i] > x.min(1.0 - x));
        }
        assert_eq!(out.boundary_replaced, vec![0, 3]);
        // 0.02 is nearest to 0.45, 0.97 to 0.5
        assert_eq!(out.values[0], est.values[2]);
        assert_eq!(out.values[3], est.values[1]);
    }

    #[test]
    fn boundary_correction_without_interior_fails() {
        let reference = ds1(&[0.1, 0.9]);
        let eval = ds1(&[0.2, 0.8]);
        let est = estimate_density(&eval, &reference, 2).unwrap();
        assert!(matches!(
            boundary_correct(&est, &reference, &SupportBounds::unit_cube(1), 2),
            Err(Error::NoInteriorPoint)
        ));
    }

    fn estimate_with(xs: &[f64], values: &[f64]) -> DensityEstimate {
        DensityEstimate {
            eval_points: ds1(xs),
            values: values.to_vec(),
            radii: vec![1.0; xs.len()],
            k: 2,
            m_ref: 2,
            dim: 1,
            corrected: false,
            renormalized: false,
            saturated: vec![],
            boundary_replaced: vec![],
        }
    }

    #[test]
    fn renormalize_examples() {
        let out = renormalize(&estimate_with(&[0.0, 0.5], &[2.0, 2.0])).unwrap();
        assert_eq!(out.values, vec![1.0, 1.0]);
        assert!(out.renormalized);

        // five cells of width 0.25 cover length L = 1.25
        let xs = linspace(0.0, 1.0, 5);
        let out = renormalize(&estimate_with(&xs, &[3.0; 5])).unwrap();
        for v in &out.values {
            assert!((v - 1.0 / 1.25).abs() < 1e-12);
        }
        let again = renormalize(&out).unwrap();
        for (a, b) in again.values.iter().zip(&out.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn renormalize_errors() {
        assert!(renormalize(&estimate_with(&[0.0, 0.5], &[0.0, 0.0])).is_err());
        assert!(renormalize(&estimate_with(&[0.5, 0.5], &[1.0, 1.0])).is_err());
        let mut two_d = estimate_with(&[0.0, 0.5], &[1.0, 1.0]);
        two_d.dim = 2;
        assert!(renormalize(&two_d).is_err());
    }

    #[test]
    fn resample_examples() {
        let est = estimate_with(&[0.0, 1.0], &[0.0, 1.0]);
        assert_eq!(resample_on_grid(&est, &[0.5]).unwrap(), vec![0.5]);
        assert_eq!(resample_on_grid(&est, &[-0.1, 1.1]).unwrap(), vec![0.0, 0.0]);
        let est = estimate_with(&[0.3, 0.1, 0.7], &[2.0, 1.0, 5.0]);
        assert_eq!(resample_on_grid(&est, &[0.1, 0.3, 0.7]).unwrap(), vec![1.0, 2.0, 5.0]);
        assert!(resample_on_grid(&estimate_with(&[0.0], &[1.0]), &[0.0]).is_err());
    }

    proptest! {
        #[test]
        fn sorted_search_matches_brute_force(
            reference in prop::collection::vec(-50.0f64..50.0, 1..60),
            q in -60.0f64..60.0,
            k_frac in 0.0f64..1.0,
        ) {
            let k = 1 + ((reference.len() - 1) as f64 * k_frac) as usize;
            let r = ds1(&reference);
            let index = KnnIndex::new(&r);
            let fast = index.kth_distance(&[q], k, &mut Vec::new());
            prop_assert_eq!(fast, kth_nn_distance(&[q], &r, k).unwrap());
        }

        #[test]
        fn scaling_divides_density(
            reference in prop::collection::vec(-10.0f64..10.0, 5..40),
            eval in prop::collection::vec(-10.0f64..10.0, 1..10),
            exp in -3i32..4,
        ) {
            let c = 2f64.powi(exp);
            let r = ds1(&reference);
            let e = ds1(&eval);
            let Ok(base) = estimate_density(&e, &r, 3) else { return Ok(()); };
            if !base.saturated.is_empty() { return Ok(()); }
            let scaled = estimate_density(
                &e.map_coords(|x| x * c).unwrap(),
                &r.map_coords(|x| x * c).unwrap(),
                3,
            ).unwrap();
            for (a, b) in base.values.iter().zip(&scaled.values) {
                prop_assert_eq!(a / c, *b);
            }
        }

        #[test]
        fn resample_is_zero_outside_support(
            xs in prop::collection::vec(-5.0f64..5.0, 2..30),
            g in prop::collection::vec(-20.0f64..20.0, 1..30),
        ) {
            let ys: Vec<f64> = xs.iter().map(|x| x.abs() + 0.1).collect();
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assume!(hi > lo);
            let mut grid = g;
            grid.sort_by(f64::total_cmp);
            let out = resample_pairs(&xs, &ys, &grid).unwrap();
            for (x, v) in grid.iter().zip(&out) {
                if *x < lo || *x > hi {
                    prop_assert_eq!(*v, 0.0);
                } else {
                    prop_assert!(*v > 0.0);
                }
            }
        }
    }
}
