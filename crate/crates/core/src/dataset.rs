//! Point sets and the reference/evaluation split.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// An ordered collection of `dim`-dimensional finite points, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    coords: Vec<f64>,
    dim: usize,
    pub provenance: String,
}

impl Dataset {
    /// Builds a dataset from a flat row-major coordinate buffer.
    pub fn from_flat(coords: Vec<f64>, dim: usize, provenance: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: pos / dim });
        }
        Ok(Self {
            coords,
            dim,
            provenance: provenance.into(),
        })
    }

    pub fn from_points(points: &[Vec<f64>], provenance: impl Into<String>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(coords, dim, provenance)
    }

    /// One-dimensional dataset from scalar values.
    pub fn from_values(values: &[f64], provenance: impl Into<String>) -> Result<Self> {
        Self::from_flat(values.to_vec(), 1, provenance)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Values of coordinate `axis` across all points.
    pub fn column(&self, axis: usize) -> Vec<f64> {
        self.points().map(|p| p[axis]).collect()
    }

    /// Subset by index, in the given order.
    pub fn select(&self, indices: &[usize], provenance: impl Into<String>) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self {
            coords,
            dim: self.dim,
            provenance: provenance.into(),
        }
    }

    /// Applies `f` to every coordinate.
    pub fn map_coords(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_flat(
            self.coords.iter().map(|&c| f(c)).collect(),
            self.dim,
            self.provenance.clone(),
        )
    }

    /// Reads a dataset CSV: one point per row, one column per coordinate.
    pub fn read_csv(path: &Path, has_header: bool) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut coords = Vec::new();
        let mut dim = None;
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let line = row + 1 + usize::from(has_header);
            match dim {
                None => dim = Some(record.len()),
                Some(d) if d != record.len() => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("expected {d} columns, found {}", record.len()),
                    })
                }
                _ => {}
            }
            for field in record.iter() {
                let value: f64 = field.parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("not a number: {field:?}"),
                })?;
                coords.push(value);
            }
        }
        let dim = dim.ok_or(Error::EmptyDataset)?;
        Self::from_flat(coords, dim, format!("file:{}", path.display()))
    }

    /// Serializes as CSV with full round-trip precision.
    pub fn to_csv_string(&self, header: bool) -> String {
        let mut out = String::new();
        if header {
            let names: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
            out.push_str(&names.join(","));
            out.push('\n');
        }
        for p in self.points() {
            push_row(&mut out, p);
        }
        out
    }
}

pub(crate) fn push_row(out: &mut String, values: &[f64]) {
    for (j, v) in values.iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        out.push_str(&v.to_string());
    }
    out.push('\n');
}

/// A dataset partitioned into a reference set (density) and an evaluation set (entropy).
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub reference: Dataset,
    pub evaluation: Dataset,
    pub fraction: f64,
}

/// Splits `data` with a seeded uniform permutation.
///
/// The evaluation part receives `floor(fraction * n)` points and the reference part
/// the remainder.
pub fn split_dataset(data: &Dataset, fraction: f64, seed: u64) -> Result<SplitDataset> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid("fraction", format!("{fraction} not in (0, 1)")));
    }
    let n = data.len();
    let n_eval = (fraction * n as f64).floor() as usize;
    if n_eval == 0 || n_eval == n {
        return Err(Error::invalid(
            "fraction",
            format!("{fraction} of {n} points leaves an empty part"),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (eval_idx, ref_idx) = order.split_at(n_eval);
    Ok(SplitDataset {
        evaluation: data.select(eval_idx, format!("{} [eval]", data.provenance)),
        reference: data.select(ref_idx, format!("{} [ref]", data.provenance)),
        fraction,
    })
}
