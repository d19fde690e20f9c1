//! Raw asynchronous RSSI logs to a synchronous time x pair matrix.
//!
//! Canonical input is a CSV with header `time,tx,rx,rssi`, one row per
//! measurement of the link from sensor `tx` to sensor `rx`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::detection::{detect_series, normalize_against, DetectionReport, Threshold};
use crate::entropy::EntropyPipeline;
use crate::error::{Error, Result};
use crate::synthetic::rng_for;

pub const RAW_HEADER: [&str; 4] = ["time", "tx", "rx", "rssi"];
pub const DEFAULT_WINDOW: usize = 51;
pub const DEFAULT_BOUNDARY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub time: f64,
    pub tx: u32,
    pub rx: u32,
    pub rssi: f64,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn parse_raw(path: &Path) -> Result<Vec<RawRecord>> {
    let text = std::fs::read_to_string(path)?;
    parse_raw_str(&text, path)
}

/// Parses canonical raw CSV text; `path` only labels errors.
pub fn parse_raw_str(text: &str, path: &Path) -> Result<Vec<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();
    match rows.next() {
        None => return Err(parse_error(path, 1, "missing header `time,tx,rx,rssi`")),
        Some(header) => {
            let header = header?;
            if header.iter().ne(RAW_HEADER) {
                return Err(parse_error(path, 1, "expected header `time,tx,rx,rssi`"));
            }
        }
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != 4 {
            return Err(parse_error(path, line, format!("expected 4 fields, found {}", row.len())));
        }
        let real = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(path, line, format!("bad {} `{}`", RAW_HEADER[i], &row[i])))
        };
        let id = |i: usize| -> Result<u32> {
            row[i]
                .parse::<u32>()
                .map_err(|_| parse_error(path, line, format!("bad {} `{}`", RAW_HEADER[i], &row[i])))
        };
        let record = RawRecord {
            time: real(0)?,
            tx: id(1)?,
            rx: id(2)?,
            rssi: real(3)?,
        };
        if record.tx == record.rx {
            return Err(parse_error(path, line, format!("tx == rx == {}", record.tx)));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn raw_to_csv_string(records: &[RawRecord]) -> String {
    let mut out = RAW_HEADER.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{},{},{}\n", r.time, r.tx, r.rx, r.rssi));
    }
    out
}

/// Converts a whitespace-separated `time tx rx rssi` log (comment lines start
/// with `#`) into canonical records.
pub fn convert_whitespace_log(text: &str, path: &Path) -> Result<Vec<RawRecord>> {
    let mut csv = RAW_HEADER.join(",");
    csv.push('\n');
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        csv.push_str(&line.split_whitespace().collect::<Vec<_>>().join(","));
        csv.push('\n');
        lines.push(i + 1);
    }
    parse_raw_str(&csv, path).map_err(|e| match e {
        // map the synthetic CSV line back to the source line
        Error::Parse { path, line, message } if line >= 2 => Error::Parse {
            path,
            line: lines[line - 2],
            message,
        },
        other => other,
    })
}

/// Synchronous measurements: row `t` holds every directed pair at `times[t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementMatrix {
    pub times: Vec<f64>,
    /// Row-major `T x P`.
    values: Vec<f64>,
    pub pair_index: Vec<(u32, u32)>,
    /// Row-major `T x P`; true where the value came from endpoint extrapolation.
    extrapolated: Vec<bool>,
}

impl MeasurementMatrix {
    pub fn new(times: Vec<f64>, values: Vec<f64>, pair_index: Vec<(u32, u32)>) -> Result<Self> {
        let p = pair_index.len();
        if values.len() != times.len() * p {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: times.len() * p,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i / p.max(1) });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("times", "must be strictly increasing"));
        }
        let extrapolated = vec![false; values.len()];
        Ok(Self {
            times,
            values,
            pair_index,
            extrapolated,
        })
    }

    pub fn instants(&self) -> usize {
        self.times.len()
    }

    pub fn pairs(&self) -> usize {
        self.pair_index.len()
    }

    /// Distinct sensor ids.
    pub fn sensors(&self) -> usize {
        let mut ids: Vec<u32> = self.pair_index.iter().flat_map(|&(a, b)| [a, b]).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let p = self.pairs();
        &self.values[t * p..(t + 1) * p]
    }

    pub fn column(&self, pair: usize) -> Vec<f64> {
        (0..self.instants()).map(|t| self.values[t * self.pairs() + pair]).collect()
    }

    pub fn get(&self, t: usize, pair: usize) -> f64 {
        self.values[t * self.pairs() + pair]
    }

    pub fn is_extrapolated(&self, t: usize, pair: usize) -> bool {
        self.extrapolated[t * self.pairs() + pair]
    }

    /// Extrapolated grid points per pair.
    pub fn extrapolation_counts(&self) -> Vec<usize> {
        (0..self.pairs())
            .map(|p| (0..self.instants()).filter(|&t| self.is_extrapolated(t, p)).count())
            .collect()
    }

    /// The measurements at instant `t` as a 1-D dataset.
    pub fn instant_dataset(&self, t: usize) -> Result<Dataset> {
        Dataset::from_values(self.row(t), format!("instant {t}"))
    }

    fn rows(&self, range: std::ops::Range<usize>) -> Self {
        let p = self.pairs();
        Self {
            times: self.times[range.clone()].to_vec(),
            values: self.values[range.start * p..range.end * p].to_vec(),
            pair_index: self.pair_index.clone(),
            extrapolated: self.extrapolated[range.start * p..range.end * p].to_vec(),
        }
    }

    fn from_columns(times: Vec<f64>, pair_index: Vec<(u32, u32)>, columns: Vec<(Vec<f64>, Vec<bool>)>) -> Self {
        let (t_len, p) = (times.len(), columns.len());
        let mut values = vec![0.0; t_len * p];
        let mut extrapolated = vec![false; t_len * p];
        for (j, (col, flags)) in columns.into_iter().enumerate() {
            for t in 0..t_len {
                values[t * p + j] = col[t];
                extrapolated[t * p + j] = flags[t];
            }
        }
        Self {
            times,
            values,
            pair_index,
            extrapolated,
        }
    }

    /// `time,tx_rx,...` rows at full precision.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("time");
        for (tx, rx) in &self.pair_index {
            out.push_str(&format!(",{tx}_{rx}"));
        }
        out.push('\n');
        for t in 0..self.instants() {
            out.push_str(&self.times[t].to_string());
            for v in self.row(t) {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text, path)
    }

    /// Parses matrix CSV text. Extrapolation flags are not part of the CSV and
    /// come back cleared.
    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(text.as_bytes());
        let mut rows = reader.records();
        let header = rows
            .next()
            .ok_or_else(|| parse_error(path, 1, "missing header"))??;
        if header.get(0) != Some("time") {
            return Err(parse_error(path, 1, "first column must be `time`"));
        }
        let pair_index = header
            .iter()
            .skip(1)
            .map(|name| {
                name.split_once('_')
                    .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                    .ok_or_else(|| parse_error(path, 1, format!("bad pair column `{name}`")))
            })
            .collect::<Result<Vec<(u32, u32)>>>()?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for row in rows {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            if row.len() != pair_index.len() + 1 {
                return Err(parse_error(path, line, "wrong number of fields"));
            }
            for (i, field) in row.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_error(path, line, format!("bad number `{field}`")))?;
                if i == 0 {
                    times.push(v);
                } else {
                    values.push(v);
                }
            }
        }
        Self::new(times, values, pair_index)
    }

    pub fn manifest(&self, window: Option<usize>) -> MatrixManifest {
        MatrixManifest {
            sensors: self.sensors(),
            pairs: self.pairs(),
            instants: self.instants(),
            grid_start: self.times.first().copied().unwrap_or(f64::NAN),
            grid_end: self.times.last().copied().unwrap_or(f64::NAN),
            window,
            extrapolated: self
                .pair_index
                .iter()
                .zip(self.extrapolation_counts())
                .filter(|(_, c)| *c > 0)
                .map(|(&(tx, rx), count)| ExtrapolationFlag { tx, rx, count })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationFlag {
    pub tx: u32,
    pub rx: u32,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixManifest {
    pub sensors: usize,
    pub pairs: usize,
    pub instants: usize,
    pub grid_start: f64,
    pub grid_end: f64,
    pub window: Option<usize>,
    pub extrapolated: Vec<ExtrapolationFlag>,
}

/// Linear interpolation of every directed pair onto `grid`. Grid points outside
/// a pair's observed span take the nearest endpoint value and are flagged.
pub fn synchronize(records: &[RawRecord], grid: &[f64]) -> Result<MeasurementMatrix> {
    if grid.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "must be finite and strictly increasing"));
    }
    let mut by_pair: BTreeMap<(u32, u32), Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        by_pair.entry((r.tx, r.rx)).or_default().push((r.time, r.rssi));
    }
    let mut sensors: Vec<u32> = by_pair.keys().flat_map(|&(a, b)| [a, b]).collect();
    sensors.sort_unstable();
    sensors.dedup();
    let pair_index: Vec<(u32, u32)> = sensors
        .iter()
        .flat_map(|&a| sensors.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
        .collect();
    for &(tx, rx) in &pair_index {
        let have = by_pair.get(&(tx, rx)).map_or(0, Vec::len);
        if have < 2 {
            return Err(Error::SparsePair { tx, rx, have });
        }
    }
    let columns: Vec<(Vec<f64>, Vec<bool>)> = pair_index
        .par_iter()
        .map(|pair| interpolate_pair(&by_pair[pair], grid))
        .collect();
    Ok(MeasurementMatrix::from_columns(grid.to_vec(), pair_index, columns))
}

fn interpolate_pair(samples: &[(f64, f64)], grid: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // repeated timestamps are averaged
    let mut pts: Vec<(f64, f64, usize)> = Vec::with_capacity(sorted.len());
    for (t, v) in sorted {
        match pts.last_mut() {
            Some(last) if last.0 == t => {
                last.1 += v;
                last.2 += 1;
            }
            _ => pts.push((t, v, 1)),
        }
    }
    let pts: Vec<(f64, f64)> = pts.into_iter().map(|(t, s, c)| (t, s / c as f64)).collect();
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    let mut values = Vec::with_capacity(grid.len());
    let mut flags = Vec::with_capacity(grid.len());
    for &g in grid {
        if g < first.0 {
            values.push(first.1);
            flags.push(true);
        } else if g > last.0 {
            values.push(last.1);
            flags.push(true);
        } else {
            let j = pts.partition_point(|p| p.0 <= g);
            let (t0, v0) = pts[j - 1];
            let v = if t0 == g || j == pts.len() {
                v0
            } else {
                let (t1, v1) = pts[j];
                v0 + (v1 - v0) * (g - t0) / (t1 - t0)
            };
            values.push(v);
            flags.push(false);
        }
    }
    // a single distinct timestamp spans nothing; every point is an endpoint copy
    if pts.len() == 1 {
        flags.iter_mut().for_each(|f| *f = true);
    }
    (values, flags)
}

/// Subtracts the centered moving average over `window` instants from each
/// column; windows are truncated at the edges.
pub fn remove_local_means(matrix: &MeasurementMatrix, window: usize) -> Result<MeasurementMatrix> {
    let t_len = matrix.instants();
    if window == 0 || window % 2 == 0 {
        return Err(Error::invalid("window", format!("{window} must be a positive odd integer")));
    }
    if window > t_len {
        return Err(Error::invalid("window", format!("{window} exceeds {t_len} instants")));
    }
    let half = window / 2;
    let columns: Vec<(Vec<f64>, Vec<bool>)> = (0..matrix.pairs())
        .into_par_iter()
        .map(|p| {
            let col = matrix.column(p);
            let detrended = (0..t_len)
                .map(|t| {
                    let lo = t.saturating_sub(half);
                    let hi = (t + half + 1).min(t_len);
                    let mean = col[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
                    col[t] - mean
                })
                .collect();
            let flags = (0..t_len).map(|t| matrix.is_extrapolated(t, p)).collect();
            (detrended, flags)
        })
        .collect();
    Ok(MeasurementMatrix::from_columns(
        matrix.times.clone(),
        matrix.pair_index.clone(),
        columns,
    ))
}

/// Instants `[0, boundary)` are the normal period, the rest the test period.
pub fn split_normal_test(matrix: &MeasurementMatrix, boundary: usize) -> Result<(MeasurementMatrix, MeasurementMatrix)> {
    let t_len = matrix.instants();
    if boundary == 0 || boundary >= t_len {
        return Err(Error::invalid("boundary", format!("{boundary} not in [1, {})", t_len)));
    }
    Ok((matrix.rows(0..boundary), matrix.rows(boundary..t_len)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub flags: Vec<bool>,
}

/// Truth entries `offset .. offset + T_test` of the raw series.
pub fn align_ground_truth(truth_raw: &[bool], test: &MeasurementMatrix, offset: usize) -> Result<GroundTruth> {
    let end = offset + test.instants();
    if end > truth_raw.len() {
        return Err(Error::invalid(
            "offset",
            format!("slice {offset}..{end} exceeds truth length {}", truth_raw.len()),
        ));
    }
    Ok(GroundTruth {
        flags: truth_raw[offset..end].to_vec(),
    })
}

pub fn truth_to_csv_string(flags: &[bool]) -> String {
    let mut out = String::from("truth\n");
    for f in flags {
        out.push_str(if *f { "1\n" } else { "0\n" });
    }
    out
}

/// Single-column 0/1 CSV; a non-numeric first line is taken as a header.
pub fn read_truth_csv(path: &Path) -> Result<Vec<bool>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        match field {
            "" => continue,
            "0" => out.push(false),
            "1" => out.push(true),
            _ if i == 0 => continue,
            other => return Err(parse_error(path, i + 1, format!("expected 0 or 1, found `{other}`"))),
        }
    }
    Ok(out)
}

/// Scripted monitoring session over a fully connected sensor network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub sensors: u32,
    pub instants: usize,
    /// Seconds between grid instants.
    pub step: f64,
    /// Motion occupies instants `motion_start ..= motion_end`.
    pub motion_start: usize,
    pub motion_end: usize,
    /// Fraction of pairs whose link is shadowed at each motion instant.
    pub affected_fraction: f64,
    /// Shadowing drop in dB, uniform in this range.
    pub drop_db: (f64, f64),
    pub noise_sd: f64,
    /// Record timestamps are jittered uniformly by up to this many seconds.
    pub jitter: f64,
}

impl Default for SessionSpec {
    fn default() -> Self {
        Self {
            sensors: 14,
            instants: 200,
            step: 1.0,
            motion_start: 120,
            motion_end: 140,
            affected_fraction: 0.4,
            drop_db: (5.0, 10.0),
            noise_sd: 1.0,
            jitter: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub records: Vec<RawRecord>,
    pub grid: Vec<f64>,
    /// Motion flag per grid instant.
    pub truth: Vec<bool>,
}

/// Asynchronous records for every directed pair at every instant: a per-pair
/// base level in [-70, -40] dB, a slow sinusoidal drift and Gaussian noise,
/// with shadowing drops during the scripted motion.
pub fn synthetic_session(spec: &SessionSpec, seed: u64) -> Result<Session> {
    if spec.sensors < 2 || spec.instants < 2 {
        return Err(Error::invalid("session", "need at least 2 sensors and 2 instants"));
    }
    if spec.motion_start > spec.motion_end || spec.motion_end >= spec.instants {
        return Err(Error::invalid("motion", "window must lie inside the session"));
    }
    if !(spec.step > 0.0) || !(spec.jitter >= 0.0) || spec.jitter >= spec.step / 2.0 {
        return Err(Error::invalid("jitter", "must be in [0, step / 2)"));
    }
    let mut rng = rng_for(seed);
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::invalid("noise_sd", e.to_string()))?;
    let pairs: Vec<(u32, u32)> = (1..=spec.sensors)
        .flat_map(|a| (1..=spec.sensors).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let levels: Vec<(f64, f64, f64)> = pairs
        .iter()
        .map(|_| {
            let base = -40.0 - 30.0 * rng.random::<f64>();
            let amplitude = 2.0 * rng.random::<f64>();
            let phase = std::f64::consts::TAU * rng.random::<f64>();
            (base, amplitude, phase)
        })
        .collect();
    let grid: Vec<f64> = (0..spec.instants).map(|t| t as f64 * spec.step).collect();
    let truth: Vec<bool> = (0..spec.instants)
        .map(|t| (spec.motion_start..=spec.motion_end).contains(&t))
        .collect();
    let mut records = Vec::with_capacity(spec.instants * pairs.len());
    let period = spec.instants as f64;
    for t in 0..spec.instants {
        for (&(tx, rx), &(base, amplitude, phase)) in pairs.iter().zip(&levels) {
            let time = grid[t] + spec.jitter * (2.0 * rng.random::<f64>() - 1.0);
            let drift = amplitude * (std::f64::consts::TAU * t as f64 / period + phase).sin();
            let mut rssi = base + drift + noise.sample(&mut rng);
            if truth[t] && rng.random::<f64>() < spec.affected_fraction {
                rssi -= rng.random_range(spec.drop_db.0..spec.drop_db.1);
            }
            records.push(RawRecord { time, tx, rx, rssi });
        }
    }
    Ok(Session { records, grid, truth })
}

/// Detrend, split, score each instant by its bias-corrected entropy, normalize
/// against the normal period and threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPipeline {
    pub window: usize,
    pub boundary: usize,
    /// Offset of the test segment into the raw truth series.
    pub truth_offset: usize,
    pub alpha: f64,
    pub entropy: EntropyPipeline,
}

impl Default for MotionPipeline {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            boundary: DEFAULT_BOUNDARY,
            truth_offset: DEFAULT_BOUNDARY,
            alpha: 0.05,
            entropy: EntropyPipeline {
                k: Some(10),
                renormalize: Some(true),
                ..EntropyPipeline::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct MotionOutcome {
    /// Raw bias-corrected entropy per instant of the whole session.
    pub entropy: Vec<f64>,
    /// Normalized scores of the normal period.
    pub training_scores: Vec<f64>,
    /// Detection over the test period, on normalized scores.
    pub report: DetectionReport,
}

/// Bias-corrected entropy of each row; row `t` uses seed `seed + t`.
pub fn instant_entropies(matrix: &MeasurementMatrix, pipeline: &EntropyPipeline, seed: u64) -> Result<Vec<f64>> {
    (0..matrix.instants())
        .into_par_iter()
        .map(|t| {
            let data = matrix.instant_dataset(t)?;
            Ok(pipeline.run(&data, seed.wrapping_add(t as u64))?.corrected.value)
        })
        .collect()
}

impl MotionPipeline {
    pub fn run(&self, synchronized: &MeasurementMatrix, truth_raw: Option<&[bool]>, seed: u64) -> Result<MotionOutcome> {
        let detrended = remove_local_means(synchronized, self.window)?;
        let entropy = instant_entropies(&detrended, &self.entropy, seed)?;
        let (normal, test) = split_normal_test(&detrended, self.boundary)?;
        let truth = truth_raw
            .map(|raw| align_ground_truth(raw, &test, self.truth_offset))
            .transpose()?;
        let (train, rest) = entropy.split_at(normal.instants());
        let training_scores = normalize_against(train, train)?;
        let test_scores = normalize_against(rest, train)?;
        let threshold = Threshold::new(0.0, 1.0, self.alpha)?;
        let mut report = detect_series(&test_scores, &threshold, truth.as_ref().map(|t| t.flags.as_slice()))?;
        report.indices = (self.boundary..synchronized.instants()).collect();
        Ok(MotionOutcome {
            entropy,
            training_scores,
            report,
        })
    }
}

/// Canonical fixture paths written by [`write_session`].
pub struct SessionFiles {
    pub raw: PathBuf,
    pub truth: PathBuf,
}

pub fn write_session(session: &Session, dir: &Path, stem: &str) -> Result<SessionFiles> {
    let raw = dir.join(format!("{stem}.csv"));
    let truth = dir.join(format!("{stem}_truth.csv"));
    std::fs::write(&raw, raw_to_csv_string(&session.records))?;
    std::fs::write(&truth, truth_to_csv_string(&session.truth))?;
    Ok(SessionFiles { raw, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("test.csv")
    }

    fn rec(time: f64, tx: u32, rx: u32, rssi: f64) -> RawRecord {
        RawRecord { time, tx, rx, rssi }
    }

    fn two_sensor(records_12: &[(f64, f64)], records_21: &[(f64, f64)]) -> Vec<RawRecord> {
        records_12
            .iter()
            .map(|&(t, v)| rec(t, 1, 2, v))
            .chain(records_21.iter().map(|&(t, v)| rec(t, 2, 1, v)))
            .collect()
    }

    #[test]
    fn parse_examples() {
        let text = "time,tx,rx,rssi\n0.0,1,2,-40\n0.5,2,1,-41.5\n1.0,1,2,-39\n";
        let r = parse_raw_str(text, p()).unwrap();
        assert_eq!(r, vec![rec(0.0, 1, 2, -40.0), rec(0.5, 2, 1, -41.5), rec(1.0, 1, 2, -39.0)]);

        let err = parse_raw_str("time,tx,rx,rssi\n0,1,2,-40\n1,3,3,-40\n", p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");

        assert!(parse_raw_str("time,tx,rx,rssi\n", p()).unwrap().is_empty());
        assert!(parse_raw_str("", p()).is_err());
        assert!(parse_raw_str("0,1,2,-40\n", p()).is_err());
        let err = parse_raw_str("time,tx,rx,rssi\n0,1,2,x\n", p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_raw(Path::new("/nonexistent/raw.csv")).is_err());
    }

    #[test]
    fn whitespace_converter_reports_source_lines() {
        let r = convert_whitespace_log("# log\n0 1 2 -40\n\n1 2 1 -41\n", p()).unwrap();
        assert_eq!(r.len(), 2);
        let err = convert_whitespace_log("# log\n0 1 2 -40\n\n1 2 2 -41\n", p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn synchronize_examples() {
        let recs = two_sensor(&[(0.0, -40.0), (2.0, -44.0)], &[(0.0, -50.0), (1.0, -51.0), (2.0, -52.0)]);
        let m = synchronize(&recs, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(m.pair_index, vec![(1, 2), (2, 1)]);
        assert_eq!(m.column(0), vec![-40.0, -42.0, -44.0]);
        // already on the grid: unchanged
        assert_eq!(m.column(1), vec![-50.0, -51.0, -52.0]);
        assert_eq!(m.extrapolation_counts(), vec![0, 0]);

        let m = synchronize(&recs, &[-1.0, 3.0]).unwrap();
        assert_eq!(m.column(0), vec![-40.0, -44.0]);
        assert!(m.is_extrapolated(0, 0) && m.is_extrapolated(1, 0));

        let sparse = two_sensor(&[(0.0, -40.0)], &[(0.0, -50.0), (1.0, -51.0)]);
        assert!(matches!(
            synchronize(&sparse, &[0.0]),
            Err(Error::SparsePair { tx: 1, rx: 2, have: 1 })
        ));
        // a missing direction is as sparse as it gets
        let one_way: Vec<RawRecord> = vec![rec(0.0, 1, 2, -1.0), rec(1.0, 1, 2, -1.0)];
        assert!(matches!(synchronize(&one_way, &[0.0]), Err(Error::SparsePair { have: 0, .. })));
        assert!(synchronize(&recs, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn local_mean_examples() {
        let m = MeasurementMatrix::new(vec![0.0, 1.0, 2.0], vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0], vec![(1, 2), (2, 1)]).unwrap();
        let d = remove_local_means(&m, 3).unwrap();
        assert_eq!(d.column(0), vec![-0.5, 0.0, 0.5]);
        assert_eq!(d.column(1), vec![0.0, 0.0, 0.0]);
        assert!(remove_local_means(&m, 2).is_err());
        assert!(remove_local_means(&m, 5).is_err());
        assert!(remove_local_means(&m, 0).is_err());
    }

    #[test]
    fn split_and_align_examples() {
        let times: Vec<f64> = (0..100).map(f64::from).collect();
        let m = MeasurementMatrix::new(times, vec![0.0; 200], vec![(1, 2), (2, 1)]).unwrap();
        let (n, t) = split_normal_test(&m, 50).unwrap();
        assert_eq!((n.instants(), t.instants()), (50, 50));
        assert_eq!(split_normal_test(&m, 99).unwrap().1.instants(), 1);
        assert!(split_normal_test(&m, 100).is_err());
        assert!(split_normal_test(&m, 0).is_err());

        let truth: Vec<bool> = (0..3178).map(|i| i % 7 == 0).collect();
        let times: Vec<f64> = (0..3128).map(f64::from).collect();
        let test = MeasurementMatrix::new(times, vec![0.0; 3128], vec![(1, 2)]).unwrap();
        let g = align_ground_truth(&truth, &test, 50).unwrap();
        assert_eq!(g.flags.as_slice(), &truth[50..3178]);
        assert_eq!(align_ground_truth(&truth, &test, 0).unwrap().flags.as_slice(), &truth[..3128]);
        assert!(align_ground_truth(&truth, &test, 51).is_err());
    }

    #[test]
    fn matrix_csv_round_trip() {
        let session = synthetic_session(&SessionSpec { sensors: 4, instants: 30, motion_start: 10, motion_end: 15, ..SessionSpec::default() }, 3).unwrap();
        let m = synchronize(&session.records, &session.grid).unwrap();
        assert_eq!((m.sensors(), m.pairs()), (4, 12));
        let back = MeasurementMatrix::parse_csv(&m.to_csv_string(), p()).unwrap();
        assert_eq!(back.times, m.times);
        assert_eq!(back.pair_index, m.pair_index);
        assert_eq!(back.to_csv_string(), m.to_csv_string());
        for t in 0..m.instants() {
            assert_eq!(back.row(t), m.row(t));
        }
    }

    #[test]
    fn truth_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.csv");
        let flags = vec![true, false, false, true];
        std::fs::write(&path, truth_to_csv_string(&flags)).unwrap();
        assert_eq!(read_truth_csv(&path).unwrap(), flags);
        std::fs::write(&path, "0\n1\n2\n").unwrap();
        assert!(matches!(read_truth_csv(&path), Err(Error::Parse { line: 3, .. })));
    }

    proptest! {
        #[test]
        fn linear_columns_detrend_to_zero_inside(
            slope in -5.0f64..5.0, intercept in -80.0f64..-20.0, half in 0usize..5, extra in 1usize..20,
        ) {
            let window = 2 * half + 1;
            let t_len = window + extra;
            let times: Vec<f64> = (0..t_len).map(|t| t as f64).collect();
            let values: Vec<f64> = times.iter().map(|t| intercept + slope * t).collect();
            let m = MeasurementMatrix::new(times, values, vec![(1, 2)]).unwrap();
            let d = remove_local_means(&m, window).unwrap();
            for t in half..t_len - half {
                prop_assert!(d.get(t, 0).abs() < 1e-9);
            }
        }

        #[test]
        fn interpolation_stays_within_neighbours(
            vals in prop::collection::vec(-90.0f64..-20.0, 2..20), g in 0.0f64..1.0,
        ) {
            let n = vals.len();
            let samples: Vec<(f64, f64)> = vals.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
            let x = g * (n - 1) as f64;
            let (v, f) = interpolate_pair(&samples, &[x]);
            let i = (x.floor() as usize).min(n - 2);
            let (lo, hi) = (vals[i].min(vals[i + 1]), vals[i].max(vals[i + 1]));
            prop_assert!(v[0] >= lo - 1e-9 && v[0] <= hi + 1e-9);
            prop_assert!(!f[0]);
        }

        #[test]
        fn split_preserves_instants(t_len in 2usize..60, b in 1usize..59) {
            prop_assume!(b < t_len);
            let times: Vec<f64> = (0..t_len).map(|t| t as f64).collect();
            let m = MeasurementMatrix::new(times, vec![0.0; t_len], vec![(1, 2)]).unwrap();
            let (n, t) = split_normal_test(&m, b).unwrap();
            prop_assert_eq!(n.instants() + t.instants(), t_len);
        }
    }
}
