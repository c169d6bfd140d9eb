//! Sample collections, the synthetic two-moons generator, corruption
//! processes, and CSV ingestion.
//!
//! Samples are stored column-major: a dataset with `n` samples of
//! dimension `D` holds a `D × n` matrix, one sample per column.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{InaeError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `D × n` sample matrix.
    pub samples: Array2<f64>,
    pub labels: Option<Vec<usize>>,
    /// Number of corrupted copies per clean sample; 0 for a clean dataset.
    pub copies_per_sample: usize,
    /// For corrupted datasets, the clean column each column was derived from.
    pub origin_index: Option<Vec<usize>>,
}

impl Dataset {
    /// Builds a clean dataset, validating finiteness and label length.
    pub fn new(samples: Array2<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if samples.nrows() == 0 {
            return Err(InaeError::invalid("feature dimension must be positive"));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(InaeError::invalid(format!(
                "non-finite sample entry at flat index {pos}"
            )));
        }
        if let Some(l) = &labels {
            if l.len() != samples.ncols() {
                return Err(InaeError::shape(format!(
                    "{} labels for {} samples",
                    l.len(),
                    samples.ncols()
                )));
            }
        }
        Ok(Dataset {
            samples,
            labels,
            copies_per_sample: 0,
            origin_index: None,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }

    pub fn num_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max())
            .map_or(0, |&m| m + 1)
    }

    /// Per-class sample counts (empty when unlabeled).
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        if let Some(l) = &self.labels {
            for &c in l {
                counts[c] += 1;
            }
        }
        counts
    }

    /// Clean dataset made of the selected columns, in the given order.
    pub fn subset(&self, columns: &[usize]) -> Dataset {
        Dataset {
            samples: self.samples.select(Axis(1), columns),
            labels: self
                .labels
                .as_ref()
                .map(|l| columns.iter().map(|&c| l[c]).collect()),
            copies_per_sample: 0,
            origin_index: None,
        }
    }

    /// Replaces the sample matrix, keeping labels. Used when feeding codes
    /// from one layer into the next.
    pub fn with_samples(&self, samples: Array2<f64>) -> Result<Dataset> {
        if samples.ncols() != self.len() {
            return Err(InaeError::shape(format!(
                "replacement has {} columns, dataset has {}",
                samples.ncols(),
                self.len()
            )));
        }
        Dataset::new(samples, self.labels.clone())
    }
}

// ---------------------------------------------------------------------------
// Two moons
// ---------------------------------------------------------------------------

/// Noiseless 2-D point of the two-moons curve for class `label` at
/// parameter `u ∈ [0, π]`.
pub fn moon_point(label: usize, u: f64) -> (f64, f64) {
    if label == 0 {
        (u.cos(), u.sin())
    } else {
        (1.0 - u.cos(), 0.5 - u.sin())
    }
}

/// Arc parameters used for a class with `n` points: evenly spaced on
/// `[0, π]`, a single point sits at `u = 0`.
fn arc_parameters(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            0.0
        } else {
            PI * i as f64 / (n - 1) as f64
        }
    })
}

/// Noiseless two-moons embedding: the 2-D coordinates occupy the first two
/// rows, the remaining `ambient_dim - 2` rows are zero.
pub fn two_moons_clean(n_per_class: usize, ambient_dim: usize) -> Array2<f64> {
    let mut out = Array2::zeros((ambient_dim, 2 * n_per_class));
    for label in 0..2 {
        for (i, u) in arc_parameters(n_per_class).enumerate() {
            let (x, y) = moon_point(label, u);
            let col = label * n_per_class + i;
            out[[0, col]] = x;
            out[[1, col]] = y;
        }
    }
    out
}

/// Generates the two interleaved half-circles, lifted to `ambient_dim`
/// dimensions and perturbed with isotropic Gaussian noise.
///
/// Columns `0..n_per_class` are class 0 (upper arc), the rest class 1.
pub fn gen_two_moons(
    n_per_class: usize,
    ambient_dim: usize,
    noise_std: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_per_class < 1 {
        return Err(InaeError::invalid("n_per_class must be at least 1"));
    }
    if ambient_dim < 2 {
        return Err(InaeError::invalid("ambient_dim must be at least 2"));
    }
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(InaeError::invalid(format!(
            "noise_std must be finite and non-negative, got {noise_std}"
        )));
    }
    let mut samples = two_moons_clean(n_per_class, ambient_dim);
    if noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_std).expect("validated std");
        for v in samples.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    let labels = (0..2 * n_per_class).map(|i| i / n_per_class).collect();
    Dataset::new(samples, Some(labels))
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

/// Per-feature affine map onto `[0, 1]` fitted on one dataset and applied
/// to others. Constant features map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Array1<f64>,
    pub range: Array1<f64>,
}

impl MinMaxScaler {
    pub fn fit(ds: &Dataset) -> Result<Self> {
        if ds.is_empty() {
            return Err(InaeError::invalid("cannot fit a scaler on an empty dataset"));
        }
        let min = ds.samples.fold_axis(Axis(1), f64::INFINITY, |a, &b| a.min(b));
        let max = ds.samples.fold_axis(Axis(1), f64::NEG_INFINITY, |a, &b| a.max(b));
        Ok(MinMaxScaler { range: &max - &min, min })
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.feature_dim() != self.min.len() {
            return Err(InaeError::shape(format!(
                "scaler fitted on {} features, data has {}",
                self.min.len(),
                ds.feature_dim()
            )));
        }
        let mut x = ds.samples.clone();
        for ((mut row, &lo), &r) in x.rows_mut().into_iter().zip(&self.min).zip(&self.range) {
            if r > 0.0 {
                row.mapv_inplace(|v| (v - lo) / r);
            } else {
                row.fill(0.0);
            }
        }
        ds.with_samples(x)
    }
}

// ---------------------------------------------------------------------------
// Corruption
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    Gaussian,
    SaltPepper,
    Masking,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    /// Standard deviation for Gaussian noise, corrupted fraction otherwise.
    pub level: f64,
    #[serde(default)]
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn gaussian(std: f64, seed: u64) -> Self {
        CorruptionSpec {
            kind: CorruptionKind::Gaussian,
            level: std,
            seed,
        }
    }

    pub fn masking(fraction: f64, seed: u64) -> Self {
        CorruptionSpec {
            kind: CorruptionKind::Masking,
            level: fraction,
            seed,
        }
    }

    pub fn salt_pepper(fraction: f64, seed: u64) -> Self {
        CorruptionSpec {
            kind: CorruptionKind::SaltPepper,
            level: fraction,
            seed,
        }
    }

    /// Identity corruption.
    pub fn none() -> Self {
        CorruptionSpec::masking(0.0, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level >= 0.0) || !self.level.is_finite() {
            return Err(InaeError::invalid(format!(
                "corruption level must be finite and non-negative, got {}",
                self.level
            )));
        }
        if self.kind != CorruptionKind::Gaussian && self.level > 1.0 {
            return Err(InaeError::invalid(format!(
                "corruption fraction must be in [0, 1], got {}",
                self.level
            )));
        }
        Ok(())
    }
}

/// Random stream for one corrupted column: independent of evaluation order.
fn column_rng(seed: u64, column: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(column as u64);
    rng
}

/// Produces `m` independently corrupted copies of every column.
///
/// Column `i * m + j` holds the `j`-th copy of clean sample `i`. For the
/// fractional corruptions exactly `floor(level * D)` entries per column are
/// affected.
pub fn corrupt(ds: &Dataset, spec: &CorruptionSpec, m: usize) -> Result<Dataset> {
    if m < 1 {
        return Err(InaeError::invalid("number of copies m must be at least 1"));
    }
    spec.validate()?;
    let d = ds.feature_dim();
    let n = ds.len();
    let mut out = Array2::zeros((d, n * m));
    let count = (spec.level * d as f64).floor() as usize;

    let (feat_min, feat_max) = if spec.kind == CorruptionKind::SaltPepper {
        (
            ds.samples.fold_axis(Axis(1), f64::INFINITY, |a, &b| a.min(b)),
            ds.samples
                .fold_axis(Axis(1), f64::NEG_INFINITY, |a, &b| a.max(b)),
        )
    } else {
        (Array1::zeros(0), Array1::zeros(0))
    };
    let normal = Normal::new(0.0, spec.level.max(0.0)).expect("validated level");

    for i in 0..n {
        let clean = ds.samples.column(i);
        for j in 0..m {
            let col_idx = i * m + j;
            let mut col = out.column_mut(col_idx);
            col.assign(&clean);
            let mut rng = column_rng(spec.seed, col_idx);
            match spec.kind {
                CorruptionKind::Gaussian => {
                    if spec.level > 0.0 {
                        for v in col.iter_mut() {
                            *v += normal.sample(&mut rng);
                        }
                    }
                }
                CorruptionKind::Masking => {
                    for f in index::sample(&mut rng, d, count) {
                        col[f] = 0.0;
                    }
                }
                CorruptionKind::SaltPepper => {
                    for f in index::sample(&mut rng, d, count) {
                        col[f] = if rng.random_bool(0.5) {
                            feat_max[f]
                        } else {
                            feat_min[f]
                        };
                    }
                }
            }
        }
    }

    let origin: Vec<usize> = (0..n * m).map(|c| c / m).collect();
    let labels = ds
        .labels
        .as_ref()
        .map(|l| origin.iter().map(|&o| l[o]).collect());
    Ok(Dataset {
        samples: out,
        labels,
        copies_per_sample: m,
        origin_index: Some(origin),
    })
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Reads one-sample-per-row CSV. When `has_labels` is set the last column is
/// parsed as a non-negative integer class label. A header row is detected by
/// its first field failing to parse as a number.
pub fn read_csv<R: Read>(reader: R, has_labels: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| InaeError::Parse(e.to_string()))?;
        if row_idx == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let n_feat = if has_labels {
            record.len().checked_sub(1).filter(|&w| w > 0)
        } else {
            Some(record.len()).filter(|&w| w > 0)
        }
        .ok_or_else(|| InaeError::Parse(format!("row {} has no feature columns", row_idx + 1)))?;
        if *width.get_or_insert(n_feat) != n_feat {
            return Err(InaeError::Parse(format!(
                "row {} has {} features, expected {}",
                row_idx + 1,
                n_feat,
                width.unwrap()
            )));
        }
        for f in record.iter().take(n_feat) {
            values.push(f.parse::<f64>().map_err(|e| {
                InaeError::Parse(format!("row {}: bad number {f:?}: {e}", row_idx + 1))
            })?);
        }
        if has_labels {
            let raw = &record[n_feat];
            labels.push(raw.parse::<usize>().map_err(|e| {
                InaeError::Parse(format!("row {}: bad label {raw:?}: {e}", row_idx + 1))
            })?);
        }
    }
    let width = width.ok_or_else(|| InaeError::Parse("no data rows".into()))?;
    let n = values.len() / width;
    let samples = Array2::from_shape_vec((n, width), values)
        .expect("row widths checked")
        .reversed_axes()
        .as_standard_layout()
        .to_owned();
    Dataset::new(samples, has_labels.then_some(labels))
}

pub fn read_csv_file(path: impl AsRef<Path>, has_labels: bool) -> Result<Dataset> {
    read_csv(std::fs::File::open(path)?, has_labels)
}

/// Writes one sample per row without a header; the label, if any, goes in
/// the last column. Floats use the shortest round-trip representation.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().from_writer(writer);
    let mut row: Vec<String> = Vec::with_capacity(ds.feature_dim() + 1);
    for i in 0..ds.len() {
        row.clear();
        row.extend(ds.samples.column(i).iter().map(|v| v.to_string()));
        if let Some(l) = &ds.labels {
            row.push(l[i].to_string());
        }
        wtr.write_record(&row)
            .map_err(|e| InaeError::Parse(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv_file(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv(ds, std::io::BufWriter::new(f))
}
