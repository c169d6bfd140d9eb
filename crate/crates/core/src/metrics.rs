//! Locality and discriminability measures.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{InaeError, Result};
use crate::graph::{Neighbor, NeighborGraph, Strategy};
use crate::linalg::Cholesky;

/// One evaluation row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub model_id: String,
    pub t: usize,
    pub n_ratio: f64,
    pub c_ratio: f64,
    pub class_error: f64,
    pub fisher_eig: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "model_id,t,n_ratio,c_ratio,class_error,fisher_eig";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.model_id, self.t, self.n_ratio, self.c_ratio, self.class_error, self.fisher_eig
        )
    }
}

fn check_labels(g: &NeighborGraph, labels: &[usize]) -> Result<()> {
    if labels.len() != g.n() {
        return Err(InaeError::shape(format!(
            "{} labels for a graph with {} nodes",
            labels.len(),
            g.n()
        )));
    }
    Ok(())
}

/// Neighbors in ranking order: by |coefficient| for adaptive graphs, by
/// distance for k-nn graphs.
fn ranked(g: &NeighborGraph, list: &[Neighbor]) -> Vec<Neighbor> {
    let mut v = list.to_vec();
    match g.strategy {
        Strategy::Adaptive => v.sort_by(|a, b| b.coefficient.abs().total_cmp(&a.coefficient.abs())),
        Strategy::Knn => v.sort_by(|a, b| a.distance.total_cmp(&b.distance)),
    }
    v
}

/// Mean fraction of same-label neighbors among each node's first `k`
/// selected neighbors. The fraction is taken over the neighbors actually
/// examined, so nodes whose selection is shorter than `k` are not penalized
/// for it. Nodes without neighbors are skipped.
pub fn n_ratio(g: &NeighborGraph, labels: &[usize], k: usize) -> Result<f64> {
    check_labels(g, labels)?;
    if k == 0 {
        return Err(InaeError::invalid("k must be at least 1"));
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for (i, list) in g.neighbors.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let top = ranked(g, list);
        let top = &top[..top.len().min(k)];
        let same = top.iter().filter(|nb| labels[nb.index] == labels[i]).count();
        total += same as f64 / top.len() as f64;
        counted += 1;
    }
    let skipped = g.n() - counted;
    if skipped > 0 {
        log::warn!("n_ratio: {skipped} nodes without neighbors excluded");
    }
    if counted == 0 {
        return Err(InaeError::invalid("no node has a selected neighbor"));
    }
    Ok(total / counted as f64)
}

/// Mean share of coefficient mass `Σ|c_j|` on same-label neighbors.
pub fn c_ratio(g: &NeighborGraph, labels: &[usize]) -> Result<f64> {
    check_labels(g, labels)?;
    let mut total = 0.0;
    let mut counted = 0usize;
    for (i, list) in g.neighbors.iter().enumerate() {
        let all: f64 = list.iter().map(|nb| nb.coefficient.abs()).sum();
        if all == 0.0 {
            continue;
        }
        let same: f64 = list
            .iter()
            .filter(|nb| labels[nb.index] == labels[i])
            .map(|nb| nb.coefficient.abs())
            .sum();
        total += same / all;
        counted += 1;
    }
    if counted == 0 {
        return Err(InaeError::invalid("no node has nonzero coefficient mass"));
    }
    Ok(total / counted as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    pub reg: f64,
    /// Rescale features to zero mean and unit variance (training statistics).
    pub standardize: bool,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            reg: 1e-4,
            standardize: false,
            epochs: 200,
            learning_rate: 0.01,
            seed: 0,
        }
    }
}

/// One-vs-rest linear SVM, optionally on standardized features.
#[derive(Debug, Clone)]
pub struct LinearSvm {
    mean: Array1<f64>,
    inv_std: Array1<f64>,
    /// `C × K` weights.
    weights: Array2<f64>,
    bias: Array1<f64>,
}

impl LinearSvm {
    /// Fits on `h` (`K × n`, one sample per column).
    pub fn fit(h: ArrayView2<'_, f64>, labels: &[usize], opts: &SvmOptions) -> Result<Self> {
        let (k, n) = h.dim();
        if labels.len() != n {
            return Err(InaeError::shape(format!("{} labels for {n} samples", labels.len())));
        }
        if !(opts.reg >= 0.0) || !(opts.learning_rate > 0.0) {
            return Err(InaeError::invalid("reg must be ≥ 0 and learning_rate > 0"));
        }
        let classes = labels.iter().max().map_or(0, |&m| m + 1);
        let mut present = vec![false; classes];
        labels.iter().for_each(|&l| present[l] = true);
        if present.iter().filter(|&&p| p).count() < 2 {
            return Err(InaeError::invalid("training labels contain fewer than 2 classes"));
        }

        let (mean, inv_std) = if opts.standardize {
            let var = h.var_axis(Axis(1), 0.0);
            (
                h.mean_axis(Axis(1)).expect("n > 0"),
                var.mapv(|v| if v > 1e-16 { 1.0 / v.sqrt() } else { 0.0 }),
            )
        } else {
            (Array1::zeros(k), Array1::ones(k))
        };
        let xs: Array2<f64> = {
            let mut z = h.t().to_owned();
            z -= &mean;
            z *= &inv_std;
            z
        };

        let mut weights = Array2::<f64>::zeros((classes, k));
        let mut bias = Array1::<f64>::zeros(classes);
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let eta = opts.learning_rate;
        let shrink = 1.0 - eta * opts.reg;
        for _ in 0..opts.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let x = xs.row(i);
                for c in 0..classes {
                    let y = if labels[i] == c { 1.0 } else { -1.0 };
                    let mut w = weights.row_mut(c);
                    let margin = y * (w.dot(&x) + bias[c]);
                    w *= shrink;
                    if margin < 1.0 {
                        w.scaled_add(eta * y, &x);
                        bias[c] += eta * y;
                    }
                }
            }
        }
        Ok(LinearSvm {
            mean,
            inv_std,
            weights,
            bias,
        })
    }

    pub fn predict(&self, h: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        if h.nrows() != self.mean.len() {
            return Err(InaeError::shape(format!(
                "classifier expects {} features, got {}",
                self.mean.len(),
                h.nrows()
            )));
        }
        let mut z = h.t().to_owned();
        z -= &self.mean;
        z *= &self.inv_std;
        let scores = z.dot(&self.weights.t()) + &self.bias;
        Ok(scores
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, &s)| if s > best.1 { (c, s) } else { best })
                    .0
            })
            .collect())
    }
}

/// Test misclassification rate of a one-vs-rest linear SVM trained with
/// the default schedule and the given L2 weight.
pub fn linear_svm(
    train_h: ArrayView2<'_, f64>,
    train_labels: &[usize],
    test_h: ArrayView2<'_, f64>,
    test_labels: &[usize],
    reg: f64,
) -> Result<f64> {
    let opts = SvmOptions {
        reg,
        ..SvmOptions::default()
    };
    linear_svm_with(train_h, train_labels, test_h, test_labels, &opts)
}

pub fn linear_svm_with(
    train_h: ArrayView2<'_, f64>,
    train_labels: &[usize],
    test_h: ArrayView2<'_, f64>,
    test_labels: &[usize],
    opts: &SvmOptions,
) -> Result<f64> {
    if test_labels.len() != test_h.ncols() {
        return Err(InaeError::shape("test labels and samples differ in count"));
    }
    if test_labels.is_empty() {
        return Err(InaeError::invalid("empty test set"));
    }
    let svm = LinearSvm::fit(train_h, train_labels, opts)?;
    let pred = svm.predict(test_h)?;
    let wrong = pred.iter().zip(test_labels).filter(|(p, l)| p != l).count();
    Ok(wrong as f64 / test_labels.len() as f64)
}

/// Within-class and between-class scatter of the columns of `h`.
pub fn scatter_matrices(h: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(Array2<f64>, Array2<f64>)> {
    let (k, n) = h.dim();
    if labels.len() != n {
        return Err(InaeError::shape(format!("{} labels for {n} samples", labels.len())));
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut sums = Array2::<f64>::zeros((classes, k));
    let mut counts = vec![0usize; classes];
    for (i, &l) in labels.iter().enumerate() {
        sums.row_mut(l).scaled_add(1.0, &h.column(i));
        counts[l] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(InaeError::invalid("fewer than 2 classes present"));
    }
    let mu = h.mean_axis(Axis(1)).expect("n > 0");
    let mut means = sums;
    for (c, &cnt) in counts.iter().enumerate() {
        if cnt > 0 {
            means.row_mut(c).mapv_inplace(|v| v / cnt as f64);
        }
    }
    let mut centered = h.to_owned();
    for (i, &l) in labels.iter().enumerate() {
        centered.column_mut(i).scaled_add(-1.0, &means.row(l));
    }
    let sw = centered.dot(&centered.t());
    let mut sb = Array2::<f64>::zeros((k, k));
    for (c, &cnt) in counts.iter().enumerate() {
        if cnt == 0 {
            continue;
        }
        let d = &means.row(c) - &mu;
        let d = d.insert_axis(Axis(1));
        sb.scaled_add(cnt as f64, &d.dot(&d.t()));
    }
    Ok((sw, sb))
}

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;

/// Largest eigenvalue of `(S_w + ridge·I)⁻¹ S_b`.
///
/// `S_b = U Uᵀ` with one column `√n_c (μ_c − μ)` per class, so the nonzero
/// spectrum equals that of the small symmetric matrix `Uᵀ (S_w + ridge·I)⁻¹ U`,
/// on which the power iteration runs. `ridge = None` selects
/// `1e-6 · tr(S_w) / K`.
pub fn fisher_eig(h: ArrayView2<'_, f64>, labels: &[usize], ridge: Option<f64>) -> Result<f64> {
    let (sw, _) = scatter_matrices(h, labels)?;
    let k = h.nrows();
    let ridge = match ridge {
        Some(r) if r > 0.0 && r.is_finite() => r,
        Some(_) => return Err(InaeError::invalid("ridge must be positive")),
        None => (1e-6 * sw.diag().sum() / k as f64).max(f64::MIN_POSITIVE),
    };

    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mu = h.mean_axis(Axis(1)).expect("n > 0");
    let mut u_cols: Vec<Array1<f64>> = Vec::new();
    for c in 0..classes {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if idx.is_empty() {
            continue;
        }
        let mean_c = h.select(Axis(1), &idx).mean_axis(Axis(1)).expect("non-empty");
        u_cols.push((mean_c - &mu) * (idx.len() as f64).sqrt());
    }
    let c = u_cols.len();
    let mut u = Array2::<f64>::zeros((k, c));
    for (j, col) in u_cols.iter().enumerate() {
        u.column_mut(j).assign(col);
    }

    let mut a = sw;
    a.diag_mut().mapv_inplace(|v| v + ridge);
    let chol = Cholesky::factor(a.view())?;
    let solved = chol.solve_rows(&u.t().to_owned());
    let m = u.t().dot(&solved.t());
    let m = (&m + &m.t()) * 0.5;

    power_iteration(&m)
}

/// Dominant eigenvalue of a symmetric positive semi-definite matrix.
pub fn power_iteration(m: &Array2<f64>) -> Result<f64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut v = Array1::from_iter((0..n).map(|i| 1.0 + 0.1 * i as f64));
    v /= v.dot(&v).sqrt();
    let mut lambda = v.dot(&m.dot(&v));
    for _ in 0..POWER_MAX_ITER {
        let w = m.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w / norm;
        let next = v.dot(&m.dot(&v));
        if (next - lambda).abs() <= POWER_TOL * next.abs().max(1e-300) {
            return Ok(next.max(0.0));
        }
        lambda = next;
    }
    let residual = (m.dot(&v) - &v * lambda).iter().map(|x| x * x).sum::<f64>().sqrt();
    Err(InaeError::NonConvergence {
        solver: "power iteration",
        iterations: POWER_MAX_ITER,
        residual,
    })
}
