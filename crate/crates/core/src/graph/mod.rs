//! Neighborhood graphs on training data.
//!
//! Two strategies are available: plain k-nearest neighbors, and an
//! adaptive strategy that takes the k-nn set as candidates and keeps only
//! those with a non-zero coefficient when the sample is sparsely coded
//! against them (lasso). Selected pairs are weighted with a Gaussian or
//! cosine kernel, the directed weights symmetrized as `(S + Sᵀ)/2`, and the
//! Laplacian is `L = D − S`.

mod knn;
mod lasso;
mod similarity;

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use knn::{knn_neighbors, knn_with_distances};
pub use lasso::{kkt_residual, lasso_objective, lasso_select, soft_threshold, LassoOptions, LassoSolution};
pub use similarity::SimilarityMatrix;

use crate::dataset::Dataset;
use crate::error::{InaeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Knn,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", deny_unknown_fields)]
pub enum Kernel {
    /// `exp(−‖xi − xj‖² / 2σ²)`; `sigma: None` picks the median distance
    /// over all k-nn pairs.
    Gaussian { sigma: Option<f64> },
    /// Cosine similarity, clamped at zero so weights stay non-negative.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expansion {
    /// Copies of neighboring samples connect only layer-by-layer (copy `j`
    /// to copy `j`), with unscaled weights.
    CleanOnly,
    /// Every copy pair of neighboring samples is connected with weight
    /// `S_ik / m`; copies of one sample are connected with weight 1.
    KroneckerCopies,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub k: usize,
    pub strategy: Strategy,
    pub kernel: Kernel,
    #[serde(default = "default_lasso_lambda")]
    pub lasso_lambda: f64,
    #[serde(default = "default_expansion")]
    pub expansion: Expansion,
}

fn default_lasso_lambda() -> f64 {
    0.01
}

fn default_expansion() -> Expansion {
    Expansion::KroneckerCopies
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            k: 30,
            strategy: Strategy::Adaptive,
            kernel: Kernel::Gaussian { sigma: None },
            lasso_lambda: default_lasso_lambda(),
            expansion: Expansion::KroneckerCopies,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(InaeError::invalid("graph k must be at least 1"));
        }
        if let Kernel::Gaussian { sigma: Some(s) } = self.kernel {
            if !(s > 0.0) || !s.is_finite() {
                return Err(InaeError::invalid(format!("gaussian sigma must be positive, got {s}")));
            }
        }
        if !(self.lasso_lambda >= 0.0) {
            return Err(InaeError::invalid("lasso_lambda must be non-negative"));
        }
        Ok(())
    }
}

/// One selected neighbor of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    /// Lasso coefficient for adaptive graphs, 1 for k-nn graphs.
    pub coefficient: f64,
    /// Euclidean distance in input space.
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct NeighborGraph {
    pub strategy: Strategy,
    /// Selected neighbors per node, in increasing distance order.
    pub neighbors: Vec<Vec<Neighbor>>,
    pub similarity: SimilarityMatrix,
    pub degrees: Array1<f64>,
    /// Similarity of a point with itself under the kernel in use.
    pub self_similarity: f64,
}

impl NeighborGraph {
    pub fn n(&self) -> usize {
        self.similarity.n()
    }

    pub fn laplacian_dense(&self) -> Array2<f64> {
        self.similarity.laplacian_dense()
    }
}

#[derive(Debug, Clone, Copy)]
enum ResolvedKernel {
    Gaussian { two_sigma_sq: f64 },
    Cosine,
}

impl ResolvedKernel {
    fn eval(&self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, dist: f64) -> f64 {
        match *self {
            ResolvedKernel::Gaussian { two_sigma_sq } => (-dist * dist / two_sigma_sq).exp(),
            ResolvedKernel::Cosine => {
                let na = a.dot(&a).sqrt();
                let nb = b.dot(&b).sqrt();
                if na == 0.0 || nb == 0.0 {
                    0.0
                } else {
                    (a.dot(&b) / (na * nb)).clamp(0.0, 1.0)
                }
            }
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Expresses a node and its candidates relative to the candidates' mean,
/// each scaled to unit length (zero vectors are left as they are).
fn local_frame(x: ArrayView1<'_, f64>, mut cands: Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let mu = cands.mean_axis(ndarray::Axis(1)).expect("at least one candidate");
    let unit = |mut v: ndarray::ArrayViewMut1<'_, f64>| {
        let norm = v.dot(&v).sqrt();
        if norm > 0.0 {
            v /= norm;
        }
    };
    for mut c in cands.columns_mut() {
        c -= &mu;
        unit(c);
    }
    let mut target = &x - &mu;
    unit(target.view_mut());
    (target, cands)
}

/// Builds the neighborhood graph of the clean samples in `ds`. Adaptive
/// graphs solve each node's lasso in the local frame of its k-nn
/// candidates: everything is centered at the candidates' mean and scaled
/// to unit length, which makes `lasso_lambda` independent of data scale.
pub fn build_graph(ds: &Dataset, cfg: &GraphConfig) -> Result<NeighborGraph> {
    cfg.validate()?;
    let x = &ds.samples;
    let n = ds.len();
    let knn = knn_with_distances(x.view(), cfg.k)?;

    let kernel = match cfg.kernel {
        Kernel::Gaussian { sigma } => {
            let sigma = match sigma {
                Some(s) => s,
                None => {
                    let m = median(knn.iter().flatten().map(|&(_, d)| d).collect());
                    if m > 0.0 {
                        m
                    } else {
                        1.0
                    }
                }
            };
            ResolvedKernel::Gaussian {
                two_sigma_sq: 2.0 * sigma * sigma,
            }
        }
        Kernel::Cosine => ResolvedKernel::Cosine,
    };

    let neighbors: Vec<Vec<Neighbor>> = match cfg.strategy {
        Strategy::Knn => knn
            .iter()
            .map(|l| {
                l.iter()
                    .map(|&(index, distance)| Neighbor {
                        index,
                        coefficient: 1.0,
                        distance,
                    })
                    .collect()
            })
            .collect(),
        Strategy::Adaptive => {
            let opts = LassoOptions::default();
            knn.par_iter()
                .enumerate()
                .map(|(i, cands)| {
                    let idx: Vec<usize> = cands.iter().map(|&(j, _)| j).collect();
                    let (target, a) = local_frame(x.column(i), x.select(ndarray::Axis(1), &idx));
                    let sol = lasso_select(target.view(), a.view(), cfg.lasso_lambda, &opts)?;
                    Ok(cands
                        .iter()
                        .zip(sol.coefficients.iter())
                        .filter(|(_, c)| **c != 0.0)
                        .map(|(&(index, distance), &coefficient)| Neighbor {
                            index,
                            coefficient,
                            distance,
                        })
                        .collect())
                })
                .collect::<Result<_>>()?
        }
    };

    let mut directed = Vec::new();
    for (i, list) in neighbors.iter().enumerate() {
        for nb in list {
            let w = kernel.eval(x.column(i), x.column(nb.index), nb.distance);
            directed.push((i, nb.index, w));
        }
    }
    let similarity = SimilarityMatrix::symmetrized(n, directed);
    let degrees = similarity.degrees();
    Ok(NeighborGraph {
        strategy: cfg.strategy,
        neighbors,
        similarity,
        degrees,
        self_similarity: 1.0,
    })
}

/// Lifts a graph on `n` clean samples to the `n · m` corrupted copies laid
/// out as in [`crate::dataset::corrupt`] (copy `j` of sample `i` is node
/// `i·m + j`).
pub fn expand_to_copies(g: &NeighborGraph, m: usize, mode: Expansion) -> Result<NeighborGraph> {
    if m < 1 {
        return Err(InaeError::invalid("number of copies m must be at least 1"));
    }
    if m == 1 {
        return Ok(g.clone());
    }
    let n = g.n();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n * m];
    for i in 0..n {
        for j in 0..m {
            let node = i * m + j;
            let row = &mut rows[node];
            match mode {
                Expansion::KroneckerCopies => {
                    for l in 0..m {
                        if l != j {
                            row.push((i * m + l, g.self_similarity));
                        }
                    }
                    for (k, w) in g.similarity.row(i) {
                        for l in 0..m {
                            row.push((k * m + l, w / m as f64));
                        }
                    }
                }
                Expansion::CleanOnly => {
                    for (k, w) in g.similarity.row(i) {
                        row.push((k * m + j, w));
                    }
                }
            }
        }
    }
    let similarity = SimilarityMatrix::from_rows(n * m, rows);
    let degrees = similarity.degrees();
    let neighbors = (0..n * m)
        .map(|node| {
            let i = node / m;
            let dist_of = |k: usize| {
                g.neighbors[i]
                    .iter()
                    .find(|nb| nb.index == k)
                    .map_or(f64::NAN, |nb| nb.distance)
            };
            let mut list: Vec<Neighbor> = similarity
                .row(node)
                .map(|(c, w)| Neighbor {
                    index: c,
                    coefficient: w,
                    distance: if c / m == i { 0.0 } else { dist_of(c / m) },
                })
                .collect();
            list.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index)));
            list
        })
        .collect();
    Ok(NeighborGraph {
        strategy: g.strategy,
        neighbors,
        similarity,
        degrees,
        self_similarity: g.self_similarity,
    })
}
