//! Lasso by cyclic coordinate descent with soft thresholding:
//! `min_c ½‖x − A c‖² + λ‖c‖₁`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{InaeError, Result};
use crate::linalg::{symmetric_eigen, Cholesky};

/// Sweeps between attempts to jump to the exact solution on the support.
const REFINE_EVERY: usize = 5;
/// Eigenvalues below this fraction of the largest count as null space.
const NULL_CUTOFF: f64 = 1e-10;
/// Support Gram matrices whose smallest Cholesky pivot exceeds this fraction
/// of the largest diagonal entry are solved directly.
const WELL_CONDITIONED: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct LassoOptions {
    /// Stop once the largest coordinate change in a sweep, or the KKT
    /// residual, falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LassoSolution {
    pub coefficients: Array1<f64>,
    pub kkt_residual: f64,
    pub sweeps: usize,
}

impl LassoSolution {
    /// Indices with non-zero coefficient.
    pub fn support(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Objective value `½‖x − A c‖² + λ‖c‖₁`.
pub fn lasso_objective(
    x: ArrayView1<'_, f64>,
    a: ArrayView2<'_, f64>,
    c: ArrayView1<'_, f64>,
    lambda: f64,
) -> f64 {
    let r = &x - &a.dot(&c);
    0.5 * r.dot(&r) + lambda * c.iter().map(|v| v.abs()).sum::<f64>()
}

/// Largest violation of the lasso optimality conditions, with `g` the
/// gradient of the smooth part: `|g_j| ≤ λ` where `c_j = 0`, and
/// `g_j = −λ sign(c_j)` elsewhere.
pub fn kkt_residual(gram: &Array2<f64>, q: &Array1<f64>, c: &Array1<f64>, lambda: f64) -> f64 {
    kkt_from_gradient(&(gram.dot(c) - q), c, lambda)
}

fn kkt_from_gradient(g: &Array1<f64>, c: &Array1<f64>, lambda: f64) -> f64 {
    g.iter()
        .zip(c.iter())
        .map(|(&gj, &cj)| {
            if cj == 0.0 {
                (gj.abs() - lambda).max(0.0)
            } else {
                (gj + lambda * cj.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Solves the lasso for target `x` (length `D`) against the columns of
/// `candidates` (`D × k`).
pub fn lasso_select(
    x: ArrayView1<'_, f64>,
    candidates: ArrayView2<'_, f64>,
    lambda: f64,
    opts: &LassoOptions,
) -> Result<LassoSolution> {
    if !(lambda >= 0.0) {
        return Err(InaeError::invalid(format!("lasso lambda must be non-negative, got {lambda}")));
    }
    if candidates.ncols() == 0 {
        return Err(InaeError::invalid("lasso needs at least one candidate"));
    }
    if candidates.nrows() != x.len() {
        return Err(InaeError::shape(format!(
            "target has length {}, candidates have {} rows",
            x.len(),
            candidates.nrows()
        )));
    }
    let gram = candidates.t().dot(&candidates);
    let q = candidates.t().dot(&x);
    let k = q.len();
    let mut c = Array1::<f64>::zeros(k);
    // g = gram·c − q, maintained incrementally.
    let mut grad = -&q;

    for sweep in 1..=opts.max_iter {
        let mut max_change = 0.0_f64;
        for j in 0..k {
            let gjj = gram[[j, j]];
            if gjj <= 0.0 {
                continue;
            }
            let old = c[j];
            let rho = gjj * old - grad[j];
            let new = soft_threshold(rho, lambda) / gjj;
            let delta = new - old;
            if delta != 0.0 {
                c[j] = new;
                grad.scaled_add(delta, &gram.column(j));
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < opts.tol || kkt_from_gradient(&grad, &c, lambda) < opts.tol {
            let kkt = kkt_residual(&gram, &q, &c, lambda);
            return Ok(LassoSolution {
                coefficients: c,
                kkt_residual: kkt,
                sweeps: sweep,
            });
        }
        if sweep % REFINE_EVERY == 0 {
            if let Some(better) = refine_on_support(&gram, &q, &grad, &c, lambda) {
                grad = gram.dot(&better) - &q;
                c = better;
            }
        }
    }
    Err(InaeError::NonConvergence {
        solver: "lasso coordinate descent",
        iterations: opts.max_iter,
        residual: kkt_residual(&gram, &q, &c, lambda),
    })
}

/// Moves `c` toward the minimizer on the current support `S`.
///
/// On the range of `G_SS` the step is the Newton correction
/// `d = −G_SS⁺ (g_S + λ sign(c_S))`. Along the null space the smooth part is
/// flat, so the only force is the ℓ1 term: the step follows
/// `−P_null(λ sign(c_S))` as far as it goes. The move stops at the first
/// coordinate that would change sign (set to zero). It is kept if it lowers
/// the objective, or leaves it unchanged up to round-off while reducing the
/// KKT residual.
fn refine_on_support(
    gram: &Array2<f64>,
    q: &Array1<f64>,
    grad: &Array1<f64>,
    c: &Array1<f64>,
    lambda: f64,
) -> Option<Array1<f64>> {
    let support: Vec<usize> = (0..c.len()).filter(|&j| c[j] != 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let sub = Array2::from_shape_fn((support.len(), support.len()), |(a, b)| gram[[support[a], support[b]]]);
    let r = Array1::from_iter(support.iter().map(|&j| grad[j] + lambda * c[j].signum()));
    let max_diag = sub.diag().iter().fold(0.0_f64, |m, &v| m.max(v));
    let direction = match Cholesky::factor(sub.view()) {
        Ok(chol) if chol.min_pivot_sq() > WELL_CONDITIONED * max_diag => -chol.solve(&r),
        _ => {
            let sign = Array1::from_iter(support.iter().map(|&j| lambda * c[j].signum()));
            let reach = support.iter().map(|&j| c[j].abs()).sum::<f64>() + 1.0;
            singular_direction(&sub, &r, &sign, reach)?
        }
    };

    let mut step = 1.0_f64;
    let mut blocking = None;
    for (a, &j) in support.iter().enumerate() {
        let end = c[j] + direction[a];
        if lambda > 0.0 && end.signum() != c[j].signum() {
            let t = c[j] / -direction[a];
            if t < step {
                step = t;
                blocking = Some(j);
            }
        }
    }
    let mut next = c.clone();
    for (a, &j) in support.iter().enumerate() {
        next[j] = c[j] + step * direction[a];
    }
    if let Some(j) = blocking {
        next[j] = 0.0;
    }
    if next.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let (before, after) = (gram_objective(gram, q, c, lambda), gram_objective(gram, q, &next, lambda));
    let slack = 1e-13 * (1.0 + before.abs());
    let better = after <= before
        || (after <= before + slack && kkt_residual(gram, q, &next, lambda) < kkt_from_gradient(grad, c, lambda));
    better.then_some(next)
}

/// Step for a singular `G_SS`: pseudo-inverse Newton step on the range,
/// plus a move along the null-space projection of the ℓ1 force `sign`
/// long enough (relative to `reach`) that some coefficient hits zero.
fn singular_direction(sub: &Array2<f64>, r: &Array1<f64>, sign: &Array1<f64>, reach: f64) -> Option<Array1<f64>> {
    let (values, vectors) = symmetric_eigen(sub.view()).ok()?;
    let cutoff = NULL_CUTOFF * values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut direction = Array1::<f64>::zeros(r.len());
    let mut null_step = Array1::<f64>::zeros(r.len());
    for (e, &w) in values.iter().enumerate() {
        let u = vectors.column(e);
        if w > cutoff {
            direction.scaled_add(-u.dot(r) / w, &u);
        } else {
            null_step.scaled_add(-u.dot(sign), &u);
        }
    }
    let null_norm = null_step.dot(&null_step).sqrt();
    let sign_norm = sign.dot(sign).sqrt();
    if null_norm > NULL_CUTOFF * sign_norm {
        direction.scaled_add(reach / null_norm * 1e3, &null_step);
    }
    Some(direction)
}

/// Objective up to the constant `½‖x‖²`.
fn gram_objective(gram: &Array2<f64>, q: &Array1<f64>, c: &Array1<f64>, lambda: f64) -> f64 {
    0.5 * c.dot(&gram.dot(c)) - q.dot(c) + lambda * c.iter().map(|v| v.abs()).sum::<f64>()
}
