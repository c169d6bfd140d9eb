//! Reverse graph diffusion on hidden features.
//!
//! One implicit-Euler step of `∂H/∂t = −γ L H` is
//! `H⁺ = (I + δtγ L)⁻¹ H`, which is also the minimizer of
//! `Φ(H⁺) = ‖H⁺ − H‖²_F + δt·tr(H⁺ L H⁺ᵀ)` when `δtγ` is folded into one
//! step constant. Features are stored `K × N` (one column per sample), so
//! the step solves `(I + δtγ L) h = h_prev` for every hidden row.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{InaeError, Result};
use crate::graph::SimilarityMatrix;
use crate::linalg::{max_asymmetry, solve_lu, Cholesky};
use crate::model::{encode, ModelParams};

/// Largest tolerated `|L_ij − L_ji|` for the exact solvers.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Hidden features of the previous iteration together with the diffusion
/// step constant.
#[derive(Debug, Clone)]
pub struct DiffusionState {
    /// `K × N` features `Hᵗ`, the target of the next step.
    pub h_prev: Array2<f64>,
    /// Product `δt·γ`.
    pub dt_gamma: f64,
    pub t: usize,
}

impl DiffusionState {
    pub fn new(h_prev: Array2<f64>, dt_gamma: f64) -> Result<Self> {
        if !(dt_gamma > 0.0) {
            return Err(InaeError::invalid(format!("dt_gamma must be positive, got {dt_gamma}")));
        }
        if !h_prev.iter().all(|v| v.is_finite()) {
            return Err(InaeError::invalid("features contain non-finite values"));
        }
        Ok(DiffusionState { h_prev, dt_gamma, t: 0 })
    }

    /// Advances the state by one exact implicit-Euler step.
    pub fn step(&mut self, l: &Array2<f64>) -> Result<()> {
        self.h_prev = implicit_euler_step(self.h_prev.view(), l, self.dt_gamma)?;
        self.t += 1;
        Ok(())
    }
}

fn check_laplacian(l: &Array2<f64>, n: usize) -> Result<()> {
    if l.nrows() != l.ncols() {
        return Err(InaeError::shape(format!("Laplacian must be square, got {:?}", l.dim())));
    }
    if l.nrows() != n {
        return Err(InaeError::shape(format!(
            "Laplacian is {}×{}, features have {} columns",
            l.nrows(),
            l.ncols(),
            n
        )));
    }
    Ok(())
}

/// `I + c·M` for square `M`.
fn shifted_identity(m: &Array2<f64>, c: f64) -> Array2<f64> {
    let mut a = m * c;
    a.diag_mut().iter_mut().for_each(|v| *v += 1.0);
    a
}

/// Exact implicit-Euler diffusion step `(I + dt_gamma·L)⁻¹ Hᵀ` via a
/// Cholesky factorization.
pub fn implicit_euler_step(h: ArrayView2<'_, f64>, l: &Array2<f64>, dt_gamma: f64) -> Result<Array2<f64>> {
    check_laplacian(l, h.ncols())?;
    if !(dt_gamma > 0.0) {
        return Err(InaeError::invalid(format!("dt_gamma must be positive, got {dt_gamma}")));
    }
    let asym = max_asymmetry(l.view());
    if asym > SYMMETRY_TOL {
        return Err(InaeError::invalid(format!("Laplacian is not symmetric (max |L - Lᵀ| = {asym:.3e})")));
    }
    let a = shifted_identity(l, dt_gamma);
    let chol = Cholesky::factor(a.view())?;
    Ok(chol.solve_rows(&h.to_owned()))
}

/// `tr(H L Hᵀ) = Σ_k h_k L h_kᵀ` over hidden rows.
pub fn trace_form(h: ArrayView2<'_, f64>, l: &Array2<f64>) -> Result<f64> {
    check_laplacian(l, h.ncols())?;
    let hl = h.dot(l);
    Ok((&hl * &h).sum())
}

/// `Φ = ‖H_new − H_prev‖²_F + dt·tr(H_new L H_newᵀ)`.
pub fn phi(h_new: ArrayView2<'_, f64>, h_prev: ArrayView2<'_, f64>, l: &Array2<f64>, dt: f64) -> Result<f64> {
    if h_new.dim() != h_prev.dim() {
        return Err(InaeError::shape(format!(
            "H_new {:?} vs H_prev {:?}",
            h_new.dim(),
            h_prev.dim()
        )));
    }
    let frob: f64 = h_new.iter().zip(h_prev.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(frob + dt * trace_form(h_new, l)?)
}

/// [`phi`] with the trace term evaluated from a sparse similarity matrix as
/// `½ Σ_ij S_ij ‖h_i − h_j‖²`.
pub fn phi_sparse(
    h_new: ArrayView2<'_, f64>,
    h_prev: ArrayView2<'_, f64>,
    s: &SimilarityMatrix,
    dt: f64,
) -> Result<f64> {
    if h_new.dim() != h_prev.dim() || h_new.ncols() != s.n() {
        return Err(InaeError::shape(format!(
            "H_new {:?}, H_prev {:?}, graph with {} nodes",
            h_new.dim(),
            h_prev.dim(),
            s.n()
        )));
    }
    let frob: f64 = h_new.iter().zip(h_prev.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(frob + dt * s.dirichlet_energy(h_new))
}

/// `∂Φ/∂H_new = 2(H_new − H_prev) + dt·H_new(L + Lᵀ)`.
pub fn phi_feature_gradient(
    h_new: ArrayView2<'_, f64>,
    h_prev: ArrayView2<'_, f64>,
    l: &Array2<f64>,
    dt: f64,
) -> Result<Array2<f64>> {
    check_laplacian(l, h_new.ncols())?;
    if h_new.dim() != h_prev.dim() {
        return Err(InaeError::shape("H_new and H_prev differ in shape"));
    }
    let sym = l + &l.t();
    let mut g = (&h_new - &h_prev) * 2.0;
    g.scaled_add(dt, &h_new.dot(&sym));
    Ok(g)
}

/// Gradient of `Φ(encode(θ, X), H_prev)` with respect to the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
}

/// Analytic gradient of `phi(encode(p, x_input), h_prev, l, dt)` with
/// respect to `W1` and `b1`, chaining through the sigmoid with
/// `s' = s(1 − s)`.
pub fn grad_phi_wrt_params(
    p: &ModelParams,
    x_input: ArrayView2<'_, f64>,
    h_prev: ArrayView2<'_, f64>,
    l: &Array2<f64>,
    dt: f64,
) -> Result<EncoderGradients> {
    let h = encode(p, x_input)?;
    let mut d = phi_feature_gradient(h.view(), h_prev, l, dt)?;
    ndarray::Zip::from(&mut d).and(&h).for_each(|d, &h| *d *= h * (1.0 - h));
    Ok(EncoderGradients {
        w1: d.dot(&x_input.t()),
        b1: d.sum_axis(Axis(1)),
    })
}

/// Minimizes `Φ` over `H_new` directly, by solving its first-order
/// condition `H_new (I + dt·L_sym) = H_prev` (with `L_sym = ½(L + Lᵀ)`) by
/// pivoted Gaussian elimination, and returns the largest elementwise
/// difference to the Cholesky-based implicit-Euler step.
pub fn verify_equivalence(h_prev: ArrayView2<'_, f64>, l: &Array2<f64>, dt_gamma: f64) -> Result<f64> {
    check_laplacian(l, h_prev.ncols())?;
    let l_sym = (l + &l.t()) * 0.5;
    let normal = shifted_identity(&l_sym, dt_gamma);
    let h_phi = solve_lu(normal.view(), h_prev.t())?.reversed_axes();
    let h_euler = implicit_euler_step(h_prev, &l_sym, dt_gamma)?;
    Ok(h_phi
        .iter()
        .zip(h_euler.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_laplacian(n: usize, density: f64, seed: u64) -> (SimilarityMatrix, Array2<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(density) {
                    let w = rng.random_range(0.1..1.0);
                    edges.push((i, j, w));
                    edges.push((j, i, w));
                }
            }
        }
        let s = SimilarityMatrix::symmetrized(n, edges);
        let l = s.laplacian_dense();
        (s, l)
    }

    fn random_features(k: usize, n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((k, n), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn zero_laplacian_is_identity() {
        let h = random_features(3, 5, 1);
        let out = implicit_euler_step(h.view(), &Array2::zeros((5, 5)), 2.0).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn two_node_hand_solve() {
        let l = array![[1.0, -1.0], [-1.0, 1.0]];
        let h = array![[0.0, 3.0], [0.0, 3.0]];
        let out = implicit_euler_step(h.view(), &l, 1.0).unwrap();
        for row in out.rows() {
            assert!((row[0] - 1.0).abs() < 1e-14 && (row[1] - 2.0).abs() < 1e-14);
        }
        assert!(verify_equivalence(h.view(), &l, 1.0).unwrap() < 1e-14);
    }

    #[test]
    fn large_step_contracts_towards_consensus() {
        let (_, l) = random_laplacian(8, 0.6, 3);
        let h = random_features(1, 8, 4);
        let spread = |m: &Array2<f64>| {
            let mean = m.mean().unwrap();
            m.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        };
        let mut prev = spread(&h);
        for dt in [0.1, 1.0, 10.0, 1000.0] {
            let out = implicit_euler_step(h.view(), &l, dt).unwrap();
            let s = spread(&out);
            assert!(s < prev, "dt {dt}: {s} !< {prev}");
            prev = s;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn rejects_asymmetric_or_mismatched_laplacian() {
        let l = array![[1.0, -1.0], [-0.5, 0.5]];
        let h = array![[1.0, 2.0]];
        assert!(matches!(implicit_euler_step(h.view(), &l, 1.0), Err(InaeError::InvalidArgument(_))));
        assert!(implicit_euler_step(h.view(), &Array2::zeros((3, 3)), 1.0).is_err());
        assert!(implicit_euler_step(h.view(), &Array2::zeros((2, 2)), 0.0).is_err());
    }

    #[test]
    fn phi_special_cases() {
        let (s, l) = random_laplacian(6, 0.5, 5);
        let h = random_features(2, 6, 6);
        let p = phi(h.view(), h.view(), &l, 0.7).unwrap();
        assert!((p - 0.7 * trace_form(h.view(), &l).unwrap()).abs() < 1e-14);
        let sp = phi_sparse(h.view(), h.view(), &s, 0.7).unwrap();
        assert!((p - sp).abs() < 1e-12);

        let constant = Array2::from_elem((2, 6), 0.3);
        assert!(trace_form(constant.view(), &l).unwrap().abs() < 1e-14);
        assert!(phi(h.view(), constant.view(), &l, 1.0).is_ok());
        assert!(phi(h.view(), random_features(2, 5, 1).view(), &l, 1.0).is_err());
    }

    #[test]
    fn phi_matches_pairwise_oracle() {
        let (s, l) = random_laplacian(4, 0.8, 7);
        let h_new = random_features(2, 4, 8);
        let h_prev = random_features(2, 4, 9);
        let dense = s.to_dense();
        let mut frob = 0.0;
        let mut pair = 0.0;
        for k in 0..2 {
            for i in 0..4 {
                frob += (h_new[[k, i]] - h_prev[[k, i]]).powi(2);
                for j in 0..4 {
                    pair += 0.5 * dense[[i, j]] * (h_new[[k, i]] - h_new[[k, j]]).powi(2);
                }
            }
        }
        let got = phi(h_new.view(), h_prev.view(), &l, 1.3).unwrap();
        assert!((got - (frob + 1.3 * pair)).abs() < 1e-10);
    }

    #[test]
    fn encoder_gradient_vanishes_at_stationary_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = ModelParams::init(3, 2, &mut rng);
        let x = random_features(3, 5, 11);
        let h = encode(&p, x.view()).unwrap();
        let g = grad_phi_wrt_params(&p, x.view(), h.view(), &Array2::zeros((5, 5)), 1.0).unwrap();
        assert!(g.w1.iter().chain(g.b1.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn trace_gradient_is_linear_in_dt() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = ModelParams::init(3, 2, &mut rng);
        let x = random_features(3, 5, 13);
        let h_prev = random_features(2, 5, 14);
        let (_, l) = random_laplacian(5, 0.7, 15);
        let g0 = grad_phi_wrt_params(&p, x.view(), h_prev.view(), &l, 0.0).unwrap();
        let g1 = grad_phi_wrt_params(&p, x.view(), h_prev.view(), &l, 0.8).unwrap();
        let g2 = grad_phi_wrt_params(&p, x.view(), h_prev.view(), &l, 1.6).unwrap();
        for ((a, b), c) in g0.w1.iter().zip(g1.w1.iter()).zip(g2.w1.iter()) {
            assert!(((c - a) - 2.0 * (b - a)).abs() < 1e-12);
        }
    }

    #[test]
    fn euler_step_preserves_nullspace_component() {
        let (s, l) = random_laplacian(10, 0.5, 16);
        let h = random_features(3, 10, 17);
        let out = implicit_euler_step(h.view(), &l, 2.5).unwrap();
        // For symmetric L the constant vector is in the nullspace; row sums
        // are preserved whenever every degree is finite.
        for (a, b) in h.rows().into_iter().zip(out.rows()) {
            assert!((a.sum() - b.sum()).abs() < 1e-10);
        }
        let before = s.dirichlet_energy(h.view());
        let after = s.dirichlet_energy(out.view());
        assert!(after <= before + 1e-10);
    }

    #[test]
    fn state_steps_forward() {
        let l = array![[1.0, -1.0], [-1.0, 1.0]];
        let mut st = DiffusionState::new(array![[0.0, 3.0]], 1.0).unwrap();
        st.step(&l).unwrap();
        assert_eq!(st.t, 1);
        assert!((st.h_prev[[0, 0]] - 1.0).abs() < 1e-14);
        assert!(DiffusionState::new(array![[0.0]], 0.0).is_err());
    }
}
