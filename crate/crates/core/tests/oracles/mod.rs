//! Reference implementations used to check the library: central finite
//! differences, random graphs, a brute-force Dirichlet energy and a
//! projected-gradient lasso solver.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_difference(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Symmetric non-negative similarity with roughly `density` of the
/// off-diagonal pairs connected.
pub fn random_similarity(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                let w = rng.random_range(0.01..1.0);
                s[[i, j]] = w;
                s[[j, i]] = w;
            }
        }
    }
    s
}

/// `L = D − S`.
pub fn laplacian(s: &Array2<f64>) -> Array2<f64> {
    let mut l = -s.clone();
    for i in 0..s.nrows() {
        l[[i, i]] += s.row(i).sum();
    }
    l
}

/// `½ Σ_ij S_ij ‖h_i − h_j‖²` by direct summation over column pairs.
pub fn pairwise_energy(h: ArrayView2<'_, f64>, s: &Array2<f64>) -> f64 {
    let n = h.ncols();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if s[[i, j]] != 0.0 {
                let d = &h.column(i) - &h.column(j);
                total += s[[i, j]] * d.dot(&d);
            }
        }
    }
    0.5 * total
}

pub fn lasso_value(x: ArrayView1<'_, f64>, a: ArrayView2<'_, f64>, c: &Array1<f64>, lambda: f64) -> f64 {
    let r = &x - &a.dot(c);
    0.5 * r.dot(&r) + lambda * c.iter().map(|v| v.abs()).sum::<f64>()
}

/// Lasso via the split `c = u − v`, `u, v ≥ 0`: accelerated projected
/// gradient on the smooth bound-constrained problem
/// `½‖x − A(u − v)‖² + λ 1ᵀ(u + v)`.
pub fn lasso_projected_gradient(
    x: ArrayView1<'_, f64>,
    a: ArrayView2<'_, f64>,
    lambda: f64,
    iterations: usize,
) -> Array1<f64> {
    let k = a.ncols();
    let gram = a.t().dot(&a);
    let q = a.t().dot(&x);
    // Lipschitz constant of the split problem is 2‖A‖².
    let mut v = Array1::from_elem(k, 1.0);
    let mut top = 0.0;
    for _ in 0..200 {
        let w = gram.dot(&v);
        top = w.dot(&w).sqrt();
        if top == 0.0 {
            break;
        }
        v = w / top;
    }
    let step = 1.0 / (2.0 * top.max(1e-12) * 1.01);

    let mut z = Array1::<f64>::zeros(2 * k);
    let mut y = z.clone();
    let mut theta = 1.0_f64;
    for _ in 0..iterations {
        let c = y.slice(ndarray::s![..k]).to_owned() - y.slice(ndarray::s![k..]);
        let g = gram.dot(&c) - &q;
        let mut next = y.clone();
        for j in 0..k {
            next[j] = (y[j] - step * (g[j] + lambda)).max(0.0);
            next[k + j] = (y[k + j] - step * (-g[j] + lambda)).max(0.0);
        }
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        y = &next + &((&next - &z) * ((theta - 1.0) / theta_next));
        z = next;
        theta = theta_next;
    }
    z.slice(ndarray::s![..k]).to_owned() - z.slice(ndarray::s![k..])
}
