//! Small dense linear-algebra kernels: Cholesky factorization of SPD
//! matrices, LU solves and a Jacobi eigensolver for symmetric matrices.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{InaeError, Result};

/// Lower-triangular Cholesky factor `G` with `A = G Gᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    /// Factors a symmetric positive-definite matrix. Only the lower triangle
    /// of `a` is read.
    pub fn factor(a: ArrayView2<'_, f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(InaeError::shape(format!(
                "Cholesky needs a square matrix, got {}×{}",
                n,
                a.ncols()
            )));
        }
        let mut g = vec![0.0_f64; n * n];
        for i in 0..n {
            let (done, rest) = g.split_at_mut(i * n);
            let row_i = &mut rest[..n];
            for j in 0..i {
                let row_j = &done[j * n..j * n + n];
                let s = a[[i, j]] - dot(&row_i[..j], &row_j[..j]);
                row_i[j] = s / row_j[j];
            }
            let diag = a[[i, i]] - dot(&row_i[..i], &row_i[..i]);
            if !(diag > 0.0) {
                return Err(InaeError::invalid(format!(
                    "matrix is not positive definite (pivot {i} = {diag:.3e})"
                )));
            }
            row_i[i] = diag.sqrt();
        }
        Ok(Cholesky {
            lower: Array2::from_shape_vec((n, n), g).expect("square"),
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Smallest squared pivot; a lower bound proxy for the smallest
    /// eigenvalue of the factored matrix.
    pub fn min_pivot_sq(&self) -> f64 {
        self.lower.diag().iter().map(|v| v * v).fold(f64::INFINITY, f64::min)
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let g = &self.lower;
        let n = self.dim();
        for i in 0..n {
            let row = g.row(i);
            let mut s = b[i];
            for k in 0..i {
                s -= row[k] * b[k];
            }
            b[i] = s / row[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= g[[k, i]] * b[k];
            }
            b[i] = s / g[[i, i]];
        }
    }

    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Array1::from(x)
    }

    /// Solves `A Xᵀ = Bᵀ` for every row of `b` (`b` is `K × n`).
    pub fn solve_rows(&self, b: &Array2<f64>) -> Array2<f64> {
        let mut out = b.clone();
        let mut buf = vec![0.0; self.dim()];
        for mut row in out.rows_mut() {
            buf.iter_mut().zip(row.iter()).for_each(|(d, &s)| *d = s);
            self.solve_in_place(&mut buf);
            row.iter_mut().zip(buf.iter()).for_each(|(d, &s)| *d = s);
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest absolute difference between `a` and its transpose.
pub fn max_asymmetry(a: ArrayView2<'_, f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting; `b` is
/// `n × r` and the solution has the same shape.
pub fn solve_lu(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(InaeError::shape(format!(
            "LU solve needs square A matching B rows, got A {:?}, B {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let mut m = a.to_owned();
    let mut x = b.to_owned();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[[i, col]].abs().total_cmp(&m[[j, col]].abs()))
            .expect("non-empty range");
        if m[[pivot, col]] == 0.0 {
            return Err(InaeError::invalid("singular matrix in LU solve"));
        }
        if pivot != col {
            for c in 0..n {
                m.swap([pivot, c], [col, c]);
            }
            for c in 0..x.ncols() {
                x.swap([pivot, c], [col, c]);
            }
        }
        let p = m[[col, col]];
        for r in col + 1..n {
            let f = m[[r, col]] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[[r, c]] -= f * m[[col, c]];
            }
            for c in 0..x.ncols() {
                x[[r, c]] -= f * x[[col, c]];
            }
        }
    }
    for r in (0..n).rev() {
        for c in 0..x.ncols() {
            let mut s = x[[r, c]];
            for k in r + 1..n {
                s -= m[[r, k]] * x[[k, c]];
            }
            x[[r, c]] = s / m[[r, r]];
        }
    }
    Ok(x)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns the eigenvalues and the matching eigenvectors as columns.
pub fn symmetric_eigen(a: ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(InaeError::shape(format!("eigen-decomposition needs a square matrix, got {:?}", a.dim())));
    }
    let mut m = a.to_owned();
    let mut v = Array2::<f64>::eye(n);
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * scale || scale == 0.0 {
            return Ok((m.diag().to_owned(), v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[[k, p]], m[[k, q]]);
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[[p, k]], m[[q, k]]);
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(InaeError::NonConvergence {
        solver: "jacobi eigensolver",
        iterations: 100,
        residual: f64::NAN,
    })
}
