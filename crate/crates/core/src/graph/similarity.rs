use std::io::Write;

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{InaeError, Result};

/// Sparse symmetric similarity matrix in compressed-row form with a zero
/// diagonal. Column indices within a row are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds `(A + Aᵀ) / 2` from directed weighted edges `(i, j, a_ij)`.
    /// Self loops are dropped; repeated edges are summed first.
    pub fn symmetrized(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, w) in edges {
            assert!(i < n && j < n, "edge ({i}, {j}) out of range for {n} nodes");
            if i == j || w == 0.0 {
                continue;
            }
            rows[i].push((j, 0.5 * w));
            rows[j].push((i, 0.5 * w));
        }
        Self::from_rows(n, rows)
    }

    /// Builds from per-row entries assumed to already describe a symmetric
    /// matrix. Duplicate columns are summed and zeros dropped.
    pub fn from_rows(n: usize, mut rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut w = 0.0;
                while k < row.len() && row[k].0 == j {
                    w += row[k].1;
                    k += 1;
                }
                if j != i && w != 0.0 {
                    indices.push(j);
                    values.push(w);
                }
            }
            indptr.push(indices.len());
        }
        SimilarityMatrix {
            n,
            indptr,
            indices,
            values,
        }
    }

    /// Sparse copy of a dense symmetric matrix; the diagonal is ignored.
    pub fn from_dense(s: ArrayView2<'_, f64>) -> Result<Self> {
        let n = s.nrows();
        if s.ncols() != n {
            return Err(InaeError::shape("similarity matrix must be square"));
        }
        if crate::linalg::max_asymmetry(s) > 1e-12 {
            return Err(InaeError::invalid("similarity matrix must be symmetric"));
        }
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && s[[i, j]] != 0.0)
                    .map(|j| (j, s[[i, j]]))
                    .collect()
            })
            .collect();
        Ok(Self::from_rows(n, rows))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// `(column, weight)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Degree vector `D_ii = Σ_j S_ij`.
    pub fn degrees(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n).map(|i| self.row(i).map(|(_, w)| w).sum()))
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, w) in self.row(i) {
                out[[i, j]] = w;
            }
        }
        out
    }

    /// Dense graph Laplacian `L = D − S`.
    pub fn laplacian_dense(&self) -> Array2<f64> {
        let mut l = self.to_dense().mapv(|v| -v);
        for (i, d) in self.degrees().iter().enumerate() {
            l[[i, i]] = *d;
        }
        l
    }

    /// `H L` for a `K × n` feature matrix: column `m` of the result is
    /// `D_mm h_m − Σ_n S_mn h_n`.
    pub fn laplacian_apply(&self, h: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(h.ncols(), self.n, "feature matrix has wrong column count");
        let mut out = Array2::zeros(h.raw_dim());
        for (hrow, mut orow) in h.rows().into_iter().zip(out.rows_mut()) {
            for m in 0..self.n {
                let hm = hrow[m];
                let mut acc = 0.0;
                for (j, w) in self.row(m) {
                    acc += w * (hm - hrow[j]);
                }
                orow[m] = acc;
            }
        }
        out
    }

    /// `tr(H L Hᵀ)` evaluated as `½ Σ_ij S_ij ‖h_i − h_j‖²`.
    pub fn dirichlet_energy(&self, h: ArrayView2<'_, f64>) -> f64 {
        assert_eq!(h.ncols(), self.n, "feature matrix has wrong column count");
        let mut total = 0.0;
        for hrow in h.rows() {
            for i in 0..self.n {
                for (j, w) in self.row(i) {
                    if j > i {
                        let d = hrow[i] - hrow[j];
                        total += w * d * d;
                    }
                }
            }
        }
        total
    }

    /// Upper-triangle edges `(i, j, S_ij)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.row(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// Writes the upper-triangle edge list as CSV with header `i,j,s`.
    pub fn write_edge_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,j,s")?;
        for (i, j, w) in self.edges() {
            writeln!(out, "{i},{j},{w}")?;
        }
        Ok(())
    }
}
