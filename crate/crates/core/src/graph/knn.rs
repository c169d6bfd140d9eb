use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{InaeError, Result};

/// The `k` nearest other columns of `samples` (`D × n`) for every column,
/// each list sorted by increasing Euclidean distance with ties broken by
/// lower index. Returns `(index, distance)` pairs.
pub fn knn_with_distances(samples: ArrayView2<'_, f64>, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = samples.ncols();
    if k == 0 {
        return Err(InaeError::invalid("k must be at least 1"));
    }
    if k >= n {
        return Err(InaeError::invalid(format!(
            "k = {k} must be smaller than the number of samples ({n})"
        )));
    }
    let cols: Vec<Vec<f64>> = samples.columns().into_iter().map(|c| c.to_vec()).collect();
    let lists = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &cols[i];
            let mut cand: Vec<(f64, usize)> = cols
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, xj)| {
                    let d2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d2, j)
                })
                .collect();
            let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_dist);
                cand.truncate(k);
            }
            cand.sort_unstable_by(by_dist);
            cand.into_iter().map(|(d2, j)| (j, d2.sqrt())).collect()
        })
        .collect();
    Ok(lists)
}

/// Index-only form of [`knn_with_distances`].
pub fn knn_neighbors(samples: ArrayView2<'_, f64>, k: usize) -> Result<Vec<Vec<usize>>> {
    Ok(knn_with_distances(samples, k)?
        .into_iter()
        .map(|l| l.into_iter().map(|(j, _)| j).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn collinear_points() {
        let x = array![[0.0, 1.0, 3.0]];
        assert_eq!(knn_neighbors(x.view(), 1).unwrap(), vec![vec![1], vec![0], vec![1]]);
    }

    #[test]
    fn full_neighborhood() {
        let x = array![[0.0, 5.0, 1.0, 2.0]];
        let lists = knn_neighbors(x.view(), 3).unwrap();
        assert_eq!(lists[0], vec![2, 3, 1]);
        for (i, l) in lists.iter().enumerate() {
            let mut s = l.clone();
            s.sort();
            assert_eq!(s, (0..4).filter(|&j| j != i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn ties_prefer_lower_index() {
        let x = array![[0.0, 1.0, -1.0, 2.0]];
        assert_eq!(knn_neighbors(x.view(), 2).unwrap()[0], vec![1, 2]);
    }

    #[test]
    fn k_too_large() {
        let x = array![[0.0, 1.0, 3.0]];
        assert!(matches!(knn_neighbors(x.view(), 3), Err(InaeError::InvalidArgument(_))));
        assert!(knn_neighbors(x.view(), 0).is_err());
    }
}
