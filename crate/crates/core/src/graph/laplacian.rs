//! Symmetric normalized Laplacian in compressed sparse row form.

use super::SparseGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Square matrix from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, T)>) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|e| e.0 >= n || e.1 >= n) {
            return Err(Error::IndexOutOfRange {
                index: r.max(c),
                size: n,
            });
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Row-major dense input.
    pub fn from_dense(n: usize, dense: &[T]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::LengthMismatch {
                left: dense.len(),
                right: n * n,
            });
        }
        let entries = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| dense[i * n + j] != T::zero())
            .map(|(i, j)| (i, j, dense[i * n + j]))
            .collect();
        Self::from_triplets(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map_or(T::zero(), |(_, v)| v)
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[i * self.n + j] = v;
            }
        }
        d
    }

    /// Fails with the first asymmetric entry beyond `tol`.
    pub fn check_symmetric(&self, tol: T) -> Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if (v - self.get(j, i)).abs() > tol {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }
}

/// `L = I − D^{-1/2} W D^{-1/2}`.
pub fn normalized_laplacian<T: Scalar>(g: &SparseGraph<T>) -> Result<CsrMatrix<T>> {
    let deg = g.degrees();
    if let Some(i) = deg.iter().position(|&d| d <= T::zero()) {
        return Err(Error::IsolatedNode(i));
    }
    let inv_sqrt: Vec<T> = deg.iter().map(|d| d.sqrt().recip()).collect();
    let mut entries = Vec::with_capacity(g.n() + 2 * g.num_edges());
    entries.extend((0..g.n()).map(|i| (i, i, T::one())));
    for &(u, v, w) in g.edges() {
        let a = -w * inv_sqrt[u] * inv_sqrt[v];
        entries.push((u, v, a));
        entries.push((v, u, a));
    }
    CsrMatrix::from_triplets(g.n(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_entries() {
        let g = SparseGraph::<f64>::unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        let s = 0.5f64.sqrt();
        let expected = [1.0, -s, 0.0, -s, 1.0, -s, 0.0, -s, 1.0];
        for (a, b) in l.to_dense().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        l.check_symmetric(0.0).unwrap();
    }

    #[test]
    fn isolated_node_rejected() {
        let g = SparseGraph::<f64>::unweighted(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            normalized_laplacian(&g),
            Err(Error::IsolatedNode(2))
        ));
    }

    #[test]
    fn sqrt_degree_is_null_vector() {
        let g = SparseGraph::<f64>::new(
            4,
            vec![
                (0, 1, 2.0),
                (1, 2, 0.5),
                (2, 3, 1.0),
                (0, 3, 3.0),
                (0, 2, 1.5),
            ],
        )
        .unwrap();
        let l = normalized_laplacian(&g).unwrap();
        let x: Vec<f64> = g.degrees().iter().map(|d| d.sqrt()).collect();
        let mut y = vec![0.0; 4];
        l.matvec(&x, &mut y);
        assert!(y.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn asymmetric_detected() {
        let m = CsrMatrix::from_dense(2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(m.check_symmetric(1e-12).is_err());
    }
}
