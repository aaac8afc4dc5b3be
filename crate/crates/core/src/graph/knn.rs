//! k-nearest-neighbor graphs over points in the Poincaré ball.

use rayon::prelude::*;

use super::SparseGraph;
use crate::error::{Error, Result};
use crate::frechet::point_set_dim;
use crate::geometry::{distance_raw, PoincarePoint};
use crate::scalar::{median, Scalar};

/// Kernel bandwidth for edge weights `exp(−d² / 2τ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth<T> {
    /// Median of the selected neighbor distances.
    #[default]
    Auto,
    Fixed(T),
}

/// Indices of the `k` nearest neighbors of every point, closest first.
/// Ties are broken by index.
pub fn knn_indices<T: Scalar>(
    points: &[PoincarePoint<T>],
    k: usize,
) -> Result<Vec<Vec<(usize, T)>>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 points, got {n}"
        )));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k must be in 1..{n}, got {k}"
        )));
    }
    point_set_dim(points)?;
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let x = points[i].coords();
            let mut d: Vec<(usize, T)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, distance_raw(x, points[j].coords())))
                .collect();
            let cmp =
                |a: &(usize, T), b: &(usize, T)| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0));
            d.select_nth_unstable_by(k - 1, cmp);
            d.truncate(k);
            d.sort_by(cmp);
            d
        })
        .collect())
}

/// Union-symmetrized kNN graph and the bandwidth actually used.
pub fn knn_graph_with_bandwidth<T: Scalar>(
    points: &[PoincarePoint<T>],
    k: usize,
    bandwidth: Bandwidth<T>,
) -> Result<(SparseGraph<T>, T)> {
    let nbrs = knn_indices(points, k)?;
    let mut pairs: Vec<(usize, usize, T)> = nbrs
        .iter()
        .enumerate()
        .flat_map(|(i, list)| {
            list.iter()
                .map(move |&(j, d)| if i < j { (i, j, d) } else { (j, i, d) })
        })
        .collect();
    pairs.sort_by_key(|p| (p.0, p.1));
    pairs.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);

    let tau = match bandwidth {
        Bandwidth::Fixed(t) => {
            if !(t.is_finite() && t > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "bandwidth must be positive, got {t}"
                )));
            }
            t
        }
        Bandwidth::Auto => {
            let ds: Vec<T> = pairs.iter().map(|p| p.2).collect();
            let m = median(&ds);
            if m > T::zero() {
                m
            } else {
                T::one()
            }
        }
    };
    let two_tau_sq = T::lit(2.0) * tau * tau;
    let tiny = T::min_positive_value();
    let edges = pairs
        .into_iter()
        .map(|(u, v, d)| (u, v, (-(d * d) / two_tau_sq).exp().max(tiny)))
        .collect();
    Ok((SparseGraph::from_trusted(points.len(), edges), tau))
}

/// Union-symmetrized kNN graph with Gaussian weights in `(0, 1]`.
pub fn knn_graph<T: Scalar>(
    points: &[PoincarePoint<T>],
    k: usize,
    bandwidth: Bandwidth<T>,
) -> Result<SparseGraph<T>> {
    knn_graph_with_bandwidth(points, k, bandwidth).map(|(g, _)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::distance;

    fn p(x: f64, y: f64) -> PoincarePoint<f64> {
        PoincarePoint::new(vec![x, y]).unwrap()
    }

    #[test]
    fn complete_when_k_is_n_minus_one() {
        let pts = vec![p(0.0, 0.0), p(0.3, 0.1), p(-0.2, 0.5), p(0.1, -0.6)];
        let g = knn_graph(&pts, 3, Bandwidth::Auto).unwrap();
        assert_eq!(g.num_edges(), 6);
    }

    #[test]
    fn two_points_single_edge() {
        let pts = vec![p(0.0, 0.0), p(0.5, 0.0)];
        let tau = 0.7;
        let g = knn_graph(&pts, 1, Bandwidth::Fixed(tau)).unwrap();
        let d = distance(&pts[0], &pts[1]).unwrap();
        assert_eq!(g.num_edges(), 1);
        let w = g.edges()[0].2;
        assert!((w - (-d * d / (2.0 * tau * tau)).exp()).abs() < 1e-14);
    }

    #[test]
    fn collinear_union_matches_brute_force() {
        let xs = [-0.6, -0.1, 0.05, 0.7];
        let pts: Vec<_> = xs.iter().map(|&x| p(x, 0.0)).collect();
        let g = knn_graph(&pts, 1, Bandwidth::Fixed(1.0)).unwrap();
        // exhaustive pairwise table
        let mut expected = std::collections::BTreeSet::new();
        for i in 0..4 {
            let mut best = (usize::MAX, f64::INFINITY);
            for j in 0..4 {
                if i != j {
                    let d = distance(&pts[i], &pts[j]).unwrap();
                    if d < best.1 {
                        best = (j, d);
                    }
                }
            }
            expected.insert((i.min(best.0), i.max(best.0)));
        }
        let got: std::collections::BTreeSet<_> = g.edges().iter().map(|e| (e.0, e.1)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn rejects_bad_k() {
        let pts = vec![p(0.0, 0.0), p(0.5, 0.0)];
        assert!(knn_graph(&pts, 2, Bandwidth::Auto).is_err());
        assert!(knn_graph(&pts[..1], 1, Bandwidth::Auto).is_err());
    }

    #[test]
    fn every_node_keeps_k_neighbors() {
        let pts: Vec<_> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.7;
                p(
                    0.8 * t.cos() * (i as f64 / 20.0),
                    0.8 * t.sin() * (i as f64 / 20.0),
                )
            })
            .collect();
        let g = knn_graph(&pts, 3, Bandwidth::Auto).unwrap();
        for list in g.adjacency() {
            assert!(list.len() >= 3);
            assert!(list.iter().all(|&(_, w)| w > 0.0 && w <= 1.0));
        }
    }
}
