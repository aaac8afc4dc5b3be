//! Reference community detectors: Louvain, greedy agglomerative modularity
//! and the additive eigengap heuristic.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{Partition, SparseGraph};
use crate::rng;
use crate::scalar::Scalar;
use crate::spectral::SpectralDecomposition;

/// Newman modularity at resolution 1.
pub fn modularity<T: Scalar>(g: &SparseGraph<T>, p: &Partition) -> Result<f64> {
    if p.len() != g.n() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: g.n(),
        });
    }
    let two_m = 2.0 * g.total_weight().as_f64();
    if two_m == 0.0 {
        return Ok(0.0);
    }
    let labels = p.labels();
    let mut internal = vec![0.0; p.num_clusters()];
    let mut tot = vec![0.0; p.num_clusters()];
    for &(u, v, w) in g.edges() {
        let w = w.as_f64();
        tot[labels[u]] += w;
        tot[labels[v]] += w;
        if labels[u] == labels[v] {
            internal[labels[u]] += 2.0 * w;
        }
    }
    Ok(internal
        .iter()
        .zip(&tot)
        .map(|(&i, &t)| i / two_m - (t / two_m).powi(2))
        .sum())
}

/// Weighted graph with self-loops, used by the aggregation phase.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
}

impl Level {
    fn degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|e| e.1).sum::<f64>() + 2.0 * self.self_loop[i]
    }
}

/// One round of local moves; returns community ids and whether anything moved.
fn local_moves(level: &Level, order: &[usize], two_m: f64) -> (Vec<usize>, bool) {
    let n = level.adj.len();
    let deg: Vec<f64> = (0..n).map(|i| level.degree(i)).collect();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot = deg.clone();
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for &i in order {
            let ci = comm[i];
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            for &(j, w) in &level.adj[i] {
                *links.entry(comm[j]).or_insert(0.0) += w;
            }
            tot[ci] -= deg[i];
            let gain = |c: usize, k_in: f64| k_in - tot[c] * deg[i] / two_m;
            let mut best = ci;
            let mut best_gain = gain(ci, links.get(&ci).copied().unwrap_or(0.0));
            for (&c, &k_in) in &links {
                let g = gain(c, k_in);
                if g > best_gain + 1e-12 {
                    best = c;
                    best_gain = g;
                }
            }
            tot[best] += deg[i];
            if best != ci {
                comm[i] = best;
                moved = true;
                moved_any = true;
            }
        }
        if !moved {
            break;
        }
    }
    (comm, moved_any)
}

/// Louvain with resolution 1; node visiting order is shuffled by `seed`.
pub fn louvain<T: Scalar>(g: &SparseGraph<T>, seed: u64) -> Result<Partition> {
    if g.n() == 0 {
        return Err(Error::Empty("graph"));
    }
    let two_m = 2.0 * g.total_weight().as_f64();
    if two_m == 0.0 {
        return Partition::new((0..g.n()).collect());
    }
    let mut level = Level {
        adj: g
            .adjacency()
            .into_iter()
            .map(|l| l.into_iter().map(|(j, w)| (j, w.as_f64())).collect())
            .collect(),
        self_loop: vec![0.0; g.n()],
    };
    let mut membership: Vec<usize> = (0..g.n()).collect();
    let mut rng = rng::stream(seed, "louvain", 0);
    loop {
        let n = level.adj.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let (comm, moved) = local_moves(&level, &order, two_m);
        if !moved {
            break;
        }
        let relabel = Partition::from_raw(&comm);
        let k = relabel.num_clusters();
        let lab = relabel.labels();
        for m in membership.iter_mut() {
            *m = lab[*m];
        }
        let mut self_loop = vec![0.0; k];
        let mut between: Vec<HashMap<usize, f64>> = vec![HashMap::new(); k];
        for i in 0..n {
            self_loop[lab[i]] += level.self_loop[i];
            for &(j, w) in &level.adj[i] {
                let (a, b) = (lab[i], lab[j]);
                if a == b {
                    // each internal edge is seen from both ends
                    self_loop[a] += w / 2.0;
                } else {
                    *between[a].entry(b).or_insert(0.0) += w;
                }
            }
        }
        let adj = between
            .into_iter()
            .map(|m| {
                let mut v: Vec<(usize, f64)> = m.into_iter().collect();
                v.sort_by_key(|e| e.0);
                v
            })
            .collect();
        level = Level { adj, self_loop };
    }
    Ok(Partition::from_raw(&membership))
}

/// Clauset–Newman–Moore style agglomeration: repeatedly merge the
/// connected pair with the largest modularity gain while it is positive.
/// Ties go to the lexicographically smallest pair.
pub fn greedy_modularity<T: Scalar>(g: &SparseGraph<T>) -> Result<Partition> {
    if g.n() == 0 {
        return Err(Error::Empty("graph"));
    }
    let n = g.n();
    let two_m = 2.0 * g.total_weight().as_f64();
    if two_m == 0.0 {
        return Partition::new((0..n).collect());
    }
    // e[i][j]: fraction of edge ends between communities i and j (one direction)
    let mut e: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut a: Vec<f64> = vec![0.0; n];
    for &(u, v, w) in g.edges() {
        let f = w.as_f64() / two_m;
        *e[u].entry(v).or_insert(0.0) += f;
        *e[v].entry(u).or_insert(0.0) += f;
        a[u] += f;
        a[v] += f;
    }
    let mut alive = vec![true; n];
    let mut parent: Vec<usize> = (0..n).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for (&j, &eij) in e[i].range((i + 1)..) {
                let dq = 2.0 * (eij - a[i] * a[j]);
                if best.is_none_or(|b| dq > b.0 + 1e-15) {
                    best = Some((dq, i, j));
                }
            }
        }
        let Some((dq, i, j)) = best else { break };
        if dq <= 1e-15 {
            break;
        }
        // merge j into i
        let ej = std::mem::take(&mut e[j]);
        for (k, w) in ej {
            if k == i {
                continue;
            }
            *e[i].entry(k).or_insert(0.0) += w;
            let ek = &mut e[k];
            ek.remove(&j);
            *ek.entry(i).or_insert(0.0) += w;
        }
        e[i].remove(&j);
        a[i] += a[j];
        alive[j] = false;
        parent[j] = i;
    }
    let find = |mut x: usize| {
        while parent[x] != x {
            x = parent[x];
        }
        x
    };
    let roots: Vec<usize> = (0..n).map(find).collect();
    Ok(Partition::from_raw(&roots))
}

/// `argmax_k (λ_{k+1} − λ_k)` over `k ≥ 1`; ties go to the smallest `k`.
pub fn eigengap_k<T: Scalar>(dec: &SpectralDecomposition<T>) -> Result<usize> {
    let lam = dec.eigenvalues();
    if lam.len() < 2 {
        return Err(Error::InvalidParameter(
            "eigengap needs at least two modes".into(),
        ));
    }
    let mut best = (T::neg_infinity(), 1);
    for k in 1..lam.len() {
        let gap = lam[k] - lam[k - 1];
        if gap > best.0 {
            best = (gap, k);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::normalized_laplacian;
    use crate::metrics::ari;
    use crate::spectral::full_eigendecomposition;

    fn two_cliques() -> SparseGraph<f64> {
        let mut e = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in (i + 1)..5 {
                    e.push((base + i, base + j));
                }
            }
        }
        SparseGraph::unweighted(10, &e).unwrap()
    }

    fn clique(n: usize) -> SparseGraph<f64> {
        let e: Vec<_> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        SparseGraph::unweighted(n, &e).unwrap()
    }

    #[test]
    fn modularity_of_components() {
        let g = two_cliques();
        let p = Partition::from_raw(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert!((modularity(&g, &p).unwrap() - 0.5).abs() < 1e-12);
        assert!(
            modularity(&g, &Partition::new(vec![0; 10]).unwrap())
                .unwrap()
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn louvain_examples() {
        let g = two_cliques();
        let truth = Partition::from_raw(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        for seed in 0..5 {
            assert_eq!(ari(&louvain(&g, seed).unwrap(), &truth).unwrap(), 1.0);
        }
        assert_eq!(louvain(&clique(6), 3).unwrap().num_clusters(), 1);
        assert!(louvain(&SparseGraph::<f64>::unweighted(0, &[]).unwrap(), 0).is_err());
    }

    #[test]
    fn greedy_examples() {
        let g = two_cliques();
        let truth = Partition::from_raw(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(ari(&greedy_modularity(&g).unwrap(), &truth).unwrap(), 1.0);
    }

    /// All set partitions of `0..n` as label vectors.
    fn all_partitions(n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![0]];
        for _ in 1..n {
            let mut next = Vec::new();
            for p in &out {
                let k = p.iter().max().unwrap() + 1;
                for l in 0..=k {
                    let mut q = p.clone();
                    q.push(l);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }

    #[test]
    fn greedy_on_star_matches_exhaustive_optimum() {
        let g =
            SparseGraph::<f64>::unweighted(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]).unwrap();
        let best = all_partitions(6)
            .into_iter()
            .map(|l| modularity(&g, &Partition::from_raw(&l)).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let got = modularity(&g, &greedy_modularity(&g).unwrap()).unwrap();
        assert!((got - best).abs() < 1e-12, "{got} vs {best}");
    }

    #[test]
    fn eigengap_examples() {
        let eye = |n: usize| {
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect()
        };
        let dec =
            SpectralDecomposition::from_parts(vec![0.0, 0.05, 0.08, 0.9, 1.0], eye(5)).unwrap();
        assert_eq!(eigengap_k(&dec).unwrap(), 3);
        let g = two_cliques();
        let dec = full_eigendecomposition(&normalized_laplacian(&g).unwrap()).unwrap();
        assert_eq!(eigengap_k(&dec).unwrap(), 2);
        let dec = full_eigendecomposition(&normalized_laplacian(&clique(5)).unwrap()).unwrap();
        assert_eq!(eigengap_k(&dec).unwrap(), 1);
        assert!(eigengap_k(&dec.truncated(1).unwrap()).is_err());
    }
}
