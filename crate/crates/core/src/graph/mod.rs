//! Weighted undirected graphs, partitions, and the generators/builders that
//! produce them.

mod hsbm;
pub mod io;
mod knn;
mod laplacian;
mod tree;

pub use hsbm::{
    generate_hsbm, ks_snr, HsbmLevels, HsbmPartitions, HsbmRates, HsbmSpec, LevelDegrees,
    DEFAULT_DEGREE_SCALE, REFERENCE_RATIO,
};
pub use knn::{knn_graph, knn_graph_with_bandwidth, knn_indices, Bandwidth};
pub use laplacian::{normalized_laplacian, CsrMatrix};
pub use tree::{sarkar_embed_tree, tree_distortion, Tree};

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Undirected weighted graph stored as an edge list with `u < v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph<T> {
    n: usize,
    edges: Vec<(usize, usize, T)>,
}

impl<T: Scalar> SparseGraph<T> {
    /// Builds a graph, orienting every edge as `u < v`.
    ///
    /// Rejects self-loops, duplicate edges, out-of-range ids and nonpositive
    /// or non-finite weights.
    pub fn new(n: usize, edges: Vec<(usize, usize, T)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut out = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::IndexOutOfRange {
                    index: u.max(v),
                    size: n,
                });
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            if !(w.is_finite() && w > T::zero()) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) has weight {w}"
                )));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if !seen.insert((a, b)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            out.push((a, b, w));
        }
        Ok(Self { n, edges: out })
    }

    /// Unit-weight graph from an edge list.
    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, edges.iter().map(|&(u, v)| (u, v, T::one())).collect())
    }

    pub(crate) fn from_trusted(n: usize, edges: Vec<(usize, usize, T)>) -> Self {
        Self { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, T)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Neighbor lists `(neighbor, weight)`, sorted by neighbor id.
    pub fn adjacency(&self) -> Vec<Vec<(usize, T)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, w) in &self.edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
        }
        adj
    }

    /// Weighted degrees.
    pub fn degrees(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for &(u, v, w) in &self.edges {
            d[u] += w;
            d[v] += w;
        }
        d
    }

    pub fn total_weight(&self) -> T {
        self.edges.iter().map(|e| e.2).sum()
    }

    /// Connected components as sorted node lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut comps = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.components().len() == 1
    }

    /// Subgraph induced by `nodes` (renumbered in the given order).
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<(Self, Vec<Option<usize>>)> {
        let mut old_to_new = vec![None; self.n];
        for (new, &old) in nodes.iter().enumerate() {
            if old >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: old,
                    size: self.n,
                });
            }
            old_to_new[old] = Some(new);
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|&(u, v, w)| match (old_to_new[u], old_to_new[v]) {
                (Some(a), Some(b)) => Some(if a < b { (a, b, w) } else { (b, a, w) }),
                _ => None,
            })
            .collect();
        Ok((Self::from_trusted(nodes.len(), edges), old_to_new))
    }
}

/// Result of restricting a graph to its largest connected component.
#[derive(Debug, Clone)]
pub struct Component<T> {
    pub graph: SparseGraph<T>,
    /// `old_to_new[i]` is the new id of original node `i`, if retained.
    pub old_to_new: Vec<Option<usize>>,
    /// `new_to_old[j]` is the original id of node `j`.
    pub new_to_old: Vec<usize>,
}

/// Largest connected component; ties go to the component holding the
/// smallest original node id.
pub fn largest_connected_component<T: Scalar>(g: &SparseGraph<T>) -> Result<Component<T>> {
    if g.n() == 0 {
        return Err(Error::Empty("graph"));
    }
    let comps = g.components();
    let mut best = 0;
    for (i, c) in comps.iter().enumerate() {
        if c.len() > comps[best].len() {
            best = i;
        }
    }
    let nodes = comps[best].clone();
    let (graph, old_to_new) = g.induced_subgraph(&nodes)?;
    Ok(Component {
        graph,
        old_to_new,
        new_to_old: nodes,
    })
}

/// Cluster labels, contiguous from 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    /// Requires the label set to be exactly `0..k`.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
        let mut used = vec![false; k];
        for &l in &labels {
            used[l] = true;
        }
        if let Some(missing) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidParameter(format!(
                "partition labels are not contiguous: label {missing} unused"
            )));
        }
        Ok(Self { labels })
    }

    /// Renumbers arbitrary labels by order of first appearance.
    pub fn from_raw<L: Copy + Eq + std::hash::Hash>(raw: &[L]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.labels.iter().map(|&l| l + 1).max().unwrap_or(0)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Restricts to `nodes` (e.g. the retained nodes of a component) and
    /// relabels contiguously.
    pub fn restrict(&self, nodes: &[usize]) -> Self {
        let raw: Vec<usize> = nodes.iter().map(|&i| self.labels[i]).collect();
        Self::from_raw(&raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_validation() {
        assert!(SparseGraph::<f64>::unweighted(3, &[(0, 0)]).is_err());
        assert!(SparseGraph::<f64>::unweighted(3, &[(0, 1), (1, 0)]).is_err());
        assert!(SparseGraph::<f64>::unweighted(3, &[(0, 3)]).is_err());
        assert!(SparseGraph::new(3, vec![(0, 1, 0.0)]).is_err());
        let g = SparseGraph::new(3, vec![(2, 0, 1.5)]).unwrap();
        assert_eq!(g.edges(), &[(0, 2, 1.5)]);
        assert_eq!(g.degrees(), vec![1.5, 0.0, 1.5]);
    }

    #[test]
    fn lcc_connected_is_identity() {
        let g = SparseGraph::<f64>::unweighted(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let c = largest_connected_component(&g).unwrap();
        assert_eq!(c.graph, g);
        assert_eq!(c.new_to_old, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lcc_picks_larger_component() {
        // component {0,1,2} of size 3 and {3..9} of size 7
        let mut e = vec![(0, 1), (1, 2)];
        e.extend((3..9).map(|i| (i, i + 1)));
        let g = SparseGraph::<f64>::unweighted(10, &e).unwrap();
        let c = largest_connected_component(&g).unwrap();
        assert_eq!(c.graph.n(), 7);
        assert!(c.graph.is_connected());
        assert_eq!(c.new_to_old, (3..10).collect::<Vec<_>>());
        assert_eq!(c.old_to_new[0], None);
        assert_eq!(c.old_to_new[3], Some(0));
    }

    #[test]
    fn lcc_tie_goes_to_smallest_id() {
        // two 5-node paths: {1,3,5,7,9} and {0,2,4,6,8}; the second holds node 0
        let e = [
            (1, 3),
            (3, 5),
            (5, 7),
            (7, 9),
            (0, 2),
            (2, 4),
            (4, 6),
            (6, 8),
        ];
        let g = SparseGraph::<f64>::unweighted(10, &e).unwrap();
        let c = largest_connected_component(&g).unwrap();
        assert_eq!(c.new_to_old, vec![0, 2, 4, 6, 8]);
        assert!(
            largest_connected_component(&SparseGraph::<f64>::unweighted(0, &[]).unwrap()).is_err()
        );
    }

    #[test]
    fn partition_labels() {
        assert!(Partition::new(vec![0, 2]).is_err());
        let p = Partition::from_raw(&[7, 7, 3, 9, 3]);
        assert_eq!(p.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.num_clusters(), 3);
        assert_eq!(p.restrict(&[2, 3]).labels(), &[0, 1]);
    }
}
