//! Rooted weighted trees and their low-distortion embedding in the
//! Poincaré disk.

use std::collections::VecDeque;

use super::SparseGraph;
use crate::error::{Error, Result};
use crate::geometry::{distance_raw, mobius_add_raw, PoincarePoint};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tree<T> {
    parent: Vec<Option<usize>>,
    /// Weight of the edge to the parent; zero at the root.
    weight: Vec<T>,
    children: Vec<Vec<usize>>,
    root: usize,
    /// Nodes in breadth-first order from the root.
    order: Vec<usize>,
}

impl<T: Scalar> Tree<T> {
    /// Builds a tree on `n` nodes from `(child, parent, weight)` links.
    pub fn from_links(n: usize, links: &[(usize, usize, T)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("tree"));
        }
        let mut parent = vec![None; n];
        let mut weight = vec![T::zero(); n];
        for &(c, p, w) in links {
            if c >= n || p >= n {
                return Err(Error::IndexOutOfRange {
                    index: c.max(p),
                    size: n,
                });
            }
            if c == p {
                return Err(Error::InvalidTree(format!("node {c} is its own parent")));
            }
            if !(w.is_finite() && w > T::zero()) {
                return Err(Error::InvalidTree(format!(
                    "edge {c} -> {p} has weight {w}"
                )));
            }
            if parent[c].replace(p).is_some() {
                return Err(Error::InvalidTree(format!(
                    "node {c} has more than one parent"
                )));
            }
            weight[c] = w;
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTree(format!(
                "expected one root, found {}",
                roots.len()
            )));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); n];
        for (c, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(c);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            queue.extend(children[u].iter().copied());
        }
        if order.len() != n {
            return Err(Error::InvalidTree("links contain a cycle".into()));
        }
        Ok(Self {
            parent,
            weight,
            children,
            root,
            order,
        })
    }

    /// Complete tree where every internal node has `branching` children.
    /// Nodes are numbered breadth-first with the root at 0.
    pub fn balanced(branching: usize, depth: usize, edge_weight: T) -> Result<Self> {
        if branching == 0 {
            return Err(Error::InvalidParameter("branching must be positive".into()));
        }
        let mut links = Vec::new();
        let mut level = vec![0usize];
        let mut next_id = 1;
        for _ in 0..depth {
            let mut next = Vec::with_capacity(level.len() * branching);
            for &p in &level {
                for _ in 0..branching {
                    links.push((next_id, p, edge_weight));
                    next.push(next_id);
                    next_id += 1;
                }
            }
            level = next;
        }
        Self::from_links(next_id, &links)
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parent_weight(&self, v: usize) -> T {
        self.weight[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Breadth-first node order starting at the root.
    pub fn bfs_order(&self) -> &[usize] {
        &self.order
    }

    /// Number of edges from the root.
    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0; self.n()];
        for &v in &self.order[1..] {
            d[v] = d[self.parent[v].unwrap()] + 1;
        }
        d
    }

    /// Weighted distance from the root.
    pub fn heights(&self) -> Vec<T> {
        let mut h = vec![T::zero(); self.n()];
        for &v in &self.order[1..] {
            h[v] = h[self.parent[v].unwrap()] + self.weight[v];
        }
        h
    }

    /// Path from `v` up to the root, starting with `v`.
    pub fn ancestors(&self, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path
    }

    /// Weighted distances from `source` to every node.
    pub fn distances_from(&self, source: usize) -> Vec<T> {
        let n = self.n();
        let mut dist = vec![T::zero(); n];
        let mut seen = vec![false; n];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let up = self.parent[u].map(|p| (p, self.weight[u]));
            let down = self.children[u].iter().map(|&c| (c, self.weight[c]));
            for (v, w) in up.into_iter().chain(down) {
                if !seen[v] {
                    seen[v] = true;
                    dist[v] = dist[u] + w;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// The tree as an undirected weighted graph.
    pub fn to_graph(&self) -> SparseGraph<T> {
        let edges = (0..self.n())
            .filter_map(|c| self.parent[c].map(|p| (c.min(p), c.max(p), self.weight[c])))
            .collect();
        SparseGraph::from_trusted(self.n(), edges)
    }
}

/// Embeds `tree` in the Poincaré disk so that every edge of weight `ℓ` has
/// hyperbolic length `scale · ℓ`.
///
/// The root sits at the origin. Each node is translated to the origin, where
/// its parent and children occupy evenly spaced directions.
pub fn sarkar_embed_tree<T: Scalar>(tree: &Tree<T>, scale: T) -> Result<Vec<PoincarePoint<T>>> {
    if !(scale.is_finite() && scale > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let n = tree.n();
    let two = T::lit(2.0);
    let tau = T::TAU();
    let mut pos: Vec<[T; 2]> = vec![[T::zero(); 2]; n];
    let mut shifted = [T::zero(); 2];
    for &v in tree.bfs_order() {
        let kids = tree.children(v);
        if kids.is_empty() {
            continue;
        }
        let x = pos[v];
        let neg = [-x[0], -x[1]];
        let (base_angle, slots) = match tree.parent(v) {
            Some(p) => {
                mobius_add_raw(&neg, &pos[p], &mut shifted);
                (shifted[1].atan2(shifted[0]), kids.len() + 1)
            }
            None => (T::zero(), kids.len()),
        };
        let offset = if tree.parent(v).is_some() { 1 } else { 0 };
        for (j, &c) in kids.iter().enumerate() {
            let angle =
                base_angle + tau * T::from_usize_lossy(j + offset) / T::from_usize_lossy(slots);
            let r = (scale * tree.parent_weight(c) / two).tanh();
            let local = [r * angle.cos(), r * angle.sin()];
            let mut out = [T::zero(); 2];
            mobius_add_raw(&x, &local, &mut out);
            pos[c] = out;
        }
    }
    Ok(pos
        .into_iter()
        .map(|c| PoincarePoint::from_raw(c.to_vec()))
        .collect())
}

/// Worst multiplicative distortion `max(d_H / (s·d_T), s·d_T / d_H)` over
/// all node pairs.
pub fn tree_distortion<T: Scalar>(
    tree: &Tree<T>,
    points: &[PoincarePoint<T>],
    scale: T,
) -> Result<T> {
    if points.len() != tree.n() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: tree.n(),
        });
    }
    let mut worst = T::one();
    for u in 0..tree.n() {
        let dt = tree.distances_from(u);
        for v in (u + 1)..tree.n() {
            let target = scale * dt[v];
            let dh = distance_raw(points[u].coords(), points[v].coords());
            if dh <= T::zero() {
                return Ok(T::infinity());
            }
            worst = worst.max(dh / target).max(target / dh);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_trees() {
        assert!(Tree::from_links(3, &[(1, 0, 1.0), (2, 1, 1.0), (2, 0, 1.0)]).is_err());
        assert!(Tree::from_links(3, &[(1, 0, 1.0)]).is_err());
        assert!(Tree::from_links(3, &[(0, 1, 1.0), (1, 0, 1.0), (2, 0, 1.0)]).is_err());
        assert!(Tree::from_links(2, &[(1, 0, 0.0)]).is_err());
    }

    #[test]
    fn balanced_counts() {
        let t = Tree::<f64>::balanced(4, 6, 1.0).unwrap();
        assert_eq!(t.n(), 5461);
        assert_eq!(*t.depths().iter().max().unwrap(), 6);
        assert_eq!(t.ancestors(5460).len(), 7);
    }

    #[test]
    fn single_edge_isometry() {
        let t = Tree::from_links(2, &[(1, 0, 1.0f64)]).unwrap();
        let pts = sarkar_embed_tree(&t, 1.0).unwrap();
        assert!((distance_raw(pts[0].coords(), pts[1].coords()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn star_leaves() {
        let t = Tree::from_links(4, &[(1, 0, 1.0), (2, 0, 1.0), (3, 0, 1.0)]).unwrap();
        let pts = sarkar_embed_tree(&t, 5.0).unwrap();
        for (a, b) in [(1, 2), (1, 3), (2, 3)] {
            let d = distance_raw(pts[a].coords(), pts[b].coords());
            assert!(d <= 10.0 + 1e-9 && d * 1.1 >= 10.0, "{d}");
        }
    }

    #[test]
    fn edges_are_isometric_and_distortion_small() {
        let t = Tree::<f64>::balanced(2, 3, 1.0).unwrap();
        // leaves at radius 12: well inside the f64-representable range
        let pts = sarkar_embed_tree(&t, 4.0f64).unwrap();
        for c in 1..t.n() {
            let p = t.parent(c).unwrap();
            let d = distance_raw(pts[c].coords(), pts[p].coords());
            assert!((d - 4.0).abs() < 1e-6, "{d}");
        }
        let pts = sarkar_embed_tree(&t, 8.0f64).unwrap();
        assert!(tree_distortion(&t, &pts, 8.0).unwrap() <= 1.05);
    }

    #[test]
    fn distortion_shrinks_with_scale() {
        let t = Tree::<f64>::balanced(3, 3, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for s in [1.0, 2.0, 4.0, 8.0] {
            let pts = sarkar_embed_tree(&t, s).unwrap();
            let d = tree_distortion(&t, &pts, s).unwrap();
            assert!(d <= last + 1e-12, "scale {s}: {d} > {last}");
            last = d;
        }
    }
}
