//! Euclidean minimum spanning trees of design points.
//!
//! [`mst_summary`] grows the tree with a dense O(N²) Prim search, which is
//! the right trade-off for complete graphs of a few thousand points.
//! [`mst_kruskal`] is an independent sort-based construction kept for
//! cross-checking.
//!
//! Equal candidate edges are resolved by the smallest `(i, j)` pair
//! (`i < j`), so both algorithms are deterministic even with ties.

use serde::{Deserialize, Serialize};

use crate::criteria::squared_distance;
use crate::design::DesignMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    pub i: usize,
    pub j: usize,
    pub length: f64,
}

impl MstEdge {
    fn new(u: usize, v: usize, length: f64) -> Self {
        Self {
            i: u.min(v),
            j: u.max(v),
            length,
        }
    }

    #[inline]
    fn key(&self) -> (f64, usize, usize) {
        (self.length, self.i, self.j)
    }
}

#[inline]
fn edge_less(a: (f64, usize, usize), b: (f64, usize, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2))
}

/// Mean `m` and population standard deviation `sigma` of the N-1 MST edge
/// lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MstSummary {
    pub m: f64,
    pub sigma: f64,
    pub total_weight: f64,
    pub edge_lengths: Vec<f64>,
    #[serde(skip)]
    pub edges: Vec<MstEdge>,
}

impl MstSummary {
    pub fn from_edges(edges: Vec<MstEdge>) -> Self {
        let edge_lengths: Vec<f64> = edges.iter().map(|e| e.length).collect();
        let count = edge_lengths.len() as f64;
        let total_weight: f64 = edge_lengths.iter().sum();
        let m = total_weight / count;
        let sigma = (edge_lengths.iter().map(|l| (l - m) * (l - m)).sum::<f64>() / count).sqrt();
        Self {
            m,
            sigma,
            total_weight,
            edge_lengths,
            edges,
        }
    }
}

fn require_points(design: &DesignMatrix) -> Result<()> {
    if design.n_points() < 2 {
        return Err(Error::Degenerate(
            "a spanning tree needs at least two points".into(),
        ));
    }
    Ok(())
}

/// MST edges via dense Prim, in insertion order.
pub fn mst_prim(design: &DesignMatrix) -> Result<Vec<MstEdge>> {
    require_points(design)?;
    let n = design.n_points();
    let mut in_tree = vec![false; n];
    let mut best: Vec<MstEdge> = (0..n)
        .map(|v| MstEdge::new(0, v, squared_distance(design.row(0), design.row(v)).sqrt()))
        .collect();
    in_tree[0] = true;
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let mut pick: Option<usize> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            if pick.is_none_or(|p| edge_less(best[v].key(), best[p].key())) {
                pick = Some(v);
            }
        }
        let v = pick.expect("a vertex remains outside the tree");
        in_tree[v] = true;
        edges.push(best[v]);
        let rv = design.row(v);
        for u in 0..n {
            if in_tree[u] {
                continue;
            }
            let cand = MstEdge::new(v, u, squared_distance(rv, design.row(u)).sqrt());
            if edge_less(cand.key(), best[u].key()) {
                best[u] = cand;
            }
        }
    }
    Ok(edges)
}

/// MST edges via Kruskal on the sorted complete edge list.
pub fn mst_kruskal(design: &DesignMatrix) -> Result<Vec<MstEdge>> {
    require_points(design)?;
    let n = design.n_points();
    let mut all = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            all.push(MstEdge::new(
                i,
                j,
                squared_distance(design.row(i), design.row(j)).sqrt(),
            ));
        }
    }
    all.sort_by(|a, b| {
        a.length
            .total_cmp(&b.length)
            .then((a.i, a.j).cmp(&(b.i, b.j)))
    });
    let mut uf = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for e in all {
        if uf.union(e.i, e.j) {
            edges.push(e);
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    Ok(edges)
}

/// MST statistics of a design.
pub fn mst_summary(design: &DesignMatrix) -> Result<MstSummary> {
    Ok(MstSummary::from_edges(mst_prim(design)?))
}

pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MstOrder {
    ABetter,
    BBetter,
    Incomparable,
}

/// Partial order on designs: one fills space better than the other when its
/// mean edge length is strictly larger and its deviation strictly smaller.
pub fn mst_compare(a: &MstSummary, b: &MstSummary) -> MstOrder {
    if a.m > b.m && a.sigma < b.sigma {
        MstOrder::ABetter
    } else if b.m > a.m && b.sigma < a.sigma {
        MstOrder::BBetter
    } else {
        MstOrder::Incomparable
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::generate_srs;
    use crate::rng::Seed;

    fn summary(m: f64, sigma: f64) -> MstSummary {
        MstSummary {
            m,
            sigma,
            total_weight: 0.0,
            edge_lengths: Vec::new(),
            edges: Vec::new(),
        }
    }

    #[test]
    fn collinear_points() {
        let d = DesignMatrix::from_rows(&[[0.0], [0.5], [1.0]]).unwrap();
        let s = mst_summary(&d).unwrap();
        assert_eq!(s.edge_lengths, vec![0.5, 0.5]);
        assert_eq!(s.m, 0.5);
        assert_eq!(s.sigma, 0.0);
    }

    #[test]
    fn square_corners_skip_diagonal() {
        let d = DesignMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let s = mst_summary(&d).unwrap();
        assert_eq!(s.edge_lengths.len(), 3);
        assert!(s.edge_lengths.iter().all(|&l| l == 1.0));
        assert_eq!((s.m, s.sigma, s.total_weight), (1.0, 0.0, 3.0));
        // ties resolve to the lexicographically smallest edges
        let pairs: Vec<(usize, usize)> = s.edges.iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 3)]);
        let k: Vec<(usize, usize)> = mst_kruskal(&d).unwrap().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(k, vec![(0, 1), (0, 2), (1, 3)]);
    }

    #[test]
    fn needs_two_points() {
        let d = DesignMatrix::from_rows(&[[0.3]]).unwrap();
        assert!(matches!(mst_summary(&d), Err(Error::Degenerate(_))));
    }

    #[test]
    fn partial_order() {
        assert_eq!(mst_compare(&summary(1.0, 0.0), &summary(0.5, 0.1)), MstOrder::ABetter);
        assert_eq!(mst_compare(&summary(0.5, 0.1), &summary(1.0, 0.0)), MstOrder::BBetter);
        assert_eq!(
            mst_compare(&summary(1.0, 0.2), &summary(0.9, 0.1)),
            MstOrder::Incomparable
        );
        let a = summary(0.7, 0.1);
        assert_eq!(mst_compare(&a, &a), MstOrder::Incomparable);
    }

    #[test]
    fn prim_and_kruskal_agree() {
        for seed in 0..20 {
            let d = generate_srs(40 + seed as usize, 3, Seed(seed)).unwrap();
            let p: f64 = mst_prim(&d).unwrap().iter().map(|e| e.length).sum();
            let k: f64 = mst_kruskal(&d).unwrap().iter().map(|e| e.length).sum();
            assert!((p - k).abs() <= 1e-12 * p);
        }
    }
}
