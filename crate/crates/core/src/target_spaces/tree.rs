//! Finite metric trees given by an edge list with positive lengths.
//!
//! Points live on edges as `(edge, offset)`, the offset being measured from
//! the edge's first endpoint. Vertex-to-vertex distances and next-hop tables
//! are precomputed by one traversal per vertex.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point on an edge of a metric tree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreePoint {
    pub edge: usize,
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricTree {
    edges: Vec<TreeEdge>,
    vertex_dist: Vec<Vec<f64>>,
    // next_hop[u][v]: neighbour of u on the unique path to v
    next_hop: Vec<Vec<usize>>,
    // adjacency: (neighbour, edge id)
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MetricTree {
    pub fn new(edges: Vec<TreeEdge>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidSpace("metric tree needs at least one edge".into()));
        }
        for (i, e) in edges.iter().enumerate() {
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::InvalidSpace(format!(
                    "edge {i} has non-positive length {}",
                    e.length
                )));
            }
            if e.from == e.to {
                return Err(Error::InvalidSpace(format!("edge {i} is a loop")));
            }
        }
        let n = edges.iter().map(|e| e.from.max(e.to)).max().unwrap_or(0) + 1;
        if edges.len() != n - 1 {
            return Err(Error::InvalidSpace(format!(
                "{} edges on {} vertices cannot form a tree",
                edges.len(),
                n
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.from].push((e.to, i));
            adjacency[e.to].push((e.from, i));
        }

        let mut vertex_dist = vec![vec![f64::NAN; n]; n];
        let mut next_hop = vec![vec![usize::MAX; n]; n];
        for src in 0..n {
            // first_step[v]: neighbour of src through which v was reached
            let mut first_step = vec![usize::MAX; n];
            let dist = &mut vertex_dist[src];
            dist[src] = 0.0;
            first_step[src] = src;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &(v, eid) in &adjacency[u] {
                    if dist[v].is_nan() {
                        dist[v] = dist[u] + edges[eid].length;
                        first_step[v] = if u == src { v } else { first_step[u] };
                        queue.push_back(v);
                    }
                }
            }
            if dist.iter().any(|d| d.is_nan()) {
                return Err(Error::InvalidSpace("metric tree is not connected".into()));
            }
            next_hop[src] = first_step;
        }
        Ok(Self {
            edges,
            vertex_dist,
            next_hop,
            adjacency,
        })
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_dist.len()
    }

    pub fn validate(&self, p: &TreePoint) -> Result<()> {
        let Some(e) = self.edges.get(p.edge) else {
            return Err(Error::InvalidPoint(format!("tree edge {} does not exist", p.edge)));
        };
        if !(p.offset.is_finite() && (0.0..=e.length).contains(&p.offset)) {
            return Err(Error::InvalidPoint(format!(
                "offset {} outside [0, {}] on edge {}",
                p.offset, e.length, p.edge
            )));
        }
        Ok(())
    }

    /// Distances from a point to the two endpoints of its edge.
    fn to_endpoints(&self, p: &TreePoint) -> [(usize, f64); 2] {
        let e = &self.edges[p.edge];
        [(e.from, p.offset), (e.to, e.length - p.offset)]
    }

    /// Exit vertex of `p`'s edge, entry vertex of `q`'s edge and total length.
    fn best_route(&self, p: &TreePoint, q: &TreePoint) -> (usize, usize, f64) {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for (a, da) in self.to_endpoints(p) {
            for (b, db) in self.to_endpoints(q) {
                let total = da + self.vertex_dist[a][b] + db;
                if total < best.2 {
                    best = (a, b, total);
                }
            }
        }
        best
    }

    pub fn distance(&self, p: &TreePoint, q: &TreePoint) -> f64 {
        if p.edge == q.edge {
            return (p.offset - q.offset).abs();
        }
        self.best_route(p, q).2
    }

    fn edge_between(&self, u: usize, v: usize) -> usize {
        self.adjacency[u]
            .iter()
            .find(|(w, _)| *w == v)
            .map(|&(_, eid)| eid)
            .expect("adjacent vertices share an edge")
    }

    /// Point at distance `along` from vertex `from` on edge `eid`.
    fn point_from_vertex(&self, eid: usize, from: usize, along: f64) -> TreePoint {
        let e = &self.edges[eid];
        let along = along.clamp(0.0, e.length);
        let offset = if e.from == from { along } else { e.length - along };
        TreePoint { edge: eid, offset }
    }

    /// Point at fraction `t` along the unique geodesic from `p` to `q`.
    pub fn geodesic_point(&self, p: &TreePoint, q: &TreePoint, t: f64) -> TreePoint {
        if t == 0.0 {
            return *p;
        }
        if t == 1.0 {
            return *q;
        }
        if p.edge == q.edge {
            return TreePoint {
                edge: p.edge,
                offset: (1.0 - t) * p.offset + t * q.offset,
            };
        }
        let (exit, entry, total) = self.best_route(p, q);
        let mut remaining = t * total;

        let first_leg = if exit == self.edges[p.edge].from {
            p.offset
        } else {
            self.edges[p.edge].length - p.offset
        };
        if remaining <= first_leg {
            let offset = if exit == self.edges[p.edge].from {
                p.offset - remaining
            } else {
                p.offset + remaining
            };
            return TreePoint {
                edge: p.edge,
                offset: offset.clamp(0.0, self.edges[p.edge].length),
            };
        }
        remaining -= first_leg;

        let mut cur = exit;
        while cur != entry {
            let nxt = self.next_hop[cur][entry];
            let eid = self.edge_between(cur, nxt);
            let len = self.edges[eid].length;
            if remaining <= len {
                return self.point_from_vertex(eid, cur, remaining);
            }
            remaining -= len;
            cur = nxt;
        }
        self.point_from_vertex(q.edge, entry, remaining)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> MetricTree {
        // centre 0 with three legs
        MetricTree::new(vec![
            TreeEdge { from: 0, to: 1, length: 1.0 },
            TreeEdge { from: 0, to: 2, length: 2.0 },
            TreeEdge { from: 3, to: 0, length: 0.5 },
        ])
        .unwrap()
    }

    #[test]
    fn distances_follow_unique_paths() {
        let t = star();
        let p = TreePoint { edge: 0, offset: 0.5 };
        let q = TreePoint { edge: 1, offset: 1.5 };
        assert_eq!(t.distance(&p, &q), 2.0);
        let r = TreePoint { edge: 2, offset: 0.0 }; // vertex 3
        assert_eq!(t.distance(&p, &r), 1.0);
        assert_eq!(t.distance(&p, &p), 0.0);
    }

    #[test]
    fn geodesic_passes_through_centre() {
        let t = star();
        let p = TreePoint { edge: 0, offset: 1.0 }; // vertex 1
        let q = TreePoint { edge: 1, offset: 2.0 }; // vertex 2
        let mid = t.geodesic_point(&p, &q, 0.5);
        // total 3, midpoint 1.5 from vertex 1 lies on edge 1 at offset 0.5
        assert_eq!(mid.edge, 1);
        assert!((mid.offset - 0.5).abs() < 1e-15);
        assert!((t.distance(&p, &mid) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_cycles_and_bad_lengths() {
        assert!(MetricTree::new(vec![
            TreeEdge { from: 0, to: 1, length: 1.0 },
            TreeEdge { from: 1, to: 2, length: 1.0 },
            TreeEdge { from: 2, to: 0, length: 1.0 },
        ])
        .is_err());
        assert!(MetricTree::new(vec![TreeEdge { from: 0, to: 1, length: 0.0 }]).is_err());
        assert!(MetricTree::new(vec![]).is_err());
        // disconnected: 0-1 and 2-3 with a stray vertex count mismatch
        assert!(MetricTree::new(vec![
            TreeEdge { from: 0, to: 1, length: 1.0 },
            TreeEdge { from: 2, to: 3, length: 1.0 },
            TreeEdge { from: 3, to: 2, length: 1.0 },
        ])
        .is_err());
    }
}
