//! Extracted graphs and the metrics used to evaluate them.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::critical::CriticalKind;
use crate::error::{Error, Result};
use crate::features::ArcClass;
use crate::geom::Vec2;
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexKind {
    /// A traced (or interpolated) point on the curve.
    Regular,
    /// An inserted critical point.
    Critical(CriticalKind),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vertex {
    pub position: Vec2,
    /// Value of the traced field at `position`.
    pub value: f64,
    pub kind: VertexKind,
}

/// Undirected graph without self-edges or duplicate edges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TopoGraph {
    vertices: Vec<Vertex>,
    edges: Vec<[usize; 2]>,
    edge_set: BTreeSet<[usize; 2]>,
    labels: Option<Vec<ArcClass>>,
}

/// Maximal chain of vertices carrying one classification.
#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    pub vertices: Vec<usize>,
    pub label: ArcClass,
}

impl TopoGraph {
    pub fn new() -> Self {
        TopoGraph::default()
    }

    /// Builds a graph, rejecting invalid indices, self-edges and duplicates.
    pub fn from_parts(vertices: Vec<Vertex>, edges: Vec<[usize; 2]>, labels: Option<Vec<ArcClass>>) -> Result<Self> {
        let mut g = TopoGraph { vertices, ..TopoGraph::default() };
        for (k, &[a, b]) in edges.iter().enumerate() {
            if a >= g.vertices.len() || b >= g.vertices.len() {
                return Err(Error::Dimension(format!("edge {k} references a missing vertex")));
            }
            if a == b {
                return Err(Error::Dimension(format!("edge {k} is a self-edge")));
            }
            if !g.add_edge(a, b) {
                return Err(Error::Dimension(format!("edge {k} is a duplicate")));
            }
        }
        if let Some(l) = &labels {
            if l.len() != g.vertices.len() {
                return Err(Error::Dimension("one label per vertex is required".into()));
            }
        }
        g.labels = labels;
        Ok(g)
    }

    pub fn add_vertex(&mut self, v: Vertex) -> usize {
        self.vertices.push(v);
        if let Some(l) = &mut self.labels {
            l.push(ArcClass::Unclassified);
        }
        self.vertices.len() - 1
    }

    /// Adds an undirected edge; returns `false` (and adds nothing) for
    /// self-edges and duplicates.
    pub fn add_edge(&mut self, a: usize, b: usize) -> bool {
        assert!(a < self.vertices.len() && b < self.vertices.len(), "edge endpoint out of range");
        if a == b {
            return false;
        }
        let key = [a.min(b), a.max(b)];
        if !self.edge_set.insert(key) {
            return false;
        }
        self.edges.push([a, b]);
        true
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[ArcClass]> {
        self.labels.as_deref()
    }

    pub fn set_labels(&mut self, labels: Vec<ArcClass>) {
        assert_eq!(labels.len(), self.vertices.len());
        self.labels = Some(labels);
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn valence(&self) -> Vec<usize> {
        let mut v = vec![0; self.vertices.len()];
        for &[a, b] in &self.edges {
            v[a] += 1;
            v[b] += 1;
        }
        v
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &[a, b] in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Chains of regular valence-2 vertices between nodes. Nodes are
    /// vertices of valence other than two, critical points, and vertices
    /// where the per-vertex label changes. Unlabelled graphs yield
    /// `Unclassified` arcs.
    pub fn arcs(&self) -> Vec<Arc> {
        let n = self.vertices.len();
        let adj = self.adjacency();
        let label = |v: usize| self.labels.as_ref().map_or(ArcClass::Unclassified, |l| l[v]);
        let is_node = |v: usize| {
            adj[v].len() != 2
                || self.vertices[v].kind != VertexKind::Regular
                || adj[v]
                    .iter()
                    .any(|&w| v < w && self.vertices[w].kind == VertexKind::Regular && label(w) != label(v))
        };
        let node: Vec<bool> = (0..n).map(is_node).collect();
        let mut used: BTreeSet<[usize; 2]> = BTreeSet::new();
        let mut arcs = Vec::new();
        let walk = |start: usize, next: usize, used: &mut BTreeSet<[usize; 2]>| {
            let mut path = vec![start];
            let (mut prev, mut cur) = (start, next);
            loop {
                used.insert([prev.min(cur), prev.max(cur)]);
                path.push(cur);
                if node[cur] || cur == start {
                    break;
                }
                let nxt = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
                prev = cur;
                cur = nxt;
            }
            path
        };
        for v in 0..n {
            if !node[v] {
                continue;
            }
            for &w in &adj[v] {
                if !used.contains(&[v.min(w), v.max(w)]) {
                    arcs.push(walk(v, w, &mut used));
                }
            }
        }
        // remaining pure cycles
        for v in 0..n {
            for &w in &adj[v] {
                if !used.contains(&[v.min(w), v.max(w)]) {
                    arcs.push(walk(v, w, &mut used));
                }
            }
        }
        arcs.into_iter()
            .map(|vertices| {
                let mut counts = [0usize; 5];
                for &v in &vertices {
                    if self.vertices[v].kind == VertexKind::Regular {
                        counts[label(v) as usize] += 1;
                    }
                }
                let best = (0..5).max_by_key(|&k| (counts[k], core::cmp::Reverse(k))).unwrap();
                Arc { vertices, label: ArcClass::from_index(best) }
            })
            .collect()
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n], sets: n }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `true` if `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.sets -= 1;
        true
    }

    pub fn sets(&self) -> usize {
        self.sets
    }
}

/// Number of connected components.
pub fn components(g: &TopoGraph) -> usize {
    let mut uf = UnionFind::new(g.n_vertices());
    for &[a, b] in g.edges() {
        uf.union(a, b);
    }
    uf.sets()
}

/// Cycle rank `E - V + CC`.
pub fn loops(g: &TopoGraph) -> usize {
    g.n_edges() + components(g) - g.n_vertices()
}

/// Maximum and mean of `|field(v) - level|` over all vertices; `(0, 0)` for
/// an empty graph.
pub fn residuals(g: &TopoGraph, field: impl Fn(Vec2) -> f64, level: f64) -> (f64, f64) {
    if g.n_vertices() == 0 {
        return (0.0, 0.0);
    }
    let mut max = 0.0f64;
    let mut sum = 0.0;
    for v in g.vertices() {
        let e = math::abs(field(v.position) - level);
        max = max.max(e);
        sum += e;
    }
    (max, sum / g.n_vertices() as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub e_max: f64,
    pub e_avg: f64,
    pub n_loop: usize,
    pub n_cc: usize,
    pub n_vertices: usize,
    pub n_edges: usize,
    /// Wall-clock seconds of the extraction phase, filled in by the caller.
    pub wall_time: f64,
}

impl MetricsReport {
    pub fn compute(g: &TopoGraph, field: impl Fn(Vec2) -> f64, level: f64) -> Self {
        let (e_max, e_avg) = residuals(g, field, level);
        let n_cc = components(g);
        MetricsReport {
            e_max,
            e_avg,
            n_loop: g.n_edges() + n_cc - g.n_vertices(),
            n_cc,
            n_vertices: g.n_vertices(),
            n_edges: g.n_edges(),
            wall_time: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64) -> Vertex {
        Vertex { position: Vec2::new(x, y), value: 0.0, kind: VertexKind::Regular }
    }

    fn graph(n: usize, edges: &[[usize; 2]]) -> TopoGraph {
        TopoGraph::from_parts((0..n).map(|i| v(i as f64, 0.0)).collect(), edges.to_vec(), None).unwrap()
    }

    #[test]
    fn basic_counts() {
        assert_eq!(components(&TopoGraph::new()), 0);
        let cycle = graph(4, &[[0, 1], [1, 2], [2, 3], [3, 0]]);
        assert_eq!((components(&cycle), loops(&cycle)), (1, 1));
        let path = graph(4, &[[0, 1], [1, 2], [2, 3]]);
        assert_eq!(loops(&path), 0);
        let bowtie = graph(5, &[[0, 1], [1, 2], [2, 0], [0, 3], [3, 4], [4, 0]]);
        assert_eq!((components(&bowtie), loops(&bowtie)), (1, 2));
    }

    #[test]
    fn rejects_invalid_edges() {
        let vs = || (0..3).map(|i| v(i as f64, 0.0)).collect::<Vec<_>>();
        assert!(TopoGraph::from_parts(vs(), vec![[0, 0]], None).is_err());
        assert!(TopoGraph::from_parts(vs(), vec![[0, 1], [1, 0]], None).is_err());
        assert!(TopoGraph::from_parts(vs(), vec![[0, 5]], None).is_err());
    }

    #[test]
    fn residual_examples() {
        let mut g = TopoGraph::new();
        g.add_vertex(v(0.0, 0.0));
        let (m, a) = residuals(&g, |_| 0.5, 0.33);
        assert!((m - 0.17).abs() < 1e-15 && (a - 0.17).abs() < 1e-15);
        assert_eq!(residuals(&g, |_| 0.33, 0.33), (0.0, 0.0));
    }

    #[test]
    fn arcs_split_at_label_changes() {
        use ArcClass::*;
        let mut g = graph(6, &[[0, 1], [1, 2], [2, 3], [3, 4], [4, 5]]);
        g.set_labels(vec![Ridge, Ridge, Ridge, Valley, Valley, Valley]);
        let arcs = g.arcs();
        assert_eq!(arcs.len(), 2);
        assert!(arcs.iter().any(|a| a.label == Ridge));
        assert!(arcs.iter().any(|a| a.label == Valley));
        let cycle = graph(4, &[[0, 1], [1, 2], [2, 3], [3, 0]]);
        assert_eq!(cycle.arcs().len(), 1);
    }

    proptest! {
        #[test]
        fn euler_identity(n in 1usize..40, raw in proptest::collection::vec((0usize..40, 0usize..40), 0..80), perm_seed in 0u64..1000) {
            let mut g = TopoGraph::new();
            for i in 0..n {
                g.add_vertex(v(i as f64, 0.0));
            }
            for (a, b) in raw {
                g.add_edge(a % n, b % n);
            }
            let cc = components(&g);
            prop_assert_eq!(loops(&g) + g.n_vertices(), g.n_edges() + cc);
            // relabelling vertices leaves the metrics unchanged
            let mut perm: Vec<usize> = (0..n).collect();
            let mut s = perm_seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let edges: Vec<[usize; 2]> = g.edges().iter().map(|&[a, b]| [perm[a], perm[b]]).collect();
            let h = TopoGraph::from_parts(g.vertices().to_vec(), edges, None).unwrap();
            prop_assert_eq!(components(&h), cc);
            prop_assert_eq!(loops(&h), loops(&g));
        }
    }
}
