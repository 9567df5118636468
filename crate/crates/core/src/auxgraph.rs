//! Auxiliary graphs built from a model and its symbolic compartmental matrices.
//!
//! * `leak_augmented`: `G` plus the leak node `0` and an edge `j -> 0`
//!   labeled `a0j` for every leak `j`.
//! * `strip_outgoing(i)`: the leak-augmented graph with every edge leaving
//!   `i` removed.
//! * `flip_into_leak(i)`: the stripped graph with every edge `j -> i`
//!   redirected to `j -> 0` (keeping its label) and node `i` deleted. This is
//!   the only construction that can produce parallel edges.

use std::fmt::Write as _;

use crate::model::{CompartmentId, Model, Param};
use crate::poly::Polynomial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AuxEdge {
    pub from: usize,
    pub to: usize,
    pub label: Param,
}

/// A labeled directed (multi)graph on a subset of `{0, 1, ..., n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuxGraph {
    nodes: Vec<usize>,
    edges: Vec<AuxEdge>,
    allows_multi_edges: bool,
}

impl AuxGraph {
    pub fn new(mut nodes: Vec<usize>, mut edges: Vec<AuxEdge>, allows_multi_edges: bool) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        edges.sort();
        debug_assert!(edges.iter().all(|e| e.from != 0), "leak node has out-edges");
        debug_assert!(edges
            .iter()
            .all(|e| nodes.binary_search(&e.from).is_ok() && nodes.binary_search(&e.to).is_ok()));
        if !allows_multi_edges {
            debug_assert!(edges.windows(2).all(|w| (w[0].from, w[0].to) != (w[1].from, w[1].to)));
        }
        AuxGraph {
            nodes,
            edges,
            allows_multi_edges,
        }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn edges(&self) -> &[AuxEdge] {
        &self.edges
    }

    pub fn allows_multi_edges(&self) -> bool {
        self.allows_multi_edges
    }

    pub fn has_node(&self, v: usize) -> bool {
        self.nodes.binary_search(&v).is_ok()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.from == v).count()
    }

    /// Edge labels, sorted.
    pub fn labels(&self) -> Vec<Param> {
        let mut l: Vec<Param> = self.edges.iter().map(|e| e.label).collect();
        l.sort_unstable();
        l
    }

    /// Copy without the edges leaving `v`.
    pub fn without_out_edges(&self, v: usize) -> AuxGraph {
        AuxGraph {
            nodes: self.nodes.clone(),
            edges: self.edges.iter().copied().filter(|e| e.from != v).collect(),
            allows_multi_edges: self.allows_multi_edges,
        }
    }

    /// Graphviz rendering, labels are parameter names.
    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("digraph {name} {{\n");
        for v in &self.nodes {
            let _ = writeln!(s, "  {v};");
        }
        for e in &self.edges {
            let _ = writeln!(s, "  {} -> {} [label=\"{}\"];", e.from, e.to, e.label);
        }
        s.push_str("}\n");
        s
    }
}

pub fn leak_augmented(m: &Model) -> AuxGraph {
    let mut edges: Vec<AuxEdge> = m
        .edges()
        .map(|(from, to)| AuxEdge {
            from,
            to,
            label: Param::edge(from, to),
        })
        .collect();
    edges.extend(m.leaks().iter().map(|&j| AuxEdge {
        from: j,
        to: 0,
        label: Param::leak(j),
    }));
    AuxGraph::new((0..=m.n()).collect(), edges, false)
}

pub fn strip_outgoing(m: &Model, i: CompartmentId) -> AuxGraph {
    assert!((1..=m.n()).contains(&i));
    leak_augmented(m).without_out_edges(i)
}

pub fn flip_into_leak(m: &Model, i: CompartmentId) -> AuxGraph {
    let stripped = strip_outgoing(m, i);
    let nodes = stripped.nodes.iter().copied().filter(|&v| v != i).collect();
    let edges = stripped
        .edges
        .iter()
        .map(|e| AuxEdge {
            to: if e.to == i { 0 } else { e.to },
            ..*e
        })
        .collect();
    AuxGraph::new(nodes, edges, true)
}

/// Square matrix of polynomials, indexed `1..=n` on both axes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymMatrix {
    n: usize,
    entries: Vec<Polynomial>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            entries: vec![Polynomial::zero(); n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> &Polynomial {
        &self.entries[(row - 1) * self.n + (col - 1)]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Polynomial) {
        self.entries[(row - 1) * self.n + (col - 1)] = v;
    }

    pub fn column_sum(&self, col: usize) -> Polynomial {
        (1..=self.n).fold(Polynomial::zero(), |acc, r| &acc + self.get(r, col))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Polynomial::is_zero)
    }
}

/// The compartmental matrix `A`: `a_ij` at `(i, j)` for each edge `j -> i`,
/// and `-(a_0i + Σ_{i->k} a_ki)` on the diagonal.
pub fn compartmental_matrix(m: &Model) -> SymMatrix {
    let mut a = SymMatrix::zeros(m.n());
    for (from, to) in m.edges() {
        let x = Polynomial::var(Param::edge(from, to));
        a.set(to, from, x.clone());
        let d = a.get(from, from) - &x;
        a.set(from, from, d);
    }
    for &i in m.leaks() {
        let d = a.get(i, i) - &Polynomial::var(Param::leak(i));
        a.set(i, i, d);
    }
    a
}

/// `A` with column `i` replaced by zeros.
pub fn star_matrix(m: &Model, i: CompartmentId) -> SymMatrix {
    let mut a = compartmental_matrix(m);
    for r in 1..=m.n() {
        a.set(r, i, Polynomial::zero());
    }
    a
}
