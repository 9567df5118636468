//! Spanning incoming forests and the input-output coefficients they produce.
//!
//! A spanning incoming forest of a host graph keeps every node, gives each
//! node at most one outgoing edge, and has no undirected cycle. Summing the
//! products of edge labels over the forests with a fixed number of edges
//! yields the coefficients of the input-output equations:
//!
//! * `c_k`: forests of the leak-augmented graph with `n - k` edges;
//! * `d_{j,k}` for input `j`, output `i`: forests of the graph stripped at `i`
//!   with `n - k - 1` edges in which `j` and `i` share a component.

use crate::auxgraph::{flip_into_leak, leak_augmented, strip_outgoing, AuxGraph};
use crate::error::AnalysisError;
use crate::model::{CompartmentId, Model, Param};
use crate::poly::{Monomial, Polynomial};

/// A forest, as indices into the host graph's edge list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Forest {
    pub edges: Vec<usize>,
}

impl Forest {
    /// Product of the edge labels (`1` for the empty forest).
    pub fn productivity(&self, host: &AuxGraph) -> Polynomial {
        Polynomial::monomial(Monomial::from_params(self.labels(host)))
    }

    pub fn labels(&self, host: &AuxGraph) -> Vec<Param> {
        self.edges.iter().map(|&e| host.edges()[e].label).collect()
    }
}

/// `F_j(H)`, or `F_j^{k,l}(H)` when `pair` is set.
#[derive(Clone, Debug)]
pub struct ForestQuery<'a> {
    pub host: &'a AuxGraph,
    pub edge_count: usize,
    pub pair: Option<(usize, usize)>,
}

/// Union-find with undo, no path compression.
struct RollbackDsu {
    parent: Vec<usize>,
    size: Vec<usize>,
    history: Vec<(usize, usize)>,
}

impl RollbackDsu {
    fn new(n: usize) -> Self {
        RollbackDsu {
            parent: (0..n).collect(),
            size: vec![1; n],
            history: Vec::new(),
        }
    }

    fn find(&self, mut v: usize) -> usize {
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.history.push((rb, ra));
        true
    }

    fn undo(&mut self) {
        let (child, root) = self.history.pop().expect("nothing to undo");
        self.parent[child] = child;
        self.size[root] -= self.size[child];
    }
}

struct Enumerator<F> {
    /// Host edge indices leaving each node position.
    out: Vec<Vec<usize>>,
    /// Node position of each edge's target.
    target: Vec<usize>,
    pair: Option<(usize, usize)>,
    max_edges: usize,
    dsu: RollbackDsu,
    chosen: Vec<usize>,
    visit: F,
}

impl<F: FnMut(&[usize])> Enumerator<F> {
    fn run(&mut self, pos: usize) {
        if pos == self.out.len() {
            if let Some((k, l)) = self.pair {
                if self.dsu.find(k) != self.dsu.find(l) {
                    return;
                }
            }
            (self.visit)(&self.chosen);
            return;
        }
        self.run(pos + 1);
        if self.chosen.len() == self.max_edges {
            return;
        }
        for idx in 0..self.out[pos].len() {
            let e = self.out[pos][idx];
            if self.dsu.union(pos, self.target[e]) {
                self.chosen.push(e);
                self.run(pos + 1);
                self.chosen.pop();
                self.dsu.undo();
            }
        }
    }
}

/// Calls `visit` with the sorted edge indices of every spanning incoming
/// forest of `host` with at most `max_edges` edges (and, with `pair`, whose
/// two given nodes share a component).
pub fn for_each_forest(
    host: &AuxGraph,
    pair: Option<(usize, usize)>,
    max_edges: usize,
    visit: impl FnMut(&[usize]),
) {
    let nodes = host.nodes();
    let position = |v: usize| nodes.binary_search(&v).expect("node of host");
    let mut out = vec![Vec::new(); nodes.len()];
    let mut target = Vec::with_capacity(host.edges().len());
    for (idx, e) in host.edges().iter().enumerate() {
        out[position(e.from)].push(idx);
        target.push(position(e.to));
    }
    let pair = pair.map(|(k, l)| (position(k), position(l)));
    let mut en = Enumerator {
        out,
        target,
        pair,
        max_edges,
        dsu: RollbackDsu::new(nodes.len()),
        chosen: Vec::new(),
        visit,
    };
    en.run(0);
}

/// Materializes the forests answering `q`, in enumeration order.
pub fn enumerate_forests(q: &ForestQuery<'_>) -> Vec<Forest> {
    let mut found = Vec::new();
    for_each_forest(q.host, q.pair, q.edge_count, |edges| {
        if edges.len() == q.edge_count {
            let mut edges = edges.to_vec();
            edges.sort_unstable();
            found.push(Forest { edges });
        }
    });
    found
}

/// Productivity sums bucketed by edge count: entry `j` is the sum over
/// `F_j(host)` (or `F_j^{k,l}(host)`), for `j = 0..nodes`.
pub fn forest_sums(host: &AuxGraph, pair: Option<(usize, usize)>) -> Vec<Polynomial> {
    let mut sums = vec![Polynomial::zero(); host.nodes().len()];
    for_each_forest(host, pair, usize::MAX, |edges| {
        let labels = edges.iter().map(|&e| host.edges()[e].label).collect();
        sums[edges.len()].add_term(Monomial::from_params(labels), 1.into());
    });
    sums
}

/// `c_0, ..., c_{n-1}` of the left-hand side (`c_n = 1` is implied).
pub fn lhs_coefficients(m: &Model) -> Vec<Polynomial> {
    let n = m.n();
    let sums = forest_sums(&leak_augmented(m), None);
    (0..n).map(|k| sums[n - k].clone()).collect()
}

/// Right-hand side for one input/output pair, with the sign `(-1)^{out+inp}`
/// kept separate from the (positive) forest sums.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhsCoefficients {
    pub sign: i8,
    /// `d_0, ..., d_{n-1}`.
    pub d: Vec<Polynomial>,
}

pub fn pair_sign(out: CompartmentId, inp: CompartmentId) -> i8 {
    if (out + inp) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Forest sums over `F^{inp,out}_{n-k-1}` of the graph stripped at `out`.
/// Does not look at the model's input/output sets.
pub fn rhs_forest_sums(m: &Model, out: CompartmentId, inp: CompartmentId) -> RhsCoefficients {
    let n = m.n();
    let sums = forest_sums(&strip_outgoing(m, out), Some((inp, out)));
    RhsCoefficients {
        sign: pair_sign(out, inp),
        d: (0..n).map(|k| sums[n - k - 1].clone()).collect(),
    }
}

pub fn rhs_coefficients(
    m: &Model,
    out: CompartmentId,
    inp: CompartmentId,
) -> Result<RhsCoefficients, AnalysisError> {
    if !m.outputs().contains(&out) {
        return Err(AnalysisError::NotAnOutput(out));
    }
    if !m.inputs().contains(&inp) {
        return Err(AnalysisError::NotAnInput(inp));
    }
    Ok(rhs_forest_sums(m, out, inp))
}

/// `d_0, ..., d_{n-2}` from the multigraph obtained by flipping the edges into
/// `i` toward the leak node. Requires `In = Out = {i}`.
pub fn rhs_coefficients_multigraph(
    m: &Model,
    i: CompartmentId,
) -> Result<Vec<Polynomial>, AnalysisError> {
    let single = |s: &std::collections::BTreeSet<usize>| s.len() == 1 && s.contains(&i);
    if !single(m.inputs()) || !single(m.outputs()) {
        return Err(AnalysisError::Precondition(format!(
            "inputs and outputs must both be {{{i}}}"
        )));
    }
    Ok(multigraph_sums(m, i))
}

pub(crate) fn multigraph_sums(m: &Model, i: CompartmentId) -> Vec<Polynomial> {
    let n = m.n();
    let sums = forest_sums(&flip_into_leak(m, i), None);
    (0..n.saturating_sub(1))
        .map(|k| sums[n - k - 1].clone())
        .collect()
}

/// The single input and output of a model, if it has exactly one of each.
pub fn single_in_out(m: &Model) -> Option<(CompartmentId, CompartmentId)> {
    match (m.inputs().len(), m.outputs().len()) {
        (1, 1) => Some((
            *m.inputs().iter().next().unwrap(),
            *m.outputs().iter().next().unwrap(),
        )),
        _ => None,
    }
}

/// Closed-form counts of non-constant coefficients on each side for a
/// strongly connected model with one input and one output.
pub fn nonconstant_counts(m: &Model) -> Result<(usize, usize), AnalysisError> {
    let (inp, out) = single_in_out(m).ok_or(AnalysisError::NotSingleInOut)?;
    if !m.is_strongly_connected() {
        return Err(AnalysisError::NotStronglyConnected);
    }
    let n = m.n();
    let lhs = if m.leaks().is_empty() { n - 1 } else { n };
    let rhs = if inp == out {
        n - 1
    } else {
        n - m.distance(inp, out).expect("strongly connected")
    };
    Ok((lhs, rhs))
}
