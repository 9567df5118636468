//! Linear compartmental models and the graph predicates used by the analyses.
//!
//! Compartments are numbered `1..=n`. Index `0` is reserved for the leak node
//! of the auxiliary graphs and never appears in a [`Model`].
//!
//! **Edge orientation.** An edge is stored as `(from, to)`. The edge `j -> i`
//! carries the rate parameter `a_ij`: the *first* subscript is the target.
//! So `{"from": 2, "to": 1}` in a model file is the parameter `a12`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based compartment index.
pub type CompartmentId = usize;

/// A rate parameter of a model.
///
/// The derived order puts every leak before every edge, and orders edges by
/// `(to, from)`. This coincides with lexicographic order of the printed names
/// (`a02 < a12 < a13 < a21`) and is the order used inside monomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    /// `a_0i`: outflow from compartment `at` to the environment.
    Leak { at: CompartmentId },
    /// `a_ij`: flow along the edge `from -> to`.
    Edge { to: CompartmentId, from: CompartmentId },
}

impl Param {
    pub fn edge(from: CompartmentId, to: CompartmentId) -> Self {
        Param::Edge { to, from }
    }

    pub fn leak(at: CompartmentId) -> Self {
        Param::Leak { at }
    }

    /// Source compartment (the node the flow leaves).
    pub fn source(&self) -> CompartmentId {
        match *self {
            Param::Leak { at } => at,
            Param::Edge { from, .. } => from,
        }
    }

    /// Target node, with `0` for leaks.
    pub fn target(&self) -> usize {
        match *self {
            Param::Leak { .. } => 0,
            Param::Edge { to, .. } => to,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (i, j) = (self.target(), self.source());
        if i < 10 && j < 10 {
            write!(f, "a{i}{j}")
        } else {
            write!(f, "a{i}_{j}")
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid model JSON at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: self-edge {node} -> {node}")]
    SelfEdge { path: String, node: usize },
    #[error("{path}: duplicate edge {from} -> {to}")]
    DuplicateEdge { path: String, from: usize, to: usize },
    #[error("{path}: compartment {index} out of range 1..={n}")]
    OutOfRange { path: String, index: usize, n: usize },
    #[error("{path}: duplicate compartment {index}")]
    DuplicateEntry { path: String, index: usize },
    #[error("out: outputs empty")]
    EmptyOutputs,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
struct EdgeJson {
    from: usize,
    to: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    compartments: usize,
    edges: Vec<EdgeJson>,
    #[serde(rename = "in")]
    inputs: Vec<usize>,
    #[serde(rename = "out")]
    outputs: Vec<usize>,
    #[serde(rename = "leak")]
    leaks: Vec<usize>,
}

/// A validated model `(G, In, Out, Leak)`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Model {
    n: usize,
    edges: BTreeSet<(CompartmentId, CompartmentId)>,
    inputs: BTreeSet<CompartmentId>,
    outputs: BTreeSet<CompartmentId>,
    leaks: BTreeSet<CompartmentId>,
}

impl Serialize for Model {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

fn check_set(
    field: &str,
    values: &[usize],
    n: usize,
) -> Result<BTreeSet<CompartmentId>, ModelError> {
    let mut set = BTreeSet::new();
    for (k, &v) in values.iter().enumerate() {
        let path = format!("{field}[{k}]");
        if v == 0 || v > n {
            return Err(ModelError::OutOfRange { path, index: v, n });
        }
        if !set.insert(v) {
            return Err(ModelError::DuplicateEntry { path, index: v });
        }
    }
    Ok(set)
}

impl Model {
    /// Builds and validates a model. `edges` are `(from, to)` pairs.
    pub fn new(
        n: usize,
        edges: &[(CompartmentId, CompartmentId)],
        inputs: &[CompartmentId],
        outputs: &[CompartmentId],
        leaks: &[CompartmentId],
    ) -> Result<Self, ModelError> {
        let mut edge_set = BTreeSet::new();
        for (k, &(from, to)) in edges.iter().enumerate() {
            for (end, v) in [("from", from), ("to", to)] {
                if v == 0 || v > n {
                    return Err(ModelError::OutOfRange {
                        path: format!("edges[{k}].{end}"),
                        index: v,
                        n,
                    });
                }
            }
            let path = format!("edges[{k}]");
            if from == to {
                return Err(ModelError::SelfEdge { path, node: from });
            }
            if !edge_set.insert((from, to)) {
                return Err(ModelError::DuplicateEdge { path, from, to });
            }
        }
        let inputs = check_set("in", inputs, n)?;
        let outputs = check_set("out", outputs, n)?;
        let leaks = check_set("leak", leaks, n)?;
        if outputs.is_empty() {
            return Err(ModelError::EmptyOutputs);
        }
        Ok(Model {
            n,
            edges: edge_set,
            inputs,
            outputs,
            leaks,
        })
    }

    /// Parses the canonical JSON model format.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: ModelJson = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ModelError::Schema {
                path,
                message: e.into_inner().to_string(),
            }
        })?;
        let edges: Vec<_> = raw.edges.iter().map(|e| (e.from, e.to)).collect();
        Model::new(
            raw.compartments,
            &edges,
            &raw.inputs,
            &raw.outputs,
            &raw.leaks,
        )
    }

    fn to_raw(&self) -> ModelJson {
        ModelJson {
            compartments: self.n,
            edges: self
                .edges
                .iter()
                .map(|&(from, to)| EdgeJson { from, to })
                .collect(),
            inputs: self.inputs.iter().copied().collect(),
            outputs: self.outputs.iter().copied().collect(),
            leaks: self.leaks.iter().copied().collect(),
        }
    }

    /// Compact canonical JSON (edges sorted by `(from, to)`).
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("model serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_raw()).expect("model serializes")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(from, to)` pairs in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (CompartmentId, CompartmentId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: CompartmentId, to: CompartmentId) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn inputs(&self) -> &BTreeSet<CompartmentId> {
        &self.inputs
    }

    pub fn outputs(&self) -> &BTreeSet<CompartmentId> {
        &self.outputs
    }

    pub fn leaks(&self) -> &BTreeSet<CompartmentId> {
        &self.leaks
    }

    /// Targets of edges leaving `i`.
    pub fn successors(&self, i: CompartmentId) -> impl Iterator<Item = CompartmentId> + '_ {
        self.edges
            .range((i, 0)..(i + 1, 0))
            .map(|&(_, to)| to)
    }

    /// `|E_G| + |Leak|`.
    pub fn param_count(&self) -> usize {
        self.edges.len() + self.leaks.len()
    }

    /// All parameters: edge parameters sorted by `(to, from)`, then leak
    /// parameters sorted by compartment. This is the column order of every
    /// Jacobian built from the model.
    pub fn param_vector(&self) -> Vec<Param> {
        let mut edges: Vec<Param> = self
            .edges
            .iter()
            .map(|&(from, to)| Param::edge(from, to))
            .collect();
        edges.sort();
        edges.extend(self.leaks.iter().map(|&i| Param::leak(i)));
        edges
    }

    /// Copy of the model with different input/output/leak sets.
    pub fn with_sets(
        &self,
        inputs: &[CompartmentId],
        outputs: &[CompartmentId],
        leaks: &[CompartmentId],
    ) -> Result<Self, ModelError> {
        let edges: Vec<_> = self.edges().collect();
        Model::new(self.n, &edges, inputs, outputs, leaks)
    }

    /// Adds compartment `n + 1` joined to `at` by the edge pair `at <-> n + 1`.
    /// Input, output and leak sets are unchanged.
    pub fn with_leaf_edge(&self, at: CompartmentId) -> Result<Self, ModelError> {
        let leaf = self.n + 1;
        let mut edges: Vec<_> = self.edges().collect();
        edges.extend([(at, leaf), (leaf, at)]);
        let v = |s: &BTreeSet<usize>| s.iter().copied().collect::<Vec<_>>();
        if at == 0 || at > self.n {
            return Err(ModelError::OutOfRange {
                path: "at".into(),
                index: at,
                n: self.n,
            });
        }
        Model::new(leaf, &edges, &v(&self.inputs), &v(&self.outputs), &v(&self.leaks))
    }

    /// Breadth-first distances from `a` to every compartment (index 0 unused).
    fn bfs(&self, a: CompartmentId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n + 1];
        dist[a] = Some(0);
        let mut queue = VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for w in self.successors(v) {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Length of a shortest directed path `a -> b`; `None` if unreachable.
    pub fn distance(&self, a: CompartmentId, b: CompartmentId) -> Option<usize> {
        assert!((1..=self.n).contains(&a) && (1..=self.n).contains(&b));
        self.bfs(a)[b]
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.induced_strongly_connected(&(1..=self.n).collect::<Vec<_>>())
    }

    /// Whether the subgraph induced by `nodes` is strongly connected.
    pub fn induced_strongly_connected(&self, nodes: &[CompartmentId]) -> bool {
        let Some(&root) = nodes.first() else {
            return true;
        };
        let inside: BTreeSet<_> = nodes.iter().copied().collect();
        let reach = |forward: bool| {
            let mut seen = BTreeSet::from([root]);
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                for &(from, to) in &self.edges {
                    let (s, t) = if forward { (from, to) } else { (to, from) };
                    if s == v && inside.contains(&t) && seen.insert(t) {
                        stack.push(t);
                    }
                }
            }
            seen.len() == inside.len()
        };
        reach(true) && reach(false)
    }

    /// Searches for an ordering `root = v1, v2, ..., vn` whose every prefix
    /// induces a strongly connected subgraph. Returns the witness ordering.
    pub fn inductive_order(&self, root: CompartmentId) -> Option<Vec<CompartmentId>> {
        assert!((1..=self.n).contains(&root));
        let mut order = vec![root];
        let mut dead: BTreeSet<Vec<CompartmentId>> = BTreeSet::new();
        if self.extend_order(&mut order, &mut dead) {
            Some(order)
        } else {
            None
        }
    }

    fn extend_order(
        &self,
        order: &mut Vec<CompartmentId>,
        dead: &mut BTreeSet<Vec<CompartmentId>>,
    ) -> bool {
        if order.len() == self.n {
            return true;
        }
        let mut key = order.clone();
        key.sort_unstable();
        if dead.contains(&key) {
            return false;
        }
        for v in 1..=self.n {
            if order.contains(&v) {
                continue;
            }
            order.push(v);
            if self.induced_strongly_connected(order) && self.extend_order(order, dead) {
                return true;
            }
            order.pop();
        }
        dead.insert(key);
        false
    }

    pub fn is_inductively_strongly_connected(&self, root: CompartmentId) -> bool {
        self.inductive_order(root).is_some()
    }

    /// True when the graph is an undirected tree with every edge doubled.
    pub fn is_bidirectional_tree(&self) -> bool {
        if self.edges.iter().any(|&(a, b)| !self.has_edge(b, a)) {
            return false;
        }
        self.edges.len() == 2 * (self.n - 1) && self.is_strongly_connected()
    }
}
