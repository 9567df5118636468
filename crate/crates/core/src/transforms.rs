//! Model rewrites with known effects on identifiability and expected dimension.
//!
//! A rewrite always runs; a guarantee is attached only when the input model
//! satisfies the hypotheses under which the guarantee is known to hold.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::forest::{lhs_coefficients, rhs_forest_sums};
use crate::ident::{coefficient_map, generic_rank, RankOptions};
use crate::model::{CompartmentId, Model, ModelError, Param};
use crate::poly::Polynomial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    AddLeafEdge { at: CompartmentId },
    AddLeafMoveOutput { at: CompartmentId },
    AddLeafMoveInput { at: CompartmentId },
    AddLeak { at: CompartmentId },
    RemoveLeak { at: CompartmentId },
}

impl Transform {
    pub fn at(self) -> CompartmentId {
        match self {
            Transform::AddLeafEdge { at }
            | Transform::AddLeafMoveOutput { at }
            | Transform::AddLeafMoveInput { at }
            | Transform::AddLeak { at }
            | Transform::RemoveLeak { at } => at,
        }
    }

    /// Parses the CLI spelling, e.g. `add-leaf-move-output`.
    pub fn from_op(op: &str, at: CompartmentId) -> Option<Transform> {
        Some(match op {
            "add-leaf-edge" => Transform::AddLeafEdge { at },
            "add-leaf-move-output" => Transform::AddLeafMoveOutput { at },
            "add-leaf-move-input" => Transform::AddLeafMoveInput { at },
            "add-leak" => Transform::AddLeak { at },
            "remove-leak" => Transform::RemoveLeak { at },
            _ => return None,
        })
    }

    pub const OPS: [&'static str; 5] = [
        "add-leaf-edge",
        "add-leaf-move-output",
        "add-leaf-move-input",
        "add-leak",
        "remove-leak",
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    None,
    PreservesIdentifiability,
    PreservesExpectedDimension,
    Both,
    /// Input and output agree on both identifiability and expected dimension.
    Iff,
}

impl Guarantee {
    pub fn preserves_identifiability(self) -> bool {
        matches!(
            self,
            Guarantee::PreservesIdentifiability | Guarantee::Both | Guarantee::Iff
        )
    }

    pub fn preserves_expected_dimension(self) -> bool {
        matches!(
            self,
            Guarantee::PreservesExpectedDimension | Guarantee::Both | Guarantee::Iff
        )
    }
}

impl fmt::Display for Guarantee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Guarantee::None => "none",
            Guarantee::PreservesIdentifiability => "preserves_identifiability",
            Guarantee::PreservesExpectedDimension => "preserves_expected_dimension",
            Guarantee::Both => "both",
            Guarantee::Iff => "iff",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransformResult {
    pub model: Model,
    pub guarantee: Guarantee,
    /// Names the result the guarantee rests on; empty without a guarantee.
    pub theorem_tag: String,
    /// How compartments map onto the labels the guarantee is stated for.
    pub relabeling: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("compartment {0} has no leak")]
    NoSuchLeak(CompartmentId),
    #[error("compartment {0} already has a leak")]
    LeakExists(CompartmentId),
    #[error("{0} does not add a leaf edge")]
    NotALeafTransform(&'static str),
    #[error("hypotheses not met: {0}")]
    Hypotheses(String),
    #[error("relation failed: {0}")]
    RelationFailed(String),
}

fn ids(s: &BTreeSet<CompartmentId>) -> Vec<CompartmentId> {
    s.iter().copied().collect()
}

fn single_is(s: &BTreeSet<CompartmentId>, i: CompartmentId) -> bool {
    s.len() == 1 && s.contains(&i)
}

/// Strongly connected, `In = Out = {at}`, no leaks, and at least two
/// compartments before the leaf is added.
fn move_hypotheses(m: &Model, at: CompartmentId) -> bool {
    m.n() >= 2
        && m.leaks().is_empty()
        && single_is(m.inputs(), at)
        && single_is(m.outputs(), at)
        && m.is_strongly_connected()
}

fn done(model: Model, guarantee: Guarantee, tag: &str, relabeling: Option<String>) -> TransformResult {
    let attached = guarantee != Guarantee::None;
    TransformResult {
        model,
        guarantee,
        theorem_tag: if attached { tag.to_string() } else { String::new() },
        relabeling: relabeling.filter(|_| attached),
    }
}

/// New compartment `n + 1` joined to `at` in both directions.
pub fn add_leaf_edge(m: &Model, at: CompartmentId) -> Result<TransformResult, TransformError> {
    let out = m.with_leaf_edge(at)?;
    let ok = m.n() >= 2
        && m.inputs().len() == 1
        && m.outputs().len() == 1
        && m.leaks().is_empty()
        && m.is_strongly_connected();
    let relabel = (at != m.n()).then(|| format!("compartments {at} and {} swap roles", m.n()));
    let g = if ok { Guarantee::Both } else { Guarantee::None };
    Ok(done(out, g, "add-leaf-edge", relabel))
}

fn relabel_one(at: CompartmentId) -> Option<String> {
    (at != 1).then(|| format!("compartments {at} and 1 swap roles"))
}

/// Leaf edge at `at`, with the output moved to the new compartment.
pub fn add_leaf_move_output(m: &Model, at: CompartmentId) -> Result<TransformResult, TransformError> {
    let leafed = m.with_leaf_edge(at)?;
    let out = leafed.with_sets(&ids(m.inputs()), &[leafed.n()], &ids(m.leaks()))?;
    let g = if move_hypotheses(m, at) { Guarantee::Iff } else { Guarantee::None };
    Ok(done(out, g, "add-leaf-move-output", relabel_one(at)))
}

/// Leaf edge at `at`, with the input moved to the new compartment.
pub fn add_leaf_move_input(m: &Model, at: CompartmentId) -> Result<TransformResult, TransformError> {
    let leafed = m.with_leaf_edge(at)?;
    let out = leafed.with_sets(&[leafed.n()], &ids(m.outputs()), &ids(m.leaks()))?;
    let g = if move_hypotheses(m, at) { Guarantee::Iff } else { Guarantee::None };
    Ok(done(out, g, "add-leaf-move-input", relabel_one(at)))
}

pub fn add_leak(m: &Model, at: CompartmentId) -> Result<TransformResult, TransformError> {
    if m.leaks().contains(&at) {
        return Err(TransformError::LeakExists(at));
    }
    let mut leaks = ids(m.leaks());
    leaks.push(at);
    let out = m.with_sets(&ids(m.inputs()), &ids(m.outputs()), &leaks)?;
    let ok = m.leaks().is_empty() && !m.inputs().is_empty() && m.is_strongly_connected();
    let g = if ok { Guarantee::PreservesIdentifiability } else { Guarantee::None };
    Ok(done(out, g, "add-leak", None))
}

pub fn remove_leak(m: &Model, at: CompartmentId) -> Result<TransformResult, TransformError> {
    if at == 0 || at > m.n() {
        return Err(ModelError::OutOfRange {
            path: "at".into(),
            index: at,
            n: m.n(),
        }
        .into());
    }
    if !m.leaks().contains(&at) {
        return Err(TransformError::NoSuchLeak(at));
    }
    let leaks: Vec<_> = m.leaks().iter().copied().filter(|&l| l != at).collect();
    let out = m.with_sets(&ids(m.inputs()), &ids(m.outputs()), &leaks)?;
    let ok = single_is(m.inputs(), at)
        && single_is(m.outputs(), at)
        && single_is(m.leaks(), at)
        && m.is_strongly_connected();
    let g = if ok { Guarantee::PreservesIdentifiability } else { Guarantee::None };
    Ok(done(out, g, "remove-leak", None))
}

pub fn apply(m: &Model, t: Transform) -> Result<TransformResult, TransformError> {
    match t {
        Transform::AddLeafEdge { at } => add_leaf_edge(m, at),
        Transform::AddLeafMoveOutput { at } => add_leaf_move_output(m, at),
        Transform::AddLeafMoveInput { at } => add_leaf_move_input(m, at),
        Transform::AddLeak { at } => add_leak(m, at),
        Transform::RemoveLeak { at } => remove_leak(m, at),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankRelationReport {
    pub rank_before: usize,
    pub rank_after: usize,
    /// Number of coefficient identities checked symbolically.
    pub relations_checked: usize,
}

/// Checks, for a move-input or move-output leaf transform, the symbolic
/// relations between the coefficients before and after, and that the
/// generic Jacobian rank grows by exactly two.
pub fn verify_rank_relation(
    m: &Model,
    t: Transform,
    opts: &RankOptions,
) -> Result<RankRelationReport, TransformError> {
    let at = t.at();
    let moved_output = match t {
        Transform::AddLeafMoveOutput { .. } => true,
        Transform::AddLeafMoveInput { .. } => false,
        Transform::AddLeafEdge { .. } => return Err(TransformError::NotALeafTransform("add-leaf-edge")),
        Transform::AddLeak { .. } => return Err(TransformError::NotALeafTransform("add-leak")),
        Transform::RemoveLeak { .. } => return Err(TransformError::NotALeafTransform("remove-leak")),
    };
    if !move_hypotheses(m, at) {
        return Err(TransformError::Hypotheses(
            "expected a strongly connected leakless model with a single input and output in one compartment"
                .into(),
        ));
    }
    let after = apply(m, t)?.model;
    let n = after.n();
    let leaf = n;
    let a_out = Polynomial::var(Param::edge(at, leaf));
    let a_in = Polynomial::var(Param::edge(leaf, at));

    // Before: c_0..c_{n-2} with c_{n-1} = 1, d_0..d_{n-3} with d_{n-2} = 1.
    let c = lhs_coefficients(m);
    let d = rhs_forest_sums(m, at, at);
    let c_at = |k: usize| if k == n - 1 { Polynomial::one() } else { c[k].clone() };
    let d_raw = |k: usize| &Polynomial::constant(d.sign as i64) * &d.d[k];

    let c_star = lhs_coefficients(&after);
    let (out_star, in_star) = if moved_output { (leaf, at) } else { (at, leaf) };
    let d_star = rhs_forest_sums(&after, out_star, in_star);
    let d_star_raw = |k: usize| &Polynomial::constant(d_star.sign as i64) * &d_star.d[k];

    let sign = Polynomial::constant(if (at + n) % 2 == 0 { 1 } else { -1 });
    let scale = if moved_output { &a_out } else { &a_in };
    let fail = |what: String| Err(TransformError::RelationFailed(what));
    let mut checked = 0;
    for k in 0..n - 1 {
        let want = &(&sign * scale) * &d_raw(k);
        if d_star_raw(k) != want {
            return fail(format!("d*_{k} = {} but expected {want}", d_star_raw(k)));
        }
        checked += 1;
    }
    for k in 1..n {
        let want = &(&c_at(k - 1) + &(&a_in * &c_at(k))) + &(&a_out * &d_raw(k - 1));
        if c_star[k] != want {
            return fail(format!("c*_{k} = {} but expected {want}", c_star[k]));
        }
        checked += 1;
    }
    if !c_star[0].is_zero() || !c[0].is_zero() {
        return fail("c*_0 and c_0 must vanish".into());
    }
    checked += 1;

    let before = generic_rank(
        &coefficient_map(m).map_err(|e| TransformError::Hypotheses(e.to_string()))?,
        opts.trials,
        opts.seed,
    );
    let after_rank = generic_rank(
        &coefficient_map(&after).map_err(|e| TransformError::Hypotheses(e.to_string()))?,
        opts.trials,
        opts.seed,
    );
    if after_rank.rank != before.rank + 2 {
        return fail(format!(
            "rank went from {} to {}, expected an increase of 2",
            before.rank, after_rank.rank
        ));
    }
    Ok(RankRelationReport {
        rank_before: before.rank,
        rank_after: after_rank.rank,
        relations_checked: checked,
    })
}
