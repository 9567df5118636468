//! Coefficient maps, generic Jacobian rank, and identifiability verdicts.
//!
//! The generic rank of the coefficient map's Jacobian is estimated by
//! evaluating it at uniformly random points over primes near `2^61`. The rank
//! at any point is a lower bound on the generic rank, so a full-rank trial
//! proves identifiability. A spurious drop needs the point to hit the zero
//! set of every maximal nonvanishing minor, which by Schwartz–Zippel happens
//! with probability at most `deg / p` per trial, far below `2^-50` at the
//! sizes handled here. The report keeps the maximum over all trials.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::AnalysisError;
use crate::forest::{lhs_coefficients, rhs_forest_sums, single_in_out};
use crate::model::{CompartmentId, Model, Param};
use crate::poly::{inv_mod, mul_mod, sub_mod, FieldPoint, Polynomial, PRIMES};

pub const DEFAULT_SEED: u64 = 20240101;
pub const DEFAULT_TRIALS: usize = 3;

/// One coordinate of the coefficient map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffEntry {
    /// `c{k}` for the left-hand side, `d{k}[u{j}->y{i}]` for the right.
    pub label: String,
    pub poly: Polynomial,
}

/// The non-constant input-output coefficients as functions of the parameters.
///
/// The left-hand side is shared by every output's equation and is listed
/// once, followed by each output's right-hand sides in input order. Within a
/// side, coefficients run from the highest derivative down.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientMap {
    pub entries: Vec<CoeffEntry>,
    pub params: Vec<Param>,
}

impl CoefficientMap {
    /// Number of coefficients `m`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of parameters `p`.
    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Symbolic Jacobian, one row per coefficient, one column per parameter.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        self.entries
            .iter()
            .map(|e| self.params.iter().map(|&x| e.poly.partial_derivative(x)).collect())
            .collect()
    }
}

pub fn coefficient_map(m: &Model) -> Result<CoefficientMap, AnalysisError> {
    if m.inputs().is_empty() {
        return Err(AnalysisError::NoInputs);
    }
    let n = m.n();
    let mut entries = Vec::new();
    let lhs = lhs_coefficients(m);
    for k in (0..n).rev() {
        if !lhs[k].is_constant() {
            entries.push(CoeffEntry {
                label: format!("c{k}"),
                poly: lhs[k].clone(),
            });
        }
    }
    for &out in m.outputs() {
        for &inp in m.inputs() {
            let rhs = rhs_forest_sums(m, out, inp);
            for k in (0..n).rev() {
                if !rhs.d[k].is_constant() {
                    entries.push(CoeffEntry {
                        label: format!("d{k}[u{inp}->y{out}]"),
                        poly: rhs.d[k].clone(),
                    });
                }
            }
        }
    }
    Ok(CoefficientMap {
        entries,
        params: m.param_vector(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialRank {
    /// Decimal string; JSON consumers may not hold 61-bit integers exactly.
    pub prime: String,
    pub seed: u64,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankReport {
    pub rank: usize,
    pub trials: Vec<TrialRank>,
    pub params: usize,
    pub coeffs: usize,
}

/// Per-trial seed, a SplitMix64 step of `(seed, trial)`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut z = seed.wrapping_add((trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Rank of a matrix over `GF(p)` by Gaussian elimination.
pub fn rank_mod(mut rows: Vec<Vec<u64>>, p: u64) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][c] != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = inv_mod(rows[rank][c], p);
        for v in rows[rank].iter_mut() {
            *v = mul_mod(*v, inv, p);
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][c] != 0 {
                let f = rows[r][c];
                for k in c..cols {
                    let sub = mul_mod(f, rows[rank][k], p);
                    rows[r][k] = sub_mod(rows[r][k], sub, p);
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Generic rank of the Jacobian of `cm`, maximized over `trials` random points.
pub fn generic_rank(cm: &CoefficientMap, trials: usize, seed: u64) -> RankReport {
    assert!(trials >= 1, "at least one trial");
    let jac = cm.jacobian();
    let mut report = RankReport {
        rank: 0,
        trials: Vec::with_capacity(trials),
        params: cm.param_count(),
        coeffs: cm.len(),
    };
    for t in 0..trials {
        let prime = PRIMES[t % PRIMES.len()];
        let s = trial_seed(seed, t);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let point = FieldPoint::random(prime, &cm.params, &mut rng);
        let values: Vec<Vec<u64>> = jac
            .iter()
            .map(|row| {
                row.iter()
                    .map(|d| d.eval_mod(&point).expect("all parameters assigned"))
                    .collect()
            })
            .collect();
        let rank = rank_mod(values, prime);
        report.rank = report.rank.max(rank);
        report.trials.push(TrialRank {
            prime: prime.to_string(),
            seed: s,
            rank,
        });
    }
    debug_assert!(report.rank <= report.params.min(report.coeffs));
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Identifiable,
    Unidentifiable,
    NoParameters,
}

impl Status {
    pub fn is_identifiable(self) -> bool {
        matches!(self, Status::Identifiable | Status::NoParameters)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    JacobianRank,
    CountCriterion,
    TreeTheorem,
    IscTheorem,
    Convention,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Identifiable => "identifiable",
            Status::Unidentifiable => "unidentifiable",
            Status::NoParameters => "no_parameters",
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::JacobianRank => "jacobian_rank",
            Method::CountCriterion => "count_criterion",
            Method::TreeTheorem => "tree_theorem",
            Method::IscTheorem => "isc_theorem",
            Method::Convention => "convention",
        })
    }
}

/// Which of the four parameter-count conditions fired.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountEvidence {
    /// 1: leak, in = out; 2: leak, in ≠ out; 3: no leak, in = out;
    /// 4: no leak, in ≠ out.
    pub condition: u8,
    pub params: usize,
    pub bound: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Rank(RankReport),
    Count(CountEvidence),
    Tree { dist: usize, leaks: usize },
    Isc { order: Vec<CompartmentId> },
    NoParameters,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub method: Method,
    pub evidence: Evidence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankOptions {
    pub trials: usize,
    pub seed: u64,
    /// Skip structural shortcuts and always decide by Jacobian rank.
    pub force_rank: bool,
}

impl Default for RankOptions {
    fn default() -> Self {
        RankOptions {
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            force_rank: false,
        }
    }
}

fn require_single_sc(m: &Model) -> Result<(CompartmentId, CompartmentId), AnalysisError> {
    let io = single_in_out(m).ok_or(AnalysisError::NotSingleInOut)?;
    if !m.is_strongly_connected() {
        return Err(AnalysisError::NotStronglyConnected);
    }
    Ok(io)
}

/// Fires when the model has more parameters than non-constant coefficients,
/// which makes the coefficient map generically infinite-to-one.
pub fn count_criterion(m: &Model) -> Result<Option<CountEvidence>, AnalysisError> {
    let (inp, out) = require_single_sc(m)?;
    let n = m.n();
    let params = m.param_count();
    let dist = m.distance(inp, out).expect("strongly connected");
    let (condition, bound) = match (m.leaks().is_empty(), inp == out) {
        (false, true) => (1, 2 * n - 1),
        (false, false) => (2, 2 * n - dist),
        (true, true) => (3, 2 * n - 2),
        (true, false) => (4, 2 * n - dist - 1),
    };
    Ok((params > bound).then_some(CountEvidence {
        condition,
        params,
        bound,
    }))
}

/// Tree models with one input and one output are identifiable exactly when
/// input and output are equal or adjacent and there is at most one leak.
pub fn classify_tree(m: &Model) -> Result<Verdict, AnalysisError> {
    let (inp, out) = single_in_out(m).ok_or(AnalysisError::NotSingleInOut)?;
    if !m.is_bidirectional_tree() {
        return Err(AnalysisError::NotATree);
    }
    let dist = m.distance(inp, out).expect("trees are strongly connected");
    let leaks = m.leaks().len();
    let status = if dist <= 1 && leaks <= 1 {
        Status::Identifiable
    } else {
        Status::Unidentifiable
    };
    Ok(Verdict {
        status,
        method: Method::TreeTheorem,
        evidence: Evidence::Tree { dist, leaks },
    })
}

/// With input and output in one compartment `i`, at most one leak, at most
/// `2n - 2` edges, and a graph that is inductively strongly connected from
/// `i`, the model is identifiable. Returns the witness ordering when this
/// applies.
///
/// The edge bound matters: a complete digraph is inductively strongly
/// connected but has too many parameters to be identifiable.
pub fn isc_sufficiency(m: &Model) -> Option<Vec<CompartmentId>> {
    let (inp, out) = single_in_out(m)?;
    if inp != out || m.leaks().len() > 1 || m.edge_count() + 2 > 2 * m.n().max(1) {
        return None;
    }
    m.inductive_order(inp)
}

/// Strongly connected models with one input, one output and more leaks than
/// `|In ∪ Out|` are unidentifiable.
pub fn leak_excess(m: &Model) -> bool {
    match single_in_out(m) {
        Some((inp, out)) if m.is_strongly_connected() => {
            let io = if inp == out { 1 } else { 2 };
            m.leaks().len() > io
        }
        _ => false,
    }
}

fn rank_verdict(m: &Model, opts: &RankOptions) -> Result<Verdict, AnalysisError> {
    let cm = coefficient_map(m)?;
    let report = generic_rank(&cm, opts.trials, opts.seed);
    let status = if report.rank == cm.param_count() {
        Status::Identifiable
    } else {
        Status::Unidentifiable
    };
    Ok(Verdict {
        status,
        method: Method::JacobianRank,
        evidence: Evidence::Rank(report),
    })
}

/// Decides generic local identifiability of a strongly connected model.
///
/// Cheap structural tests run first (parameter count, tree classification,
/// inductive strong connectivity); the Jacobian rank decides the rest, or
/// everything when `force_rank` is set.
pub fn decide_identifiability(m: &Model, opts: &RankOptions) -> Result<Verdict, AnalysisError> {
    if !m.is_strongly_connected() {
        return Err(AnalysisError::NotStronglyConnected);
    }
    if m.inputs().is_empty() {
        return Err(AnalysisError::NoInputs);
    }
    if m.param_count() == 0 {
        return Ok(Verdict {
            status: Status::NoParameters,
            method: Method::Convention,
            evidence: Evidence::NoParameters,
        });
    }
    if opts.force_rank {
        return rank_verdict(m, opts);
    }
    if single_in_out(m).is_some() {
        if let Some(ev) = count_criterion(m)? {
            return Ok(Verdict {
                status: Status::Unidentifiable,
                method: Method::CountCriterion,
                evidence: Evidence::Count(ev),
            });
        }
        if m.is_bidirectional_tree() {
            return classify_tree(m);
        }
        if let Some(order) = isc_sufficiency(m) {
            return Ok(Verdict {
                status: Status::Identifiable,
                method: Method::IscTheorem,
                evidence: Evidence::Isc { order },
            });
        }
    }
    rank_verdict(m, opts)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DimReport {
    pub image_dim: usize,
    pub expected: usize,
    pub has_expected_dimension: bool,
    pub rank: RankReport,
}

/// Compares the image dimension of the coefficient map (its generic
/// Jacobian rank) with `min(p, m)`.
pub fn expected_dimension(m: &Model, opts: &RankOptions) -> Result<DimReport, AnalysisError> {
    let cm = coefficient_map(m)?;
    let rank = generic_rank(&cm, opts.trials, opts.seed);
    let expected = cm.param_count().min(cm.len());
    Ok(DimReport {
        image_dim: rank.rank,
        expected,
        has_expected_dimension: rank.rank == expected,
        rank,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Criteria {
    pub strongly_connected: bool,
    pub single_in_out: bool,
    pub dist_in_out: Option<usize>,
    /// `None` when the criterion does not apply.
    pub count_criterion: Option<bool>,
    pub tree_model: bool,
    pub tree_theorem: Option<Status>,
    pub isc: Option<bool>,
    pub expected_dimension: usize,
    pub has_expected_dimension: bool,
}

/// Machine-readable analysis report; the key set is stable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub verdict: Status,
    pub method: Method,
    pub rank: usize,
    pub params: usize,
    pub coeffs: usize,
    pub trials: Vec<TrialRank>,
    pub criteria: Criteria,
}

/// Verdict plus expected-dimension report for a strongly connected model.
pub fn analyze(m: &Model, opts: &RankOptions) -> Result<AnalysisReport, AnalysisError> {
    let verdict = decide_identifiability(m, opts)?;
    let dim = expected_dimension(m, opts)?;
    let single = single_in_out(m);
    let applies = single.is_some();
    let tree_model = m.is_bidirectional_tree();
    let criteria = Criteria {
        strongly_connected: true,
        single_in_out: applies,
        dist_in_out: single.and_then(|(i, o)| m.distance(i, o)),
        count_criterion: if applies {
            Some(count_criterion(m)?.is_some())
        } else {
            None
        },
        tree_model,
        tree_theorem: if applies && tree_model {
            Some(classify_tree(m)?.status)
        } else {
            None
        },
        isc: single
            .filter(|&(i, o)| i == o && m.leaks().len() <= 1)
            .map(|_| isc_sufficiency(m).is_some()),
        expected_dimension: dim.expected,
        has_expected_dimension: dim.has_expected_dimension,
    };
    Ok(AnalysisReport {
        verdict: verdict.status,
        method: verdict.method,
        rank: dim.image_dim,
        params: dim.rank.params,
        coeffs: dim.rank.coeffs,
        trials: dim.rank.trials,
        criteria,
    })
}
