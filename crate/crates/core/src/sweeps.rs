//! Exhaustive sweeps and the randomized self-test.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{self, fixtures};
use crate::det::{check_minor_identities, io_equation};
use crate::forest::{lhs_coefficients, nonconstant_counts, rhs_forest_sums};
use crate::ident::{decide_identifiability, expected_dimension, RankOptions};
use crate::model::{CompartmentId, Model};
use crate::transforms::{apply, verify_rank_relation, Transform};

fn forced(opts: &RankOptions) -> RankOptions {
    RankOptions {
        force_rank: true,
        ..*opts
    }
}

fn rank_identifiable(m: &Model, opts: &RankOptions) -> bool {
    decide_identifiability(m, &forced(opts))
        .expect("sweep models are strongly connected with inputs")
        .status
        .is_identifiable()
}

fn single(m: &Model) -> (CompartmentId, CompartmentId) {
    (
        *m.inputs().iter().next().unwrap(),
        *m.outputs().iter().next().unwrap(),
    )
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub graphs: usize,
    pub models: usize,
    pub identifiable: usize,
    pub disagreements: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Canonical JSON of each model where rank and prediction disagree.
    pub disagreements: Vec<String>,
}

impl SweepReport {
    pub fn models(&self) -> usize {
        self.rows.iter().map(|r| r.models).sum()
    }

    pub fn total_disagreements(&self) -> usize {
        self.disagreements.len()
    }
}

fn sweep(
    graphs_by_n: Vec<(usize, Vec<Vec<(usize, usize)>>)>,
    max_leaks: usize,
    opts: &RankOptions,
    predict: impl Fn(&Model) -> bool + Sync,
) -> SweepReport {
    let mut report = SweepReport::default();
    for (n, graphs) in graphs_by_n {
        let models: Vec<Model> = graphs
            .iter()
            .flat_map(|g| corpus::single_io_models(n, g, max_leaks))
            .collect();
        let results: Vec<(bool, bool)> = models
            .par_iter()
            .map(|m| (rank_identifiable(m, opts), predict(m)))
            .collect();
        let mut row = SweepRow {
            n,
            graphs: graphs.len(),
            models: models.len(),
            ..SweepRow::default()
        };
        for (m, &(rank, predicted)) in models.iter().zip(&results) {
            row.identifiable += rank as usize;
            if rank != predicted {
                row.disagreements += 1;
                report.disagreements.push(m.to_json());
            }
        }
        report.rows.push(row);
    }
    report
}

/// Tree prediction: identifiable iff `dist(in, out) <= 1` and at most one leak.
pub fn tree_prediction(m: &Model) -> bool {
    let (i, o) = single(m);
    m.distance(i, o).is_some_and(|d| d <= 1) && m.leaks().len() <= 1
}

pub fn catenary_prediction(m: &Model) -> bool {
    let (i, o) = single(m);
    m.leaks().len() <= 1 && i.abs_diff(o) <= 1
}

pub fn mammillary_prediction(m: &Model) -> bool {
    let (i, o) = single(m);
    m.leaks().len() <= 1 && (i == o || i == 1 || o == 1)
}

/// Every labeled tree on `n <= max_n` vertices, every input/output pair and
/// every leak set of size at most `max_leaks`, classified by Jacobian rank
/// and compared with [`tree_prediction`].
pub fn sweep_trees(max_n: usize, max_leaks: usize, opts: &RankOptions) -> SweepReport {
    let graphs = (1..=max_n).map(|n| (n, corpus::labeled_trees(n))).collect();
    sweep(graphs, max_leaks, opts, tree_prediction)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Catenary,
    Mammillary,
}

pub fn sweep_family(
    family: Family,
    ns: std::ops::RangeInclusive<usize>,
    max_leaks: usize,
    opts: &RankOptions,
) -> SweepReport {
    let graphs = ns
        .map(|n| {
            let g = match family {
                Family::Catenary => corpus::catenary(n),
                Family::Mammillary => corpus::mammillary(n),
            };
            (n, vec![g])
        })
        .collect();
    match family {
        Family::Catenary => sweep(graphs, max_leaks, opts, catenary_prediction),
        Family::Mammillary => sweep(graphs, max_leaks, opts, mammillary_prediction),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DimensionSweep {
    pub models: usize,
    /// Canonical JSON of models lacking expected dimension.
    pub failures: Vec<String>,
}

/// Tree models with `dist(in, out) <= 1` and any number of leaks, checked
/// for expected dimension.
pub fn sweep_tree_dimension(max_n: usize, opts: &RankOptions) -> DimensionSweep {
    let models: Vec<Model> = (1..=max_n)
        .flat_map(|n| {
            corpus::labeled_trees(n)
                .into_iter()
                .flat_map(move |g| corpus::single_io_models(n, &g, n))
        })
        .filter(|m| {
            let (i, o) = single(m);
            m.distance(i, o).is_some_and(|d| d <= 1)
        })
        .collect();
    let failures = models
        .par_iter()
        .filter(|m| !expected_dimension(m, opts).unwrap().has_expected_dimension)
        .map(|m| m.to_json())
        .collect();
    DimensionSweep {
        models: models.len(),
        failures,
    }
}

/// Forest-formula coefficients against the determinant expansion, for every
/// input/output pair of `m`. Returns the number of pairs compared.
pub fn check_oracle_equivalence(m: &Model) -> Result<usize, String> {
    let n = m.n();
    let all: Vec<_> = (1..=n).collect();
    let leaks: Vec<_> = m.leaks().iter().copied().collect();
    let full = m.with_sets(&all, &all, &leaks).map_err(|e| e.to_string())?;
    let mut lhs = lhs_coefficients(m);
    lhs.push(crate::poly::Polynomial::one());
    let mut pairs = 0;
    for out in 1..=n {
        let eq = io_equation(&full, out).map_err(|e| e.to_string())?;
        if eq.lhs != lhs {
            return Err(format!("{}: left-hand side differs at y{out}", m.to_json()));
        }
        for (&inp, term) in &eq.rhs {
            let forest = rhs_forest_sums(m, out, inp);
            if forest.sign != term.sign || forest.d != term.net() {
                return Err(format!("{}: u{inp} -> y{out} differs", m.to_json()));
            }
            pairs += 1;
        }
    }
    Ok(pairs)
}

/// Non-constant coefficient counts and the known constant coefficients, for
/// every single input/output choice on the graph and leaks of `m`, using
/// the determinant expansion. Returns the number of choices checked.
pub fn check_count_law(m: &Model) -> Result<usize, String> {
    let n = m.n();
    let leaks: Vec<_> = m.leaks().iter().copied().collect();
    let mut checked = 0;
    for inp in 1..=n {
        for out in 1..=n {
            let s = m.with_sets(&[inp], &[out], &leaks).map_err(|e| e.to_string())?;
            let eq = io_equation(&s, out).map_err(|e| e.to_string())?;
            let rhs = eq.rhs[&inp].net();
            let lhs_nc = eq.lhs[..n].iter().filter(|c| !c.is_constant()).count();
            let rhs_nc = rhs.iter().filter(|c| !c.is_constant()).count();
            let want = nonconstant_counts(&s).map_err(|e| e.to_string())?;
            let ctx = || format!("{} with u{inp} -> y{out}", m.to_json());
            if (lhs_nc, rhs_nc) != want {
                return Err(format!("{}: counts {:?} vs {:?}", ctx(), (lhs_nc, rhs_nc), want));
            }
            if leaks.is_empty() && !eq.lhs[0].is_zero() {
                return Err(format!("{}: c0 nonzero without leaks", ctx()));
            }
            if inp == out && !rhs[n - 1].is_one() {
                return Err(format!("{}: leading right-hand coefficient is not 1", ctx()));
            }
            let dist = s.distance(inp, out).unwrap();
            if inp != out && rhs[n - dist..].iter().any(|c| !c.is_zero()) {
                return Err(format!("{}: expected {dist} leading zeros", ctx()));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Verdicts after guarantee-bearing rewrites agree with the guarantee.
fn check_guarantees(m: &Model, opts: &RankOptions) -> Result<usize, String> {
    let before = rank_identifiable(m, opts);
    let leaks: Vec<_> = m.leaks().iter().copied().collect();
    let mut checked = 0;
    let mut ts = vec![Transform::AddLeafEdge { at: 1 }];
    if leaks.is_empty() {
        ts.extend([
            Transform::AddLeafMoveOutput { at: 1 },
            Transform::AddLeafMoveInput { at: 1 },
            Transform::AddLeak { at: 1 },
        ]);
    } else {
        ts.push(Transform::RemoveLeak { at: leaks[0] });
    }
    for t in ts {
        let r = apply(m, t).map_err(|e| e.to_string())?;
        if !r.guarantee.preserves_identifiability() {
            continue;
        }
        let after = rank_identifiable(&r.model, opts);
        let iff = r.guarantee == crate::transforms::Guarantee::Iff;
        if (before && !after) || (iff && after && !before) {
            return Err(format!("{}: {:?} broke its guarantee", m.to_json(), t));
        }
        checked += 1;
    }
    Ok(checked)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelftestConfig {
    pub seed: u64,
    pub trials: usize,
    /// Random strongly connected models for the coefficient checks.
    pub models: usize,
    /// Random `In = Out = {1}` leakless models for the leaf identities.
    pub leaf_models: usize,
    pub max_n: usize,
}

impl SelftestConfig {
    pub fn new(seed: u64, trials: usize) -> Self {
        SelftestConfig {
            seed,
            trials,
            models: 200,
            leaf_models: 50,
            max_n: 5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CheckSummary {
    pub cases: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub trials: usize,
    pub checks: BTreeMap<String, CheckSummary>,
    pub failures: Vec<String>,
    pub passed: bool,
}

fn tally(
    report: &mut SelftestReport,
    name: &str,
    results: Vec<Result<usize, String>>,
) {
    let entry = report.checks.entry(name.to_string()).or_default();
    for r in results {
        match r {
            Ok(k) => entry.cases += k,
            Err(e) => {
                entry.failures += 1;
                report.failures.push(format!("{name}: {e}"));
            }
        }
    }
}

/// Random corpus plus fixed fixtures; every check is exact.
pub fn selftest(cfg: &SelftestConfig) -> SelftestReport {
    let opts = RankOptions {
        trials: cfg.trials,
        seed: cfg.seed,
        force_rank: false,
    };
    let mut report = SelftestReport {
        seed: cfg.seed,
        trials: cfg.trials,
        checks: BTreeMap::new(),
        failures: Vec::new(),
        passed: false,
    };

    let mut corpus = corpus::random_sc_models(cfg.seed, cfg.models, cfg.max_n);
    corpus.extend(fixtures::all().into_iter().map(|(_, m)| m));

    let r = corpus.par_iter().map(check_oracle_equivalence).collect();
    tally(&mut report, "oracle_equivalence", r);
    let r = corpus.par_iter().map(check_count_law).collect();
    tally(&mut report, "count_law", r);

    let sample: Vec<&Model> = corpus
        .iter()
        .filter(|m| m.n() >= 2)
        .take(cfg.leaf_models.max(1))
        .collect();
    let identities = sample
        .par_iter()
        .map(|m| {
            let all: Vec<_> = m.inputs().iter().copied().collect();
            let out: Vec<_> = m.outputs().iter().copied().collect();
            let leakless = m.with_sets(&all, &out, &[]).map_err(|e| e.to_string())?;
            let r = check_minor_identities(&leakless).map_err(|e| format!("{}: {e}", m.to_json()))?;
            Ok(r.leaf_identities + r.two_row_col + r.rhs_signs + r.prodeq)
        })
        .collect();
    tally(&mut report, "determinant_identities", identities);

    let leaf_models = corpus::random_sc_io1_models(cfg.seed, cfg.leaf_models, 2, cfg.max_n);
    let relations = leaf_models
        .par_iter()
        .map(|m| {
            let mut k = 0;
            for t in [Transform::AddLeafMoveOutput { at: 1 }, Transform::AddLeafMoveInput { at: 1 }] {
                k += verify_rank_relation(m, t, &opts)
                    .map_err(|e| format!("{}: {e}", m.to_json()))?
                    .relations_checked;
            }
            Ok(k)
        })
        .collect();
    tally(&mut report, "rank_relations", relations);

    let guarantees = corpus
        .par_iter()
        .filter(|m| m.n() >= 2 && m.n() <= 4)
        .map(|m| check_guarantees(m, &opts))
        .collect();
    tally(&mut report, "transform_guarantees", guarantees);

    let verdicts = fixtures::verdicts()
        .into_par_iter()
        .map(|(name, m, want)| {
            let got = decide_identifiability(&m, &opts).map_err(|e| e.to_string())?;
            if got.status.is_identifiable() == want {
                Ok(1)
            } else {
                Err(format!("{name}: got {}", got.status))
            }
        })
        .collect();
    tally(&mut report, "fixture_verdicts", verdicts);

    report.passed = report.failures.is_empty();
    report
}
