//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use lincomp::corpus::{self, fixtures};
use lincomp::det::check_minor_identities;
use lincomp::ident::{count_criterion, decide_identifiability, Method, RankOptions, Status};
use lincomp::sweeps::{
    check_count_law, check_oracle_equivalence, sweep_family, sweep_tree_dimension, sweep_trees,
    Family,
};
use lincomp::transforms::{verify_rank_relation, Transform};
use lincomp::{Model, Polynomial};

const SEED: u64 = 20240101;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lincomp"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// `a_{02} a_{13}+...` to a polynomial.
fn tex(s: &str) -> Polynomial {
    let terms: Vec<String> = s
        .replace("a_{", "a")
        .replace('}', "")
        .split('+')
        .map(|t| t.split_whitespace().collect::<Vec<_>>().join("*"))
        .collect();
    terms.join(" + ").parse().expect("well-formed")
}

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn golden_coefficients() -> Check {
    let started = Instant::now();
    let path = fixture("k3-leak2");
    let out = run(&["coeffs", path.to_str().unwrap(), "--method", "both"]);
    ensure(out.status.success(), "coeffs failed")?;
    let text = String::from_utf8(out.stdout).unwrap();
    let line = |key: &str| -> Result<String, String> {
        text.lines()
            .find_map(|l| l.trim().strip_prefix(&format!("{key} = ")).map(str::to_string))
            .ok_or_else(|| format!("{key} missing"))
    };
    let want = [
        ("c2", "a_{02}+a_{12}+a_{13}+a_{21}+a_{23}+a_{31}+a_{32}", 7),
        (
            "c1",
            "a_{02} a_{13}+a_{12} a_{13}+a_{02} a_{21}+a_{13} a_{21}+a_{02} a_{23} +a_{12} a_{23}\
             +a_{21} a_{23}+a_{02} a_{31}+a_{12} a_{31}+a_{23} a_{31}+a_{13} a_{32}+a_{21} a_{32}+a_{31} a_{32}",
            13,
        ),
        ("c0", "a_{02} a_{13} a_{21}+a_{02} a_{21} a_{23}+a_{02} a_{23} a_{31}", 3),
        ("d1[u1]", "a_{02}+a_{12}+a_{13}+a_{23}+a_{32}", 5),
        ("d0[u1]", "a_{02} a_{13}+a_{12} a_{13}+a_{02} a_{23}+a_{12} a_{23}+a_{13} a_{32}", 5),
    ];
    for (key, src, terms) in want {
        let p = tex(src);
        ensure(p.len() == terms, format!("{key}: reference has {} terms", p.len()))?;
        let got = line(key)?;
        ensure(got == p.to_string(), format!("{key}: got {got}, want {p}"))?;
    }
    ensure(line("d2[u1]")? == "1", "d2 is not 1")?;
    ensure(line("c3")? == "1", "c3 is not 1")?;
    let t = started.elapsed();
    ensure(t < Duration::from_secs(1), format!("took {t:?}"))?;
    Ok(format!("5 polynomials match exactly, {t:.0?}"))
}

fn random_corpus() -> Vec<Model> {
    corpus::random_sc_models(SEED, 200, 5)
}

fn oracle_equivalence() -> Check {
    let started = Instant::now();
    let mut pairs = 0;
    for m in random_corpus() {
        pairs += check_oracle_equivalence(&m)?;
    }
    let t = started.elapsed();
    ensure(t < Duration::from_secs(120), format!("took {t:?}"))?;
    Ok(format!("200 models, {pairs} (in, out) pairs equal, {t:.1?}"))
}

fn count_law() -> Check {
    let mut checked = 0;
    for m in random_corpus() {
        checked += check_count_law(&m)?;
    }
    Ok(format!("{checked} single-io models: counts and constants match"))
}

fn tree_classification() -> Check {
    let started = Instant::now();
    let opts = RankOptions::default();
    let r = sweep_trees(5, 2, &opts);
    for row in &r.rows {
        let cayley = row.n.pow(row.n.saturating_sub(2) as u32);
        ensure(row.graphs == cayley, format!("n = {}: {} trees", row.n, row.graphs))?;
    }
    ensure(r.disagreements.is_empty(), format!("disagreements: {:?}", r.disagreements))?;
    let t = started.elapsed();
    ensure(t < Duration::from_secs(600), format!("took {t:?}"))?;
    Ok(format!("{} tree models, 0 disagreements, {t:.1?}", r.models()))
}

fn families() -> Check {
    let opts = RankOptions::default();
    let mut total = 0;
    for family in [Family::Catenary, Family::Mammillary] {
        let r = sweep_family(family, 2..=6, 2, &opts);
        ensure(r.disagreements.is_empty(), format!("{family:?}: {:?}", r.disagreements))?;
        total += r.models();
    }
    Ok(format!("{total} catenary/mammillary models match"))
}

fn rank_relations() -> Check {
    let opts = RankOptions::default();
    let mut relations = 0;
    for m in corpus::random_sc_io1_models(SEED, 50, 2, 5) {
        for t in [Transform::AddLeafMoveOutput { at: 1 }, Transform::AddLeafMoveInput { at: 1 }] {
            let r = verify_rank_relation(&m, t, &opts).map_err(|e| format!("{}: {e}", m.to_json()))?;
            ensure(r.rank_after == r.rank_before + 2, "rank relation")?;
            relations += r.relations_checked;
        }
    }
    Ok(format!("50 models x 2 moves, {relations} coefficient relations exact"))
}

fn determinant_identities() -> Check {
    let mut count = 0;
    let models: Vec<Model> = corpus::random_sc_models(SEED ^ 7, 200, 5)
        .into_iter()
        .filter(|m| m.n() >= 2)
        .take(50)
        .collect();
    ensure(models.len() == 50, "not enough models")?;
    for m in models {
        let ins: Vec<_> = m.inputs().iter().copied().collect();
        let outs: Vec<_> = m.outputs().iter().copied().collect();
        let leakless = m.with_sets(&ins, &outs, &[]).unwrap();
        let r = check_minor_identities(&leakless).map_err(|e| format!("{}: {e}", m.to_json()))?;
        count += r.leaf_identities + r.two_row_col + r.rhs_signs + r.prodeq;
    }
    Ok(format!("50 models, {count} identities exact"))
}

fn fixture_verdicts() -> Check {
    let opts = RankOptions::default();
    let load = |name: &str| Model::from_json(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap();
    let verdict = |m: &Model| decide_identifiability(m, &opts).unwrap();

    let k3 = load("k3-leak2");
    let ev = count_criterion(&k3).unwrap().ok_or("count criterion silent on k3")?;
    ensure((ev.params, ev.bound) == (7, 5), "k3 count is not 7 > 5")?;
    let v = verdict(&k3);
    ensure(
        (v.status, v.method) == (Status::Unidentifiable, Method::CountCriterion),
        "k3 verdict",
    )?;
    for n in 3..=6 {
        let v = verdict(&load(&format!("bicycle-{n}")));
        ensure(v.status == Status::Unidentifiable, format!("bicycle-{n}"))?;
    }
    let m = load("uniden-dist0-leak0");
    ensure(count_criterion(&m).unwrap().is_none(), "count criterion fired")?;
    let v = verdict(&m);
    ensure(
        (v.status, v.method) == (Status::Unidentifiable, Method::JacobianRank),
        "uniden-dist0-leak0",
    )?;
    for name in ["iden-dist2", "iden-leak2"] {
        let v = verdict(&load(name));
        ensure(
            (v.status, v.method) == (Status::Identifiable, Method::JacobianRank),
            name,
        )?;
    }
    for name in ["triangle", "triangle-leaf-out4", "triangle-leaf", "cat3-leak1", "cat3-leaf-in4"] {
        ensure(verdict(&load(name)).status == Status::Identifiable, name)?;
    }
    ensure(
        fixtures::verdicts().len() == 13,
        "fixture list changed without updating this check",
    )?;
    Ok("13 fixture verdicts match".into())
}

fn tree_dimension() -> Check {
    let r = sweep_tree_dimension(4, &RankOptions::default());
    ensure(r.failures.is_empty(), format!("{:?}", r.failures))?;
    Ok(format!("{} tree models with dist <= 1 have expected dimension", r.models))
}

fn determinism() -> Check {
    let args = ["selftest", "--seed", "20240101", "--json"];
    let a = run(&args);
    let b = run(&args);
    ensure(a.status.success() && b.status.success(), "selftest failed")?;
    ensure(a.stdout == b.stdout, "outputs differ")?;
    Ok(format!("{} identical bytes", a.stdout.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("golden coefficients", golden_coefficients),
        ("forest/determinant equivalence", oracle_equivalence),
        ("coefficient-count law", count_law),
        ("tree classification sweep", tree_classification),
        ("catenary/mammillary sweeps", families),
        ("leaf move rank relations", rank_relations),
        ("determinant identities", determinant_identities),
        ("fixture verdicts", fixture_verdicts),
        ("tree expected dimension", tree_dimension),
        ("selftest determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
