use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::TypedValueParser as _;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use lincomp::det::io_equation;
use lincomp::forest::{lhs_coefficients, rhs_forest_sums};
use lincomp::ident::{analyze, RankOptions, DEFAULT_SEED, DEFAULT_TRIALS};
use lincomp::sweeps::{selftest, sweep_trees, SelftestConfig};
use lincomp::transforms::{apply, verify_rank_relation, Transform};
use lincomp::{AnalysisError, Model, Polynomial};

const MAX_SWEEP_N: usize = 6;

/// Identifiability analysis for linear compartmental models.
#[derive(Parser, Debug)]
#[command(name = "lincomp", version)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for random evaluation points.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Random evaluation points per rank computation.
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS,
          value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    trials: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Decide identifiability and expected dimension of a model.
    Analyze {
        model: PathBuf,
        /// Decide by Jacobian rank even when a structural shortcut applies.
        #[arg(long)]
        force_rank: bool,
    },
    /// Print input-output equation coefficients.
    Coeffs {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Forest)]
        method: Method,
    },
    /// Compare the tree classification with Jacobian rank on all small trees.
    SweepTrees {
        #[arg(long, default_value_t = 5)]
        max_n: usize,
        #[arg(long, default_value_t = 2)]
        max_leaks: usize,
    },
    /// Check formulas and identities on a seeded random corpus.
    Selftest,
    /// Rewrite a model and report what the rewrite preserves.
    Transform {
        model: PathBuf,
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(Transform::OPS))]
        op: String,
        #[arg(long)]
        at: usize,
        /// For move-input/move-output, also check the rank and coefficient relations.
        #[arg(long)]
        verify: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Forest,
    Det,
    Both,
}

enum Failure {
    Usage(String),
    InvalidModel(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::InvalidModel(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::InvalidModel(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure::InvalidModel(e.to_string())
    }
}

fn load(path: &Path) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::InvalidModel(format!("{}: {e}", path.display())))?;
    Model::from_json(&text).map_err(|e| Failure::InvalidModel(format!("{}: {e}", path.display())))
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn derivative(var: &str, k: usize) -> String {
    match k {
        0..=3 => format!("{var}{}", "'".repeat(k)),
        _ => format!("{var}^({k})"),
    }
}

/// `coeffs[k]` multiplies the `k`-th derivative of `var`.
fn side(coeffs: &[Polynomial], var: &str) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| {
            let v = derivative(var, k);
            if c.is_one() {
                v
            } else if c.len() == 1 {
                format!("{c}*{v}")
            } else {
                format!("({c})*{v}")
            }
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

struct Equation {
    out: usize,
    lhs: Vec<Polynomial>,
    rhs: Vec<(usize, Vec<Polynomial>)>,
}

fn forest_equations(m: &Model) -> Vec<Equation> {
    let mut lhs = lhs_coefficients(m);
    lhs.push(Polynomial::one());
    m.outputs()
        .iter()
        .map(|&out| Equation {
            out,
            lhs: lhs.clone(),
            rhs: m
                .inputs()
                .iter()
                .map(|&j| (j, rhs_forest_sums(m, out, j).d))
                .collect(),
        })
        .collect()
}

fn det_equations(m: &Model) -> Result<Vec<Equation>, Failure> {
    m.outputs()
        .iter()
        .map(|&out| {
            let eq = io_equation(m, out)?;
            Ok(Equation {
                out,
                lhs: eq.lhs,
                rhs: eq.rhs.iter().map(|(&j, t)| (j, t.net())).collect(),
            })
        })
        .collect()
}

fn equations_equal(a: &[Equation], b: &[Equation]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.out == y.out && x.lhs == y.lhs && x.rhs == y.rhs)
}

fn strings(ps: &[Polynomial]) -> Vec<String> {
    ps.iter().map(ToString::to_string).collect()
}

fn cmd_coeffs(cli: &Cli, path: &Path, method: Method) -> Result<String, Failure> {
    let m = load(path)?;
    if m.inputs().is_empty() {
        return Err(AnalysisError::NoInputs.into());
    }
    let eqs = match method {
        Method::Forest => forest_equations(&m),
        Method::Det => det_equations(&m)?,
        Method::Both => {
            let f = forest_equations(&m);
            if !equations_equal(&f, &det_equations(&m)?) {
                return Err(Failure::Internal(
                    "forest and determinant coefficients differ".into(),
                ));
            }
            f
        }
    };
    if cli.json {
        let outputs: Vec<_> = eqs
            .iter()
            .map(|e| {
                let rhs: serde_json::Map<_, _> = e
                    .rhs
                    .iter()
                    .map(|(j, d)| (j.to_string(), json!(strings(d))))
                    .collect();
                json!({ "out": e.out, "lhs": strings(&e.lhs), "rhs": rhs })
            })
            .collect();
        let method = format!("{method:?}").to_lowercase();
        return Ok(to_json(&json!({ "method": method, "outputs": outputs })));
    }
    let mut s = String::new();
    for e in &eqs {
        let y = format!("y{}", e.out);
        let rhs: Vec<String> = e
            .rhs
            .iter()
            .map(|(j, d)| side(d, &format!("u{j}")))
            .filter(|t| t != "0")
            .collect();
        let rhs = if rhs.is_empty() { "0".into() } else { rhs.join(" + ") };
        writeln!(s, "{} = {rhs}", side(&e.lhs, &y)).unwrap();
        for (k, c) in e.lhs.iter().enumerate().rev() {
            writeln!(s, "  c{k} = {c}").unwrap();
        }
        for (j, d) in &e.rhs {
            for (k, c) in d.iter().enumerate().rev() {
                writeln!(s, "  d{k}[u{j}] = {c}").unwrap();
            }
        }
    }
    Ok(s)
}

fn options(cli: &Cli, force_rank: bool) -> RankOptions {
    RankOptions {
        trials: cli.trials,
        seed: cli.seed,
        force_rank,
    }
}

fn cmd_analyze(cli: &Cli, path: &Path, force_rank: bool) -> Result<String, Failure> {
    let m = load(path)?;
    let r = analyze(&m, &options(cli, force_rank))?;
    if cli.json {
        return Ok(to_json(&r));
    }
    let dim = if r.criteria.has_expected_dimension { "yes" } else { "no" };
    let mut s = String::new();
    writeln!(s, "verdict: {}", r.verdict).unwrap();
    writeln!(s, "method: {}", r.method).unwrap();
    writeln!(s, "parameters: {}", r.params).unwrap();
    writeln!(s, "coefficients: {}", r.coeffs).unwrap();
    writeln!(s, "jacobian rank: {}", r.rank).unwrap();
    writeln!(s, "expected dimension: {} ({dim})", r.criteria.expected_dimension).unwrap();
    Ok(s)
}

fn cmd_sweep(cli: &Cli, max_n: usize, max_leaks: usize) -> Result<String, Failure> {
    if max_n == 0 || max_n > MAX_SWEEP_N {
        return Err(Failure::Usage(format!("--max-n must be in 1..={MAX_SWEEP_N}")));
    }
    let r = sweep_trees(max_n, max_leaks, &options(cli, true));
    if !r.disagreements.is_empty() {
        eprintln!("{} disagreements", r.disagreements.len());
    }
    if cli.json {
        return Ok(to_json(&r));
    }
    let mut s = String::new();
    for row in &r.rows {
        writeln!(
            s,
            "n={} trees={} models={} identifiable={} disagreements={}",
            row.n, row.graphs, row.models, row.identifiable, row.disagreements
        )
        .unwrap();
    }
    for d in &r.disagreements {
        writeln!(s, "disagreement: {d}").unwrap();
    }
    writeln!(s, "total models={} disagreements={}", r.models(), r.total_disagreements()).unwrap();
    Ok(s)
}

fn cmd_selftest(cli: &Cli) -> Result<String, Failure> {
    let r = selftest(&SelftestConfig::new(cli.seed, cli.trials));
    let out = if cli.json {
        to_json(&r)
    } else {
        let mut s = String::new();
        for (name, c) in &r.checks {
            let tag = if c.failures == 0 { "ok" } else { "FAIL" };
            writeln!(s, "{tag:4} {name}: {} cases, {} failures", c.cases, c.failures).unwrap();
        }
        for f in &r.failures {
            writeln!(s, "failure: {f}").unwrap();
        }
        s
    };
    if r.passed {
        Ok(out)
    } else {
        let _ = std::io::stdout().write_all(out.as_bytes());
        Err(Failure::Internal("selftest failed".into()))
    }
}

fn cmd_transform(cli: &Cli, path: &Path, op: &str, at: usize, verify: bool) -> Result<String, Failure> {
    let m = load(path)?;
    let t = Transform::from_op(op, at).ok_or_else(|| Failure::Usage(format!("unknown op {op}")))?;
    let r = apply(&m, t).map_err(|e| Failure::InvalidModel(e.to_string()))?;
    let relation = if verify {
        let rel = verify_rank_relation(&m, t, &options(cli, false)).map_err(|e| match e {
            lincomp::transforms::TransformError::RelationFailed(_) => Failure::Internal(e.to_string()),
            _ => Failure::InvalidModel(e.to_string()),
        })?;
        Some(rel)
    } else {
        None
    };
    if cli.json {
        return Ok(to_json(&json!({
            "model": r.model,
            "guarantee": r.guarantee,
            "theorem_tag": r.theorem_tag,
            "relabeling": r.relabeling,
            "rank_relation": relation,
        })));
    }
    let mut s = String::new();
    writeln!(s, "{}", r.model.to_json()).unwrap();
    if r.theorem_tag.is_empty() {
        writeln!(s, "guarantee: {}", r.guarantee).unwrap();
    } else {
        writeln!(s, "guarantee: {} ({})", r.guarantee, r.theorem_tag).unwrap();
    }
    if let Some(note) = &r.relabeling {
        writeln!(s, "relabeling: {note}").unwrap();
    }
    if let Some(rel) = relation {
        writeln!(
            s,
            "rank: {} -> {} ({} coefficient relations hold)",
            rel.rank_before, rel.rank_after, rel.relations_checked
        )
        .unwrap();
    }
    Ok(s)
}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.cmd {
        Cmd::Analyze { model, force_rank } => cmd_analyze(cli, model, *force_rank),
        Cmd::Coeffs { model, method } => cmd_coeffs(cli, model, *method),
        Cmd::SweepTrees { max_n, max_leaks } => cmd_sweep(cli, *max_n, *max_leaks),
        Cmd::Selftest => cmd_selftest(cli),
        Cmd::Transform { model, op, at, verify } => cmd_transform(cli, model, op, *at, *verify),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(mut out)) => {
            if !out.ends_with('\n') {
                out.push('\n');
            }
            // A closed pipe downstream is not an error worth reporting.
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
        Err(_) => ExitCode::from(3),
    }
}
