//! Input-output equations from symbolic determinants.
//!
//! For output `i` the equation is
//! `det(λI - A) y_i = Σ_{j ∈ In} (-1)^{i+j} det((λI - A)^{j,i}) u_j`,
//! with `λ` standing for `d/dt` and `B^{j,i}` the matrix `B` without row `j`
//! and column `i`. This module computes both sides directly and serves as the
//! reference the forest formulas are checked against.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::auxgraph::{compartmental_matrix, star_matrix, SymMatrix};
use crate::error::AnalysisError;
use crate::forest::{forest_sums, multigraph_sums, pair_sign, rhs_forest_sums};
use crate::auxgraph::strip_outgoing;
use crate::model::{CompartmentId, Model, Param};
use crate::poly::{LambdaPoly, Polynomial};

type LambdaMatrix = Vec<Vec<LambdaPoly>>;

/// `λI - M` with 0-based rows and columns.
fn lambda_matrix(m: &SymMatrix) -> LambdaMatrix {
    let n = m.size();
    (1..=n)
        .map(|r| {
            (1..=n)
                .map(|c| {
                    let neg = -m.get(r, c);
                    if r == c {
                        LambdaPoly::lambda_plus(neg)
                    } else {
                        LambdaPoly::constant(neg)
                    }
                })
                .collect()
        })
        .collect()
}

/// Determinant by Laplace expansion along successive rows, memoized over the
/// set of columns still available.
pub fn det_laplace(mat: &[Vec<LambdaPoly>]) -> LambdaPoly {
    let n = mat.len();
    assert!(n < 26, "matrix too large for subset memoization");
    let mut memo: Vec<Option<LambdaPoly>> = vec![None; 1 << n];
    memo[0] = Some(LambdaPoly::constant(Polynomial::one()));
    let mut masks: Vec<usize> = (1..1usize << n).collect();
    masks.sort_by_key(|m| m.count_ones());
    for mask in masks {
        let row = n - mask.count_ones() as usize;
        let mut acc = LambdaPoly::zero();
        let mut pos = 0;
        for col in 0..n {
            if mask & (1 << col) == 0 {
                continue;
            }
            let entry = &mat[row][col];
            if !entry.is_zero() {
                let sub = memo[mask & !(1 << col)].as_ref().unwrap();
                let term = entry * sub;
                acc = if pos % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            pos += 1;
        }
        memo[mask] = Some(acc);
    }
    memo.pop().flatten().unwrap()
}

/// Determinant as a signed sum over all permutations. Exponential; used only
/// to cross-check [`det_laplace`].
pub fn det_leibniz(mat: &[Vec<LambdaPoly>]) -> LambdaPoly {
    let n = mat.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = LambdaPoly::zero();
    permute(mat, &mut perm, 0, 1, &mut total);
    total
}

fn permute(mat: &[Vec<LambdaPoly>], perm: &mut [usize], k: usize, sign: i32, total: &mut LambdaPoly) {
    let n = perm.len();
    if k == n {
        let mut prod = LambdaPoly::constant(Polynomial::one());
        for (r, &c) in perm.iter().enumerate() {
            if mat[r][c].is_zero() {
                return;
            }
            prod = &prod * &mat[r][c];
        }
        *total = if sign > 0 { &*total + &prod } else { &*total - &prod };
        return;
    }
    for i in k..n {
        perm.swap(k, i);
        permute(mat, perm, k + 1, if i == k { sign } else { -sign }, total);
        perm.swap(k, i);
    }
}

fn drop_rows_cols(mat: &LambdaMatrix, rows: &[usize], cols: &[usize]) -> LambdaMatrix {
    mat.iter()
        .enumerate()
        .filter(|(r, _)| !rows.contains(&(r + 1)))
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(c, _)| !cols.contains(&(c + 1)))
                .map(|(_, v)| v.clone())
                .collect()
        })
        .collect()
}

/// `det(λI - M)`.
pub fn char_lambda_poly(m: &SymMatrix) -> LambdaPoly {
    det_laplace(&lambda_matrix(m))
}

/// `det((λI - M)^{drop_row, drop_col})`, indices 1-based.
pub fn minor_lambda_poly(m: &SymMatrix, drop_row: usize, drop_col: usize) -> LambdaPoly {
    minor_multi(m, &[drop_row], &[drop_col])
}

/// Determinant of `λI - M` with several rows and columns removed (1-based).
pub fn minor_multi(m: &SymMatrix, rows: &[usize], cols: &[usize]) -> LambdaPoly {
    let n = m.size();
    assert!(rows.iter().chain(cols).all(|&i| (1..=n).contains(&i)));
    assert_eq!(rows.len(), cols.len());
    det_laplace(&drop_rows_cols(&lambda_matrix(m), rows, cols))
}

/// Right-hand side entry for one input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhsTerm {
    /// `(-1)^{out+input}`.
    pub sign: i8,
    /// Coefficients `λ^0 .. λ^{n-1}` of `det((λI - A)^{input,out})`.
    pub minor: Vec<Polynomial>,
}

impl RhsTerm {
    /// Coefficients of `u_j, u_j', ...` as they appear in the equation:
    /// `sign * minor`.
    pub fn net(&self) -> Vec<Polynomial> {
        self.minor
            .iter()
            .map(|c| if self.sign > 0 { c.clone() } else { -c })
            .collect()
    }
}

/// One input-output equation, for a single output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IoEquation {
    pub out: CompartmentId,
    /// `c_0, ..., c_n` with `c_n = 1`.
    pub lhs: Vec<Polynomial>,
    pub rhs: BTreeMap<CompartmentId, RhsTerm>,
}

pub fn io_equation(m: &Model, out: CompartmentId) -> Result<IoEquation, AnalysisError> {
    if m.inputs().is_empty() {
        return Err(AnalysisError::NoInputs);
    }
    if !m.outputs().contains(&out) {
        return Err(AnalysisError::NotAnOutput(out));
    }
    let n = m.n();
    let a = compartmental_matrix(m);
    let lhs = char_lambda_poly(&a).coeff_vec(n + 1);
    let rhs = m
        .inputs()
        .iter()
        .map(|&j| {
            let minor = minor_lambda_poly(&a, j, out).coeff_vec(n);
            (j, RhsTerm { sign: pair_sign(out, j), minor })
        })
        .collect();
    Ok(IoEquation { out, lhs, rhs })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("identity `{identity}` failed: {detail}")]
pub struct IdentityFailure {
    pub identity: String,
    pub detail: String,
}

fn require(ok: bool, identity: &str, detail: impl FnOnce() -> String) -> Result<(), IdentityFailure> {
    if ok {
        Ok(())
    } else {
        Err(IdentityFailure {
            identity: identity.to_string(),
            detail: detail(),
        })
    }
}

/// Counts of identities verified by [`check_minor_identities`].
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct MinorReport {
    pub leaf_identities: usize,
    pub two_row_col: usize,
    pub rhs_signs: usize,
    pub prodeq: usize,
}

/// The three determinant identities relating a leakless model to the model
/// with a leaf edge `1 <-> n` attached (with `n` the new compartment):
///
/// 1. `det(λI - A') = (λ + a_1n) det(λI - A) + a_n1 λ det((λI - A)^{1,1})`
/// 2. `det((λI - A')^{1,n}) = (-1)^{n-1} a_n1 det((λI - A)^{1,1})`
/// 3. `det((λI - A')^{n,1}) = (-1)^{n-1} a_1n det((λI - A)^{1,1})`
pub fn check_leaf_identities(m: &Model) -> Result<usize, IdentityFailure> {
    let leafed = m.with_leaf_edge(1).expect("compartment 1 exists");
    let n = leafed.n();
    let a = compartmental_matrix(m);
    let a_leaf = compartmental_matrix(&leafed);
    let det_a = char_lambda_poly(&a);
    let minor_11 = minor_lambda_poly(&a, 1, 1);
    let a_n1 = Polynomial::var(Param::edge(1, n));
    let a_1n = Polynomial::var(Param::edge(n, 1));
    let sign = if (n - 1) % 2 == 0 { Polynomial::one() } else { Polynomial::constant(-1) };

    let lhs1 = char_lambda_poly(&a_leaf);
    let rhs1 = &(&det_a.shift() + &det_a.scale(&a_1n)) + &minor_11.shift().scale(&a_n1);
    require(lhs1 == rhs1, "leaf identity (1)", || format!("{lhs1} != {rhs1}"))?;

    let lhs2 = minor_lambda_poly(&a_leaf, 1, n);
    let rhs2 = minor_11.scale(&(&sign * &a_n1));
    require(lhs2 == rhs2, "leaf identity (2)", || format!("{lhs2} != {rhs2}"))?;

    let lhs3 = minor_lambda_poly(&a_leaf, n, 1);
    let rhs3 = minor_11.scale(&(&sign * &a_1n));
    require(lhs3 == rhs3, "leaf identity (3)", || format!("{lhs3} != {rhs3}"))?;
    Ok(3)
}

/// `λ · det((λI - A)^{{1,i},{1,j}}) = det((λI - A*_1)^{i,j})` for all
/// `i, j ≠ 1`.
pub fn check_two_row_col(m: &Model) -> Result<usize, IdentityFailure> {
    let n = m.n();
    let a = compartmental_matrix(m);
    let star = star_matrix(m, 1);
    let mut count = 0;
    for i in 2..=n {
        for j in 2..=n {
            let lhs = minor_multi(&a, &[1, i], &[1, j]).shift();
            let rhs = minor_lambda_poly(&star, i, j);
            require(lhs == rhs, "remove two rows and columns", || {
                format!("i={i}, j={j}: {lhs} != {rhs}")
            })?;
            count += 1;
        }
    }
    Ok(count)
}

/// Coefficients of `det((λI - A)^{r,q})` equal `(-1)^{q+r}` times the forest
/// sums over `F^{r,q}_{n-k-1}` of the graph stripped at `q`, for all `r, q`.
pub fn check_rhs_signs(m: &Model) -> Result<usize, IdentityFailure> {
    let n = m.n();
    let a = compartmental_matrix(m);
    let mut count = 0;
    for r in 1..=n {
        for q in 1..=n {
            let minor = minor_lambda_poly(&a, r, q).coeff_vec(n);
            let forest = rhs_forest_sums(m, q, r);
            let signed: Vec<Polynomial> = forest
                .d
                .iter()
                .map(|d| if forest.sign > 0 { d.clone() } else { -d })
                .collect();
            require(minor == signed, "minor sign", || format!("r={r}, q={q}"))?;
            count += 1;
        }
    }
    Ok(count)
}

/// For each compartment `i`, forest sums over `F^{i,i}_j` of the graph
/// stripped at `i` equal those over `F_j` of the flipped multigraph.
pub fn check_prodeq(m: &Model) -> Result<usize, IdentityFailure> {
    let n = m.n();
    let mut count = 0;
    for i in 1..=n {
        let stripped = forest_sums(&strip_outgoing(m, i), Some((i, i)));
        let multi = multigraph_sums(m, i);
        for (k, d) in multi.iter().enumerate() {
            let j = n - k - 1;
            require(&stripped[j] == d, "forest flip bijection", || {
                format!("i={i}, j={j}: {} != {d}", stripped[j])
            })?;
            count += 1;
        }
    }
    Ok(count)
}

/// Runs every determinant identity on a strongly connected leakless model:
/// the leaf identities on `(m, m + leaf at 1)`, and the row/column, sign and
/// flip identities on both models.
pub fn check_minor_identities(m: &Model) -> Result<MinorReport, IdentityFailure> {
    let pre = |ok: bool, what: &str| {
        require(ok, "preconditions", || what.to_string())
    };
    pre(m.is_strongly_connected(), "model must be strongly connected")?;
    pre(m.leaks().is_empty(), "model must be leakless")?;
    let leafed = m.with_leaf_edge(1).expect("compartment 1 exists");
    let mut report = MinorReport {
        leaf_identities: check_leaf_identities(m)?,
        ..MinorReport::default()
    };
    for model in [m, &leafed] {
        report.two_row_col += check_two_row_col(model)?;
        report.rhs_signs += check_rhs_signs(model)?;
        report.prodeq += check_prodeq(model)?;
    }
    Ok(report)
}
