//! Exact polynomials over the integers in the model parameters, a dense
//! univariate layer in `λ` on top of them, and evaluation over prime fields.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::model::Param;

/// Primes just below `2^61`, so that a product of two residues fits in `u128`.
pub const PRIMES: [u64; 3] = [
    2_305_843_009_213_693_951, // 2^61 - 1
    2_305_843_009_213_693_921,
    2_305_843_009_213_693_907,
];

/// A product of parameters, stored as a sorted multiset.
///
/// Ordered by total degree (descending) and then lexicographically on the
/// sorted factor list; this is also the order in which terms are printed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<Param>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn from_params(mut params: Vec<Param>) -> Self {
        params.sort_unstable();
        Monomial(params)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn factors(&self) -> &[Param] {
        &self.0
    }

    pub fn exponent(&self, x: Param) -> usize {
        self.0.iter().filter(|&&p| p == x).count()
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            if self.0[i] <= other.0[j] {
                out.push(self.0[i]);
                i += 1;
            } else {
                out.push(other.0[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .len()
            .cmp(&self.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut k = 0;
        let mut first = true;
        while k < self.0.len() {
            let p = self.0[k];
            let mut e = 1;
            while k + e < self.0.len() && self.0[k + e] == p {
                e += 1;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
            k += e;
        }
        Ok(())
    }
}

/// Sparse polynomial with arbitrary-precision integer coefficients.
/// Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, BigInt>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn constant(c: i64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), BigInt::from(c));
        p
    }

    pub fn var(x: Param) -> Self {
        Self::monomial(Monomial(vec![x]))
    }

    pub fn monomial(m: Monomial) -> Self {
        let mut p = Self::zero();
        p.add_term(m, BigInt::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True for the zero polynomial and for nonzero constants.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Monomial::one())
                .is_some_and(|c| c.is_one())
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Adds `c * m` in place.
    pub fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigInt) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    /// Formal partial derivative with respect to `x`.
    pub fn partial_derivative(&self, x: Param) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(x);
            if e == 0 {
                continue;
            }
            let mut factors = m.0.clone();
            let pos = factors.iter().position(|&p| p == x).unwrap();
            factors.remove(pos);
            out.add_term(Monomial(factors), c * BigInt::from(e));
        }
        out
    }

    /// Every parameter occurring in the polynomial.
    pub fn params(&self) -> Vec<Param> {
        let mut ps: Vec<Param> = self.terms.keys().flat_map(|m| m.0.iter().copied()).collect();
        ps.sort_unstable();
        ps.dedup();
        ps
    }

    /// True when every stored coefficient is `+1`.
    pub fn all_coefficients_one(&self) -> bool {
        self.terms.values().all(|c| c.is_one())
    }

    /// Exact evaluation modulo the prime of `pt`.
    pub fn eval_mod(&self, pt: &FieldPoint) -> Result<u64, EvalError> {
        let p = pt.prime;
        let mut acc: u64 = 0;
        for (m, c) in &self.terms {
            let mut v = reduce(c, p);
            for x in &m.0 {
                let xv = pt.get(*x).ok_or(EvalError::Unassigned(*x))?;
                v = mul_mod(v, xv, p);
            }
            acc = add_mod(acc, v, p);
        }
        Ok(acc)
    }
}

fn reduce(c: &BigInt, p: u64) -> u64 {
    if let Some(small) = c.to_i64() {
        return small.rem_euclid(p as i64) as u64;
    }
    let r = c % BigInt::from(p);
    let r = if r.is_negative() { r + BigInt::from(p) } else { r };
    r.to_u64().unwrap()
}

pub fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 + b as u128) % p as u128) as u64
}

pub fn sub_mod(a: u64, b: u64, p: u64) -> u64 {
    add_mod(a, p - b % p, p)
}

pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

/// Inverse of a nonzero residue modulo a prime.
pub fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    pow_mod(a, p - 2, p)
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.times(m2), c1 * c2);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

impl From<Param> for Polynomial {
    fn from(x: Param) -> Self {
        Polynomial::var(x)
    }
}

impl fmt::Display for Polynomial {
    /// Terms sorted by total degree (descending), then lexicographically,
    /// e.g. `a02*a13*a21 + a02*a21*a23 + a02*a23*a31`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.degree() == 0 {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParsePolyError {
    #[error("empty term in `{0}`")]
    EmptyTerm(String),
    #[error("cannot parse factor `{0}`")]
    BadFactor(String),
}

fn parse_param(s: &str) -> Option<Param> {
    let body = s.strip_prefix('a')?;
    let (i, j): (usize, usize) = if let Some((a, b)) = body.split_once('_') {
        (a.parse().ok()?, b.parse().ok()?)
    } else if body.len() == 2 && body.bytes().all(|b| b.is_ascii_digit()) {
        let d = body.as_bytes();
        ((d[0] - b'0') as usize, (d[1] - b'0') as usize)
    } else {
        return None;
    };
    match (i, j) {
        (_, 0) => None,
        (0, j) => Some(Param::leak(j)),
        (i, j) if i != j => Some(Param::edge(j, i)),
        _ => None,
    }
}

impl FromStr for Polynomial {
    type Err = ParsePolyError;

    /// Parses the canonical text form, in any term order. Factors are
    /// `aIJ`, `aI_J`, integers, optionally raised with `^k`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut out = Polynomial::zero();
        let mut rest = compact.as_str();
        let mut sign = 1i64;
        if let Some(r) = rest.strip_prefix('-') {
            sign = -1;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        }
        loop {
            let end = rest.find(['+', '-']).unwrap_or(rest.len());
            let term = &rest[..end];
            if term.is_empty() {
                return Err(ParsePolyError::EmptyTerm(s.to_string()));
            }
            let mut coeff = BigInt::from(sign);
            let mut factors = Vec::new();
            for factor in term.split('*') {
                let (base, exp) = match factor.split_once('^') {
                    Some((b, e)) => (
                        b,
                        e.parse::<usize>()
                            .map_err(|_| ParsePolyError::BadFactor(factor.to_string()))?,
                    ),
                    None => (factor, 1),
                };
                if let Ok(k) = base.parse::<BigInt>() {
                    for _ in 0..exp {
                        coeff *= &k;
                    }
                } else {
                    let x = parse_param(base)
                        .ok_or_else(|| ParsePolyError::BadFactor(factor.to_string()))?;
                    factors.extend(std::iter::repeat(x).take(exp));
                }
            }
            out.add_term(Monomial::from_params(factors), coeff);
            if end == rest.len() {
                break;
            }
            sign = if rest.as_bytes()[end] == b'-' { -1 } else { 1 };
            rest = &rest[end + 1..];
        }
        Ok(out)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("parameter {0} has no value at this point")]
    Unassigned(Param),
}

/// A point of parameter space over `GF(prime)`, all coordinates nonzero.
#[derive(Clone, Debug)]
pub struct FieldPoint {
    prime: u64,
    values: HashMap<Param, u64>,
}

impl FieldPoint {
    pub fn new(prime: u64, values: impl IntoIterator<Item = (Param, u64)>) -> Self {
        let values = values
            .into_iter()
            .map(|(x, v)| {
                let v = v % prime;
                assert!(v != 0, "coordinate of {x} is zero mod {prime}");
                (x, v)
            })
            .collect();
        FieldPoint { prime, values }
    }

    /// Uniform point in `[1, prime-1]^params`.
    pub fn random(prime: u64, params: &[Param], rng: &mut impl rand::Rng) -> Self {
        let values = params.iter().map(|&x| (x, rng.gen_range(1..prime)));
        FieldPoint::new(prime, values)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn get(&self, x: Param) -> Option<u64> {
        self.values.get(&x).copied()
    }
}

/// Dense polynomial in `λ` whose coefficients are [`Polynomial`]s.
/// Index `k` holds the coefficient of `λ^k`; no trailing zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LambdaPoly {
    coeffs: Vec<Polynomial>,
}

impl LambdaPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Polynomial) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// `λ + c`.
    pub fn lambda_plus(c: Polynomial) -> Self {
        Self::from_coeffs(vec![c, Polynomial::one()])
    }

    pub fn from_coeffs(mut coeffs: Vec<Polynomial>) -> Self {
        while coeffs.last().is_some_and(Polynomial::is_zero) {
            coeffs.pop();
        }
        LambdaPoly { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree in `λ`; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficient of `λ^k` (zero past the degree).
    pub fn coeff(&self, k: usize) -> Polynomial {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    /// Coefficients `[λ^0, λ^1, ..., λ^(len-1)]`, zero-padded to `len`.
    pub fn coeff_vec(&self, len: usize) -> Vec<Polynomial> {
        (0..len).map(|k| self.coeff(k)).collect()
    }

    pub fn coeffs(&self) -> &[Polynomial] {
        &self.coeffs
    }

    /// Multiplication by `λ`.
    pub fn shift(&self) -> LambdaPoly {
        if self.is_zero() {
            return LambdaPoly::zero();
        }
        let mut c = vec![Polynomial::zero()];
        c.extend(self.coeffs.iter().cloned());
        LambdaPoly { coeffs: c }
    }

    pub fn scale(&self, p: &Polynomial) -> LambdaPoly {
        LambdaPoly::from_coeffs(self.coeffs.iter().map(|c| c * p).collect())
    }
}

impl Add for &LambdaPoly {
    type Output = LambdaPoly;
    fn add(self, rhs: &LambdaPoly) -> LambdaPoly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        LambdaPoly::from_coeffs((0..len).map(|k| &self.coeff(k) + &rhs.coeff(k)).collect())
    }
}

impl Sub for &LambdaPoly {
    type Output = LambdaPoly;
    fn sub(self, rhs: &LambdaPoly) -> LambdaPoly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        LambdaPoly::from_coeffs((0..len).map(|k| &self.coeff(k) - &rhs.coeff(k)).collect())
    }
}

impl Neg for &LambdaPoly {
    type Output = LambdaPoly;
    fn neg(self) -> LambdaPoly {
        LambdaPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &LambdaPoly {
    type Output = LambdaPoly;
    fn mul(self, rhs: &LambdaPoly) -> LambdaPoly {
        if self.is_zero() || rhs.is_zero() {
            return LambdaPoly::zero();
        }
        let mut out = vec![Polynomial::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        LambdaPoly::from_coeffs(out)
    }
}

impl fmt::Display for LambdaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for k in (0..self.coeffs.len()).rev() {
            let c = &self.coeffs[k];
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let lam = match k {
                0 => String::new(),
                1 => "λ".to_string(),
                _ => format!("λ^{k}"),
            };
            match (k, c.is_one()) {
                (0, _) => write!(f, "({c})")?,
                (_, true) => write!(f, "{lam}")?,
                _ => write!(f, "({c})*{lam}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Polynomial {
        s.parse().unwrap()
    }

    #[test]
    fn add_and_multiply_examples() {
        assert_eq!((&p("a12") + &p("a13")).to_string(), "a12 + a13");
        assert_eq!((&p("a02") * &p("a13*a21")).to_string(), "a02*a13*a21");
        assert!((&p("a12 + 3*a13*a21") + &-&p("a12 + 3*a13*a21")).is_zero());
    }

    #[test]
    fn canonical_text_orders_by_degree_then_lex() {
        let c0 = p("a02*a23*a31 + a02*a13*a21 + a02*a21*a23");
        assert_eq!(c0.to_string(), "a02*a13*a21 + a02*a21*a23 + a02*a23*a31");
        assert_eq!(p("1 + a12 + a12*a21").to_string(), "a12*a21 + a12 + 1");
        assert_eq!(p("a12^2 - 2*a12 - 5").to_string(), "a12^2 - 2*a12 - 5");
        assert_eq!(Polynomial::zero().to_string(), "0");
    }

    #[test]
    fn derivative_examples() {
        let c0 = p("a02*a13*a21 + a02*a21*a23 + a02*a23*a31");
        let a21 = Param::edge(1, 2);
        assert_eq!(c0.partial_derivative(a21), p("a02*a13 + a02*a23"));
        assert!(Polynomial::constant(7).partial_derivative(a21).is_zero());
        assert_eq!(p("a21^2").partial_derivative(a21), p("2*a21"));
    }

    #[test]
    fn eval_examples() {
        let a12 = Param::edge(2, 1);
        let pt = FieldPoint::new(7, [(a12, 3)]);
        assert_eq!(Polynomial::constant(5).eval_mod(&pt), Ok(5));
        assert_eq!(Polynomial::var(a12).eval_mod(&pt), Ok(3));
        assert_eq!(Polynomial::constant(-1).eval_mod(&pt), Ok(6));
        assert_eq!(
            p("a13").eval_mod(&pt),
            Err(EvalError::Unassigned(Param::edge(3, 1)))
        );
        let c0 = p("a02*a13*a21 + a02*a21*a23 + a02*a23*a31");
        for prime in PRIMES {
            let ones = FieldPoint::new(prime, c0.params().into_iter().map(|x| (x, 1)));
            assert_eq!(c0.eval_mod(&ones), Ok(3));
        }
    }

    #[test]
    fn lambda_products() {
        let (a, b) = (p("a12"), p("a21"));
        let prod = &LambdaPoly::lambda_plus(a.clone()) * &LambdaPoly::lambda_plus(b.clone());
        assert_eq!(prod.coeffs(), &[&a * &b, &a + &b, Polynomial::one()]);
        assert!((&prod * &LambdaPoly::zero()).is_zero());
        assert_eq!(prod.degree(), Some(2));
        assert_eq!(prod.to_string(), "λ^2 + (a12 + a21)*λ + (a12*a21)");
    }

    #[test]
    fn modular_helpers() {
        let q = PRIMES[0];
        assert_eq!(mul_mod(inv_mod(12345, q), 12345, q), 1);
        assert_eq!(sub_mod(3, 5, 7), 5);
        assert_eq!(pow_mod(3, 6, 7), 1);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("a1".parse::<Polynomial>().is_err());
        assert!("a11".parse::<Polynomial>().is_err());
        assert!("a12 + ".parse::<Polynomial>().is_err());
        assert_eq!(p("a3_12"), Polynomial::var(Param::edge(12, 3)));
    }
}
