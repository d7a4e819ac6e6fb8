//! Multivariate polynomials with exact rational coefficients, and
//! parametric polynomials whose coefficients are affine in LP unknowns.
//!
//! A polynomial lives over a fixed variable space of `nvars` variables
//! (program variables first, then sampling variables). Terms are kept in a
//! `BTreeMap` under graded order so rendering and iteration are stable.

mod affine;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use thiserror::Error;

pub use affine::{AffineForm, LpVar};

use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("product of two parametric polynomials is not linear in the unknowns")]
    Bilinear,
}

/// Exponent vector over the full variable space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn from_exps(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn exp(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn with_exp(&self, i: usize, e: u32) -> Monomial {
        let mut m = self.clone();
        m.0[i] = e;
        m
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        let mut acc = Rational::one();
        for (i, &e) in self.0.iter().enumerate() {
            if e > 0 {
                acc *= num_traits::pow(point[i].clone(), e as usize);
            }
        }
        acc
    }

    pub fn render(&self, names: &[String]) -> String {
        let mut parts = Vec::new();
        for (i, &e) in self.0.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(names[i].clone()),
                _ => parts.push(format!("{}^{}", names[i], e)),
            }
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials over the variables in `used` (of `nvars` total)
/// with total degree at most `d`, in lexicographic order by exponent vector
/// (so for `x, y` and `d = 2`: `x^2, x*y, x, y^2, y, 1`).
pub fn monomials_up_to(nvars: usize, used: &[usize], d: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    fn rec(
        used: &[usize],
        pos: usize,
        left: u32,
        cur: &mut Vec<u32>,
        out: &mut Vec<Monomial>,
    ) {
        if pos == used.len() {
            out.push(Monomial(cur.clone()));
            return;
        }
        for e in (0..=left).rev() {
            cur[used[pos]] = e;
            rec(used, pos + 1, left - e, cur, out);
        }
        cur[used[pos]] = 0;
    }
    rec(used, 0, d, &mut cur, &mut out);
    out
}

/// Coefficient ring of a polynomial.
pub trait Coeff: Clone + PartialEq + fmt::Debug + fmt::Display {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_scaled(&mut self, other: &Self, k: &Rational);
    fn scaled(&self, k: &Rational) -> Self;
    fn from_rational(r: Rational) -> Self;
    /// `Some` when the coefficient is a plain number.
    fn as_rational(&self) -> Option<&Rational>;
}

impl Coeff for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_scaled(&mut self, other: &Self, k: &Rational) {
        *self += other * k;
    }
    fn scaled(&self, k: &Rational) -> Self {
        self * k
    }
    fn from_rational(r: Rational) -> Self {
        r
    }
    fn as_rational(&self) -> Option<&Rational> {
        Some(self)
    }
}

impl Coeff for AffineForm {
    fn zero() -> Self {
        AffineForm::default()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.constant) && self.coeffs.is_empty()
    }
    fn add_scaled(&mut self, other: &Self, k: &Rational) {
        self.add_form(other, k);
    }
    fn scaled(&self, k: &Rational) -> Self {
        AffineForm::scaled(self, k)
    }
    fn from_rational(r: Rational) -> Self {
        AffineForm::constant(r)
    }
    fn as_rational(&self) -> Option<&Rational> {
        if self.coeffs.is_empty() {
            Some(&self.constant)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<C> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

pub type Poly = Polynomial<Rational>;
pub type ParamPoly = Polynomial<AffineForm>;

impl<C: Coeff> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), &c);
        p
    }

    pub fn term(m: Monomial, c: C) -> Self {
        let mut p = Self::zero(m.0.len());
        p.add_term(m, &c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Highest exponent of variable `i` in any term.
    pub fn var_degree(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.exp(i)).max().unwrap_or(0)
    }

    /// Variables that occur with a nonzero exponent.
    pub fn vars(&self) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    s.insert(i);
                }
            }
        }
        s
    }

    pub fn coeff(&self, m: &Monomial) -> Option<&C> {
        self.terms.get(m)
    }

    /// Terms in ascending graded order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: &C) {
        self.add_term_scaled(m, c, &Rational::one());
    }

    fn add_term_scaled(&mut self, m: Monomial, c: &C, k: &Rational) {
        debug_assert_eq!(m.0.len(), self.nvars);
        if c.is_zero() || Zero::is_zero(k) {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(e) => {
                e.add_scaled(c, k);
                if e.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c.scaled(k));
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, k: &Rational) {
        assert_eq!(self.nvars, other.nvars, "variable spaces differ");
        for (m, c) in &other.terms {
            self.add_term_scaled(m.clone(), c, k);
        }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        let mut p = Self::zero(self.nvars);
        p.add_scaled(self, k);
        p
    }

    /// Product with a polynomial whose coefficients are plain numbers.
    pub fn mul_concrete(&self, other: &Poly) -> Self {
        assert_eq!(self.nvars, other.nvars, "variable spaces differ");
        let mut p = Self::zero(self.nvars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                p.add_term_scaled(m1.mul(m2), c1, c2);
            }
        }
        p
    }

    /// Replaces variable `var` by `rhs`.
    pub fn substitute(&self, var: usize, rhs: &Poly) -> Self {
        let mut powers: Vec<Poly> = vec![Poly::one(self.nvars)];
        let mut p = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.exp(var) as usize;
            if e == 0 {
                p.add_term(m.clone(), c);
                continue;
            }
            while powers.len() <= e {
                let next = powers.last().unwrap().mul(rhs);
                powers.push(next);
            }
            let rest = m.with_exp(var, 0);
            for (m2, c2) in &powers[e].terms {
                p.add_term_scaled(rest.mul(m2), c, c2);
            }
        }
        p
    }

    /// Integrates out the variables in `vars`, which must be mutually
    /// independent; `moment(v, k)` gives `E[v^k]`.
    pub fn expect_vars(&self, vars: &[usize], moment: &dyn Fn(usize, u32) -> Rational) -> Self {
        let mut p = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut k = Rational::one();
            let mut rest = m.clone();
            for &v in vars {
                let e = m.exp(v);
                if e > 0 {
                    k *= moment(v, e);
                    rest.0[v] = 0;
                }
            }
            p.add_term_scaled(rest, c, &k);
        }
        p
    }

    /// Rewrites the polynomial into a different variable space via `map`
    /// (old index to new index).
    pub fn remap(&self, nvars: usize, map: &dyn Fn(usize) -> usize) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in &self.terms {
            let mut e = vec![0; nvars];
            for (i, &x) in m.0.iter().enumerate() {
                if x > 0 {
                    e[map(i)] += x;
                }
            }
            p.add_term(Monomial(e), c);
        }
        p
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a, C> {
        PolyDisplay { p: self, names }
    }
}

impl Poly {
    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn from_rational(nvars: usize, r: Rational) -> Self {
        Self::constant(nvars, r)
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        Self::term(Monomial::var(nvars, i), Rational::one())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.mul_concrete(other)
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one(self.nvars);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        let mut acc = <Rational as Zero>::zero();
        for (m, c) in &self.terms {
            acc += c * m.eval(point);
        }
        acc
    }

    /// The constant term.
    pub fn constant_term(&self) -> Rational {
        self.terms
            .get(&Monomial::one(self.nvars))
            .cloned()
            .unwrap_or_default()
    }

    pub fn to_param(&self) -> ParamPoly {
        let mut p = ParamPoly::zero(self.nvars);
        for (m, c) in &self.terms {
            p.terms.insert(m.clone(), AffineForm::constant(c.clone()));
        }
        p
    }
}

impl ParamPoly {
    pub fn mul(&self, other: &ParamPoly) -> Result<ParamPoly, PolyError> {
        if let Some(c) = other.as_concrete() {
            Ok(self.mul_concrete(&c))
        } else if let Some(c) = self.as_concrete() {
            Ok(other.mul_concrete(&c))
        } else {
            Err(PolyError::Bilinear)
        }
    }

    pub fn as_concrete(&self) -> Option<Poly> {
        let mut p = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            p.add_term(m.clone(), c.as_rational()?);
        }
        Some(p)
    }

    pub fn instantiate(&self, value: &dyn Fn(LpVar) -> Rational) -> Poly {
        let mut p = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            p.add_term(m.clone(), &c.eval(value));
        }
        p
    }

    pub fn lp_vars(&self) -> BTreeSet<LpVar> {
        self.terms.values().flat_map(|c| c.vars()).collect()
    }
}

impl<C: Coeff> Add for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: Self) -> Polynomial<C> {
        let mut p = self.clone();
        p.add_scaled(rhs, &Rational::one());
        p
    }
}

impl<C: Coeff> Sub for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, rhs: Self) -> Polynomial<C> {
        let mut p = self.clone();
        p.add_scaled(rhs, &-Rational::one());
        p
    }
}

impl<C: Coeff> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        self.scale(&-Rational::one())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: Self) -> Poly {
        self.mul_concrete(rhs)
    }
}

pub struct PolyDisplay<'a, C> {
    p: &'a Polynomial<C>,
    names: &'a [String],
}

impl<C: Coeff> fmt::Display for PolyDisplay<'_, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.p.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.p.terms.iter().rev().enumerate() {
            let first = i == 0;
            let name = (!m.is_one()).then(|| m.render(self.names));
            match c.as_rational() {
                Some(r) => affine::write_signed(f, r, name.as_deref(), first)?,
                None => {
                    if !first {
                        write!(f, " + ")?;
                    }
                    match name {
                        Some(n) => write!(f, "({c})*{n}")?,
                        None => write!(f, "({c})")?,
                    }
                }
            }
        }
        Ok(())
    }
}
