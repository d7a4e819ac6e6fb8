//! Positivity certificates on polyhedra.
//!
//! A polynomial `g` is certified nonnegative on `{g_1 >= 0, ..., g_n >= 0}`
//! by writing it as a nonnegative combination of products of at most `K`
//! generators. Matching coefficients monomial by monomial turns this into
//! linear equalities over the template unknowns and fresh multipliers.

use std::collections::BTreeSet;
use std::ops::Range;

use itertools::Itertools;
use thiserror::Error;

use crate::lp::{LpProblem, Sign};
use crate::poly::{AffineForm, LpVar, Monomial, ParamPoly, Poly};
use crate::regions::LinTerm;
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{context}: obligation has degree {degree} but products are limited to {k} factors")]
pub struct DegreeOverflow {
    pub context: String,
    pub degree: u32,
    pub k: u32,
}

/// Products of at most `k` generators, as multisets (index lists) and
/// expanded polynomials. The empty product comes first.
pub fn monoid(gens: &[LinTerm], k: u32, nvars: usize) -> Vec<(Vec<usize>, Poly)> {
    let polys: Vec<Poly> = gens.iter().map(|g| g.to_poly(nvars)).collect();
    let mut out = vec![(vec![], Poly::one(nvars))];
    for size in 1..=k as usize {
        for combo in (0..gens.len()).combinations_with_replacement(size) {
            let p = combo
                .iter()
                .fold(Poly::one(nvars), |acc, &i| acc.mul(&polys[i]));
            out.push((combo, p));
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub generators: Vec<Poly>,
    pub multipliers: Vec<LpVar>,
    /// Indices of the equalities added to the LP.
    pub equalities: Range<usize>,
}

impl Certificate {
    /// `sum c_k * f_k` under a solved assignment.
    pub fn reconstruct(&self, values: &[Rational], nvars: usize) -> Poly {
        let mut p = Poly::zero(nvars);
        for (f, c) in self.generators.iter().zip(&self.multipliers) {
            p.add_scaled(f, &values[c.0 as usize]);
        }
        p
    }
}

/// Adds the equalities `g = sum c_k f_k` to `lp` with fresh `c_k >= 0`.
pub fn encode_nonneg(
    g: &ParamPoly,
    gens: &[LinTerm],
    k: u32,
    lp: &mut LpProblem,
    tag: &str,
) -> Result<Certificate, DegreeOverflow> {
    let nvars = g.nvars();
    if g.degree() > k {
        return Err(DegreeOverflow {
            context: tag.to_string(),
            degree: g.degree(),
            k,
        });
    }
    let products = monoid(gens, k, nvars);
    let multipliers: Vec<LpVar> = (0..products.len())
        .map(|i| lp.add_var(Sign::NonNeg, format!("{tag}_l{i}")))
        .collect();
    let mut monos: BTreeSet<Monomial> = g.terms().map(|(m, _)| m.clone()).collect();
    for (_, f) in &products {
        monos.extend(f.terms().map(|(m, _)| m.clone()));
    }
    let start = lp.equalities.len();
    for m in monos.iter().rev() {
        let mut eq = g.coeff(m).cloned().unwrap_or_default();
        for ((_, f), c) in products.iter().zip(&multipliers) {
            if let Some(fc) = f.coeff(m) {
                eq.add_var(*c, &-fc.clone());
            }
        }
        lp.add_equality(eq);
    }
    Ok(Certificate {
        generators: products.into_iter().map(|(_, p)| p).collect(),
        multipliers,
        equalities: start..lp.equalities.len(),
    })
}

/// Renders equalities as `lhs = rhs` lines with unknown names from the LP.
pub fn render_equalities(lp: &LpProblem, range: Range<usize>) -> Vec<String> {
    range
        .map(|i| {
            let e: &AffineForm = &lp.equalities[i];
            let mut s = String::new();
            for (v, c) in &e.coeffs {
                let neg = c < &Rational::default();
                let mag = if neg { -c.clone() } else { c.clone() };
                if s.is_empty() {
                    if neg {
                        s.push('-');
                    }
                } else {
                    s.push_str(if neg { " - " } else { " + " });
                }
                if mag != Rational::from_integer(1.into()) {
                    s.push_str(&format!("{mag}*"));
                }
                s.push_str(lp.name(*v));
            }
            if s.is_empty() {
                s.push('0');
            }
            format!("{s} = {}", -e.constant.clone())
        })
        .collect()
}
