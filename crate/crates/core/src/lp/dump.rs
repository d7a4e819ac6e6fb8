use std::fmt::Write;

use num_traits::{Signed, Zero};

use super::{LpProblem, Sign};
use crate::poly::{AffineForm, LpVar};
use crate::{to_f64, Rational};

fn num(r: &Rational) -> String {
    if r.is_integer() {
        r.to_string()
    } else {
        format!("{:.17e}", to_f64(r))
    }
}

fn name(p: &LpProblem, v: LpVar) -> String {
    // LP-format identifiers may not contain '#'
    p.name(v).replace('#', "_")
}

fn linear(p: &LpProblem, f: &AffineForm) -> String {
    let mut s = String::new();
    for (i, (v, c)) in f.coeffs.iter().enumerate() {
        let sep = match (i, c.is_negative()) {
            (0, false) => "",
            (0, true) => "-",
            (_, false) => " + ",
            (_, true) => " - ",
        };
        let _ = write!(s, "{sep}{} {}", num(&c.abs()), name(p, *v));
    }
    if s.is_empty() {
        s.push_str("0 ");
        s.push_str(&if p.num_vars() > 0 {
            name(p, LpVar(0))
        } else {
            "x".into()
        });
    }
    s
}

/// Renders the problem in CPLEX LP text format. Non-integral rationals are
/// written as decimals, so the dump is for cross-checking only.
pub fn dump_lp(p: &LpProblem) -> String {
    let mut out = String::new();
    out.push_str("\\ exact rational problem, decimals are rounded\n");
    if !p.objective.constant.is_zero() {
        let _ = writeln!(out, "\\ objective constant {}", p.objective.constant);
    }
    out.push_str("Minimize\n");
    let _ = writeln!(out, " obj: {}", linear(p, &p.objective));
    out.push_str("Subject To\n");
    for (i, e) in p.equalities.iter().enumerate() {
        let _ = writeln!(out, " e{i}: {} = {}", linear(p, e), num(&-e.constant.clone()));
    }
    out.push_str("Bounds\n");
    for i in 0..p.num_vars() {
        let v = LpVar(i as u32);
        if p.sign(v) == Sign::Free {
            let _ = writeln!(out, " {} free", name(p, v));
        }
    }
    out.push_str("End\n");
    out
}
