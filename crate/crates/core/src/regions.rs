//! Linear predicates as unions of polyhedra.
//!
//! A [`Region`] is a disjunction of [`Polyhedron`]s, each a conjunction of
//! linear terms `g >= 0`. Negated atoms are relaxed to their non-strict
//! complement, so converted regions always over-approximate the predicate.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lp::{self, LpOutcome, LpProblem, Sign};
use crate::poly::{AffineForm, LpVar, Monomial, Poly};
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegionError {
    #[error("nonlinear atom {0} in a linear predicate")]
    Nonlinear(String),
    #[error("region is infeasible")]
    Infeasible,
}

/// Boolean combination of polynomial atoms `p >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum Pred {
    True,
    False,
    Atom(Poly),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
}

impl Pred {
    /// Exact truth value at a point.
    pub fn eval(&self, point: &[Rational]) -> bool {
        match self {
            Pred::True => true,
            Pred::False => false,
            Pred::Atom(p) => !p.eval(point).is_negative(),
            Pred::And(a, b) => a.eval(point) && b.eval(point),
            Pred::Or(a, b) => a.eval(point) || b.eval(point),
            Pred::Not(a) => !a.eval(point),
        }
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> PredDisplay<'a> {
        PredDisplay { p: self, names }
    }
}

impl std::ops::Not for Pred {
    type Output = Pred;

    fn not(self) -> Pred {
        Pred::Not(Box::new(self))
    }
}

pub struct PredDisplay<'a> {
    p: &'a Pred,
    names: &'a [String],
}

impl fmt::Display for PredDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.p {
            Pred::True => write!(f, "true"),
            Pred::False => write!(f, "false"),
            Pred::Atom(p) => write!(f, "{} >= 0", p.display(self.names)),
            Pred::And(a, b) => write!(f, "({} and {})", a.display(self.names), b.display(self.names)),
            Pred::Or(a, b) => write!(f, "({} or {})", a.display(self.names), b.display(self.names)),
            Pred::Not(a) => write!(f, "not {}", a.display(self.names)),
        }
    }
}

/// Linear term `sum coeffs[i] * v_i + constant`, read as `>= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinTerm {
    pub coeffs: BTreeMap<usize, Rational>,
    pub constant: Rational,
}

enum Canon {
    True,
    False,
    Term(LinTerm),
}

impl LinTerm {
    /// Reads a polynomial of degree at most one.
    pub fn from_poly(p: &Poly) -> Option<LinTerm> {
        if p.degree() > 1 {
            return None;
        }
        let mut coeffs = BTreeMap::new();
        let mut constant = Rational::zero();
        for (m, c) in p.terms() {
            if m.is_one() {
                constant = c.clone();
            } else {
                let i = m.exps().iter().position(|&e| e == 1).unwrap();
                coeffs.insert(i, c.clone());
            }
        }
        Some(LinTerm { coeffs, constant })
    }

    pub fn to_poly(&self, nvars: usize) -> Poly {
        let mut p = Poly::from_rational(nvars, self.constant.clone());
        for (i, c) in &self.coeffs {
            p.add_term(Monomial::var(nvars, *i), c);
        }
        p
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        let mut v = self.constant.clone();
        for (i, c) in &self.coeffs {
            v += c * &point[*i];
        }
        v
    }

    pub fn negated(&self) -> LinTerm {
        LinTerm {
            coeffs: self.coeffs.iter().map(|(i, c)| (*i, -c.clone())).collect(),
            constant: -self.constant.clone(),
        }
    }

    fn canonical(mut self) -> Canon {
        self.coeffs.retain(|_, c| !c.is_zero());
        match self.coeffs.values().next() {
            None => {
                if self.constant.is_negative() {
                    Canon::False
                } else {
                    Canon::True
                }
            }
            Some(first) => {
                let k = first.abs();
                if !k.is_one() {
                    for c in self.coeffs.values_mut() {
                        *c /= &k;
                    }
                    self.constant /= &k;
                }
                Canon::Term(self)
            }
        }
    }

    fn as_form(&self, vars: &[LpVar]) -> AffineForm {
        let mut f = AffineForm::constant(self.constant.clone());
        for (i, c) in &self.coeffs {
            f.add_var(vars[*i], c);
        }
        f
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        let nvars = names.len();
        DisplayLin(self.to_poly(nvars), names)
    }
}

struct DisplayLin<'a>(Poly, &'a [String]);

impl fmt::Display for DisplayLin<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.display(self.1))
    }
}

/// Conjunction of linear terms (the generator set of a Handelman certificate).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Polyhedron {
    gens: Vec<LinTerm>,
}

/// Lower and upper bound; `None` means unbounded in that direction.
pub type Range = (Option<Rational>, Option<Rational>);

impl Polyhedron {
    /// Builds a polyhedron; `None` if some generator is a negative constant.
    pub fn new(terms: impl IntoIterator<Item = LinTerm>) -> Option<Polyhedron> {
        let mut p = Polyhedron::default();
        for t in terms {
            if !p.push(t) {
                return None;
            }
        }
        Some(p)
    }

    fn push(&mut self, t: LinTerm) -> bool {
        match t.canonical() {
            Canon::True => true,
            Canon::False => false,
            Canon::Term(t) => {
                if !self.gens.contains(&t) {
                    self.gens.push(t);
                }
                true
            }
        }
    }

    pub fn gens(&self) -> &[LinTerm] {
        &self.gens
    }

    pub fn contains(&self, point: &[Rational]) -> bool {
        self.gens.iter().all(|g| !g.eval(point).is_negative())
    }

    fn lp(&self, nvars: usize) -> (LpProblem, Vec<LpVar>) {
        let mut p = LpProblem::new();
        let vars: Vec<LpVar> = (0..nvars).map(|i| p.add_var(Sign::Free, format!("v{i}"))).collect();
        for g in &self.gens {
            p.add_nonneg(g.as_form(&vars));
        }
        (p, vars)
    }

    pub fn feasible_point(&self, nvars: usize) -> Option<Vec<Rational>> {
        let (p, vars) = self.lp(nvars);
        lp::feasibility(&p).map(|vals| vars.iter().map(|v| vals[v.0 as usize].clone()).collect())
    }

    pub fn is_feasible(&self, nvars: usize) -> bool {
        self.feasible_point(nvars).is_some()
    }

    /// Range of a linear term over the polyhedron; `None` if infeasible.
    pub fn range_of(&self, t: &LinTerm, nvars: usize) -> Option<Range> {
        let (mut p, vars) = self.lp(nvars);
        let f = t.as_form(&vars);
        p.set_objective(f.clone());
        let lo = match lp::solve(&p) {
            LpOutcome::Infeasible => return None,
            LpOutcome::Unbounded => None,
            LpOutcome::Optimal { value, .. } => Some(value),
        };
        p.set_objective(f.scaled(&-Rational::one()));
        let hi = match lp::solve(&p) {
            LpOutcome::Infeasible => return None,
            LpOutcome::Unbounded => None,
            LpOutcome::Optimal { value, .. } => Some(-value),
        };
        Some((lo, hi))
    }

    pub fn var_range(&self, var: usize, nvars: usize) -> Option<Range> {
        let mut t = LinTerm {
            coeffs: BTreeMap::new(),
            constant: Rational::zero(),
        };
        t.coeffs.insert(var, Rational::one());
        self.range_of(&t, nvars)
    }

    /// True if every variable in `vars` is bounded (or the polyhedron is empty).
    pub fn is_bounded(&self, vars: &[usize], nvars: usize) -> bool {
        vars.iter().all(|&v| match self.var_range(v, nvars) {
            None => true,
            Some((lo, hi)) => lo.is_some() && hi.is_some(),
        })
    }

    /// `n` points of the polyhedron, deterministic per seed. Only the
    /// coordinates in `dims` vary; the others stay at zero.
    pub fn sample_points(
        &self,
        n: usize,
        seed: u64,
        dims: &[usize],
        nvars: usize,
    ) -> Result<Vec<Vec<Rational>>, RegionError> {
        let base = self.feasible_point(nvars).ok_or(RegionError::Infeasible)?;
        // centre: average of the base point and the per-axis extremes
        let (mut p, vars) = self.lp(nvars);
        let mut pts = vec![base];
        for &d in dims {
            for sgn in [1, -1] {
                p.set_objective(AffineForm::var(vars[d]).scaled(&Rational::from_integer(sgn.into())));
                if let LpOutcome::Optimal { values, .. } = lp::solve(&p) {
                    pts.push(vars.iter().map(|v| values[v.0 as usize].clone()).collect());
                }
            }
        }
        let k = Rational::from_integer((pts.len() as i64).into());
        let centre: Vec<Rational> = (0..nvars)
            .map(|i| pts.iter().map(|q| &q[i]).fold(Rational::zero(), |a, b| a + b) / &k)
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut x = centre.clone();
            for _ in 0..2 {
                x = self.step(&x, dims, &mut rng);
            }
            debug_assert!(self.contains(&x));
            out.push(x);
        }
        Ok(out)
    }

    /// One hit-and-run move along a random small-integer direction.
    fn step(&self, x: &[Rational], dims: &[usize], rng: &mut ChaCha8Rng) -> Vec<Rational> {
        const CAP: i64 = 64;
        const STEPS: i64 = 16;
        if dims.is_empty() {
            return x.to_vec();
        }
        let mut d = vec![Rational::zero(); x.len()];
        for &i in dims {
            d[i] = Rational::from_integer(rng.gen_range(-3i64..=3).into());
        }
        let mut tmin = Rational::from_integer((-CAP).into());
        let mut tmax = Rational::from_integer(CAP.into());
        for g in &self.gens {
            let gx = g.eval(x);
            let gd: Rational = g.coeffs.iter().map(|(i, c)| c * &d[*i]).sum();
            if gd.is_zero() {
                continue;
            }
            // gx + t*gd >= 0
            let t = -gx / &gd;
            if gd.is_positive() {
                tmin = tmin.max(t);
            } else {
                tmax = tmax.min(t);
            }
        }
        if tmin > tmax {
            return x.to_vec();
        }
        let k = Rational::new(rng.gen_range(0..=STEPS).into(), STEPS.into());
        let t = &tmin + (&tmax - &tmin) * k;
        x.iter().zip(&d).map(|(a, b)| a + &t * b).collect()
    }
}

/// Finite union of polyhedra; no disjuncts means the empty set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub disjuncts: Vec<Polyhedron>,
}

impl Region {
    pub fn top() -> Region {
        Region {
            disjuncts: vec![Polyhedron::default()],
        }
    }

    pub fn bottom() -> Region {
        Region { disjuncts: vec![] }
    }

    pub fn from_polyhedron(p: Polyhedron) -> Region {
        Region { disjuncts: vec![p] }
    }

    pub fn is_empty_syntactically(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn contains(&self, point: &[Rational]) -> bool {
        self.disjuncts.iter().any(|p| p.contains(point))
    }

    /// Converts a predicate to disjunctive normal form, relaxing negated
    /// atoms `not (g >= 0)` to `-g >= 0`.
    pub fn from_pred(pred: &Pred, names: &[String]) -> Result<Region, RegionError> {
        let dnf = dnf(pred, false, names)?;
        let mut disjuncts = Vec::new();
        for conj in dnf {
            if let Some(p) = Polyhedron::new(conj) {
                if !disjuncts.contains(&p) {
                    disjuncts.push(p);
                }
            }
        }
        Ok(Region { disjuncts })
    }

    /// Pairwise intersection of disjuncts.
    pub fn conjoin(&self, other: &Region) -> Region {
        let mut disjuncts = Vec::new();
        for a in &self.disjuncts {
            for b in &other.disjuncts {
                let p = Polyhedron::new(a.gens.iter().chain(&b.gens).cloned())
                    .expect("canonical generators are never constant-false");
                if !disjuncts.contains(&p) {
                    disjuncts.push(p);
                }
            }
        }
        Region { disjuncts }
    }

    /// Hull of the per-disjunct ranges of a variable; `None` if empty.
    pub fn var_range(&self, var: usize, nvars: usize) -> Option<Range> {
        let mut acc: Option<Range> = None;
        for p in &self.disjuncts {
            if let Some((lo, hi)) = p.var_range(var, nvars) {
                acc = Some(match acc {
                    None => (lo, hi),
                    Some((alo, ahi)) => (
                        alo.zip(lo).map(|(a, b)| a.min(b)),
                        ahi.zip(hi).map(|(a, b)| a.max(b)),
                    ),
                });
            }
        }
        acc
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> RegionDisplay<'a> {
        RegionDisplay { r: self, names }
    }
}

pub struct RegionDisplay<'a> {
    r: &'a Region,
    names: &'a [String],
}

impl fmt::Display for RegionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.r.disjuncts.is_empty() {
            return write!(f, "false");
        }
        for (i, p) in self.r.disjuncts.iter().enumerate() {
            if i > 0 {
                write!(f, " \\/ ")?;
            }
            if p.gens.is_empty() {
                write!(f, "true")?;
            }
            for (j, g) in p.gens.iter().enumerate() {
                if j > 0 {
                    write!(f, " /\\ ")?;
                }
                write!(f, "{} >= 0", g.display(self.names))?;
            }
        }
        Ok(())
    }
}

fn dnf(p: &Pred, neg: bool, names: &[String]) -> Result<Vec<Vec<LinTerm>>, RegionError> {
    Ok(match (p, neg) {
        (Pred::True, false) | (Pred::False, true) => vec![vec![]],
        (Pred::True, true) | (Pred::False, false) => vec![],
        (Pred::Atom(q), _) => {
            let t = LinTerm::from_poly(q)
                .ok_or_else(|| RegionError::Nonlinear(format!("{} >= 0", q.display(names))))?;
            vec![vec![if neg { t.negated() } else { t }]]
        }
        (Pred::Not(a), _) => dnf(a, !neg, names)?,
        (Pred::And(a, b), false) | (Pred::Or(a, b), true) => {
            let l = dnf(a, neg, names)?;
            let r = dnf(b, neg, names)?;
            let mut out = Vec::new();
            for x in &l {
                for y in &r {
                    out.push(x.iter().chain(y).cloned().collect());
                }
            }
            out
        }
        (Pred::Or(a, b), false) | (Pred::And(a, b), true) => {
            let mut out = dnf(a, neg, names)?;
            out.extend(dnf(b, neg, names)?);
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn names() -> Vec<String> {
        vec!["x".into(), "y".into(), "z".into()]
    }

    fn var(i: usize) -> Poly {
        Poly::var(3, i)
    }

    fn c(k: i64) -> Poly {
        Poly::from_rational(3, rat(k, 1))
    }

    fn ge(p: Poly, q: Poly) -> Pred {
        Pred::Atom(&p - &q)
    }

    fn show(r: &Region) -> String {
        r.display(&names()).to_string()
    }

    #[test]
    fn atoms_and_relaxed_negation() {
        let g = ge(var(0), c(1));
        assert_eq!(show(&Region::from_pred(&g, &names()).unwrap()), "x - 1 >= 0");
        let inv = Region::from_pred(&ge(var(0), c(0)), &names()).unwrap();
        let exit = Region::from_pred(&!g.clone(), &names()).unwrap();
        assert_eq!(show(&inv.conjoin(&exit)), "x >= 0 /\\ -x + 1 >= 0");
        let ab = Pred::And(Box::new(ge(var(0), c(5))), Box::new(ge(var(1), c(5))));
        assert_eq!(
            show(&Region::from_pred(&ab, &names()).unwrap()),
            "x - 5 >= 0 /\\ y - 5 >= 0"
        );
    }

    #[test]
    fn conjoin_cases() {
        let inv = Region::from_pred(&ge(var(0), c(0)), &names()).unwrap();
        let g = Region::from_pred(&ge(var(0), c(1)), &names()).unwrap();
        assert_eq!(show(&inv.conjoin(&g)), "x >= 0 /\\ x - 1 >= 0");
        assert_eq!(Region::top().conjoin(&g), g);
        let or = Pred::Or(Box::new(ge(var(0), c(0))), Box::new(ge(var(1), c(0))));
        let r = Region::from_pred(&or, &names())
            .unwrap()
            .conjoin(&Region::from_pred(&ge(var(2), c(0)), &names()).unwrap());
        assert_eq!(r.disjuncts.len(), 2);
    }

    #[test]
    fn canonical_scaling() {
        let t = ge(var(0).scale(&rat(2, 1)), c(2));
        assert_eq!(show(&Region::from_pred(&t, &names()).unwrap()), "x - 1 >= 0");
        let f = ge(c(0), c(1));
        assert!(Region::from_pred(&f, &names()).unwrap().is_empty_syntactically());
    }

    #[test]
    fn nonlinear_rejected() {
        let q = ge(var(0).mul(&var(1)), c(0));
        assert!(matches!(
            Region::from_pred(&q, &names()),
            Err(RegionError::Nonlinear(_))
        ));
    }

    #[test]
    fn sampling() {
        let r = Region::from_pred(&ge(var(0), c(1)), &names()).unwrap();
        let pts = r.disjuncts[0].sample_points(3, 7, &[0], 3).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|p| p[0] >= rat(1, 1)));

        let unit = Region::from_pred(
            &Pred::And(Box::new(ge(var(0), c(0))), Box::new(ge(c(1), var(0)))),
            &names(),
        )
        .unwrap();
        let pts = unit.disjuncts[0].sample_points(20, 1, &[0], 3).unwrap();
        assert!(pts.iter().all(|p| p[0] >= rat(0, 1) && p[0] <= rat(1, 1)));
        assert_eq!(pts, unit.disjuncts[0].sample_points(20, 1, &[0], 3).unwrap());

        let empty = Region::from_pred(
            &Pred::And(Box::new(ge(var(0), c(1))), Box::new(ge(c(0), var(0)))),
            &names(),
        )
        .unwrap();
        assert_eq!(
            empty.disjuncts[0].sample_points(3, 0, &[0], 3),
            Err(RegionError::Infeasible)
        );
    }

    #[test]
    fn ranges() {
        let box2 = Region::from_pred(
            &Pred::And(Box::new(ge(var(0), c(-1))), Box::new(ge(c(1), var(0)))),
            &names(),
        )
        .unwrap();
        assert_eq!(
            box2.var_range(0, 3),
            Some((Some(rat(-1, 1)), Some(rat(1, 1))))
        );
        assert_eq!(box2.var_range(1, 3), Some((None, None)));
        assert!(box2.disjuncts[0].is_bounded(&[0], 3));
        assert!(!box2.disjuncts[0].is_bounded(&[0, 1], 3));
    }
}
