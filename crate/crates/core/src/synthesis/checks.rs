//! Checks of the side conditions a bound's soundness rests on.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};

use crate::cfg::{Cfg, LabelKind, Rule};
use crate::handelman::encode_nonneg;
use crate::lp::{self, LpProblem};
use crate::poly::Poly;
use crate::regions::{LinTerm, Polyhedron, Region};
use crate::Rational;

/// Extended rational, ordered `NegInf < Fin(_) < PosInf`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Ext {
    NegInf,
    Fin(Rational),
    PosInf,
}

impl Ext {
    fn from_opt(r: Option<Rational>, low: bool) -> Ext {
        match r {
            Some(r) => Ext::Fin(r),
            None if low => Ext::NegInf,
            None => Ext::PosInf,
        }
    }

    fn signum(&self) -> i8 {
        match self {
            Ext::NegInf => -1,
            Ext::PosInf => 1,
            Ext::Fin(r) if r.is_zero() => 0,
            Ext::Fin(r) if r.is_negative() => -1,
            Ext::Fin(_) => 1,
        }
    }

    fn add(&self, o: &Ext) -> Ext {
        match (self, o) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
            (Ext::NegInf, _) | (_, Ext::NegInf) => Ext::NegInf,
            _ => Ext::PosInf,
        }
    }

    /// With the convention `0 * inf = 0`.
    fn mul(&self, o: &Ext) -> Ext {
        match (self, o) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a * b),
            _ => match self.signum() * o.signum() {
                0 => Ext::Fin(Rational::zero()),
                s if s > 0 => Ext::PosInf,
                _ => Ext::NegInf,
            },
        }
    }
}

/// Closed interval with possibly infinite endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: Ext,
    hi: Ext,
}

impl Interval {
    pub fn point(r: Rational) -> Interval {
        Interval {
            lo: Ext::Fin(r.clone()),
            hi: Ext::Fin(r),
        }
    }

    pub fn top() -> Interval {
        Interval {
            lo: Ext::NegInf,
            hi: Ext::PosInf,
        }
    }

    pub fn new(lo: Option<Rational>, hi: Option<Rational>) -> Interval {
        Interval {
            lo: Ext::from_opt(lo, true),
            hi: Ext::from_opt(hi, false),
        }
    }

    pub fn lo(&self) -> Option<&Rational> {
        match &self.lo {
            Ext::Fin(r) => Some(r),
            _ => None,
        }
    }

    pub fn hi(&self) -> Option<&Rational> {
        match &self.hi {
            Ext::Fin(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo().is_some() && self.hi().is_some()
    }

    fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: self.lo.add(&o.lo),
            hi: self.hi.add(&o.hi),
        }
    }

    fn mul(&self, o: &Interval) -> Interval {
        let ps = [
            self.lo.mul(&o.lo),
            self.lo.mul(&o.hi),
            self.hi.mul(&o.lo),
            self.hi.mul(&o.hi),
        ];
        Interval {
            lo: ps.iter().min().unwrap().clone(),
            hi: ps.iter().max().unwrap().clone(),
        }
    }

    fn join(&self, o: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(o.lo.clone()),
            hi: self.hi.clone().max(o.hi.clone()),
        }
    }

    /// Intersection; may be empty (lo > hi) when states are dead.
    fn meet(&self, o: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().max(o.lo.clone()),
            hi: self.hi.clone().min(o.hi.clone()),
        }
    }

    /// Widening with thresholds: a bound that grows moves to the nearest
    /// threshold covering it (`thresholds` sorted ascending), or to infinity.
    fn widen(&self, next: &Interval, thresholds: &[Rational]) -> Interval {
        let lo = if next.lo < self.lo {
            thresholds
                .iter()
                .rev()
                .map(|t| Ext::Fin(t.clone()))
                .find(|t| *t <= next.lo)
                .unwrap_or(Ext::NegInf)
        } else {
            self.lo.clone()
        };
        let hi = if next.hi > self.hi {
            thresholds
                .iter()
                .map(|t| Ext::Fin(t.clone()))
                .find(|t| *t >= next.hi)
                .unwrap_or(Ext::PosInf)
        } else {
            self.hi.clone()
        };
        Interval { lo, hi }
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi
    }
}

/// Interval enclosure of a polynomial; `vars` covers the full variable space.
pub fn eval_interval(p: &Poly, vars: &[Interval]) -> Interval {
    let mut acc = Interval::point(Rational::zero());
    for (m, c) in p.terms() {
        let mut t = Interval::point(c.clone());
        for (i, &e) in m.exps().iter().enumerate() {
            for _ in 0..e {
                t = t.mul(&vars[i]);
            }
        }
        acc = acc.add(&t);
    }
    acc
}

const WIDEN_AFTER: usize = 5;
const MAX_ROUNDS: usize = 100_000;

/// Forward interval analysis of the program variables, intersected with
/// each label's invariant box. `None` marks labels never reached. If the
/// fixpoint does not settle, every reached label falls back to its box.
pub fn interval_states(cfg: &Cfg, inv: &[Region]) -> Vec<Option<Vec<Interval>>> {
    let np = cfg.pvars.len();
    let n = cfg.nvars();
    let boxes: Vec<Option<Vec<Interval>>> = inv
        .iter()
        .map(|r| {
            (0..np)
                .map(|v| r.var_range(v, n).map(|(lo, hi)| Interval::new(lo, hi)))
                .collect()
        })
        .collect();
    let supports: Vec<Interval> = cfg
        .dists
        .iter()
        .map(|d| {
            let (lo, hi) = d.support_range();
            Interval::new(Some(lo), Some(hi))
        })
        .collect();

    // constants a variable is likely to settle at: initial values, support
    // endpoints and zero
    let mut thresholds: Vec<Rational> = cfg.init.clone();
    for d in &cfg.dists {
        let (lo, hi) = d.support_range();
        thresholds.extend([lo, hi]);
    }
    thresholds.push(Rational::zero());
    thresholds.sort();
    thresholds.dedup();

    let mut state: Vec<Option<Vec<Interval>>> = vec![None; cfg.exit];
    let mut updates = vec![0usize; cfg.exit];
    let restrict = |l: usize, s: Vec<Interval>| -> Option<Vec<Interval>> {
        let b = boxes[l - 1].as_ref()?;
        let s: Vec<Interval> = s.iter().zip(b).map(|(a, b)| a.meet(b)).collect();
        if s.iter().any(Interval::is_empty) {
            None
        } else {
            Some(s)
        }
    };
    state[cfg.entry - 1] = restrict(
        cfg.entry,
        cfg.init.iter().cloned().map(Interval::point).collect(),
    );
    let post = |cur: &[Interval], rule: &Rule| -> Vec<Interval> {
        let mut next = cur.to_vec();
        if let Rule::Update(Some(a)) = rule {
            let all: Vec<Interval> = cur.iter().chain(&supports).cloned().collect();
            next[a.var] = eval_interval(&a.rhs, &all);
        }
        next
    };
    let mut work: VecDeque<usize> = VecDeque::from([cfg.entry]);
    let mut rounds = 0;
    while let Some(l) = work.pop_front() {
        rounds += 1;
        if rounds > MAX_ROUNDS {
            return (0..cfg.exit)
                .map(|i| state[i].as_ref().and(boxes[i].clone()))
                .collect();
        }
        let Some(cur) = state[l - 1].clone() else {
            continue;
        };
        for t in &cfg.label(l).out {
            let Some(inc) = restrict(t.target, post(&cur, &t.rule)) else {
                continue;
            };
            let ti = t.target - 1;
            let merged = match &state[ti] {
                None => inc,
                Some(old) => {
                    let joined: Vec<Interval> = old.iter().zip(&inc).map(|(a, b)| a.join(b)).collect();
                    if &joined == old {
                        continue;
                    }
                    updates[ti] += 1;
                    if updates[ti] >= WIDEN_AFTER {
                        let w = old
                            .iter()
                            .zip(&joined)
                            .map(|(a, b)| a.widen(b, &thresholds))
                            .collect();
                        restrict(t.target, w).expect("widening only grows a nonempty state")
                    } else {
                        joined
                    }
                }
            };
            if state[ti].as_ref() != Some(&merged) {
                state[ti] = Some(merged);
                work.push_back(t.target);
            }
        }
    }
    state
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundedUpdateReport {
    pub pass: bool,
    /// `label N: x := rhs` for each update not shown bounded.
    pub violations: Vec<String>,
}

/// Decides, conservatively, whether every update changes its variable by a
/// bounded amount. An update `x := rhs` passes if `rhs - x` mentions no
/// program variable, or is bounded over the reachable interval box at its
/// label (by interval arithmetic, or by LP when the difference is linear).
pub fn check_bounded_update(cfg: &Cfg, inv: &[Region]) -> BoundedUpdateReport {
    let np = cfg.pvars.len();
    let n = cfg.nvars();
    let states = interval_states(cfg, inv);
    let supports: Vec<Interval> = cfg
        .dists
        .iter()
        .map(|d| {
            let (lo, hi) = d.support_range();
            Interval::new(Some(lo), Some(hi))
        })
        .collect();
    let mut violations = Vec::new();
    for l in cfg.labels() {
        let Some(Transition1 { var, rhs, text }) = update_of(l) else {
            continue;
        };
        let diff = &rhs - &Poly::var(n, var);
        if diff.vars().iter().all(|&v| v >= np) {
            continue;
        }
        let Some(st) = &states[l.id - 1] else {
            continue;
        };
        let all: Vec<Interval> = st.iter().chain(&supports).cloned().collect();
        if eval_interval(&diff, &all).is_bounded() {
            continue;
        }
        if diff.degree() <= 1 && linear_bounded(&diff, &inv[l.id - 1], &all, n) {
            continue;
        }
        violations.push(format!("label {}: {text}", l.id));
    }
    BoundedUpdateReport {
        pass: violations.is_empty(),
        violations,
    }
}

struct Transition1 {
    var: usize,
    rhs: Poly,
    text: String,
}

fn update_of(l: &crate::cfg::Label) -> Option<Transition1> {
    if l.kind != LabelKind::Assign {
        return None;
    }
    match &l.out[0].rule {
        Rule::Update(Some(a)) => Some(Transition1 {
            var: a.var,
            rhs: a.rhs.clone(),
            text: a.text.clone(),
        }),
        _ => None,
    }
}

/// Range of a linear `diff` over each disjunct of `region` cut by the box.
fn linear_bounded(diff: &Poly, region: &Region, vars: &[Interval], n: usize) -> bool {
    let t = LinTerm::from_poly(diff).expect("degree at most one");
    let mut cuts = Vec::new();
    for (i, iv) in vars.iter().enumerate() {
        let x = Poly::var(n, i);
        if let Some(lo) = iv.lo() {
            cuts.extend(LinTerm::from_poly(&(&x - &Poly::from_rational(n, lo.clone()))));
        }
        if let Some(hi) = iv.hi() {
            cuts.extend(LinTerm::from_poly(&(&Poly::from_rational(n, hi.clone()) - &x)));
        }
    }
    region.disjuncts.iter().all(|p| {
        let Some(q) = Polyhedron::new(p.gens().iter().cloned().chain(cuts.iter().cloned())) else {
            return true;
        };
        match q.range_of(&t, n) {
            None => true,
            Some((lo, hi)) => lo.is_some() && hi.is_some(),
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonNegReport {
    pub pass: bool,
    /// `label N: tick(c)` for costs without a nonnegativity certificate.
    pub not_proven: Vec<String>,
}

/// Certifies every tick cost nonnegative over its label's invariant.
pub fn check_nonneg_costs(cfg: &Cfg, inv: &[Region], monoid_k: Option<u32>) -> NonNegReport {
    let n = cfg.nvars();
    let names = cfg.var_names();
    let mut not_proven = Vec::new();
    for l in cfg.labels() {
        let Some(Rule::Cost(c)) = l.out.first().map(|t| &t.rule) else {
            continue;
        };
        let k = monoid_k.unwrap_or(c.degree().max(2));
        let ok = inv[l.id - 1].disjuncts.iter().all(|p| {
            if c.degree() == 0 && !c.constant_term().is_negative() {
                return true;
            }
            let mut lp = LpProblem::new();
            match encode_nonneg(&c.to_param(), p.gens(), k, &mut lp, "cost") {
                Ok(_) => lp::feasibility(&lp).is_some() || !p.is_feasible(n),
                Err(_) => false,
            }
        });
        if !ok {
            not_proven.push(format!("label {}: tick({})", l.id, c.display(&names)));
        }
    }
    NonNegReport {
        pass: not_proven.is_empty(),
        not_proven,
    }
}
