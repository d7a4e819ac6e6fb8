//! Exact rational linear programming.
//!
//! Problems are stated as `min objective` subject to affine equalities
//! `form = 0` over variables that are either free or nonnegative. Free
//! variables are eliminated up front by Gauss-Jordan steps, the rest is a
//! two-phase primal simplex on a dense rational tableau.

mod dump;
mod simplex;

use num_traits::Zero;

use crate::poly::{AffineForm, LpVar};
use crate::Rational;

pub use dump::dump_lp;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Free,
    NonNeg,
}

#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    signs: Vec<Sign>,
    names: Vec<String>,
    pub equalities: Vec<AffineForm>,
    pub objective: AffineForm,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal {
        values: Vec<Rational>,
        value: Rational,
    },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, sign: Sign, name: impl Into<String>) -> LpVar {
        self.signs.push(sign);
        self.names.push(name.into());
        LpVar((self.signs.len() - 1) as u32)
    }

    pub fn num_vars(&self) -> usize {
        self.signs.len()
    }

    pub fn sign(&self, v: LpVar) -> Sign {
        self.signs[v.0 as usize]
    }

    pub fn name(&self, v: LpVar) -> &str {
        &self.names[v.0 as usize]
    }

    /// Adds `form = 0`.
    pub fn add_equality(&mut self, form: AffineForm) {
        self.equalities.push(form);
    }

    /// Adds `form >= 0` through a fresh nonnegative slack.
    pub fn add_nonneg(&mut self, mut form: AffineForm) {
        let s = self.add_var(Sign::NonNeg, format!("s{}", self.equalities.len()));
        form.add_var(s, &-Rational::from_integer(1.into()));
        self.add_equality(form);
    }

    pub fn set_objective(&mut self, objective: AffineForm) {
        self.objective = objective;
    }

    /// Exact residual check of an assignment against every constraint.
    pub fn satisfied_by(&self, values: &[Rational]) -> bool {
        if values.len() != self.signs.len() {
            return false;
        }
        let signs_ok = self
            .signs
            .iter()
            .zip(values)
            .all(|(s, v)| *s == Sign::Free || *v >= Rational::zero());
        let get = |v: LpVar| values[v.0 as usize].clone();
        signs_ok && self.equalities.iter().all(|e| e.eval(&get).is_zero())
    }

    pub fn objective_at(&self, values: &[Rational]) -> Rational {
        self.objective.eval(&|v: LpVar| values[v.0 as usize].clone())
    }
}

/// Minimizes the objective exactly.
pub fn solve(p: &LpProblem) -> LpOutcome {
    let out = simplex::run(p, true);
    if let LpOutcome::Optimal { values, value } = &out {
        assert!(
            p.satisfied_by(values) && p.objective_at(values) == *value,
            "simplex returned an assignment that fails the exact re-check"
        );
    }
    out
}

/// Phase-1 only: some feasible point, or `None`.
pub fn feasibility(p: &LpProblem) -> Option<Vec<Rational>> {
    match simplex::run(p, false) {
        LpOutcome::Optimal { values, .. } => {
            assert!(p.satisfied_by(&values), "phase 1 returned an infeasible point");
            Some(values)
        }
        _ => None,
    }
}
