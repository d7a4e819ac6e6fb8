//! Template-based synthesis of polynomial cost bounds.
//!
//! 1. every non-terminal label gets a template `sum a_j m_j` over all
//!    monomials of degree at most `d` in the program variables;
//! 2. pre-expectations of the template give positivity obligations;
//! 3. each obligation becomes linear equalities via [`crate::handelman`];
//! 4. the LP optimizes the entry-label template at the objective point.

mod checks;

use std::fmt;
use std::time::{Duration, Instant};

use itertools::Itertools;
use num_traits::One;
use thiserror::Error;

use crate::cfg::{Cfg, LabelId, LabelKind};
use crate::handelman::{encode_nonneg, Certificate, DegreeOverflow};
use crate::lp::{self, LpOutcome, LpProblem, Sign};
use crate::poly::{monomials_up_to, AffineForm, Monomial, ParamPoly, Poly};
use crate::preexp::{
    make_obligations, pre_cases, Mode, Obligation, ObligationKind, PreexpError,
    DEFAULT_MOMENT_CAP,
};
use crate::regions::{Region, RegionError};
use crate::Rational;

pub use checks::{
    check_bounded_update, check_nonneg_costs, interval_states, BoundedUpdateReport,
    NonNegReport,
};

/// Which soundness theorem the bound relies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Costs of any sign; needs bounded updates and concentration.
    General,
    /// Nonnegative costs with arbitrary updates; upper bounds only, and
    /// the template itself must be nonnegative.
    NonNeg,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::General => "general",
            Regime::NonNeg => "nonneg",
        })
    }
}

/// How lower bounds pick a successor at nondeterministic labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NondetPolicy {
    Then,
    Else,
    /// Try every combination and keep the best objective.
    Enumerate,
}

#[derive(Clone, Debug)]
pub struct SynthesisConfig {
    pub degree: u32,
    pub mode: Mode,
    pub regime: Regime,
    /// Maximal number of factors in a certificate product; `None` picks
    /// `max(2, highest obligation degree)`.
    pub monoid_k: Option<u32>,
    pub nondet: NondetPolicy,
    /// Overrides of the program's initial values for the objective point.
    pub objective_point: Vec<(String, Rational)>,
    pub assume_concentration: bool,
    pub assume_bounded_update: bool,
    pub force_nonneg_template: bool,
    pub strict: bool,
    pub moment_cap: u32,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            degree: 2,
            mode: Mode::Upper,
            regime: Regime::General,
            monoid_k: None,
            nondet: NondetPolicy::Then,
            objective_point: vec![],
            assume_concentration: false,
            assume_bounded_update: false,
            force_nonneg_template: false,
            strict: false,
            moment_cap: DEFAULT_MOMENT_CAP,
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Preexp(#[from] PreexpError),
    #[error("label {label}: {err}")]
    Region { label: LabelId, err: RegionError },
    #[error(transparent)]
    Degree(#[from] DegreeOverflow),
    #[error("no degree-{degree} certificate under the given invariants with K = {k}")]
    NoCertificate { degree: u32, k: u32 },
    #[error("objective unbounded: invariant too weak")]
    Unbounded,
    #[error("prerequisite not met: {0}")]
    Prerequisite(String),
}

impl SynthesisError {
    /// Infeasible or unbounded LPs, as opposed to malformed input.
    pub fn is_lp_failure(&self) -> bool {
        matches!(
            self,
            SynthesisError::NoCertificate { .. } | SynthesisError::Unbounded
        )
    }
}

#[derive(Clone, Debug)]
pub struct Prerequisites {
    pub regime: Regime,
    pub bounded_update: Option<BoundedUpdateReport>,
    pub nonneg_costs: Option<NonNegReport>,
    pub concentration_asserted: bool,
    pub bounded_update_asserted: bool,
    pub sound: bool,
}

/// The LP of one synthesis problem, before solving.
pub struct Encoding {
    pub lp: LpProblem,
    /// Template per label (index = label id - 1).
    pub templates: Vec<ParamPoly>,
    pub obligations: Vec<Obligation>,
    /// Certificate per (obligation index, disjunct).
    pub certificates: Vec<(usize, Certificate)>,
    pub monoid_k: u32,
    /// For each Γ used, whether it is provably bounded.
    pub bounded_regions: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct CostBound {
    pub mode: Mode,
    pub degree: u32,
    pub monoid_k: u32,
    pub regime: Regime,
    /// Solved bound per label (index = label id - 1).
    pub polys: Vec<Poly>,
    pub entry_value: Rational,
    pub objective_point: Vec<Rational>,
    pub lp_vars: usize,
    pub lp_rows: usize,
    pub obligations: Vec<Obligation>,
    pub lp_values: Vec<Rational>,
    /// Successor index chosen at each nondeterministic label (lower bounds).
    pub nondet_choice: Vec<(LabelId, usize)>,
    pub regions_total: usize,
    pub regions_bounded: usize,
    pub prerequisites: Prerequisites,
    pub warnings: Vec<String>,
    pub elapsed: Duration,
}

impl CostBound {
    pub fn entry_poly(&self) -> &Poly {
        &self.polys[0]
    }

    pub fn poly(&self, label: LabelId) -> &Poly {
        &self.polys[label - 1]
    }
}

/// The objective point `v*` over the full variable space.
pub fn objective_point(cfg: &Cfg, overrides: &[(String, Rational)]) -> Result<Vec<Rational>, SynthesisError> {
    let mut v = cfg.init_point();
    for (name, val) in overrides {
        let i = cfg
            .pvars
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| SynthesisError::Config(format!("unknown variable {name} in objective point")))?;
        v[i] = val.clone();
    }
    Ok(v)
}

pub fn invariants(cfg: &Cfg) -> Result<Vec<Region>, SynthesisError> {
    (1..=cfg.exit)
        .map(|l| {
            cfg.invariant_region(l)
                .map_err(|err| SynthesisError::Region { label: l, err })
        })
        .collect()
}

/// Per-label templates; the terminal label gets zero.
pub fn make_templates(cfg: &Cfg, d: u32, lp: &mut LpProblem) -> Vec<ParamPoly> {
    let n = cfg.nvars();
    let pv: Vec<usize> = (0..cfg.pvars.len()).collect();
    let monos = monomials_up_to(n, &pv, d);
    cfg.labels()
        .iter()
        .map(|l| {
            if l.kind == LabelKind::Terminal {
                return ParamPoly::zero(n);
            }
            let mut h = ParamPoly::zero(n);
            for (j, m) in monos.iter().enumerate() {
                let a = lp.add_var(Sign::Free, format!("a{}_{}", l.id, j + 1));
                h.add_term(m.clone(), &AffineForm::var(a));
            }
            h
        })
        .collect()
}

fn nondet_labels(cfg: &Cfg) -> Vec<LabelId> {
    cfg.labels()
        .iter()
        .filter(|l| l.kind == LabelKind::Nondet)
        .map(|l| l.id)
        .collect()
}

/// Builds the LP for a fixed choice of successors at nondeterministic labels.
pub fn encode(
    cfg: &Cfg,
    config: &SynthesisConfig,
    choice: &dyn Fn(LabelId) -> usize,
) -> Result<Encoding, SynthesisError> {
    let inv = invariants(cfg)?;
    let mut lp = LpProblem::new();
    let templates = make_templates(cfg, config.degree, &mut lp);
    let mut obligations = Vec::new();
    for l in cfg.labels() {
        if l.kind == LabelKind::Terminal {
            continue;
        }
        let cases = pre_cases(cfg, l.id, &templates, &inv, config.moment_cap)?;
        obligations.extend(make_obligations(
            config.mode,
            l.id,
            &templates[l.id - 1],
            &cases,
            choice(l.id),
        ));
    }
    if config.regime == Regime::NonNeg || config.force_nonneg_template {
        for l in cfg.labels() {
            if l.kind != LabelKind::Terminal {
                obligations.push(Obligation {
                    label: l.id,
                    region: inv[l.id - 1].clone(),
                    lhs: templates[l.id - 1].clone(),
                    kind: ObligationKind::Nonnegativity,
                });
            }
        }
    }
    let max_deg = obligations.iter().map(|o| o.lhs.degree()).max().unwrap_or(0);
    let k = config.monoid_k.unwrap_or(max_deg.max(2));
    let pv: Vec<usize> = (0..cfg.pvars.len()).collect();
    let n = cfg.nvars();
    let mut certificates = Vec::new();
    let mut bounded_regions = Vec::new();
    for (i, o) in obligations.iter().enumerate() {
        for (j, p) in o.region.disjuncts.iter().enumerate() {
            let tag = if o.region.disjuncts.len() == 1 {
                format!("o{i}")
            } else {
                format!("o{i}d{j}")
            };
            let cert = encode_nonneg(&o.lhs, p.gens(), k, &mut lp, &tag).map_err(|mut e| {
                e.context = format!("label {} ({})", o.label, o.kind);
                e
            })?;
            certificates.push((i, cert));
            bounded_regions.push(p.is_bounded(&pv, n));
        }
    }
    let v = objective_point(cfg, &config.objective_point)?;
    let mut obj = AffineForm::default();
    for (m, c) in templates[cfg.entry - 1].terms() {
        obj.add_form(c, &m.eval(&v));
    }
    if config.mode == Mode::Lower {
        obj = obj.scaled(&-Rational::one());
    }
    lp.set_objective(obj);
    Ok(Encoding {
        lp,
        templates,
        obligations,
        certificates,
        monoid_k: k,
        bounded_regions,
    })
}

/// Runs the full pipeline for one mode and degree.
pub fn synthesize(cfg: &Cfg, config: &SynthesisConfig) -> Result<CostBound, SynthesisError> {
    let start = Instant::now();
    let v = objective_point(cfg, &config.objective_point)?;
    let inv = invariants(cfg)?;
    if !inv[cfg.entry - 1].contains(&v) {
        return Err(SynthesisError::Config(
            "objective point violates the entry invariant".into(),
        ));
    }
    let mut warnings = Vec::new();
    let prerequisites = check_prerequisites(cfg, config, &inv, &mut warnings);
    if config.strict && !prerequisites.sound {
        return Err(SynthesisError::Prerequisite(warnings.join("; ")));
    }

    let nd = nondet_labels(cfg);
    let choices: Vec<Vec<usize>> = if config.mode == Mode::Lower && !nd.is_empty() {
        match config.nondet {
            NondetPolicy::Then => vec![vec![0; nd.len()]],
            NondetPolicy::Else => vec![vec![1; nd.len()]],
            NondetPolicy::Enumerate => {
                if nd.len() > 12 {
                    return Err(SynthesisError::Config(format!(
                        "{} nondeterministic labels are too many to enumerate",
                        nd.len()
                    )));
                }
                (0..nd.len()).map(|_| 0..2usize).multi_cartesian_product().collect()
            }
        }
    } else {
        vec![vec![0; nd.len()]]
    };

    let mut best: Option<(Rational, Encoding, Vec<Rational>, Vec<usize>)> = None;
    let mut last_err = None;
    for ch in choices {
        let pick = |l: LabelId| nd.iter().position(|&x| x == l).map_or(0, |i| ch[i]);
        let enc = encode(cfg, config, &pick)?;
        match lp::solve(&enc.lp) {
            LpOutcome::Optimal { values, value } => {
                if best.as_ref().is_none_or(|(b, ..)| value < *b) {
                    best = Some((value, enc, values, ch));
                }
            }
            LpOutcome::Infeasible => {
                last_err = Some(SynthesisError::NoCertificate {
                    degree: config.degree,
                    k: enc.monoid_k,
                })
            }
            LpOutcome::Unbounded => last_err = Some(SynthesisError::Unbounded),
        }
    }
    let Some((_, enc, values, ch)) = best else {
        return Err(last_err.expect("at least one choice was tried"));
    };

    let polys: Vec<Poly> = enc
        .templates
        .iter()
        .map(|t| t.instantiate(&|x| values[x.0 as usize].clone()))
        .collect();
    let entry_value = polys[cfg.entry - 1].eval(&v);
    let unbounded = enc.bounded_regions.iter().filter(|b| !**b).count();
    if unbounded > 0 {
        warnings.push(format!(
            "{unbounded} of {} certificate regions are not provably bounded; bounds stay sound but may be loose",
            enc.bounded_regions.len()
        ));
    }
    Ok(CostBound {
        mode: config.mode,
        degree: config.degree,
        monoid_k: enc.monoid_k,
        regime: config.regime,
        polys,
        entry_value,
        objective_point: v,
        lp_vars: enc.lp.num_vars(),
        lp_rows: enc.lp.equalities.len(),
        obligations: enc.obligations,
        lp_values: values,
        nondet_choice: nd.into_iter().zip(ch).collect(),
        regions_total: enc.bounded_regions.len(),
        regions_bounded: enc.bounded_regions.iter().filter(|b| **b).count(),
        prerequisites,
        warnings,
        elapsed: start.elapsed(),
    })
}

fn check_prerequisites(
    cfg: &Cfg,
    config: &SynthesisConfig,
    inv: &[Region],
    warnings: &mut Vec<String>,
) -> Prerequisites {
    let mut p = Prerequisites {
        regime: config.regime,
        bounded_update: None,
        nonneg_costs: None,
        concentration_asserted: config.assume_concentration,
        bounded_update_asserted: config.assume_bounded_update,
        sound: true,
    };
    match config.regime {
        Regime::General => {
            let bu = check_bounded_update(cfg, inv);
            if !bu.pass {
                if config.assume_bounded_update {
                    warnings.push(format!(
                        "bounded update asserted by flag despite: {}",
                        bu.violations.join(", ")
                    ));
                } else {
                    warnings.push(format!(
                        "bounded update not established: {}",
                        bu.violations.join(", ")
                    ));
                    p.sound = false;
                }
            }
            if !config.assume_concentration {
                warnings.push("concentration not asserted (--assume-concentration)".into());
                p.sound = false;
            }
            p.bounded_update = Some(bu);
        }
        Regime::NonNeg => {
            let nn = check_nonneg_costs(cfg, inv, config.monoid_k);
            if !nn.pass {
                warnings.push(format!("costs not proven nonnegative: {}", nn.not_proven.join(", ")));
                p.sound = false;
            }
            if config.mode == Mode::Lower {
                warnings.push("the nonnegative-cost regime only supports upper bounds".into());
                p.sound = false;
            }
            p.nonneg_costs = Some(nn);
        }
    }
    p
}

/// The Monomial of a pure power of one variable; handy in tests.
pub fn power(nvars: usize, var: usize, e: u32) -> Monomial {
    let mut v = vec![0; nvars];
    v[var] = e;
    Monomial::from_exps(v)
}
