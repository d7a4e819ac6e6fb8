//! One-step pre-expectation of a template and the positivity obligations
//! that make it an upper or lower cost martingale.

use std::fmt;

use thiserror::Error;

use crate::cfg::{Cfg, LabelId, LabelKind, Rule};
use crate::poly::ParamPoly;
use crate::regions::{Region, RegionError};
use crate::Rational;

/// Default cap on the order of a distribution moment.
pub const DEFAULT_MOMENT_CAP: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PreexpError {
    #[error("label {label}: needs moment of order {order} of {var}, above the cap {cap}")]
    DegreeOverflow {
        label: LabelId,
        var: String,
        order: u32,
        cap: u32,
    },
    #[error("label {label}: {err}")]
    Region { label: LabelId, err: RegionError },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Upper,
    Lower,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Upper => "upper",
            Mode::Lower => "lower",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObligationKind {
    /// `h - pre >= 0`.
    Supermartingale,
    /// `pre - h >= 0`.
    Submartingale,
    /// `h >= 0`.
    Nonnegativity,
}

impl fmt::Display for ObligationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObligationKind::Supermartingale => "h - pre >= 0",
            ObligationKind::Submartingale => "pre - h >= 0",
            ObligationKind::Nonnegativity => "h >= 0",
        })
    }
}

/// One summand of the pre-expectation at a label.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub region: Region,
    pub poly: ParamPoly,
    /// Successor for nondeterministic labels.
    pub successor: Option<LabelId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Obligation {
    pub label: LabelId,
    pub region: Region,
    pub lhs: ParamPoly,
    pub kind: ObligationKind,
}

/// Pre-expectation cases of `label`. `templates` and `inv` are indexed by
/// label id minus one.
pub fn pre_cases(
    cfg: &Cfg,
    label: LabelId,
    templates: &[ParamPoly],
    inv: &[Region],
    moment_cap: u32,
) -> Result<Vec<Case>, PreexpError> {
    let l = cfg.label(label);
    let h = |id: LabelId| &templates[id - 1];
    let region = inv[label - 1].clone();
    let single = |poly: ParamPoly| {
        Ok(vec![Case {
            region: region.clone(),
            poly,
            successor: None,
        }])
    };
    match l.kind {
        LabelKind::Terminal => single(h(label).clone()),
        LabelKind::Assign => {
            let t = &l.out[0];
            let Rule::Update(upd) = &t.rule else {
                unreachable!("assign label carries an update")
            };
            let Some(a) = upd else {
                return single(h(t.target).clone());
            };
            let sub = h(t.target).substitute(a.var, &a.rhs);
            let mut rv = Vec::new();
            for j in 0..cfg.rvars.len() {
                let idx = cfg.rvar_index(j);
                let order = sub.var_degree(idx);
                if order == 0 {
                    continue;
                }
                if order > moment_cap {
                    return Err(PreexpError::DegreeOverflow {
                        label,
                        var: cfg.rvars[j].clone(),
                        order,
                        cap: moment_cap,
                    });
                }
                rv.push(idx);
            }
            let np = cfg.pvars.len();
            let e = sub.expect_vars(&rv, &|v, k| cfg.dists[v - np].moment(k));
            single(e)
        }
        LabelKind::Tick => {
            let t = &l.out[0];
            let Rule::Cost(c) = &t.rule else {
                unreachable!("tick label carries a cost")
            };
            single(&c.to_param() + h(t.target))
        }
        LabelKind::Prob => {
            let (Rule::Prob(p), Rule::Prob(q)) = (&l.out[0].rule, &l.out[1].rule) else {
                unreachable!("prob label carries probabilities")
            };
            let mut e = h(l.out[0].target).scale(p);
            e.add_scaled(h(l.out[1].target), q);
            single(e)
        }
        LabelKind::Branch => {
            let names = cfg.var_names();
            let mut out = Vec::new();
            for t in &l.out {
                let Rule::Guard { pred, negated } = &t.rule else {
                    unreachable!("branch label carries guards")
                };
                let p = if *negated { !pred.clone() } else { pred.clone() };
                let g = Region::from_pred(&p, &names)
                    .map_err(|err| PreexpError::Region { label, err })?;
                out.push(Case {
                    region: region.conjoin(&g),
                    poly: h(t.target).clone(),
                    successor: None,
                });
            }
            Ok(out)
        }
        LabelKind::Nondet => Ok(l
            .out
            .iter()
            .map(|t| Case {
                region: region.clone(),
                poly: h(t.target).clone(),
                successor: Some(t.target),
            })
            .collect()),
    }
}

/// Obligations of one label. For lower bounds at a nondeterministic label,
/// only the successor picked by `choice` (an index into the out-edges) is
/// constrained.
pub fn make_obligations(
    mode: Mode,
    label: LabelId,
    h: &ParamPoly,
    cases: &[Case],
    choice: usize,
) -> Vec<Obligation> {
    let nondet = cases.iter().any(|c| c.successor.is_some());
    cases
        .iter()
        .enumerate()
        .filter(|(i, _)| !(mode == Mode::Lower && nondet && *i != choice))
        .map(|(_, c)| {
            let (lhs, kind) = match mode {
                Mode::Upper => (h - &c.poly, ObligationKind::Supermartingale),
                Mode::Lower => (&c.poly - h, ObligationKind::Submartingale),
            };
            Obligation {
                label,
                region: c.region.clone(),
                lhs,
                kind,
            }
        })
        .collect()
}

impl Obligation {
    /// `label, region, relation, polynomial`.
    pub fn render(&self, names: &[String]) -> String {
        format!(
            "{}, {}, {}, {}",
            self.label,
            self.region.display(names),
            self.kind,
            self.lhs.display(names)
        )
    }
}

/// Scales every case by a rational; used to check linearity.
pub fn scale_cases(cases: &[Case], k: &Rational) -> Vec<Case> {
    cases
        .iter()
        .map(|c| Case {
            region: c.region.clone(),
            poly: c.poly.scale(k),
            successor: c.successor,
        })
        .collect()
}
