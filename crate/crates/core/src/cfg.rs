//! Labelled control-flow graph.
//!
//! Labels are numbered in textual pre-order starting at 1; the terminal
//! label gets the last number. Every label has an out-degree fixed by its
//! kind: one for assignments and ticks, two for branches, probabilistic
//! and nondeterministic choices, zero for the terminal.

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::dist::Distribution;
use crate::frontend::{print_expr, BExpr, Cond, Expr, ProgramAst, Stmt, StmtKind};
use crate::poly::Poly;
use crate::regions::{Pred, Region};
use crate::Rational;

pub type LabelId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LabelKind {
    Assign,
    Branch,
    Prob,
    Nondet,
    Tick,
    Terminal,
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LabelKind::Assign => "assign",
            LabelKind::Branch => "branch",
            LabelKind::Prob => "prob",
            LabelKind::Nondet => "nondet",
            LabelKind::Tick => "tick",
            LabelKind::Terminal => "terminal",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// Index of the target among the program variables.
    pub var: usize,
    pub rhs: Poly,
    /// Source text, for diagnostics.
    pub text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    /// `None` is `skip`.
    Update(Option<Assignment>),
    /// The guard, or (when `negated`) its complement.
    Guard { pred: Pred, negated: bool },
    Prob(Rational),
    Star,
    Cost(Poly),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub rule: Rule,
    pub target: LabelId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Label {
    pub id: LabelId,
    pub kind: LabelKind,
    pub out: Vec<Transition>,
    pub invariant: Option<Pred>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cfg {
    pub pvars: Vec<String>,
    pub rvars: Vec<String>,
    /// Distribution of each sampling variable, parallel to `rvars`.
    pub dists: Vec<Distribution>,
    /// Initial values, parallel to `pvars`.
    pub init: Vec<Rational>,
    labels: Vec<Label>,
    pub entry: LabelId,
    pub exit: LabelId,
}

impl Cfg {
    pub fn label(&self, id: LabelId) -> &Label {
        &self.labels[id - 1]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Program variables followed by sampling variables.
    pub fn var_names(&self) -> Vec<String> {
        self.pvars.iter().chain(&self.rvars).cloned().collect()
    }

    pub fn nvars(&self) -> usize {
        self.pvars.len() + self.rvars.len()
    }

    /// Index of sampling variable `j` in the full variable space.
    pub fn rvar_index(&self, j: usize) -> usize {
        self.pvars.len() + j
    }

    pub fn transitions(&self) -> impl Iterator<Item = (LabelId, &Transition)> {
        self.labels
            .iter()
            .flat_map(|l| l.out.iter().map(move |t| (l.id, t)))
    }

    /// Invariant of a label as a region; missing annotations give `top`.
    pub fn invariant_region(&self, id: LabelId) -> Result<Region, crate::regions::RegionError> {
        match &self.label(id).invariant {
            None => Ok(Region::top()),
            Some(p) => Region::from_pred(p, &self.var_names()),
        }
    }

    /// Valuation of the full variable space from the program's init values,
    /// with sampling variables at zero.
    pub fn init_point(&self) -> Vec<Rational> {
        let mut v = self.init.clone();
        v.resize(self.nvars(), Rational::zero());
        v
    }

    pub fn rule_text(&self, r: &Rule) -> String {
        let names = self.var_names();
        match r {
            Rule::Update(None) => "skip".into(),
            Rule::Update(Some(a)) => a.text.clone(),
            Rule::Guard { pred, negated } => {
                let s = pred.display(&names).to_string();
                if *negated {
                    format!("not {s}")
                } else {
                    s
                }
            }
            Rule::Prob(p) => format!("prob {p}"),
            Rule::Star => "*".into(),
            Rule::Cost(c) => format!("tick {}", c.display(&names)),
        }
    }

    /// One `src -> tgt [rule]` line per transition.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph cfg {\n");
        for l in &self.labels {
            s.push_str(&format!("  {} [label=\"{} {}\"];\n", l.id, l.id, l.kind));
        }
        for (src, t) in self.transitions() {
            let text = self.rule_text(&t.rule).replace('"', "'");
            s.push_str(&format!("  {} -> {} [label=\"{}\"];\n", src, t.target, text));
        }
        s.push_str("}\n");
        s
    }
}

/// Lowers an expression into the variable space `names`.
pub fn expr_to_poly(e: &Expr, index: &HashMap<String, usize>, nvars: usize) -> Poly {
    match e {
        Expr::Num(r) => Poly::from_rational(nvars, r.clone()),
        Expr::Var(v) => Poly::var(nvars, index[v]),
        Expr::Neg(a) => -&expr_to_poly(a, index, nvars),
        Expr::Add(a, b) => &expr_to_poly(a, index, nvars) + &expr_to_poly(b, index, nvars),
        Expr::Sub(a, b) => &expr_to_poly(a, index, nvars) - &expr_to_poly(b, index, nvars),
        Expr::Mul(a, b) => expr_to_poly(a, index, nvars).mul(&expr_to_poly(b, index, nvars)),
        Expr::Pow(a, k) => expr_to_poly(a, index, nvars).pow(*k),
    }
}

pub fn bexpr_to_pred(b: &BExpr, index: &HashMap<String, usize>, nvars: usize) -> Pred {
    let p = |e: &Expr| expr_to_poly(e, index, nvars);
    match b {
        BExpr::True => Pred::True,
        BExpr::False => Pred::False,
        BExpr::Le(l, r) => Pred::Atom(&p(r) - &p(l)),
        BExpr::Ge(l, r) => Pred::Atom(&p(l) - &p(r)),
        BExpr::And(a, c) => Pred::And(
            Box::new(bexpr_to_pred(a, index, nvars)),
            Box::new(bexpr_to_pred(c, index, nvars)),
        ),
        BExpr::Or(a, c) => Pred::Or(
            Box::new(bexpr_to_pred(a, index, nvars)),
            Box::new(bexpr_to_pred(c, index, nvars)),
        ),
        BExpr::Not(a) => !bexpr_to_pred(a, index, nvars),
    }
}

struct Builder<'a> {
    ast: &'a ProgramAst,
    index: HashMap<String, usize>,
    nvars: usize,
    ids: HashMap<*const Stmt, LabelId>,
    labels: Vec<Option<Label>>,
}

/// Builds the graph from a validated program.
pub fn build_cfg(ast: &ProgramAst) -> Cfg {
    let pvars = ast.pvars();
    let rvars = ast.rvars();
    let index: HashMap<String, usize> = pvars
        .iter()
        .chain(&rvars)
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    let nvars = index.len();
    let mut b = Builder {
        ast,
        index,
        nvars,
        ids: HashMap::new(),
        labels: Vec::new(),
    };
    b.number(&ast.body);
    let exit = b.labels.len() + 1;
    b.seq(&ast.body, exit);
    let mut labels: Vec<Label> = b.labels.into_iter().map(|l| l.expect("every label built")).collect();
    labels.push(Label {
        id: exit,
        kind: LabelKind::Terminal,
        out: vec![],
        invariant: ast
            .exit_annot
            .as_ref()
            .map(|a| bexpr_to_pred(a, &b.index, nvars)),
        line: 0,
    });
    let dists = rvars
        .iter()
        .map(|r| ast.dist(r).expect("validated").clone())
        .collect();
    let init = pvars
        .iter()
        .map(|v| ast.init_value(v).cloned().unwrap_or_default())
        .collect();
    Cfg {
        pvars,
        rvars,
        dists,
        init,
        labels,
        entry: 1,
        exit,
    }
}

impl Builder<'_> {
    fn number(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.labels.push(None);
            self.ids.insert(s as *const Stmt, self.labels.len());
            match &s.kind {
                StmtKind::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    self.number(then_branch);
                    self.number(else_branch);
                }
                StmtKind::While { body, .. } => self.number(body),
                _ => {}
            }
        }
    }

    fn id(&self, s: &Stmt) -> LabelId {
        self.ids[&(s as *const Stmt)]
    }

    fn seq(&mut self, stmts: &[Stmt], cont: LabelId) {
        for (i, s) in stmts.iter().enumerate() {
            let next = stmts.get(i + 1).map_or(cont, |n| self.id(n));
            self.stmt(s, next);
        }
    }

    fn stmt(&mut self, s: &Stmt, cont: LabelId) {
        let id = self.id(s);
        let (kind, out) = match &s.kind {
            StmtKind::Skip => (
                LabelKind::Assign,
                vec![Transition {
                    rule: Rule::Update(None),
                    target: cont,
                }],
            ),
            StmtKind::Assign { var, rhs } => {
                let text = if s.source.0.is_empty() {
                    format!("{var} := {}", print_expr(self.ast, rhs))
                } else {
                    s.source.0.clone()
                };
                let a = Assignment {
                    var: self.index[var],
                    rhs: expr_to_poly(rhs, &self.index, self.nvars),
                    text,
                };
                (
                    LabelKind::Assign,
                    vec![Transition {
                        rule: Rule::Update(Some(a)),
                        target: cont,
                    }],
                )
            }
            StmtKind::Tick(e) => (
                LabelKind::Tick,
                vec![Transition {
                    rule: Rule::Cost(expr_to_poly(e, &self.index, self.nvars)),
                    target: cont,
                }],
            ),
            StmtKind::While { guard, body } => {
                let pred = bexpr_to_pred(guard, &self.index, self.nvars);
                self.seq(body, id);
                (
                    LabelKind::Branch,
                    vec![
                        Transition {
                            rule: Rule::Guard {
                                pred: pred.clone(),
                                negated: false,
                            },
                            target: self.id(&body[0]),
                        },
                        Transition {
                            rule: Rule::Guard {
                                pred,
                                negated: true,
                            },
                            target: cont,
                        },
                    ],
                )
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.seq(then_branch, cont);
                self.seq(else_branch, cont);
                let t = self.id(&then_branch[0]);
                let e = self.id(&else_branch[0]);
                let (kind, r1, r2) = match cond {
                    Cond::Guard(g) => {
                        let pred = bexpr_to_pred(g, &self.index, self.nvars);
                        (
                            LabelKind::Branch,
                            Rule::Guard {
                                pred: pred.clone(),
                                negated: false,
                            },
                            Rule::Guard {
                                pred,
                                negated: true,
                            },
                        )
                    }
                    Cond::Prob(p) => (
                        LabelKind::Prob,
                        Rule::Prob(p.clone()),
                        Rule::Prob(Rational::one() - p),
                    ),
                    Cond::Star => (LabelKind::Nondet, Rule::Star, Rule::Star),
                };
                (
                    kind,
                    vec![
                        Transition { rule: r1, target: t },
                        Transition { rule: r2, target: e },
                    ],
                )
            }
        };
        self.labels[id - 1] = Some(Label {
            id,
            kind,
            out,
            invariant: s
                .annot
                .as_ref()
                .map(|a| bexpr_to_pred(a, &self.index, self.nvars)),
            line: s.span.line,
        });
    }
}

/// Labels that cannot be reached (guards refuted by their source
/// invariant) and labels without an annotation.
pub fn reachable_check(cfg: &Cfg) -> Vec<String> {
    let names = cfg.var_names();
    let n = cfg.nvars();
    let mut warnings = Vec::new();
    let mut seen = vec![false; cfg.labels.len() + 1];
    let mut stack = vec![cfg.entry];
    seen[cfg.entry] = true;
    while let Some(id) = stack.pop() {
        let l = cfg.label(id);
        let inv = cfg.invariant_region(id).unwrap_or_else(|_| Region::top());
        for t in &l.out {
            let live = match &t.rule {
                Rule::Guard { pred, negated } => {
                    let p = if *negated { !pred.clone() } else { pred.clone() };
                    match Region::from_pred(&p, &names) {
                        Ok(r) => inv
                            .conjoin(&r)
                            .disjuncts
                            .iter()
                            .any(|d| d.is_feasible(n)),
                        Err(_) => true,
                    }
                }
                Rule::Prob(p) => !p.is_zero(),
                _ => true,
            };
            if live && !seen[t.target] {
                seen[t.target] = true;
                stack.push(t.target);
            }
        }
    }
    for l in &cfg.labels {
        if !seen[l.id] {
            warnings.push(format!("label {} ({}) is unreachable", l.id, l.kind));
        }
    }
    for l in &cfg.labels {
        if l.invariant.is_none() {
            warnings.push(format!(
                "label {} ({}) has no invariant annotation; assuming true",
                l.id, l.kind
            ));
        }
    }
    warnings
}
