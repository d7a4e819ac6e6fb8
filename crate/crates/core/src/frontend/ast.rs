use std::collections::BTreeSet;

use crate::dist::Distribution;
use crate::Rational;

/// Source position. Ignored by equality so that reprinted programs compare
/// equal to the original.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    /// Char offsets of the covered text, end exclusive.
    pub start: usize,
    pub end: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// Statement text as written, whitespace collapsed; empty for synthesized
/// statements. Ignored by equality, like [`Span`].
#[derive(Clone, Debug, Default)]
pub struct Snippet(pub String);

impl PartialEq for Snippet {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Always non-negative; negation is explicit.
    Num(Rational),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Clone, Debug, PartialEq)]
pub enum BExpr {
    True,
    False,
    Le(Expr, Expr),
    Ge(Expr, Expr),
    And(Box<BExpr>, Box<BExpr>),
    Or(Box<BExpr>, Box<BExpr>),
    Not(Box<BExpr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cond {
    Guard(BExpr),
    Prob(Rational),
    Star,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Skip,
    Assign { var: String, rhs: Expr },
    /// An omitted `else` is stored as an explicit `skip`.
    If {
        cond: Cond,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    While { guard: BExpr, body: Vec<Stmt> },
    Tick(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub annot: Option<BExpr>,
    pub span: Span,
    pub source: Snippet,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ProgramAst {
    pub body: Vec<Stmt>,
    /// Declared and inline distributions, in order of appearance.
    pub dists: Vec<(String, Distribution)>,
    pub init: Vec<(String, Rational)>,
    /// Annotation attached to the exit label.
    pub exit_annot: Option<BExpr>,
}

/// Prefix of names given to desugared inline distribution literals. It
/// contains a character the lexer never accepts in identifiers.
pub const LITERAL_PREFIX: &str = "lit#";

impl Expr {
    pub fn vars_into(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Expr::Neg(e) | Expr::Pow(e, _) => e.vars_into(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut v = Vec::new();
        self.vars_into(&mut v);
        v
    }

    /// Value of a variable-free expression.
    pub fn constant_value(&self) -> Option<Rational> {
        Some(match self {
            Expr::Num(r) => r.clone(),
            Expr::Var(_) => return None,
            Expr::Neg(e) => -e.constant_value()?,
            Expr::Add(a, b) => a.constant_value()? + b.constant_value()?,
            Expr::Sub(a, b) => a.constant_value()? - b.constant_value()?,
            Expr::Mul(a, b) => a.constant_value()? * b.constant_value()?,
            Expr::Pow(e, k) => num_traits::pow(e.constant_value()?, *k as usize),
        })
    }
}

impl BExpr {
    pub fn vars_into(&self, out: &mut Vec<String>) {
        match self {
            BExpr::True | BExpr::False => {}
            BExpr::Le(a, b) | BExpr::Ge(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            BExpr::And(a, b) | BExpr::Or(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            BExpr::Not(a) => a.vars_into(out),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut v = Vec::new();
        self.vars_into(&mut v);
        v
    }
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt {
            kind,
            annot: None,
            span: Span::default(),
            source: Snippet::default(),
        }
    }
}

impl ProgramAst {
    pub fn dist(&self, name: &str) -> Option<&Distribution> {
        self.dists.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }

    pub fn is_sampling(&self, name: &str) -> bool {
        self.dist(name).is_some()
    }

    /// Program variables in order of first textual appearance.
    pub fn pvars(&self) -> Vec<String> {
        let mut seen = Vec::new();
        fn walk(stmts: &[Stmt], out: &mut Vec<String>) {
            for s in stmts {
                match &s.kind {
                    StmtKind::Skip => {}
                    StmtKind::Assign { var, rhs } => {
                        if !out.contains(var) {
                            out.push(var.clone());
                        }
                        rhs.vars_into(out);
                    }
                    StmtKind::If {
                        cond,
                        then_branch,
                        else_branch,
                    } => {
                        if let Cond::Guard(g) = cond {
                            g.vars_into(out);
                        }
                        walk(then_branch, out);
                        walk(else_branch, out);
                    }
                    StmtKind::While { guard, body } => {
                        guard.vars_into(out);
                        walk(body, out);
                    }
                    StmtKind::Tick(e) => e.vars_into(out),
                }
                if let Some(a) = &s.annot {
                    a.vars_into(out);
                }
            }
        }
        walk(&self.body, &mut seen);
        if let Some(a) = &self.exit_annot {
            a.vars_into(&mut seen);
        }
        seen.retain(|v| !self.is_sampling(v));
        seen
    }

    /// Sampling variables that actually occur in the body, in declaration order.
    pub fn rvars(&self) -> Vec<String> {
        let used: BTreeSet<String> = self.used_names().into_iter().collect();
        self.dists
            .iter()
            .filter(|(n, _)| used.contains(n))
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn used_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        fn walk(stmts: &[Stmt], out: &mut Vec<String>) {
            for s in stmts {
                match &s.kind {
                    StmtKind::Assign { rhs, .. } => rhs.vars_into(out),
                    StmtKind::Tick(e) => e.vars_into(out),
                    StmtKind::If {
                        cond,
                        then_branch,
                        else_branch,
                    } => {
                        if let Cond::Guard(g) = cond {
                            g.vars_into(out);
                        }
                        walk(then_branch, out);
                        walk(else_branch, out);
                    }
                    StmtKind::While { guard, body } => {
                        guard.vars_into(out);
                        walk(body, out);
                    }
                    StmtKind::Skip => {}
                }
            }
        }
        walk(&self.body, &mut out);
        out
    }

    pub fn init_value(&self, name: &str) -> Option<&Rational> {
        self.init.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Sets (or overrides) the initial value of a variable.
    pub fn set_init(&mut self, name: &str, value: Rational) {
        match self.init.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.init.push((name.to_string(), value)),
        }
    }

    /// Number of statements, counting nested ones.
    pub fn statement_count(&self) -> usize {
        fn count(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| {
                    1 + match &s.kind {
                        StmtKind::If {
                            then_branch,
                            else_branch,
                            ..
                        } => count(then_branch) + count(else_branch),
                        StmtKind::While { body, .. } => count(body),
                        _ => 0,
                    }
                })
                .sum()
        }
        count(&self.body)
    }
}
