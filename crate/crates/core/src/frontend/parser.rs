use num_traits::{One, Signed, Zero};

use super::ast::*;
use super::lexer::{lex, Tok};
use super::FrontendError;
use crate::dist::Distribution;
use crate::Rational;

struct Parser {
    text: Vec<char>,
    toks: Vec<(Tok, Span)>,
    /// End offset of the last consumed token.
    consumed: usize,
    pos: usize,
    ast: ProgramAst,
    literals: usize,
}

type PResult<T> = Result<T, FrontendError>;

pub fn parse(text: &str) -> PResult<ProgramAst> {
    let mut p = Parser {
        text: text.chars().collect(),
        toks: lex(text)?,
        consumed: 0,
        pos: 0,
        ast: ProgramAst::default(),
        literals: 0,
    };
    p.program()?;
    Ok(p.ast)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        self.consumed = self.toks[self.pos].1.end;
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let s = self.span();
        Err(FrontendError::Syntax {
            line: s.line,
            col: s.col,
            msg: msg.into(),
        })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Num(r) => format!("number {r}"),
            Tok::Kw(k) => format!("'{k}'"),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == k)
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", Self::describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected '{k}', found {}", Self::describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", Self::describe(&t))),
        }
    }

    fn program(&mut self) -> PResult<()> {
        loop {
            if self.is_kw("dist") {
                self.dist_decl()?;
            } else if self.is_kw("init") {
                self.init_decl()?;
            } else {
                break;
            }
        }
        let (body, trailing) = self.seq()?;
        if body.is_empty() {
            return self.err("expected a statement");
        }
        self.ast.body = body;
        self.ast.exit_annot = trailing;
        if *self.peek() != Tok::Eof {
            return self.err(format!(
                "unexpected {} after program",
                Self::describe(self.peek())
            ));
        }
        Ok(())
    }

    /// Signed rational literal: `-? NUM (/ NUM)?`.
    fn number(&mut self) -> PResult<Rational> {
        let neg = if self.is_sym("-") {
            self.bump();
            true
        } else {
            false
        };
        let mut r = match self.peek().clone() {
            Tok::Num(r) => {
                self.bump();
                r
            }
            t => return self.err(format!("expected number, found {}", Self::describe(&t))),
        };
        if self.is_sym("/") {
            self.bump();
            match self.peek().clone() {
                Tok::Num(d) if !d.is_zero() => {
                    self.bump();
                    r /= d;
                }
                _ => return self.err("expected nonzero denominator"),
            }
        }
        Ok(if neg { -r } else { r })
    }

    fn dist_decl(&mut self) -> PResult<()> {
        self.expect_kw("dist")?;
        let span = self.span();
        let name = self.ident()?;
        self.expect_sym("=")?;
        let d = if self.is_kw("finite") {
            self.bump();
            self.expect_sym("{")?;
            let mut pairs = Vec::new();
            loop {
                let v = self.number()?;
                self.expect_sym(":")?;
                let p = self.number()?;
                pairs.push((v, p));
                if self.is_sym(",") {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect_sym("}")?;
            Distribution::Finite(pairs)
        } else if self.is_kw("uniform") {
            self.bump();
            self.expect_sym("(")?;
            let lo = self.number()?;
            self.expect_sym(",")?;
            let hi = self.number()?;
            self.expect_sym(")")?;
            Distribution::Uniform { lo, hi }
        } else {
            return self.err("expected 'finite' or 'uniform'");
        };
        self.expect_sym(";")?;
        if self.ast.dist(&name).is_some() {
            return Err(FrontendError::DuplicateDist {
                name,
                line: span.line,
            });
        }
        self.ast.dists.push((name, d));
        Ok(())
    }

    fn init_decl(&mut self) -> PResult<()> {
        self.expect_kw("init")?;
        loop {
            let name = self.ident()?;
            self.expect_sym("=")?;
            let v = self.number()?;
            self.ast.set_init(&name, v);
            if self.is_sym(",") {
                self.bump();
            } else {
                break;
            }
        }
        self.expect_sym(";")
    }

    fn starts_stmt(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_))
            || self.is_kw("skip")
            || self.is_kw("tick")
            || self.is_kw("while")
            || self.is_kw("if")
    }

    /// A `;`-separated statement sequence. Returns a dangling annotation
    /// that was not followed by a statement.
    fn seq(&mut self) -> PResult<(Vec<Stmt>, Option<BExpr>)> {
        let mut out = Vec::new();
        let mut need_sep = false;
        loop {
            let annot = if self.is_sym("[") {
                self.bump();
                let b = self.bexpr()?;
                self.expect_sym("]")?;
                Some(b)
            } else {
                None
            };
            if !self.starts_stmt() {
                if annot.is_some() || out.is_empty() {
                    return Ok((out, annot));
                }
                return self.err(format!(
                    "expected a statement, found {}",
                    Self::describe(self.peek())
                ));
            }
            if need_sep {
                return self.err("expected ';' between statements");
            }
            let mut s = self.stmt()?;
            s.annot = annot;
            out.push(s);
            if self.is_sym(";") {
                self.bump();
                // a trailing `;` before a closer is tolerated
                if !self.starts_stmt() && !self.is_sym("[") {
                    return Ok((out, None));
                }
            } else if self.is_sym("[") {
                need_sep = true;
            } else {
                return Ok((out, None));
            }
        }
    }

    fn block(&mut self, what: &str) -> PResult<Vec<Stmt>> {
        let (b, dangling) = self.seq()?;
        if dangling.is_some() {
            return self.err(format!("annotation must precede a statement in {what}"));
        }
        if b.is_empty() {
            return self.err(format!("expected a statement in {what}"));
        }
        Ok(b)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Kw("skip") => {
                self.bump();
                StmtKind::Skip
            }
            Tok::Kw("tick") => {
                self.bump();
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                StmtKind::Tick(e)
            }
            Tok::Kw("while") => {
                self.bump();
                let guard = self.bexpr()?;
                self.expect_kw("do")?;
                let body = self.block("loop body")?;
                self.expect_kw("od")?;
                StmtKind::While { guard, body }
            }
            Tok::Kw("if") => {
                self.bump();
                let cond = if self.is_sym("*") {
                    self.bump();
                    Cond::Star
                } else if self.is_kw("prob") {
                    self.bump();
                    self.expect_sym("(")?;
                    let pspan = self.span();
                    let p = self.number()?;
                    self.expect_sym(")")?;
                    if p.is_negative() || p > Rational::one() {
                        return Err(FrontendError::ProbOutOfRange {
                            p,
                            line: pspan.line,
                        });
                    }
                    Cond::Prob(p)
                } else {
                    Cond::Guard(self.bexpr()?)
                };
                self.expect_kw("then")?;
                let then_branch = self.block("then branch")?;
                let else_branch = if self.is_kw("else") {
                    self.bump();
                    self.block("else branch")?
                } else {
                    vec![Stmt {
                        kind: StmtKind::Skip,
                        annot: None,
                        span: self.span(),
                        source: Snippet::default(),
                    }]
                };
                self.expect_kw("fi")?;
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            Tok::Ident(var) => {
                self.bump();
                self.expect_sym(":=")?;
                let rhs = self.expr()?;
                StmtKind::Assign { var, rhs }
            }
            t => return self.err(format!("expected a statement, found {}", Self::describe(&t))),
        };
        let written: String = self.text[span.start..self.consumed].iter().collect();
        let source = Snippet(written.split_whitespace().collect::<Vec<_>>().join(" "));
        Ok(Stmt {
            kind,
            annot: None,
            span: Span { end: self.consumed, ..span },
            source,
        })
    }

    fn bexpr(&mut self) -> PResult<BExpr> {
        let mut l = self.bterm()?;
        while self.is_kw("or") {
            self.bump();
            let r = self.bterm()?;
            l = BExpr::Or(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn bterm(&mut self) -> PResult<BExpr> {
        let mut l = self.bfactor()?;
        while self.is_kw("and") {
            self.bump();
            let r = self.bfactor()?;
            l = BExpr::And(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn bfactor(&mut self) -> PResult<BExpr> {
        if self.is_kw("not") {
            self.bump();
            return Ok(BExpr::Not(Box::new(self.bfactor()?)));
        }
        if self.is_kw("true") {
            self.bump();
            return Ok(BExpr::True);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(BExpr::False);
        }
        if self.is_sym("(") {
            // either a parenthesized condition or an arithmetic operand
            let save = self.pos;
            self.bump();
            if let Ok(b) = self.bexpr() {
                if self.is_sym(")") {
                    self.bump();
                    if !self.is_sym("<=") && !self.is_sym(">=") {
                        return Ok(b);
                    }
                }
            }
            self.pos = save;
        }
        self.comparison()
    }

    /// `e1 op e2 (op e3)*`; chains become conjunctions.
    fn comparison(&mut self) -> PResult<BExpr> {
        let mut lhs = self.expr()?;
        let mut out: Option<BExpr> = None;
        loop {
            let op = match self.peek() {
                Tok::Sym("<=") => "<=",
                Tok::Sym(">=") => ">=",
                Tok::Sym("<") | Tok::Sym(">") => {
                    return self.err("strict comparisons are not supported; use <= or >=")
                }
                _ => break,
            };
            self.bump();
            let rhs = self.expr()?;
            let atom = if op == "<=" {
                BExpr::Le(lhs, rhs.clone())
            } else {
                BExpr::Ge(lhs, rhs.clone())
            };
            out = Some(match out {
                None => atom,
                Some(prev) => BExpr::And(Box::new(prev), Box::new(atom)),
            });
            lhs = rhs;
        }
        match out {
            Some(b) => Ok(b),
            None => self.err(format!(
                "expected comparison, found {}",
                Self::describe(self.peek())
            )),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut l = self.term()?;
        loop {
            if self.is_sym("+") {
                self.bump();
                l = Expr::Add(Box::new(l), Box::new(self.term()?));
            } else if self.is_sym("-") {
                self.bump();
                l = Expr::Sub(Box::new(l), Box::new(self.term()?));
            } else {
                return Ok(l);
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut l = self.unary()?;
        while self.is_sym("*") {
            self.bump();
            l = Expr::Mul(Box::new(l), Box::new(self.unary()?));
        }
        Ok(l)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_sym("-") {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.is_sym("^") {
            self.bump();
            match self.peek().clone() {
                Tok::Num(k) if k.is_integer() && !k.is_negative() => {
                    self.bump();
                    let k: u32 = k
                        .to_integer()
                        .try_into()
                        .or_else(|_| self.err("exponent too large"))?;
                    return Ok(Expr::Pow(Box::new(base), k));
                }
                _ => return self.err("expected a natural-number exponent"),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Num(r) => {
                self.bump();
                if self.is_sym("/") {
                    if let Tok::Num(d) = self.peek_at(1).clone() {
                        if d.is_zero() {
                            return self.err("division by zero");
                        }
                        self.bump();
                        self.bump();
                        return Ok(Expr::Num(r / d));
                    }
                    return self.err("division is only allowed between number literals");
                }
                Ok(Expr::Num(r))
            }
            Tok::Ident(v) => {
                self.bump();
                Ok(Expr::Var(v))
            }
            Tok::Sym("(") => {
                let span = self.span();
                self.bump();
                let mut items = vec![self.expr()?];
                while self.is_sym(",") {
                    self.bump();
                    items.push(self.expr()?);
                }
                self.expect_sym(")")?;
                if self.is_sym(":") {
                    self.bump();
                    return self.dist_literal(items, span);
                }
                if items.len() != 1 {
                    return self.err("a value list must be followed by ':' and probabilities");
                }
                Ok(items.pop().unwrap())
            }
            t => self.err(format!("expected expression, found {}", Self::describe(&t))),
        }
    }

    fn dist_literal(&mut self, values: Vec<Expr>, span: Span) -> PResult<Expr> {
        self.expect_sym("(")?;
        let mut probs = vec![self.number()?];
        while self.is_sym(",") {
            self.bump();
            probs.push(self.number()?);
        }
        self.expect_sym(")")?;
        if probs.len() != values.len() {
            return Err(FrontendError::Syntax {
                line: span.line,
                col: span.col,
                msg: format!(
                    "distribution literal has {} values but {} probabilities",
                    values.len(),
                    probs.len()
                ),
            });
        }
        let mut pairs = Vec::new();
        for (v, p) in values.iter().zip(probs) {
            let Some(v) = v.constant_value() else {
                return Err(FrontendError::Syntax {
                    line: span.line,
                    col: span.col,
                    msg: "distribution literal values must be constants".into(),
                });
            };
            pairs.push((v, p));
        }
        self.literals += 1;
        let name = format!("{LITERAL_PREFIX}{}", self.literals);
        self.ast.dists.push((name.clone(), Distribution::Finite(pairs)));
        Ok(Expr::Var(name))
    }
}
