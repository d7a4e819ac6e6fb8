use std::fmt::Write;

use super::ast::*;
use crate::dist::Distribution;

/// Renders a program in the concrete syntax accepted by the parser.
pub fn print_program(ast: &ProgramAst) -> String {
    let mut out = String::new();
    for (name, d) in &ast.dists {
        if name.starts_with(LITERAL_PREFIX) {
            continue;
        }
        let _ = writeln!(out, "dist {name} = {d};");
    }
    if !ast.init.is_empty() {
        let parts: Vec<String> = ast.init.iter().map(|(n, v)| format!("{n} = {v}")).collect();
        let _ = writeln!(out, "init {};", parts.join(", "));
    }
    seq(ast, &ast.body, 0, &mut out);
    if let Some(a) = &ast.exit_annot {
        let _ = writeln!(out, "[{}]", print_bexpr(ast, a));
    }
    out
}

fn indent(n: usize, out: &mut String) {
    for _ in 0..n {
        out.push_str("  ");
    }
}

fn seq(ast: &ProgramAst, stmts: &[Stmt], depth: usize, out: &mut String) {
    for (i, s) in stmts.iter().enumerate() {
        stmt(ast, s, depth, out);
        if i + 1 < stmts.len() {
            out.push(';');
        }
        out.push('\n');
    }
}

fn stmt(ast: &ProgramAst, s: &Stmt, depth: usize, out: &mut String) {
    indent(depth, out);
    if let Some(a) = &s.annot {
        let _ = write!(out, "[{}] ", print_bexpr(ast, a));
    }
    match &s.kind {
        StmtKind::Skip => out.push_str("skip"),
        StmtKind::Assign { var, rhs } => {
            let _ = write!(out, "{var} := {}", print_expr(ast, rhs));
        }
        StmtKind::Tick(e) => {
            let _ = write!(out, "tick({})", print_expr(ast, e));
        }
        StmtKind::While { guard, body } => {
            let _ = writeln!(out, "while {} do", print_bexpr(ast, guard));
            seq(ast, body, depth + 1, out);
            indent(depth, out);
            out.push_str("od");
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let c = match cond {
                Cond::Guard(g) => print_bexpr(ast, g),
                Cond::Prob(p) => format!("prob({p})"),
                Cond::Star => "*".into(),
            };
            let _ = writeln!(out, "if {c} then");
            seq(ast, then_branch, depth + 1, out);
            indent(depth, out);
            out.push_str("else\n");
            seq(ast, else_branch, depth + 1, out);
            indent(depth, out);
            out.push_str("fi");
        }
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        Expr::Num(r) if !r.is_integer() => 2,
        Expr::Num(_) | Expr::Var(_) => 5,
    }
}

fn wrap(ast: &ProgramAst, e: &Expr, min: u8) -> String {
    let s = print_expr(ast, e);
    if prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn print_expr(ast: &ProgramAst, e: &Expr) -> String {
    match e {
        Expr::Num(r) => r.to_string(),
        Expr::Var(v) if v.starts_with(LITERAL_PREFIX) => match ast.dist(v) {
            Some(Distribution::Finite(pairs)) => {
                let vs: Vec<String> = pairs.iter().map(|(v, _)| v.to_string()).collect();
                let ps: Vec<String> = pairs.iter().map(|(_, p)| p.to_string()).collect();
                format!("({}):({})", vs.join(", "), ps.join(", "))
            }
            _ => v.clone(),
        },
        Expr::Var(v) => v.clone(),
        Expr::Neg(a) => format!("-{}", wrap(ast, a, 3)),
        Expr::Add(a, b) => format!("{} + {}", wrap(ast, a, 1), wrap(ast, b, 2)),
        Expr::Sub(a, b) => format!("{} - {}", wrap(ast, a, 1), wrap(ast, b, 2)),
        Expr::Mul(a, b) => format!("{} * {}", wrap(ast, a, 2), wrap(ast, b, 3)),
        Expr::Pow(a, k) => format!("{}^{k}", wrap(ast, a, 5)),
    }
}

fn bprec(b: &BExpr) -> u8 {
    match b {
        BExpr::Or(..) => 1,
        BExpr::And(..) => 2,
        _ => 3,
    }
}

fn bwrap(ast: &ProgramAst, b: &BExpr, min: u8) -> String {
    let s = print_bexpr(ast, b);
    if bprec(b) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn print_bexpr(ast: &ProgramAst, b: &BExpr) -> String {
    match b {
        BExpr::True => "true".into(),
        BExpr::False => "false".into(),
        BExpr::Le(l, r) => format!("{} <= {}", print_expr(ast, l), print_expr(ast, r)),
        BExpr::Ge(l, r) => format!("{} >= {}", print_expr(ast, l), print_expr(ast, r)),
        BExpr::And(l, r) => format!("{} and {}", bwrap(ast, l, 2), bwrap(ast, r, 3)),
        BExpr::Or(l, r) => format!("{} or {}", bwrap(ast, l, 1), bwrap(ast, r, 2)),
        BExpr::Not(a) => format!("not {}", bwrap(ast, a, 3)),
    }
}
