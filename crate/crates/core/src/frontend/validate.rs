use std::collections::BTreeSet;

use num_traits::Zero;

use super::ast::*;
use super::FrontendError;
use crate::Rational;

/// Names that look like sampling variables without a declaration: read in
/// an assignment, but never assigned, initialised, tested or ticked.
pub(super) fn undeclared_sampling(ast: &ProgramAst) -> Option<String> {
    let mut rhs_reads = Vec::new();
    let mut other = BTreeSet::new();
    fn walk(stmts: &[Stmt], rhs: &mut Vec<String>, other: &mut BTreeSet<String>) {
        for s in stmts {
            if let Some(a) = &s.annot {
                other.extend(a.vars());
            }
            match &s.kind {
                StmtKind::Skip => {}
                StmtKind::Assign { var, rhs: e } => {
                    other.insert(var.clone());
                    e.vars_into(rhs);
                }
                StmtKind::Tick(e) => other.extend(e.vars()),
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    if let Cond::Guard(g) = cond {
                        other.extend(g.vars());
                    }
                    walk(then_branch, rhs, other);
                    walk(else_branch, rhs, other);
                }
                StmtKind::While { guard, body } => {
                    other.extend(guard.vars());
                    walk(body, rhs, other);
                }
            }
        }
    }
    walk(&ast.body, &mut rhs_reads, &mut other);
    if let Some(a) = &ast.exit_annot {
        other.extend(a.vars());
    }
    rhs_reads.into_iter().find(|v| {
        !other.contains(v) && ast.init_value(v).is_none() && !ast.is_sampling(v)
    })
}

pub fn validate(mut ast: ProgramAst) -> Result<(ProgramAst, Vec<String>), FrontendError> {
    let mut warnings = Vec::new();
    for (name, d) in &ast.dists {
        d.check().map_err(|err| FrontendError::Dist {
            name: name.clone(),
            err: Box::new(err),
        })?;
    }
    let pvars = ast.pvars();
    for (v, _) in &ast.init {
        if !pvars.contains(v) {
            return Err(FrontendError::UnknownInitVar(v.clone()));
        }
    }
    check_stmts(&ast, &ast.body)?;
    if let Some(a) = &ast.exit_annot {
        no_sampling(&ast, &a.vars(), "annotation")?;
    }
    for v in &pvars {
        if ast.init_value(v).is_none() {
            warnings.push(format!("variable {v} has no initial value; defaulting to 0"));
            ast.init.push((v.clone(), Rational::zero()));
        }
    }
    Ok((ast, warnings))
}

fn no_sampling(ast: &ProgramAst, vars: &[String], place: &'static str) -> Result<(), FrontendError> {
    match vars.iter().find(|v| ast.is_sampling(v)) {
        Some(v) => Err(FrontendError::SamplingIn {
            name: v.clone(),
            place,
        }),
        None => Ok(()),
    }
}

fn check_stmts(ast: &ProgramAst, stmts: &[Stmt]) -> Result<(), FrontendError> {
    for s in stmts {
        if let Some(a) = &s.annot {
            no_sampling(ast, &a.vars(), "annotation")?;
        }
        match &s.kind {
            StmtKind::Skip => {}
            StmtKind::Assign { var, .. } => {
                if ast.is_sampling(var) {
                    return Err(FrontendError::SamplingIn {
                        name: var.clone(),
                        place: "assignment target",
                    });
                }
            }
            StmtKind::Tick(e) => no_sampling(ast, &e.vars(), "tick")?,
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if let Cond::Guard(g) = cond {
                    no_sampling(ast, &g.vars(), "guard")?;
                }
                check_stmts(ast, then_branch)?;
                check_stmts(ast, else_branch)?;
            }
            StmtKind::While { guard, body } => {
                no_sampling(ast, &guard.vars(), "guard")?;
                check_stmts(ast, body)?;
            }
        }
    }
    Ok(())
}
