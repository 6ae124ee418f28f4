use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::frontend::{Expr, Ident, ProcedureDecl, Program, Stmt, StmtKind};

use super::AnalysisError;

/// Stable loop identity: procedure name plus the statement path to the loop.
///
/// Each block contributes the index of the statement taken; an `if` adds `0`
/// for its then-branch and `1` for its else-branch. Entering a loop body adds
/// nothing beyond the loop's own index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoopId {
    pub procedure: Ident,
    pub path: Vec<usize>,
}

impl fmt::Display for LoopId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(|p| p.to_string()).collect();
        write!(f, "{}@{}", self.procedure, path.join("."))
    }
}

impl Serialize for LoopId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone)]
pub struct LoopInfo {
    pub id: LoopId,
    /// Position in a pre-order walk of the procedure body, from 0.
    pub ordinal: usize,
    pub guard: Expr,
    pub body: Vec<Stmt>,
    pub declared_invariants: Vec<Expr>,
    pub targets: BTreeSet<Ident>,
    pub parent: Option<LoopId>,
    /// Number of enclosing loops.
    pub depth: usize,
}

/// Variables a block may modify: assignment and havoc targets, call results
/// and the frames of called procedures, at any depth.
pub fn targets(stmts: &[Stmt], program: &Program) -> Result<BTreeSet<Ident>, AnalysisError> {
    let mut out = BTreeSet::new();
    collect_targets(stmts, program, &mut out)?;
    Ok(out)
}

fn collect_targets(
    stmts: &[Stmt],
    program: &Program,
    out: &mut BTreeSet<Ident>,
) -> Result<(), AnalysisError> {
    for s in stmts {
        match &s.kind {
            StmtKind::Assert(_) | StmtKind::Assume(_) => {}
            StmtKind::Havoc(x) | StmtKind::Assign(x, _) => {
                out.insert(x.clone());
            }
            StmtKind::Call { outs, callee, .. } => {
                let decl = program
                    .procedure(callee)
                    .ok_or_else(|| AnalysisError::UnknownCallee(callee.clone()))?;
                out.extend(outs.iter().cloned());
                out.extend(decl.modifies.iter().cloned());
            }
            StmtKind::If { then_block, else_block, .. } => {
                collect_targets(then_block, program, out)?;
                collect_targets(else_block, program, out)?;
            }
            StmtKind::While { body, .. } => collect_targets(body, program, out)?,
        }
    }
    Ok(())
}

/// Every loop of `proc` at any depth, in pre-order.
pub fn all_loops(program: &Program, proc: &ProcedureDecl) -> Result<Vec<LoopInfo>, AnalysisError> {
    let mut out = Vec::new();
    walk(program, &proc.name, proc.stmts(), &mut Vec::new(), None, 0, &mut out)?;
    Ok(out)
}

/// Loops not nested in any other loop, in source order.
pub fn outer_loops(
    program: &Program,
    proc: &ProcedureDecl,
) -> Result<Vec<LoopInfo>, AnalysisError> {
    Ok(all_loops(program, proc)?.into_iter().filter(|l| l.parent.is_none()).collect())
}

fn walk(
    program: &Program,
    proc: &str,
    stmts: &[Stmt],
    path: &mut Vec<usize>,
    parent: Option<&LoopId>,
    depth: usize,
    out: &mut Vec<LoopInfo>,
) -> Result<(), AnalysisError> {
    for (k, s) in stmts.iter().enumerate() {
        path.push(k);
        match &s.kind {
            StmtKind::If { then_block, else_block, .. } => {
                path.push(0);
                walk(program, proc, then_block, path, parent, depth, out)?;
                path.pop();
                path.push(1);
                walk(program, proc, else_block, path, parent, depth, out)?;
                path.pop();
            }
            StmtKind::While { guard, invariants, body } => {
                let id = LoopId { procedure: proc.to_string(), path: path.clone() };
                out.push(LoopInfo {
                    id: id.clone(),
                    ordinal: out.len(),
                    guard: guard.clone(),
                    body: body.clone(),
                    declared_invariants: invariants.clone(),
                    targets: targets(body, program)?,
                    parent: parent.cloned(),
                    depth,
                });
                walk(program, proc, body, path, Some(&id), depth + 1, out)?;
            }
            _ => {}
        }
        path.pop();
    }
    Ok(())
}

/// Greatest number of loops nested inside one another (0 for loop-free code).
pub fn max_nesting(loops: &[LoopInfo]) -> usize {
    loops.iter().map(|l| l.depth + 1).max().unwrap_or(0)
}

/// Locals of `proc` together with every global variable.
pub fn variables(program: &Program, proc: &ProcedureDecl) -> BTreeSet<Ident> {
    proc.locals().iter().chain(&program.globals).map(|d| d.name.clone()).collect()
}
