//! Initiation and consecution conditions by weakest precondition.
//!
//! Loops other than the one under scrutiny are abstracted: their targets are
//! havocked and their annotations assumed, together with the guard when the
//! path enters the loop body and the negated guard when the path continues
//! past the loop.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::analysis::{LoopId, LoopInfo};
use crate::frontend::{Binder, Expr, ExprKind, Ident, ProcedureDecl, Program, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VcKind {
    Initiation,
    Consecution,
}

impl fmt::Display for VcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VcKind::Initiation => "initiation",
            VcKind::Consecution => "consecution",
        })
    }
}

#[derive(Debug, Clone)]
pub struct VerificationCondition {
    pub kind: VcKind,
    pub loop_id: LoopId,
    /// Closed except for program variables and fresh symbols, which are
    /// implicitly universally quantified.
    pub formula: Expr,
}

/// Formulas assumed at each loop head.
pub type Annotations = HashMap<LoopId, Vec<Expr>>;

/// Loop-abstracted, straight-line view of a path through a procedure.
#[derive(Debug, Clone)]
enum Cmd {
    Assume(Expr),
    Assert(Expr),
    Assign(Ident, Expr),
    Havoc(Ident),
    Call { outs: Vec<Ident>, callee: Ident, args: Vec<Expr> },
    Branch(Expr, Vec<Cmd>, Vec<Cmd>),
}

/// Builds VCs for one procedure under a fixed set of loop annotations.
pub struct VcGen<'a> {
    program: &'a Program,
    proc: &'a ProcedureDecl,
    loops: HashMap<&'a [usize], &'a LoopInfo>,
    anns: &'a Annotations,
}

impl<'a> VcGen<'a> {
    pub fn new(
        program: &'a Program,
        proc: &'a ProcedureDecl,
        loops: &'a [LoopInfo],
        anns: &'a Annotations,
    ) -> Self {
        let loops = loops.iter().map(|l| (l.id.path.as_slice(), l)).collect();
        VcGen { program, proc, loops, anns }
    }

    fn info(&self, path: &[usize]) -> &'a LoopInfo {
        self.loops[path]
    }

    fn annotations(&self, lp: &LoopInfo) -> Expr {
        Expr::conjunction(self.anns.get(&lp.id).into_iter().flatten().cloned())
    }

    fn abstract_loop(&self, lp: &LoopInfo, enter: bool, out: &mut Vec<Cmd>) {
        out.extend(lp.targets.iter().map(|t| Cmd::Havoc(t.clone())));
        out.push(Cmd::Assume(self.annotations(lp)));
        let guard = if enter { lp.guard.clone() } else { Expr::not(lp.guard.clone()) };
        out.push(Cmd::Assume(guard));
    }

    fn straight(&self, stmts: &[Stmt], base: &mut Vec<usize>, out: &mut Vec<Cmd>) {
        for (k, s) in stmts.iter().enumerate() {
            base.push(k);
            self.stmt(s, base, out);
            base.pop();
        }
    }

    fn stmt(&self, s: &Stmt, path: &mut Vec<usize>, out: &mut Vec<Cmd>) {
        match &s.kind {
            StmtKind::Assert(e) => out.push(Cmd::Assert(e.clone())),
            StmtKind::Assume(e) => out.push(Cmd::Assume(e.clone())),
            StmtKind::Havoc(x) => out.push(Cmd::Havoc(x.clone())),
            StmtKind::Assign(x, e) => out.push(Cmd::Assign(x.clone(), e.clone())),
            StmtKind::Call { outs, callee, args } => out.push(Cmd::Call {
                outs: outs.clone(),
                callee: callee.clone(),
                args: args.clone(),
            }),
            StmtKind::If { cond, then_block, else_block } => {
                let mut t = Vec::new();
                let mut e = Vec::new();
                path.push(0);
                self.straight(then_block, path, &mut t);
                path.pop();
                path.push(1);
                self.straight(else_block, path, &mut e);
                path.pop();
                out.push(Cmd::Branch(cond.clone(), t, e));
            }
            StmtKind::While { .. } => self.abstract_loop(self.info(path), false, out),
        }
    }

    /// Commands from procedure entry to the head of the loop at `target`.
    fn prefix(&self, stmts: &[Stmt], base: &mut Vec<usize>, target: &[usize], out: &mut Vec<Cmd>) {
        let (k, rest) = (target[0], &target[1..]);
        self.straight(&stmts[..k], base, out);
        base.push(k);
        match &stmts[k].kind {
            StmtKind::While { body, .. } if !rest.is_empty() => {
                self.abstract_loop(self.info(base), true, out);
                self.prefix(body, base, rest, out);
            }
            StmtKind::While { .. } => {}
            StmtKind::If { cond, then_block, else_block } => {
                let (branch, rest) = (rest[0], &rest[1..]);
                let (block, c) = if branch == 0 {
                    (then_block, cond.clone())
                } else {
                    (else_block, Expr::not(cond.clone()))
                };
                out.push(Cmd::Assume(c));
                base.push(branch);
                self.prefix(block, base, rest, out);
                base.pop();
            }
            _ => unreachable!("loop path runs through a simple statement"),
        }
        base.pop();
    }

    fn finish(&self, cmds: Vec<Cmd>) -> Expr {
        let mut fresh = Fresh::default();
        let body = wp(self.program, &cmds, Expr::bool(true), &mut fresh);
        if self.proc.requires.is_empty() {
            body
        } else {
            Expr::implies(Expr::conjunction(self.proc.requires.iter().cloned()), body)
        }
    }

    /// `goal` holds whenever control first reaches the head of `lp`.
    pub fn initiation(&self, lp: &LoopInfo, goal: &Expr) -> VerificationCondition {
        let mut cmds = Vec::new();
        self.prefix(self.proc.stmts(), &mut Vec::new(), &lp.id.path, &mut cmds);
        cmds.push(Cmd::Assert(goal.clone()));
        VerificationCondition { kind: VcKind::Initiation, loop_id: lp.id.clone(), formula: self.finish(cmds) }
    }

    /// One iteration of `lp`, started in any state satisfying its annotations
    /// and guard, re-establishes `goal`.
    pub fn consecution(&self, lp: &LoopInfo, goal: &Expr) -> VerificationCondition {
        let mut cmds = Vec::new();
        self.prefix(self.proc.stmts(), &mut Vec::new(), &lp.id.path, &mut cmds);
        self.abstract_loop(lp, true, &mut cmds);
        self.straight(&lp.body, &mut lp.id.path.clone(), &mut cmds);
        cmds.push(Cmd::Assert(goal.clone()));
        VerificationCondition { kind: VcKind::Consecution, loop_id: lp.id.clone(), formula: self.finish(cmds) }
    }
}

/// Source of fresh symbols `name@k`; `@` cannot appear in source identifiers.
#[derive(Debug, Default)]
pub struct Fresh(usize);

impl Fresh {
    pub fn name(&mut self, base: &str) -> Ident {
        self.0 += 1;
        format!("{base}@{}", self.0)
    }
}

/// Strips the `@k` suffix of a fresh symbol.
pub fn base_name(sym: &str) -> &str {
    sym.split('@').next().unwrap_or(sym)
}

fn is_true(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Bool(true))
}

fn and(a: Expr, b: Expr) -> Expr {
    if is_true(&a) {
        b
    } else if is_true(&b) {
        a
    } else {
        Expr::and(a, b)
    }
}

fn implies(a: Expr, b: Expr) -> Expr {
    if is_true(&a) || is_true(&b) {
        b
    } else {
        Expr::implies(a, b)
    }
}

fn wp(program: &Program, cmds: &[Cmd], post: Expr, fresh: &mut Fresh) -> Expr {
    cmds.iter().rev().fold(post, |q, c| wp_cmd(program, c, q, fresh))
}

fn wp_cmd(program: &Program, c: &Cmd, q: Expr, fresh: &mut Fresh) -> Expr {
    match c {
        Cmd::Assume(e) => implies(e.clone(), q),
        Cmd::Assert(e) => and(e.clone(), q),
        Cmd::Assign(x, e) => substitute(&q, &HashMap::from([(x.clone(), e.clone())]), fresh),
        Cmd::Havoc(x) => {
            let f = Expr::var(fresh.name(x));
            substitute(&q, &HashMap::from([(x.clone(), f)]), fresh)
        }
        Cmd::Branch(cond, t, e) => {
            let qt = wp(program, t, q.clone(), fresh);
            let qe = wp(program, e, q, fresh);
            and(implies(cond.clone(), qt), implies(Expr::not(cond.clone()), qe))
        }
        Cmd::Call { outs, callee, args } => {
            let decl = program.procedure(callee).expect("callee resolved by the type checker");
            let mut actuals: HashMap<Ident, Expr> = decl
                .ins
                .iter()
                .zip(args)
                .map(|(p, a)| (p.name.clone(), a.clone()))
                .collect();
            let pre = substitute(&Expr::conjunction(decl.requires.iter().cloned()), &actuals, fresh);
            let mut after: HashMap<Ident, Expr> = HashMap::new();
            for (formal, actual) in decl.outs.iter().zip(outs) {
                let f = Expr::var(fresh.name(actual));
                actuals.insert(formal.name.clone(), f.clone());
                after.insert(actual.clone(), f);
            }
            for g in &decl.modifies {
                let f = Expr::var(fresh.name(g));
                actuals.insert(g.clone(), f.clone());
                after.insert(g.clone(), f);
            }
            let post = substitute(&Expr::conjunction(decl.ensures.iter().cloned()), &actuals, fresh);
            and(pre, implies(post, substitute(&q, &after, fresh)))
        }
    }
}

/// Simultaneous, capture-avoiding substitution of free variables.
pub fn substitute(e: &Expr, map: &HashMap<Ident, Expr>, fresh: &mut Fresh) -> Expr {
    if map.is_empty() {
        return e.clone();
    }
    let kind = match &e.kind {
        ExprKind::Var(x) => return map.get(x).cloned().unwrap_or_else(|| e.clone()),
        ExprKind::Int(_) | ExprKind::Bool(_) => return e.clone(),
        ExprKind::Select(m, i) => {
            ExprKind::Select(Box::new(substitute(m, map, fresh)), Box::new(substitute(i, map, fresh)))
        }
        ExprKind::Store(m, i, v) => ExprKind::Store(
            Box::new(substitute(m, map, fresh)),
            Box::new(substitute(i, map, fresh)),
            Box::new(substitute(v, map, fresh)),
        ),
        ExprKind::Unary(op, x) => ExprKind::Unary(*op, Box::new(substitute(x, map, fresh))),
        ExprKind::Binary(op, l, r) => ExprKind::Binary(
            *op,
            Box::new(substitute(l, map, fresh)),
            Box::new(substitute(r, map, fresh)),
        ),
        ExprKind::Call(f, args) => {
            ExprKind::Call(f.clone(), args.iter().map(|a| substitute(a, map, fresh)).collect())
        }
        ExprKind::Quant(q, binders, body) => {
            let mut inner: HashMap<Ident, Expr> = map
                .iter()
                .filter(|(k, _)| !binders.iter().any(|b| &b.name == *k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            let captured: HashSet<Ident> = inner.values().flat_map(|v| v.free_vars()).collect();
            let mut nb = Vec::with_capacity(binders.len());
            for b in binders {
                if captured.contains(&b.name) {
                    let renamed = fresh.name(&b.name);
                    inner.insert(b.name.clone(), Expr::var(renamed.clone()));
                    nb.push(Binder { name: renamed, ty: b.ty, span: b.span });
                } else {
                    nb.push(b.clone());
                }
            }
            ExprKind::Quant(*q, nb, Box::new(substitute(body, &inner, fresh)))
        }
    };
    Expr::new(kind, e.span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::all_loops;
    use crate::frontend::{parse_expr, parse_program, print_expr};

    #[test]
    fn max_initiation_golden() {
        let p = parse_program(
            "procedure max(A: array int, n: int) returns (Result: int)
               requires n >= 1;
               ensures forall j: int :: 1 <= j && j <= n ==> A[j] <= Result;
             {
               var i: int;
               i := 0; Result := A[1];
               while (i < n) { i := i + 1; if (Result <= A[i]) { Result := A[i]; } }
             }",
        )
        .unwrap();
        let proc = &p.procedures[0];
        let loops = all_loops(&p, proc).unwrap();
        let cand = parse_expr("forall j: int :: 1 <= j && j <= i ==> A[j] <= Result").unwrap();
        let anns = Annotations::from([(loops[0].id.clone(), vec![cand.clone()])]);
        let g = VcGen::new(&p, proc, &loops, &anns);
        assert_eq!(
            print_expr(&g.initiation(&loops[0], &cand).formula),
            "n >= 1 ==> (forall j: int :: 1 <= j && j <= 0 ==> A[j] <= A[1])"
        );
        let cons = print_expr(&g.consecution(&loops[0], &cand).formula);
        assert!(cons.contains("i@1 < n"), "{cons}");
    }

    #[test]
    fn substitution_avoids_capture() {
        let e = parse_expr("forall j: int :: j < k").unwrap();
        let mut fresh = Fresh::default();
        let out = substitute(&e, &HashMap::from([("k".to_string(), Expr::var("j"))]), &mut fresh);
        assert_eq!(print_expr(&out), "forall j@1: int :: j@1 < j");
    }

    #[test]
    fn call_havocs_frame_and_outputs() {
        let p = parse_program(
            "var G: int;
             procedure inc(x: int) returns (y: int) modifies G; requires x >= 0; ensures y == x + 1 && G == y;
             procedure p(a: int) returns (r: int) modifies G;
             {
               r := a;
               while (r < 10) { call r := inc(r); }
             }",
        )
        .unwrap();
        let proc = &p.procedures[1];
        let loops = all_loops(&p, proc).unwrap();
        let anns = Annotations::new();
        let g = VcGen::new(&p, proc, &loops, &anns);
        let goal = parse_expr("G == r").unwrap();
        let vc = print_expr(&g.consecution(&loops[0], &goal).formula);
        assert_eq!(vc, "r@3 < 10 ==> r@3 >= 0 && (r@1 == r@3 + 1 && G@2 == r@1 ==> G@2 == r@1)");
    }
}
