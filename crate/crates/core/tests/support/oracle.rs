//! Brute-force candidate enumerator, written without the engine's analysis
//! or weakening code. Loops are located, targets collected, constants listed
//! and occurrences replaced by the naive routines below; only parsing, typing
//! lookups and alpha normalization come from the library.

use std::collections::BTreeSet;

use invforge::frontend::{alpha_key, BinOp, Binder, Expr, ExprKind, ProcedureDecl, Program, Scope, Stmt, StmtKind, Type};
use invforge::weakening::HeuristicLevel;

/// Variables written anywhere in `stmts`, including callee frames.
fn written(stmts: &[Stmt], program: &Program, out: &mut BTreeSet<String>) {
    for s in stmts {
        match &s.kind {
            StmtKind::Assign(x, _) | StmtKind::Havoc(x) => {
                out.insert(x.clone());
            }
            StmtKind::Call { outs, callee, .. } => {
                out.extend(outs.iter().cloned());
                out.extend(program.procedure(callee).unwrap().modifies.iter().cloned());
            }
            StmtKind::If { then_block, else_block, .. } => {
                written(then_block, program, out);
                written(else_block, program, out);
            }
            StmtKind::While { body, .. } => written(body, program, out),
            StmtKind::Assert(_) | StmtKind::Assume(_) => {}
        }
    }
}

/// Bodies of the loops not nested in another loop.
fn top_loops(stmts: &[Stmt]) -> Vec<&[Stmt]> {
    let mut out = Vec::new();
    for s in stmts {
        match &s.kind {
            StmtKind::While { body, .. } => out.push(body.as_slice()),
            StmtKind::If { then_block, else_block, .. } => {
                out.extend(top_loops(then_block));
                out.extend(top_loops(else_block));
            }
            _ => {}
        }
    }
    out
}

fn contains_loop(stmts: &[Stmt]) -> bool {
    stmts.iter().any(|s| match &s.kind {
        StmtKind::While { .. } => true,
        StmtKind::If { then_block, else_block, .. } => contains_loop(then_block) || contains_loop(else_block),
        _ => false,
    })
}

/// Previous-iteration values of `v`: `v := v + c` gives `v - c` and so on,
/// for `c` not written by the loop.
fn previous(v: &str, body: &[Stmt], targets: &BTreeSet<String>, out: &mut Vec<Expr>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign(x, rhs) if x == v => {
                if let ExprKind::Binary(op, l, r) = &rhs.kind {
                    let constant = |e: &Expr| e.free_vars().iter().all(|x| !targets.contains(x));
                    let is_v = |e: &Expr| matches!(&e.kind, ExprKind::Var(y) if y == v);
                    let aged = match op {
                        BinOp::Add if is_v(l) && constant(r) => Some(Expr::binary(BinOp::Sub, Expr::var(v), (**r).clone())),
                        BinOp::Add if is_v(r) && constant(l) => Some(Expr::binary(BinOp::Sub, Expr::var(v), (**l).clone())),
                        BinOp::Sub if is_v(l) && constant(r) => Some(Expr::binary(BinOp::Add, Expr::var(v), (**r).clone())),
                        _ => None,
                    };
                    if let Some(a) = aged {
                        if !out.contains(&a) {
                            out.push(a);
                        }
                    }
                }
            }
            StmtKind::If { then_block, else_block, .. } => {
                previous(v, then_block, targets, out);
                previous(v, else_block, targets, out);
            }
            StmtKind::While { body, .. } => previous(v, body, targets, out),
            _ => {}
        }
    }
}

/// Node reached by an occurrence: an expression, or a binder slot.
#[derive(Clone)]
enum Slot {
    Node(Vec<usize>),
    Binder(Vec<usize>, usize),
}

fn kids(e: &Expr) -> Vec<&Expr> {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => vec![],
        ExprKind::Select(a, b) => vec![a, b],
        ExprKind::Store(a, b, c) => vec![a, b, c],
        ExprKind::Unary(_, a) => vec![a],
        ExprKind::Binary(_, a, b) => vec![a, b],
        ExprKind::Call(_, args) => args.iter().collect(),
        ExprKind::Quant(_, _, b) => vec![b],
    }
}

/// Every node of `e` in pre-order, with quantifier binders listed right after
/// their quantifier, along with the names bound above the node.
fn preorder(e: &Expr, path: &mut Vec<usize>, bound: &mut Vec<Binder>, out: &mut Vec<(Slot, Expr, Vec<Binder>)>) {
    out.push((Slot::Node(path.clone()), e.clone(), bound.clone()));
    let n = bound.len();
    if let ExprKind::Quant(_, bs, _) = &e.kind {
        for (k, b) in bs.iter().enumerate() {
            out.push((Slot::Binder(path.clone(), k), Expr::var(b.name.clone()), bound.clone()));
            bound.push(b.clone());
        }
    }
    for (k, c) in kids(e).into_iter().enumerate() {
        path.push(k);
        preorder(c, path, bound, out);
        path.pop();
    }
    bound.truncate(n);
}

fn replace_at(e: &Expr, slot: &Slot, new: &Expr) -> Option<Expr> {
    fn child_mut(e: &mut Expr, k: usize) -> &mut Expr {
        match &mut e.kind {
            ExprKind::Select(a, b) | ExprKind::Binary(_, a, b) => [a, b].into_iter().nth(k).unwrap(),
            ExprKind::Store(a, b, c) => [a, b, c].into_iter().nth(k).unwrap(),
            ExprKind::Unary(_, a) | ExprKind::Quant(_, _, a) => {
                assert_eq!(k, 0);
                a
            }
            ExprKind::Call(_, args) => &mut args[k],
            _ => unreachable!(),
        }
    }
    let mut out = e.clone();
    let (path, binder) = match slot {
        Slot::Node(p) => (p, None),
        Slot::Binder(p, k) => (p, Some(*k)),
    };
    let mut cur = &mut out;
    for &k in path {
        cur = child_mut(cur, k);
    }
    match binder {
        None => *cur = new.clone(),
        Some(k) => {
            let ExprKind::Quant(_, bs, _) = &mut cur.kind else { unreachable!() };
            bs[k].name = match &new.kind {
                ExprKind::Var(n) => n.clone(),
                _ => return None,
            };
        }
    }
    Some(out)
}

fn flatten<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match &e.kind {
        ExprKind::Binary(BinOp::And, l, r) => {
            flatten(l, out);
            flatten(r, out);
        }
        _ => out.push(e),
    }
}

/// Alpha keys of every candidate the weakening rules allow for `proc`.
pub fn enumerate(program: &Program, proc: &ProcedureDecl, level: &HeuristicLevel) -> BTreeSet<String> {
    let mut keys = BTreeSet::new();
    if !contains_loop(proc.stmts()) {
        return keys;
    }
    let scope = Scope::procedure(program, proc);
    let mut posts: Vec<Expr> = Vec::new();
    for clause in &proc.ensures {
        posts.push(clause.clone());
        if level.conjunct_split {
            let mut parts = Vec::new();
            flatten(clause, &mut parts);
            posts.extend(parts.into_iter().cloned());
        }
    }
    for post in &posts {
        keys.insert(alpha_key(post));
        if !level.relaxation {
            continue;
        }
        let mut nodes = Vec::new();
        preorder(post, &mut Vec::new(), &mut Vec::new(), &mut nodes);
        for body in top_loops(proc.stmts()) {
            let mut targets = BTreeSet::new();
            written(body, program, &mut targets);
            // Constants with their type.
            let mut constants: Vec<(Expr, Type)> = Vec::new();
            for (slot, e, bound) in &nodes {
                let is_bound = |x: &String| bound.iter().any(|b| &b.name == x);
                let ty = match (&e.kind, slot) {
                    (ExprKind::Var(x), Slot::Node(_)) if !is_bound(x) && !targets.contains(x) => scope.lookup(x),
                    (ExprKind::Int(_), _) => Some(Type::Int),
                    (ExprKind::Select(..), _) if e.free_vars().iter().all(|x| !targets.contains(x)) => Some(Type::Int),
                    _ => None,
                };
                if let Some(ty) = ty {
                    if !constants.iter().any(|(c, _)| c == e) {
                        constants.push((e.clone(), ty));
                    }
                }
            }
            if level.target_uncoupling {
                let mut seen: Vec<String> = Vec::new();
                for (slot, e, bound) in &nodes {
                    let ExprKind::Var(t) = &e.kind else { continue };
                    if !matches!(slot, Slot::Node(_)) || bound.iter().any(|b| &b.name == t) || !targets.contains(t) || seen.contains(t) {
                        continue;
                    }
                    seen.push(t.clone());
                    let slots: Vec<Slot> = nodes.iter().filter(|(_, x, _)| x == e).map(|(s, _, _)| s.clone()).collect();
                    let Some(ty) = scope.lookup(t) else { continue };
                    if slots.len() < 2 {
                        continue;
                    }
                    for v in targets.iter().filter(|v| *v != t && scope.lookup(v) == Some(ty)) {
                        let mut forms = vec![Expr::var(v.clone())];
                        if level.aging {
                            previous(v, body, &targets, &mut forms);
                        }
                        for r in &forms {
                            for s in &slots {
                                if let Some(f) = replace_at(post, s, r) {
                                    keys.insert(alpha_key(&f));
                                }
                            }
                        }
                    }
                }
            }
            for (c, ty) in &constants {
                let slots: Vec<Slot> = nodes.iter().filter(|(_, e, _)| e == c).map(|(s, _, _)| s.clone()).collect();
                let mut options: Vec<Vec<Expr>> = Vec::new();
                for v in targets.iter().filter(|v| scope.lookup(v) == Some(*ty)) {
                    let mut forms = vec![Expr::var(v.clone())];
                    if level.aging {
                        previous(v, body, &targets, &mut forms);
                    }
                    options.push(forms);
                }
                for forms in &options {
                    for r in forms {
                        // every occurrence at once
                        let mut f = Some(post.clone());
                        for s in slots.iter().rev() {
                            f = f.and_then(|f| replace_at(&f, s, r));
                        }
                        if let Some(f) = f {
                            keys.insert(alpha_key(&f));
                        }
                        if level.uncoupling {
                            for s in &slots {
                                if let Some(f) = replace_at(post, s, r) {
                                    keys.insert(alpha_key(&f));
                                }
                            }
                        }
                    }
                }
                if level.double_uncoupling {
                    for p in 0..slots.len() {
                        for q in p + 1..slots.len() {
                            for (a, fa) in options.iter().enumerate() {
                                for (b, fb) in options.iter().enumerate() {
                                    if a == b {
                                        continue;
                                    }
                                    for r1 in fa {
                                        for r2 in fb {
                                            let f = replace_at(post, &slots[q], r2)
                                                .and_then(|f| replace_at(&f, &slots[p], r1));
                                            if let Some(f) = f {
                                                keys.insert(alpha_key(&f));
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    keys
}
