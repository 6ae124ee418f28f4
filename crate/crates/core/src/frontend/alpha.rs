//! Structural equality modulo spans and bound-variable names.
//!
//! Bound variables are compared by binding position (de Bruijn levels); free
//! variables by name. [`alpha_key`] additionally flattens `&&` and `||` chains
//! and is the deduplication key for candidate invariants.

use std::fmt::Write;
use std::hash::{Hash, Hasher};

use super::ast::{BinOp, Expr, ExprKind, UnOp};

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        alpha_eq(self, other, &mut Vec::new(), &mut Vec::new())
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        hash_expr(self, &mut Vec::new(), state)
    }
}

fn lookup(stack: &[&str], name: &str) -> Option<usize> {
    stack.iter().rposition(|b| *b == name)
}

fn alpha_eq<'a>(a: &'a Expr, b: &'a Expr, sa: &mut Vec<&'a str>, sb: &mut Vec<&'a str>) -> bool {
    use ExprKind::*;
    match (&a.kind, &b.kind) {
        (Int(x), Int(y)) => x == y,
        (Bool(x), Bool(y)) => x == y,
        (Var(x), Var(y)) => match (lookup(sa, x), lookup(sb, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Select(m1, i1), Select(m2, i2)) => alpha_eq(m1, m2, sa, sb) && alpha_eq(i1, i2, sa, sb),
        (Store(m1, i1, v1), Store(m2, i2, v2)) => {
            alpha_eq(m1, m2, sa, sb) && alpha_eq(i1, i2, sa, sb) && alpha_eq(v1, v2, sa, sb)
        }
        (Unary(o1, e1), Unary(o2, e2)) => o1 == o2 && alpha_eq(e1, e2, sa, sb),
        (Binary(o1, l1, r1), Binary(o2, l2, r2)) => {
            o1 == o2 && alpha_eq(l1, l2, sa, sb) && alpha_eq(r1, r2, sa, sb)
        }
        (Call(f1, a1), Call(f2, a2)) => {
            f1 == f2
                && a1.len() == a2.len()
                && a1.iter().zip(a2).all(|(x, y)| alpha_eq(x, y, sa, sb))
        }
        (Quant(q1, b1, e1), Quant(q2, b2, e2)) => {
            if q1 != q2 || b1.len() != b2.len() || b1.iter().zip(b2).any(|(x, y)| x.ty != y.ty) {
                return false;
            }
            let (na, nb) = (sa.len(), sb.len());
            sa.extend(b1.iter().map(|b| b.name.as_str()));
            sb.extend(b2.iter().map(|b| b.name.as_str()));
            let eq = alpha_eq(e1, e2, sa, sb);
            sa.truncate(na);
            sb.truncate(nb);
            eq
        }
        _ => false,
    }
}

fn hash_expr<'a, H: Hasher>(e: &'a Expr, stack: &mut Vec<&'a str>, state: &mut H) {
    use ExprKind::*;
    std::mem::discriminant(&e.kind).hash(state);
    match &e.kind {
        Int(v) => v.hash(state),
        Bool(v) => v.hash(state),
        Var(name) => match lookup(stack, name) {
            Some(level) => {
                0u8.hash(state);
                level.hash(state)
            }
            None => {
                1u8.hash(state);
                name.hash(state)
            }
        },
        Unary(op, _) => op.hash(state),
        Binary(op, _, _) => op.hash(state),
        Call(f, args) => {
            f.hash(state);
            args.len().hash(state)
        }
        Quant(q, binders, body) => {
            q.hash(state);
            for b in binders {
                b.ty.hash(state);
            }
            let n = stack.len();
            stack.extend(binders.iter().map(|b| b.name.as_str()));
            hash_expr(body, stack, state);
            stack.truncate(n);
            return;
        }
        Select(..) | Store(..) => {}
    }
    for c in e.children() {
        hash_expr(c, stack, state);
    }
}

/// Canonical text of a formula modulo spans, bound-variable renaming and the
/// association of `&&` / `||`. Two formulas get the same key iff they are
/// alpha-equivalent after flattening those connectives.
pub fn alpha_key(e: &Expr) -> String {
    let mut out = String::new();
    write_key(e, &mut Vec::new(), &mut out);
    out
}

fn write_key<'a>(e: &'a Expr, stack: &mut Vec<&'a str>, out: &mut String) {
    use ExprKind::*;
    match &e.kind {
        Int(v) => {
            let _ = write!(out, "{v}");
        }
        Bool(v) => {
            let _ = write!(out, "{v}");
        }
        Var(name) => match lookup(stack, name) {
            Some(level) => {
                let _ = write!(out, "%{level}");
            }
            None => out.push_str(name),
        },
        Select(m, i) => {
            out.push_str("(select ");
            write_key(m, stack, out);
            out.push(' ');
            write_key(i, stack, out);
            out.push(')');
        }
        Store(m, i, v) => {
            out.push_str("(store ");
            write_key(m, stack, out);
            out.push(' ');
            write_key(i, stack, out);
            out.push(' ');
            write_key(v, stack, out);
            out.push(')');
        }
        Unary(op, inner) => {
            out.push_str(match op {
                UnOp::Not => "(not ",
                UnOp::Neg => "(neg ",
            });
            write_key(inner, stack, out);
            out.push(')');
        }
        Binary(op @ (BinOp::And | BinOp::Or), _, _) => {
            let mut parts = Vec::new();
            flatten(e, *op, &mut parts);
            let _ = write!(out, "({}", op.symbol());
            for p in parts {
                out.push(' ');
                write_key(p, stack, out);
            }
            out.push(')');
        }
        Binary(op, l, r) => {
            let _ = write!(out, "({} ", op.symbol());
            write_key(l, stack, out);
            out.push(' ');
            write_key(r, stack, out);
            out.push(')');
        }
        Call(f, args) => {
            let _ = write!(out, "(call {f}");
            for a in args {
                out.push(' ');
                write_key(a, stack, out);
            }
            out.push(')');
        }
        Quant(q, binders, body) => {
            let _ = write!(out, "({:?} (", q);
            for (i, b) in binders.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{}", b.ty);
            }
            out.push_str(") ");
            let n = stack.len();
            stack.extend(binders.iter().map(|b| b.name.as_str()));
            write_key(body, stack, out);
            stack.truncate(n);
            out.push(')');
        }
    }
}

fn flatten<'a>(e: &'a Expr, op: BinOp, out: &mut Vec<&'a Expr>) {
    match &e.kind {
        ExprKind::Binary(o, l, r) if *o == op => {
            flatten(l, op, out);
            flatten(r, op, out);
        }
        _ => out.push(e),
    }
}
