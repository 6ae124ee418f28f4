//! Pretty printer. The output re-parses to a structurally equal program.

use std::fmt::{self, Write};

use super::ast::*;

const PREC_QUANT: u8 = 0;
const PREC_UNARY: u8 = 8;
const PREC_POSTFIX: u8 = 9;
const PREC_ATOM: u8 = 10;

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Iff => 1,
        BinOp::Implies => 2,
        BinOp::Or => 3,
        BinOp::And => 4,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
        BinOp::Add | BinOp::Sub => 6,
        BinOp::Mul | BinOp::Div | BinOp::Mod => 7,
    }
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Int(v) if *v < 0 => PREC_UNARY,
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) | ExprKind::Call(..) => PREC_ATOM,
        ExprKind::Select(..) | ExprKind::Store(..) => PREC_POSTFIX,
        ExprKind::Unary(..) => PREC_UNARY,
        ExprKind::Binary(op, _, _) => binop_prec(*op),
        ExprKind::Quant(..) => PREC_QUANT,
    }
}

/// Renders an expression in concrete syntax.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self))
    }
}

fn write_expr(out: &mut String, e: &Expr, ctx: u8) {
    let own = prec(e);
    // quantifiers extend as far right as possible, so they are bracketed
    // everywhere except at the top of an expression
    let paren = own < ctx || (own == PREC_QUANT && ctx > 0);
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Select(m, i) => {
            write_expr(out, m, PREC_POSTFIX);
            out.push('[');
            write_expr(out, i, 0);
            out.push(']');
        }
        ExprKind::Store(m, i, v) => {
            write_expr(out, m, PREC_POSTFIX);
            out.push('[');
            write_expr(out, i, 0);
            out.push_str(" := ");
            write_expr(out, v, 0);
            out.push(']');
        }
        ExprKind::Unary(UnOp::Not, x) => {
            out.push('!');
            write_expr(out, x, PREC_UNARY);
        }
        ExprKind::Unary(UnOp::Neg, x) => {
            out.push('-');
            if matches!(x.kind, ExprKind::Int(v) if v >= 0) {
                // `-5` would read back as a literal
                out.push('(');
                write_expr(out, x, 0);
                out.push(')');
            } else {
                write_expr(out, x, PREC_UNARY);
            }
        }
        ExprKind::Binary(op, l, r) => {
            let p = binop_prec(*op);
            let (lp, rp) = match op {
                BinOp::Implies => (p + 1, p),
                op if op.is_relational() => (p + 1, p + 1),
                _ => (p, p + 1),
            };
            write_expr(out, l, lp);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, r, rp);
        }
        ExprKind::Call(f, args) => {
            out.push_str(f);
            out.push('(');
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 0);
            }
            out.push(')');
        }
        ExprKind::Quant(q, binders, body) => {
            out.push_str(match q {
                Quantifier::Forall => "forall ",
                Quantifier::Exists => "exists ",
            });
            for (k, b) in binders.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}: {}", b.name, b.ty);
            }
            out.push_str(" :: ");
            write_expr(out, body, 0);
        }
    }
    if paren {
        out.push(')');
    }
}

fn decls(ds: &[VarDecl]) -> String {
    ds.iter().map(|d| format!("{}: {}", d.name, d.ty)).collect::<Vec<_>>().join(", ")
}

/// Renders a whole program. An empty program prints as the empty string.
pub fn pretty_print(p: &Program) -> String {
    let mut sections: Vec<String> = Vec::new();
    if !p.globals.is_empty() {
        sections.push(p.globals.iter().map(|g| format!("var {}: {};\n", g.name, g.ty)).collect());
    }
    if !p.functions.is_empty() {
        sections.push(p.functions.iter().map(print_function).collect::<Vec<_>>().join("\n"));
    }
    if !p.axioms.is_empty() {
        sections.push(
            p.axioms.iter().map(|a| format!("axiom {};\n", print_expr(&a.formula))).collect(),
        );
    }
    for pr in &p.procedures {
        sections.push(print_procedure(pr));
    }
    sections.join("\n")
}

fn print_function(f: &FunctionDecl) -> String {
    let mut out = format!("function {}({}) returns ({})", f.name, decls(&f.params), f.ret);
    match &f.body {
        Some(b) => {
            let _ = writeln!(out, "\n{{\n  {}\n}}", print_expr(b));
        }
        None => out.push_str(";\n"),
    }
    out
}

pub fn print_procedure(pr: &ProcedureDecl) -> String {
    let mut out = format!("procedure {}({})", pr.name, decls(&pr.ins));
    if !pr.outs.is_empty() {
        let _ = write!(out, " returns ({})", decls(&pr.outs));
    }
    if pr.body.is_none() {
        out.push(';');
    }
    out.push('\n');
    if !pr.modifies.is_empty() {
        let _ = writeln!(out, "  modifies {};", pr.modifies.join(", "));
    }
    for r in &pr.requires {
        let _ = writeln!(out, "  requires {};", print_expr(r));
    }
    for e in &pr.ensures {
        let _ = writeln!(out, "  ensures {};", print_expr(e));
    }
    if let Some(body) = &pr.body {
        out.push_str("{\n");
        for l in &body.locals {
            let _ = writeln!(out, "  var {}: {};", l.name, l.ty);
        }
        if !body.locals.is_empty() && !body.stmts.is_empty() {
            out.push('\n');
        }
        write_block(&mut out, &body.stmts, 1);
        out.push_str("}\n");
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        write_stmt(out, s, depth);
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::Assert(e) => {
            let _ = writeln!(out, "assert {};", print_expr(e));
        }
        StmtKind::Assume(e) => {
            let _ = writeln!(out, "assume {};", print_expr(e));
        }
        StmtKind::Havoc(x) => {
            let _ = writeln!(out, "havoc {x};");
        }
        StmtKind::Assign(x, rhs) => match &rhs.kind {
            ExprKind::Store(m, i, v) if m.as_var() == Some(x.as_str()) => {
                let _ = writeln!(out, "{x}[{}] := {};", print_expr(i), print_expr(v));
            }
            _ => {
                let _ = writeln!(out, "{x} := {};", print_expr(rhs));
            }
        },
        StmtKind::Call { outs, callee, args } => {
            let args: Vec<String> = args.iter().map(print_expr).collect();
            if outs.is_empty() {
                let _ = writeln!(out, "call {callee}({});", args.join(", "));
            } else {
                let _ = writeln!(out, "call {} := {callee}({});", outs.join(", "), args.join(", "));
            }
        }
        StmtKind::If { cond, then_block, else_block } => {
            write_if(out, cond, then_block, else_block, depth);
        }
        StmtKind::While { guard, invariants, body } => {
            let _ = writeln!(out, "while ({})", print_expr(guard));
            for inv in invariants {
                indent(out, depth + 1);
                let _ = writeln!(out, "invariant {};", print_expr(inv));
            }
            indent(out, depth);
            out.push_str("{\n");
            write_block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
    }
}

fn write_if(out: &mut String, cond: &Expr, then_block: &[Stmt], else_block: &[Stmt], depth: usize) {
    let _ = writeln!(out, "if ({}) {{", print_expr(cond));
    write_block(out, then_block, depth + 1);
    indent(out, depth);
    out.push('}');
    match else_block {
        [] => out.push('\n'),
        [Stmt { kind: StmtKind::If { cond, then_block, else_block }, .. }] => {
            out.push_str(" else ");
            write_if(out, cond, then_block, else_block, depth);
        }
        _ => {
            out.push_str(" else {\n");
            write_block(out, else_block, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
    }
}
