//! SMT-LIB 2 rendering of verification conditions.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use crate::frontend::{BinOp, Expr, ExprKind, FunctionDecl, Program, Quantifier, Scope, Type, UnOp};

use super::vcgen::base_name;

fn sort(t: Type) -> &'static str {
    match t {
        Type::Int => "Int",
        Type::Bool => "Bool",
        Type::Map => "(Array Int Int)",
    }
}

/// Quoted symbol; `|` and `\` cannot occur in identifiers.
fn sym(name: &str) -> String {
    format!("|{name}|")
}

/// Renders `e` as an SMT-LIB term.
pub fn term(e: &Expr) -> String {
    let mut s = String::new();
    write_term(e, &mut s);
    s
}

fn write_term(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Int(n) if *n < 0 => {
            let _ = write!(out, "(- {})", n.unsigned_abs());
        }
        ExprKind::Int(n) => {
            let _ = write!(out, "{n}");
        }
        ExprKind::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        ExprKind::Var(x) => out.push_str(&sym(x)),
        ExprKind::Select(m, i) => app(out, "select", &[m, i]),
        ExprKind::Store(m, i, v) => app(out, "store", &[m, i, v]),
        ExprKind::Unary(UnOp::Not, x) => app(out, "not", &[x]),
        ExprKind::Unary(UnOp::Neg, x) => app(out, "-", &[x]),
        ExprKind::Binary(BinOp::Ne, l, r) => app(out, "distinct", &[l, r]),
        ExprKind::Binary(op @ (BinOp::And | BinOp::Or), ..) => {
            let mut parts = Vec::new();
            flatten(*op, e, &mut parts);
            app(out, if *op == BinOp::And { "and" } else { "or" }, &parts);
        }
        ExprKind::Binary(op, l, r) => {
            let f = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "div",
                BinOp::Mod => "mod",
                BinOp::Eq | BinOp::Iff => "=",
                BinOp::Lt => "<",
                BinOp::Le => "<=",
                BinOp::Gt => ">",
                BinOp::Ge => ">=",
                BinOp::Implies => "=>",
                BinOp::Ne | BinOp::And | BinOp::Or => unreachable!(),
            };
            app(out, f, &[l, r]);
        }
        ExprKind::Call(f, args) if args.is_empty() => out.push_str(&sym(f)),
        ExprKind::Call(f, args) => {
            let refs: Vec<&Expr> = args.iter().collect();
            app(out, &sym(f), &refs);
        }
        ExprKind::Quant(q, binders, body) => {
            out.push_str(match q {
                Quantifier::Forall => "(forall (",
                Quantifier::Exists => "(exists (",
            });
            for (k, b) in binders.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "({} {})", sym(&b.name), sort(b.ty));
            }
            out.push_str(") ");
            write_term(body, out);
            out.push(')');
        }
    }
}

fn flatten<'e>(op: BinOp, e: &'e Expr, out: &mut Vec<&'e Expr>) {
    match &e.kind {
        ExprKind::Binary(o, l, r) if *o == op => {
            flatten(op, l, out);
            flatten(op, r, out);
        }
        _ => out.push(e),
    }
}

fn app<E: AsRef<Expr>>(out: &mut String, f: &str, args: &[E]) {
    out.push('(');
    out.push_str(f);
    for a in args {
        out.push(' ');
        write_term(a.as_ref(), out);
    }
    out.push(')');
}

impl AsRef<Expr> for Expr {
    fn as_ref(&self) -> &Expr {
        self
    }
}

fn calls(e: &Expr, out: &mut Vec<String>) {
    if let ExprKind::Call(f, _) = &e.kind {
        out.push(f.clone());
    }
    for c in e.children() {
        calls(c, out);
    }
}

/// Functions in an order where every defined function follows its callees.
fn function_order(program: &Program) -> Vec<&FunctionDecl> {
    fn visit<'p>(f: &'p FunctionDecl, p: &'p Program, done: &mut HashSet<&'p str>, out: &mut Vec<&'p FunctionDecl>) {
        if !done.insert(&f.name) {
            return;
        }
        let mut callees = Vec::new();
        if let Some(b) = &f.body {
            calls(b, &mut callees);
        }
        for c in callees {
            if let Some(g) = p.function(&c) {
                visit(g, p, done, out);
            }
        }
        out.push(f);
    }
    let mut done = HashSet::new();
    let mut out = Vec::new();
    for f in &program.functions {
        visit(f, program, &mut done, &mut out);
    }
    out
}

/// Complete query script whose answer is `unsat` exactly when `vc` is valid
/// under the program's functions and axioms.
///
/// Free variables of `vc` are declared as constants; fresh symbols `x@k`
/// take the type of `x` in `scope`.
pub fn script(vc: &Expr, scope: &Scope) -> Result<String, String> {
    let program = scope.program();
    let mut s = String::from("(set-option :produce-models true)\n(set-logic AUFNIRA)\n");
    for f in function_order(program) {
        let params: Vec<String> =
            f.params.iter().map(|p| format!("({} {})", sym(&p.name), sort(p.ty))).collect();
        match &f.body {
            Some(b) => {
                let _ = writeln!(
                    s,
                    "(define-fun {} ({}) {} {})",
                    sym(&f.name),
                    params.join(" "),
                    sort(f.ret),
                    term(b)
                );
            }
            None => {
                let doms: Vec<&str> = f.params.iter().map(|p| sort(p.ty)).collect();
                let _ = writeln!(s, "(declare-fun {} ({}) {})", sym(&f.name), doms.join(" "), sort(f.ret));
            }
        }
    }
    let mut consts = BTreeMap::new();
    for v in vc.free_vars() {
        let ty = scope
            .lookup(base_name(&v))
            .ok_or_else(|| format!("no type for symbol {v}"))?;
        consts.insert(v, ty);
    }
    for (v, ty) in &consts {
        let _ = writeln!(s, "(declare-const {} {})", sym(v), sort(*ty));
    }
    for a in &program.axioms {
        let _ = writeln!(s, "(assert {})", term(&a.formula));
    }
    let _ = writeln!(s, "(assert (not {}))", term(vc));
    s.push_str("(check-sat)\n");
    Ok(s)
}
