//! Name resolution and type checking.
//!
//! Expressions carry no type annotation; [`type_of`] recomputes the type of a
//! node against a [`Scope`]. Quantifier binders may not shadow any name that is
//! already visible, which keeps syntactic substitution capture-free.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::ast::*;
use super::error::{ParseError, ParseErrorKind};

type TResult<T> = Result<T, ParseError>;

fn resolution(msg: impl Into<String>, span: Span) -> ParseError {
    ParseError::at(ParseErrorKind::Resolution, msg, span)
}

fn type_err(msg: impl Into<String>, span: Span) -> ParseError {
    ParseError::at(ParseErrorKind::Type, msg, span)
}

/// Variables visible at some program point, plus the program's functions.
#[derive(Debug, Clone)]
pub struct Scope<'p> {
    program: &'p Program,
    vars: BTreeMap<Ident, Type>,
}

impl<'p> Scope<'p> {
    /// Scope with no variables at all (axioms).
    pub fn empty(program: &'p Program) -> Self {
        Scope { program, vars: BTreeMap::new() }
    }

    pub fn globals(program: &'p Program) -> Self {
        let mut s = Scope::empty(program);
        for g in &program.globals {
            s.vars.insert(g.name.clone(), g.ty);
        }
        s
    }

    /// Everything visible inside the body of `proc`.
    pub fn procedure(program: &'p Program, proc: &ProcedureDecl) -> Self {
        let mut s = Scope::globals(program);
        for d in proc.ins.iter().chain(&proc.outs).chain(proc.locals()) {
            s.vars.insert(d.name.clone(), d.ty);
        }
        s
    }

    pub fn with(mut self, decls: &[VarDecl]) -> Self {
        for d in decls {
            self.vars.insert(d.name.clone(), d.ty);
        }
        self
    }

    pub fn lookup(&self, name: &str) -> Option<Type> {
        self.vars.get(name).copied()
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn vars(&self) -> impl Iterator<Item = (&Ident, &Type)> {
        self.vars.iter()
    }
}

/// Type of `e` in `scope`.
pub fn type_of(e: &Expr, scope: &Scope) -> TResult<Type> {
    infer(e, scope, &mut Vec::new())
}

/// Checks that `e` is a well-typed boolean formula in `scope`.
pub fn check_formula(e: &Expr, scope: &Scope) -> TResult<()> {
    expect_ty(e, scope, &mut Vec::new(), Type::Bool)
}

fn expect_ty(e: &Expr, scope: &Scope, bound: &mut Vec<(Ident, Type)>, want: Type) -> TResult<()> {
    let got = infer(e, scope, bound)?;
    if got != want {
        return Err(type_err(format!("expected {want}, found {got}"), e.span));
    }
    Ok(())
}

fn infer(e: &Expr, scope: &Scope, bound: &mut Vec<(Ident, Type)>) -> TResult<Type> {
    use ExprKind::*;
    match &e.kind {
        Int(_) => Ok(Type::Int),
        Bool(_) => Ok(Type::Bool),
        Var(name) => bound
            .iter()
            .rev()
            .find(|(b, _)| b == name)
            .map(|(_, t)| *t)
            .or_else(|| scope.lookup(name))
            .ok_or_else(|| resolution(format!("undeclared identifier `{name}`"), e.span)),
        Select(m, i) => {
            expect_ty(m, scope, bound, Type::Map)?;
            expect_ty(i, scope, bound, Type::Int)?;
            Ok(Type::Int)
        }
        Store(m, i, v) => {
            expect_ty(m, scope, bound, Type::Map)?;
            expect_ty(i, scope, bound, Type::Int)?;
            expect_ty(v, scope, bound, Type::Int)?;
            Ok(Type::Map)
        }
        Unary(UnOp::Not, x) => {
            expect_ty(x, scope, bound, Type::Bool)?;
            Ok(Type::Bool)
        }
        Unary(UnOp::Neg, x) => {
            expect_ty(x, scope, bound, Type::Int)?;
            Ok(Type::Int)
        }
        Binary(op, l, r) => {
            if op.is_arithmetic() {
                expect_ty(l, scope, bound, Type::Int)?;
                expect_ty(r, scope, bound, Type::Int)?;
                Ok(Type::Int)
            } else if op.is_logical() {
                expect_ty(l, scope, bound, Type::Bool)?;
                expect_ty(r, scope, bound, Type::Bool)?;
                Ok(Type::Bool)
            } else if matches!(op, BinOp::Eq | BinOp::Ne) {
                let lt = infer(l, scope, bound)?;
                expect_ty(r, scope, bound, lt)?;
                Ok(Type::Bool)
            } else {
                expect_ty(l, scope, bound, Type::Int)?;
                expect_ty(r, scope, bound, Type::Int)?;
                Ok(Type::Bool)
            }
        }
        Call(f, args) => {
            let decl = scope
                .program
                .function(f)
                .ok_or_else(|| resolution(format!("undeclared function `{f}`"), e.span))?;
            if decl.params.len() != args.len() {
                return Err(type_err(
                    format!(
                        "function `{f}` expects {} arguments, got {}",
                        decl.params.len(),
                        args.len()
                    ),
                    e.span,
                ));
            }
            for (a, p) in args.iter().zip(&decl.params) {
                expect_ty(a, scope, bound, p.ty)?;
            }
            Ok(decl.ret)
        }
        Quant(_, binders, body) => {
            let n = bound.len();
            for b in binders {
                if scope.lookup(&b.name).is_some() || bound.iter().any(|(x, _)| *x == b.name) {
                    return Err(resolution(
                        format!("bound variable `{}` shadows a name already in scope", b.name),
                        b.span,
                    ));
                }
                bound.push((b.name.clone(), b.ty));
            }
            let r = expect_ty(body, scope, bound, Type::Bool);
            bound.truncate(n);
            r?;
            Ok(Type::Bool)
        }
    }
}

/// Full static check of a parsed program.
pub fn check_program(p: &Program) -> TResult<()> {
    let mut top: HashMap<String, &'static str> = HashMap::new();
    let mut declare = |name: &str, what: &'static str, span: Span| -> TResult<()> {
        if let Some(prev) = top.insert(name.to_string(), what) {
            return Err(resolution(format!("`{name}` is already declared as a {prev}"), span));
        }
        Ok(())
    };
    for g in &p.globals {
        declare(&g.name, "global variable", g.span)?;
    }
    for f in &p.functions {
        declare(&f.name, "function", f.span)?;
    }
    for pr in &p.procedures {
        declare(&pr.name, "procedure", pr.span)?;
    }

    for f in &p.functions {
        check_distinct(&f.params, &HashSet::new(), p)?;
        if let Some(body) = &f.body {
            let scope = Scope::empty(p).with(&f.params);
            expect_ty(body, &scope, &mut Vec::new(), f.ret)?;
        }
    }
    check_function_recursion(p)?;

    for a in &p.axioms {
        check_formula(&a.formula, &Scope::empty(p))?;
    }
    for pr in &p.procedures {
        check_procedure(p, pr)?;
    }
    Ok(())
}

fn check_distinct(decls: &[VarDecl], taken: &HashSet<&str>, p: &Program) -> TResult<()> {
    let mut seen: HashSet<&str> = HashSet::new();
    for d in decls {
        if !seen.insert(&d.name) || taken.contains(d.name.as_str()) {
            return Err(resolution(format!("duplicate variable `{}`", d.name), d.span));
        }
        if p.function(&d.name).is_some() || p.procedure(&d.name).is_some() {
            return Err(resolution(
                format!("variable `{}` clashes with a function or procedure name", d.name),
                d.span,
            ));
        }
    }
    Ok(())
}

fn function_calls(e: &Expr, out: &mut Vec<Ident>) {
    if let ExprKind::Call(f, _) = &e.kind {
        out.push(f.clone());
    }
    for c in e.children() {
        function_calls(c, out);
    }
}

fn check_function_recursion(p: &Program) -> TResult<()> {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(p: &Program, f: &FunctionDecl, state: &mut HashMap<Ident, u8>) -> TResult<()> {
        match state.get(&f.name) {
            Some(2) => return Ok(()),
            Some(1) => {
                return Err(resolution(
                    format!("function `{}` is defined recursively", f.name),
                    f.span,
                ))
            }
            _ => {}
        }
        state.insert(f.name.clone(), 1);
        let mut calls = Vec::new();
        if let Some(b) = &f.body {
            function_calls(b, &mut calls);
        }
        for c in calls {
            if let Some(g) = p.function(&c) {
                visit(p, g, state)?;
            }
        }
        state.insert(f.name.clone(), 2);
        Ok(())
    }
    let mut state = HashMap::new();
    for f in &p.functions {
        visit(p, f, &mut state)?;
    }
    Ok(())
}

fn check_procedure(p: &Program, pr: &ProcedureDecl) -> TResult<()> {
    let globals: HashSet<&str> = p.globals.iter().map(|g| g.name.as_str()).collect();
    let mut all: Vec<VarDecl> = pr.ins.clone();
    all.extend(pr.outs.iter().cloned());
    all.extend(pr.locals().iter().cloned());
    check_distinct(&all, &globals, p)?;

    let mut seen = HashSet::new();
    for m in &pr.modifies {
        if !globals.contains(m.as_str()) {
            return Err(resolution(
                format!("`{m}` in modifies clause is not a global variable"),
                pr.span,
            ));
        }
        if !seen.insert(m) {
            return Err(resolution(format!("`{m}` listed twice in modifies clause"), pr.span));
        }
    }

    let pre = Scope::globals(p).with(&pr.ins);
    for r in &pr.requires {
        check_formula(r, &pre)?;
    }
    let post = pre.clone().with(&pr.outs);
    for e in &pr.ensures {
        check_formula(e, &post)?;
    }
    // Contracts are later instantiated inside the body, where a binder named
    // like a local or output would capture it.
    let body_names: HashSet<&str> =
        pr.outs.iter().chain(pr.locals()).map(|d| d.name.as_str()).collect();
    for f in pr.requires.iter().chain(&pr.ensures) {
        if let Some(b) = shadowing_binder(f, &body_names) {
            return Err(resolution(
                format!("bound variable `{}` shadows a variable of `{}`", b.name, pr.name),
                b.span,
            ));
        }
    }
    if pr.body.is_some() {
        let scope = Scope::procedure(p, pr);
        let mut writable: HashSet<&str> = pr.outs.iter().map(|d| d.name.as_str()).collect();
        writable.extend(pr.locals().iter().map(|d| d.name.as_str()));
        writable.extend(pr.modifies.iter().map(|m| m.as_str()));
        let cx = StmtCx { program: p, proc: pr, scope: &scope, writable: &writable };
        for s in pr.stmts() {
            cx.stmt(s)?;
        }
    }
    Ok(())
}

fn shadowing_binder<'e>(e: &'e Expr, names: &HashSet<&str>) -> Option<&'e Binder> {
    if let ExprKind::Quant(_, bs, _) = &e.kind {
        if let Some(b) = bs.iter().find(|b| names.contains(b.name.as_str())) {
            return Some(b);
        }
    }
    e.children().into_iter().find_map(|c| shadowing_binder(c, names))
}

struct StmtCx<'a, 'p> {
    program: &'p Program,
    proc: &'a ProcedureDecl,
    scope: &'a Scope<'p>,
    writable: &'a HashSet<&'a str>,
}

impl StmtCx<'_, '_> {
    fn target(&self, name: &str, span: Span) -> TResult<Type> {
        let ty = self
            .scope
            .lookup(name)
            .ok_or_else(|| resolution(format!("undeclared identifier `{name}`"), span))?;
        if !self.writable.contains(name) {
            let why = if self.program.global(name).is_some() {
                "global not listed in the modifies clause"
            } else {
                "input parameter"
            };
            return Err(resolution(format!("cannot assign to `{name}`: {why}"), span));
        }
        Ok(ty)
    }

    fn stmt(&self, s: &Stmt) -> TResult<()> {
        match &s.kind {
            StmtKind::Assert(e) | StmtKind::Assume(e) => check_formula(e, self.scope),
            StmtKind::Havoc(x) => self.target(x, s.span).map(|_| ()),
            StmtKind::Assign(x, e) => {
                let ty = self.target(x, s.span)?;
                expect_ty(e, self.scope, &mut Vec::new(), ty)
            }
            StmtKind::Call { outs, callee, args } => {
                let decl = self.program.procedure(callee).ok_or_else(|| {
                    resolution(format!("undeclared procedure `{callee}`"), s.span)
                })?;
                if decl.ins.len() != args.len() || decl.outs.len() != outs.len() {
                    return Err(type_err(
                        format!(
                            "call to `{callee}` expects {} arguments and {} results",
                            decl.ins.len(),
                            decl.outs.len()
                        ),
                        s.span,
                    ));
                }
                for (a, p) in args.iter().zip(&decl.ins) {
                    expect_ty(a, self.scope, &mut Vec::new(), p.ty)?;
                }
                let mut seen = HashSet::new();
                for (o, p) in outs.iter().zip(&decl.outs) {
                    if !seen.insert(o) {
                        return Err(resolution(format!("`{o}` receives two call results"), s.span));
                    }
                    let ty = self.target(o, s.span)?;
                    if ty != p.ty {
                        return Err(type_err(
                            format!("call result `{o}` has type {ty}, expected {}", p.ty),
                            s.span,
                        ));
                    }
                }
                for m in &decl.modifies {
                    if !self.proc.modifies.contains(m) {
                        return Err(resolution(
                            format!(
                                "`{callee}` modifies `{m}`, which `{}` does not list in its modifies clause",
                                self.proc.name
                            ),
                            s.span,
                        ));
                    }
                }
                Ok(())
            }
            StmtKind::If { cond, then_block, else_block } => {
                check_formula(cond, self.scope)?;
                then_block.iter().chain(else_block).try_for_each(|s| self.stmt(s))
            }
            StmtKind::While { guard, invariants, body } => {
                check_formula(guard, self.scope)?;
                for inv in invariants {
                    check_formula(inv, self.scope)?;
                }
                body.iter().try_for_each(|s| self.stmt(s))
            }
        }
    }
}
