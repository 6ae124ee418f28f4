//! Abstract syntax of the verification language.
//!
//! Spans never take part in equality or hashing: two trees that differ only
//! in where they came from compare equal. Expression equality is additionally
//! insensitive to the names of quantifier-bound variables (see [`crate::frontend::alpha`]).

use std::fmt;
use std::hash::{Hash, Hasher};

use serde::Serialize;

/// Source location of a node. Ignored by `==` and `Hash`.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        Span { start, end, line, col }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        if other.end == 0 && other.start == 0 {
            return self;
        }
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line: self.line,
            col: self.col,
        }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

pub type Ident = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Type {
    Int,
    Bool,
    /// Total map from int to int (`array int`).
    Map,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
            Type::Map => f.write_str("array int"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
    Iff,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "==>",
            BinOp::Iff => "<==>",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod)
    }

    pub fn is_relational(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Implies | BinOp::Iff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Binder {
    pub name: Ident,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Var(Ident),
    /// `map[index]`
    Select(Box<Expr>, Box<Expr>),
    /// `map[index := value]`
    Store(Box<Expr>, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Application of a logic function.
    Call(Ident, Vec<Expr>),
    Quant(Quantifier, Vec<Binder>, Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Node without source location, for trees built by transformations.
    pub fn synth(kind: ExprKind) -> Self {
        Expr { kind, span: Span::default() }
    }

    pub fn int(v: i64) -> Self {
        Expr::synth(ExprKind::Int(v))
    }

    pub fn bool(v: bool) -> Self {
        Expr::synth(ExprKind::Bool(v))
    }

    pub fn var(name: impl Into<Ident>) -> Self {
        Expr::synth(ExprKind::Var(name.into()))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::synth(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    pub fn not(e: Expr) -> Self {
        Expr::synth(ExprKind::Unary(UnOp::Not, Box::new(e)))
    }

    pub fn select(map: Expr, index: Expr) -> Self {
        Expr::synth(ExprKind::Select(Box::new(map), Box::new(index)))
    }

    pub fn store(map: Expr, index: Expr, value: Expr) -> Self {
        Expr::synth(ExprKind::Store(Box::new(map), Box::new(index), Box::new(value)))
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Self {
        Expr::binary(BinOp::And, lhs, rhs)
    }

    pub fn implies(lhs: Expr, rhs: Expr) -> Self {
        Expr::binary(BinOp::Implies, lhs, rhs)
    }

    /// Conjunction of all formulas; `true` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = Expr>) -> Expr {
        let mut iter = parts.into_iter();
        match iter.next() {
            None => Expr::bool(true),
            Some(first) => iter.fold(first, Expr::and),
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Var(name) => Some(name),
            _ => None,
        }
    }

    /// Top-level conjuncts, with `&&` flattened through any association.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        fn go<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match &e.kind {
                ExprKind::Binary(BinOp::And, l, r) => {
                    go(l, out);
                    go(r, out);
                }
                _ => out.push(e),
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Immediate children in pre-order position.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => vec![],
            ExprKind::Select(m, i) => vec![m, i],
            ExprKind::Store(m, i, v) => vec![m, i, v],
            ExprKind::Unary(_, e) => vec![e],
            ExprKind::Binary(_, l, r) => vec![l, r],
            ExprKind::Call(_, args) => args.iter().collect(),
            ExprKind::Quant(_, _, body) => vec![body],
        }
    }

    /// Free variable names, in first-occurrence order.
    pub fn free_vars(&self) -> Vec<Ident> {
        fn go(e: &Expr, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
            match &e.kind {
                ExprKind::Var(name) => {
                    if !bound.contains(name) && !out.contains(name) {
                        out.push(name.clone());
                    }
                }
                ExprKind::Quant(_, binders, body) => {
                    let n = bound.len();
                    bound.extend(binders.iter().map(|b| b.name.clone()));
                    go(body, bound, out);
                    bound.truncate(n);
                }
                _ => {
                    for c in e.children() {
                        go(c, bound, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn mentions_free(&self, name: &str) -> bool {
        self.free_vars().iter().any(|v| v == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct VarDecl {
    pub name: Ident,
    pub ty: Type,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Assert(Expr),
    Assume(Expr),
    Havoc(Ident),
    /// `x := e`. A map update `A[i] := e` is stored as `A := A[i := e]`.
    Assign(Ident, Expr),
    Call {
        outs: Vec<Ident>,
        callee: Ident,
        args: Vec<Expr>,
    },
    If {
        cond: Expr,
        then_block: Vec<Stmt>,
        else_block: Vec<Stmt>,
    },
    While {
        guard: Expr,
        invariants: Vec<Expr>,
        body: Vec<Stmt>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Body {
    pub locals: Vec<VarDecl>,
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionDecl {
    pub name: Ident,
    pub params: Vec<VarDecl>,
    pub ret: Type,
    pub body: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProcedureDecl {
    pub name: Ident,
    pub ins: Vec<VarDecl>,
    pub outs: Vec<VarDecl>,
    pub requires: Vec<Expr>,
    pub ensures: Vec<Expr>,
    pub modifies: Vec<Ident>,
    pub body: Option<Body>,
    pub span: Span,
}

impl ProcedureDecl {
    pub fn stmts(&self) -> &[Stmt] {
        self.body.as_ref().map(|b| b.stmts.as_slice()).unwrap_or(&[])
    }

    pub fn locals(&self) -> &[VarDecl] {
        self.body.as_ref().map(|b| b.locals.as_slice()).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Axiom {
    pub formula: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Program {
    pub globals: Vec<VarDecl>,
    pub functions: Vec<FunctionDecl>,
    pub axioms: Vec<Axiom>,
    pub procedures: Vec<ProcedureDecl>,
}

impl Program {
    pub fn procedure(&self, name: &str) -> Option<&ProcedureDecl> {
        self.procedures.iter().find(|p| p.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&VarDecl> {
        self.globals.iter().find(|g| g.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.globals.is_empty()
            && self.functions.is_empty()
            && self.axioms.is_empty()
            && self.procedures.is_empty()
    }
}
