//! Pre-order occurrence enumeration and the two substitution operators.
//!
//! Traversal order is: the node itself, then (for quantifiers) its binders,
//! then its children left to right. A binder counts as an occurrence of the
//! variable it names, so replacing `j` by `h` everywhere renames the binder as
//! well.

use serde::Serialize;

use crate::frontend::{check_formula, type_of, Binder, Expr, ExprKind, Scope, Type};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SyntacticClass {
    /// Variable and constant identifiers.
    Id,
    /// Integer literals.
    Number,
    /// Map selections `a[e]`.
    Map,
}

#[derive(Debug, Clone, Serialize)]
pub struct Occurrence {
    #[serde(serialize_with = "ser_expr")]
    pub subexpression: Expr,
    /// 1-based ordinal among the occurrences of the requested class.
    pub position: usize,
    /// True for quantifier binders and for uses of bound variables.
    pub bound: bool,
}

fn ser_expr<S: serde::Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(e)
}

fn class_of(e: &Expr) -> Option<SyntacticClass> {
    match e.kind {
        ExprKind::Var(_) => Some(SyntacticClass::Id),
        ExprKind::Int(_) => Some(SyntacticClass::Number),
        ExprKind::Select(..) => Some(SyntacticClass::Map),
        _ => None,
    }
}

/// All occurrences of `class` in `f`, in pre-order.
pub fn subexpressions(f: &Expr, class: SyntacticClass) -> Vec<Occurrence> {
    fn go(e: &Expr, class: SyntacticClass, bound: &mut Vec<String>, out: &mut Vec<Occurrence>) {
        if class_of(e) == Some(class) {
            let is_bound = e.free_vars().iter().any(|v| bound.contains(v));
            out.push(Occurrence {
                subexpression: e.clone(),
                position: out.len() + 1,
                bound: is_bound,
            });
        }
        if let ExprKind::Quant(_, binders, body) = &e.kind {
            let n = bound.len();
            for b in binders {
                if class == SyntacticClass::Id {
                    out.push(Occurrence {
                        subexpression: Expr::new(ExprKind::Var(b.name.clone()), b.span),
                        position: out.len() + 1,
                        bound: true,
                    });
                }
                bound.push(b.name.clone());
            }
            go(body, class, bound, out);
            bound.truncate(n);
            return;
        }
        for c in e.children() {
            go(c, class, bound, out);
        }
    }
    let mut out = Vec::new();
    go(f, class, &mut Vec::new(), &mut out);
    out
}

fn binder_matches(b: &Binder, old: &Expr) -> bool {
    old.as_var() == Some(b.name.as_str())
}

/// Number of syntactic occurrences of `old` in `f`, binders included.
pub fn count_occurrences(f: &Expr, old: &Expr) -> usize {
    if f == old {
        return 1;
    }
    let own = match &f.kind {
        ExprKind::Quant(_, binders, _) => binders.iter().filter(|b| binder_matches(b, old)).count(),
        _ => 0,
    };
    own + f.children().into_iter().map(|c| count_occurrences(c, old)).sum::<usize>()
}

struct Replacer<'a> {
    old: &'a Expr,
    new: &'a Expr,
    /// `None` replaces every occurrence.
    target: Option<usize>,
    seen: usize,
}

impl Replacer<'_> {
    fn hit(&mut self) -> bool {
        self.seen += 1;
        self.target.is_none_or(|n| n == self.seen)
    }

    fn rewrite(&mut self, e: &Expr) -> Result<Expr, AnalysisError> {
        if e == self.old {
            if self.hit() {
                return Ok(self.new.clone());
            }
            return Ok(e.clone());
        }
        let kind = match &e.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => return Ok(e.clone()),
            ExprKind::Select(m, i) => {
                ExprKind::Select(Box::new(self.rewrite(m)?), Box::new(self.rewrite(i)?))
            }
            ExprKind::Store(m, i, v) => ExprKind::Store(
                Box::new(self.rewrite(m)?),
                Box::new(self.rewrite(i)?),
                Box::new(self.rewrite(v)?),
            ),
            ExprKind::Unary(op, x) => ExprKind::Unary(*op, Box::new(self.rewrite(x)?)),
            ExprKind::Binary(op, l, r) => {
                ExprKind::Binary(*op, Box::new(self.rewrite(l)?), Box::new(self.rewrite(r)?))
            }
            ExprKind::Call(f, args) => ExprKind::Call(
                f.clone(),
                args.iter().map(|a| self.rewrite(a)).collect::<Result<_, _>>()?,
            ),
            ExprKind::Quant(q, binders, body) => {
                let mut nb = Vec::with_capacity(binders.len());
                for b in binders {
                    if binder_matches(b, self.old) && self.hit() {
                        let name = self.new.as_var().ok_or_else(|| {
                            AnalysisError::BinderReplacement {
                                binder: b.name.clone(),
                                replacement: self.new.to_string(),
                            }
                        })?;
                        nb.push(Binder { name: name.to_string(), ty: b.ty, span: b.span });
                    } else {
                        nb.push(b.clone());
                    }
                }
                ExprKind::Quant(*q, nb, Box::new(self.rewrite(body)?))
            }
        };
        Ok(Expr::new(kind, e.span))
    }
}

/// Replaces every occurrence of `old` in `f` by `new`.
pub fn replace_all(f: &Expr, old: &Expr, new: &Expr) -> Result<Expr, AnalysisError> {
    Replacer { old, new, target: None, seen: 0 }.rewrite(f)
}

/// Replaces only the `n`-th (1-based, pre-order) occurrence of `old` in `f`.
pub fn replace_nth(f: &Expr, old: &Expr, new: &Expr, n: usize) -> Result<Expr, AnalysisError> {
    let count = count_occurrences(f, old);
    if n == 0 || n > count {
        return Err(AnalysisError::OccurrenceOutOfRange { n, count });
    }
    Replacer { old, new, target: Some(n), seen: 0 }.rewrite(f)
}

/// Type of `e` where it occurs inside `f`: bound variables of `f` are in scope.
pub fn type_within(f: &Expr, e: &Expr, scope: &Scope) -> Result<Type, AnalysisError> {
    let mut binders = Vec::new();
    collect_binders(f, &mut binders);
    if let Some(name) = e.as_var() {
        if let Some(b) = binders.iter().find(|b| b.name == name) {
            return Ok(b.ty);
        }
    }
    let decls: Vec<_> = binders
        .into_iter()
        .map(|b| crate::frontend::VarDecl { name: b.name, ty: b.ty, span: b.span })
        .collect();
    type_of(e, &scope.clone().with(&decls)).map_err(|err| AnalysisError::Type(err.message))
}

fn collect_binders(e: &Expr, out: &mut Vec<Binder>) {
    if let ExprKind::Quant(_, bs, _) = &e.kind {
        out.extend(bs.iter().cloned());
    }
    for c in e.children() {
        collect_binders(c, out);
    }
}

fn checked(
    f: &Expr,
    old: &Expr,
    new: &Expr,
    scope: &Scope,
    result: impl FnOnce() -> Result<Expr, AnalysisError>,
) -> Result<Expr, AnalysisError> {
    let (to, tn) = (type_within(f, old, scope)?, type_within(f, new, scope)?);
    if to != tn {
        return Err(AnalysisError::Type(format!(
            "cannot replace `{old}` of type {to} by `{new}` of type {tn}"
        )));
    }
    let out = result()?;
    check_formula(&out, scope).map_err(|err| AnalysisError::Type(err.message))?;
    Ok(out)
}

/// [`replace_all`] with a type-equality precondition and a re-check of the result.
pub fn replace_all_checked(
    f: &Expr,
    old: &Expr,
    new: &Expr,
    scope: &Scope,
) -> Result<Expr, AnalysisError> {
    checked(f, old, new, scope, || replace_all(f, old, new))
}

/// [`replace_nth`] with a type-equality precondition and a re-check of the result.
pub fn replace_nth_checked(
    f: &Expr,
    old: &Expr,
    new: &Expr,
    n: usize,
    scope: &Scope,
) -> Result<Expr, AnalysisError> {
    checked(f, old, new, scope, || replace_nth(f, old, new, n))
}
