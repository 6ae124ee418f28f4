//! Concrete interpreter, used to cross-check verified invariants by running
//! procedures on small inputs.
//!
//! Evaluation is three-valued: `None` means the value cannot be determined
//! concretely (a function without a body, a division by zero, an overflow, or
//! a quantifier whose range is not bounded by its guard and holds on the
//! sampled window).

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use crate::frontend::{BinOp, Binder, Expr, ExprKind, Ident, ProcedureDecl, Program, Quantifier, Stmt, StmtKind, Type, UnOp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Bool(bool),
    /// Total map with default 0; zero entries are never stored.
    Map(Rc<BTreeMap<i64, i64>>),
}

impl Value {
    pub fn default_of(ty: Type) -> Value {
        match ty {
            Type::Int => Value::Int(0),
            Type::Bool => Value::Bool(false),
            Type::Map => Value::Map(Rc::new(BTreeMap::new())),
        }
    }

    /// Map holding `values` at indices 1, 2, ...
    pub fn array(values: &[i64]) -> Value {
        let m = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0)
            .map(|(k, v)| (k as i64 + 1, *v))
            .collect();
        Value::Map(Rc::new(m))
    }

    fn int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    fn bool(&self) -> Option<bool> {
        match self {
            Value::Bool(v) => Some(*v),
            _ => None,
        }
    }
}

pub type Env = HashMap<Ident, Value>;

/// Quantified variables in scope, innermost last.
type Bound = Vec<(Ident, Value)>;

/// Largest magnitude of any integer in scope, map indices included.
fn magnitude(env: &Env, bound: &Bound) -> i64 {
    env.values()
        .chain(bound.iter().map(|(_, v)| v))
        .map(|v| match v {
            Value::Int(i) => i.saturating_abs(),
            Value::Bool(_) => 0,
            Value::Map(m) => m.keys().map(|k| k.saturating_abs()).max().unwrap_or(0),
        })
        .max()
        .unwrap_or(0)
}

/// Margin added around the integers of the state when a quantified variable
/// has no bound in its guard.
const WINDOW_MARGIN: i64 = 4;

pub struct Interp<'p> {
    program: &'p Program,
    /// Iterations allowed per loop entry before the run is cut off.
    pub max_iterations: usize,
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Finished,
    /// An `assume` or a callee precondition was false.
    Blocked,
    /// An `assert` was false.
    AssertFailed,
    /// A condition or value could not be computed.
    Undetermined,
    IterationCap,
}

/// Where a loop head was reached.
#[derive(Debug, Clone, Copy)]
pub struct Site<'a> {
    pub procedure: &'a str,
    pub path: &'a [usize],
}

enum Flow {
    Next,
    Stop(Stop),
}

impl<'p> Interp<'p> {
    pub fn new(program: &'p Program) -> Self {
        Interp { program, max_iterations: 64 }
    }

    pub fn eval(&self, e: &Expr, env: &Env) -> Option<Value> {
        self.ev(e, env, &mut Vec::new())
    }

    /// Evaluates `e` with `bound` (innermost last) shadowing `env`.
    fn ev(&self, e: &Expr, env: &Env, bound: &mut Bound) -> Option<Value> {
        match &e.kind {
            ExprKind::Int(v) => Some(Value::Int(*v)),
            ExprKind::Bool(b) => Some(Value::Bool(*b)),
            ExprKind::Var(x) => match bound.iter().rev().find(|(n, _)| n == x) {
                Some((_, v)) => Some(v.clone()),
                None => env.get(x).cloned(),
            },
            ExprKind::Select(m, i) => {
                let Value::Map(m) = self.ev(m, env, bound)? else { return None };
                let i = self.ev(i, env, bound)?.int()?;
                Some(Value::Int(m.get(&i).copied().unwrap_or(0)))
            }
            ExprKind::Store(m, i, v) => {
                let Value::Map(m) = self.ev(m, env, bound)? else { return None };
                let i = self.ev(i, env, bound)?.int()?;
                let v = self.ev(v, env, bound)?.int()?;
                let mut m = (*m).clone();
                if v == 0 {
                    m.remove(&i);
                } else {
                    m.insert(i, v);
                }
                Some(Value::Map(Rc::new(m)))
            }
            ExprKind::Unary(UnOp::Not, x) => Some(Value::Bool(!self.ev(x, env, bound)?.bool()?)),
            ExprKind::Unary(UnOp::Neg, x) => Some(Value::Int(self.ev(x, env, bound)?.int()?.checked_neg()?)),
            ExprKind::Binary(op, l, r) => self.binary(*op, l, r, env, bound),
            ExprKind::Call(f, args) => {
                let decl = self.program.function(f)?;
                let body = decl.body.as_ref()?;
                let mut params = Vec::with_capacity(args.len());
                for (p, a) in decl.params.iter().zip(args) {
                    params.push((p.name.clone(), self.ev(a, env, bound)?));
                }
                self.ev(body, &Env::new(), &mut params)
            }
            ExprKind::Quant(q, binders, body) => self.quant(*q, binders, body, env, bound).map(Value::Bool),
        }
    }

    fn truth(&self, e: &Expr, env: &Env, bound: &mut Bound) -> Option<bool> {
        self.ev(e, env, bound)?.bool()
    }

    fn binary(&self, op: BinOp, l: &Expr, r: &Expr, env: &Env, bound: &mut Bound) -> Option<Value> {
        match op {
            BinOp::And | BinOp::Or | BinOp::Implies => {
                let a = self.truth(l, env, bound);
                // Short-circuit on a decisive left operand.
                match (op, a) {
                    (BinOp::And, Some(false)) => return Some(Value::Bool(false)),
                    (BinOp::Or, Some(true)) => return Some(Value::Bool(true)),
                    (BinOp::Implies, Some(false)) => return Some(Value::Bool(true)),
                    _ => {}
                }
                let b = self.truth(r, env, bound);
                let v = match op {
                    BinOp::And => match (a, b) {
                        (_, Some(false)) => Some(false),
                        (Some(true), Some(true)) => Some(true),
                        _ => None,
                    },
                    BinOp::Or => match (a, b) {
                        (_, Some(true)) => Some(true),
                        (Some(false), Some(false)) => Some(false),
                        _ => None,
                    },
                    _ => match (a, b) {
                        (_, Some(true)) => Some(true),
                        (Some(true), Some(false)) => Some(false),
                        _ => None,
                    },
                };
                v.map(Value::Bool)
            }
            BinOp::Iff => Some(Value::Bool(self.truth(l, env, bound)? == self.truth(r, env, bound)?)),
            BinOp::Eq => Some(Value::Bool(self.ev(l, env, bound)? == self.ev(r, env, bound)?)),
            BinOp::Ne => Some(Value::Bool(self.ev(l, env, bound)? != self.ev(r, env, bound)?)),
            _ => {
                let a = self.ev(l, env, bound)?.int()?;
                let b = self.ev(r, env, bound)?.int()?;
                Some(match op {
                    BinOp::Add => Value::Int(a.checked_add(b)?),
                    BinOp::Sub => Value::Int(a.checked_sub(b)?),
                    BinOp::Mul => Value::Int(a.checked_mul(b)?),
                    // SMT-LIB integer division and modulus are Euclidean.
                    BinOp::Div if b != 0 => Value::Int(a.checked_div_euclid(b)?),
                    BinOp::Mod if b != 0 => Value::Int(a.checked_rem_euclid(b)?),
                    BinOp::Div | BinOp::Mod => return None,
                    BinOp::Lt => Value::Bool(a < b),
                    BinOp::Le => Value::Bool(a <= b),
                    BinOp::Gt => Value::Bool(a > b),
                    BinOp::Ge => Value::Bool(a >= b),
                    _ => unreachable!(),
                })
            }
        }
    }

    /// Conjuncts that restrict the bound variables: the antecedent of a
    /// universal implication, or the body of an existential.
    fn guards(q: Quantifier, body: &Expr) -> Vec<&Expr> {
        match (q, &body.kind) {
            (Quantifier::Forall, ExprKind::Binary(BinOp::Implies, l, _)) => l.conjuncts(),
            (Quantifier::Exists, _) => body.conjuncts(),
            _ => Vec::new(),
        }
    }

    /// Guards of the form `x op e` or `e op x`, normalised to `x op e`.
    fn comparisons<'g>(x: &str, guards: &[&'g Expr]) -> Vec<(BinOp, &'g Expr)> {
        let mut out = Vec::new();
        for g in guards {
            let ExprKind::Binary(op, l, r) = &g.kind else { continue };
            if !op.is_relational() || matches!(op, BinOp::Ne) {
                continue;
            }
            match (l.as_var() == Some(x), r.as_var() == Some(x)) {
                (true, false) => out.push((*op, &**r)),
                (false, true) => out.push((
                    match op {
                        BinOp::Lt => BinOp::Gt,
                        BinOp::Le => BinOp::Ge,
                        BinOp::Gt => BinOp::Lt,
                        BinOp::Ge => BinOp::Le,
                        other => *other,
                    },
                    &**l,
                )),
                _ => {}
            }
        }
        out
    }

    /// Bounds of binder `x` from guards whose other side can be evaluated
    /// now. A guard relating `x` to a binder in `pending` (not yet bound)
    /// uses that binder's own bounds.
    fn range(&self, x: &str, guards: &[&Expr], pending: &[Binder], env: &Env, bound: &mut Bound) -> (Option<i64>, Option<i64>) {
        let (mut lo, mut hi): (Option<i64>, Option<i64>) = (None, None);
        let mut tighten = |l: Option<i64>, h: Option<i64>| {
            if let Some(v) = l {
                lo = Some(lo.map_or(v, |c| c.max(v)));
            }
            if let Some(v) = h {
                hi = Some(hi.map_or(v, |c| c.min(v)));
            }
        };
        for (op, other) in Self::comparisons(x, guards) {
            let later = other.as_var().filter(|y| pending.iter().any(|b| b.name == *y));
            let (olo, ohi) = match later {
                Some(y) => {
                    let rest: Vec<Binder> = pending.iter().filter(|b| b.name != y && b.name != x).cloned().collect();
                    self.direct(y, guards, &rest, x, env, bound)
                }
                None => match self.ev(other, env, bound).and_then(|v| v.int()) {
                    Some(b) => (Some(b), Some(b)),
                    None => continue,
                },
            };
            match op {
                BinOp::Lt => tighten(None, ohi.and_then(|b| b.checked_sub(1))),
                BinOp::Le => tighten(None, ohi),
                BinOp::Gt => tighten(olo.and_then(|b| b.checked_add(1)), None),
                BinOp::Ge => tighten(olo, None),
                BinOp::Eq => tighten(olo.filter(|_| later.is_none()), ohi.filter(|_| later.is_none())),
                _ => {}
            }
        }
        (lo, hi)
    }

    /// Bounds of pending binder `y` from guards that compare it with
    /// evaluable expressions only.
    fn direct(&self, y: &str, guards: &[&Expr], pending: &[Binder], skip: &str, env: &Env, bound: &mut Bound) -> (Option<i64>, Option<i64>) {
        let (mut lo, mut hi): (Option<i64>, Option<i64>) = (None, None);
        for (op, other) in Self::comparisons(y, guards) {
            if other.as_var().is_some_and(|v| v == skip || pending.iter().any(|b| b.name == v)) {
                continue;
            }
            let Some(b) = self.ev(other, env, bound).and_then(|v| v.int()) else { continue };
            let (l, h) = match op {
                BinOp::Lt => (None, b.checked_sub(1)),
                BinOp::Le => (None, Some(b)),
                BinOp::Gt => (b.checked_add(1), None),
                BinOp::Ge => (Some(b), None),
                BinOp::Eq => (Some(b), Some(b)),
                _ => (None, None),
            };
            if let Some(v) = l {
                lo = Some(lo.map_or(v, |c: i64| c.max(v)));
            }
            if let Some(v) = h {
                hi = Some(hi.map_or(v, |c: i64| c.min(v)));
            }
        }
        (lo, hi)
    }

    fn quant(&self, q: Quantifier, binders: &[Binder], body: &Expr, env: &Env, bound: &mut Bound) -> Option<bool> {
        let guards = Self::guards(q, body);
        self.quant_rec(q, binders, body, &guards, env, bound)
    }

    fn quant_rec(
        &self,
        q: Quantifier,
        binders: &[Binder],
        body: &Expr,
        guards: &[&Expr],
        env: &Env,
        bound: &mut Bound,
    ) -> Option<bool> {
        let Some((b, rest)) = binders.split_first() else {
            return self.truth(body, env, bound);
        };
        let (values, exact): (Vec<Value>, bool) = match b.ty {
            Type::Bool => (vec![Value::Bool(false), Value::Bool(true)], true),
            Type::Map => return None,
            Type::Int => {
                let (lo, hi) = self.range(&b.name, guards, rest, env, bound);
                let exact = lo.is_some() && hi.is_some();
                let w = magnitude(env, bound).saturating_add(WINDOW_MARGIN);
                let lo = lo.unwrap_or(-w);
                let hi = hi.unwrap_or(w);
                if hi.saturating_sub(lo) > 4096 {
                    return None;
                }
                ((lo..=hi).map(Value::Int).collect(), exact)
            }
        };
        let decisive = q == Quantifier::Exists;
        let mut unknown = !exact;
        let mut result = None;
        for v in values {
            bound.push((b.name.clone(), v));
            let r = self.quant_rec(q, rest, body, guards, env, bound);
            bound.pop();
            match r {
                Some(t) if t == decisive => {
                    result = Some(decisive);
                    break;
                }
                Some(_) => {}
                None => unknown = true,
            }
        }
        match result {
            Some(r) => Some(r),
            None if unknown => None,
            None => Some(!decisive),
        }
    }

    fn holds(&self, e: &Expr, env: &Env) -> Option<bool> {
        self.eval(e, env)?.bool()
    }

    /// Runs `proc` from `env`, which must bind its inputs and the globals;
    /// outputs and locals start at their type's default. `observe` is called
    /// at every arrival at a loop head, before the guard is evaluated, and
    /// `havoc` supplies values for `havoc` statements.
    pub fn run(
        &self,
        proc: &ProcedureDecl,
        env: &mut Env,
        havoc: &mut dyn FnMut(Type) -> Value,
        observe: &mut dyn FnMut(Site, &Env),
    ) -> Stop {
        for d in proc.outs.iter().chain(proc.locals()) {
            env.insert(d.name.clone(), Value::default_of(d.ty));
        }
        let mut path = Vec::new();
        match self.block(proc, proc.stmts(), env, &mut path, havoc, observe) {
            Flow::Next => Stop::Finished,
            Flow::Stop(s) => s,
        }
    }

    fn block(
        &self,
        proc: &ProcedureDecl,
        stmts: &[Stmt],
        env: &mut Env,
        path: &mut Vec<usize>,
        havoc: &mut dyn FnMut(Type) -> Value,
        observe: &mut dyn FnMut(Site, &Env),
    ) -> Flow {
        for (k, s) in stmts.iter().enumerate() {
            path.push(k);
            let flow = self.stmt(proc, s, env, path, havoc, observe);
            path.pop();
            if let Flow::Stop(_) = flow {
                return flow;
            }
        }
        Flow::Next
    }

    fn type_of_var(&self, proc: &ProcedureDecl, x: &str) -> Option<Type> {
        proc.ins
            .iter()
            .chain(&proc.outs)
            .chain(proc.locals())
            .chain(&self.program.globals)
            .find(|d| d.name == x)
            .map(|d| d.ty)
    }

    fn stmt(
        &self,
        proc: &ProcedureDecl,
        s: &Stmt,
        env: &mut Env,
        path: &mut Vec<usize>,
        havoc: &mut dyn FnMut(Type) -> Value,
        observe: &mut dyn FnMut(Site, &Env),
    ) -> Flow {
        match &s.kind {
            StmtKind::Assert(e) => match self.holds(e, env) {
                Some(true) => Flow::Next,
                Some(false) => Flow::Stop(Stop::AssertFailed),
                None => Flow::Stop(Stop::Undetermined),
            },
            StmtKind::Assume(e) => match self.holds(e, env) {
                Some(true) => Flow::Next,
                Some(false) => Flow::Stop(Stop::Blocked),
                None => Flow::Stop(Stop::Undetermined),
            },
            StmtKind::Havoc(x) => {
                let Some(ty) = self.type_of_var(proc, x) else { return Flow::Stop(Stop::Undetermined) };
                env.insert(x.clone(), havoc(ty));
                Flow::Next
            }
            StmtKind::Assign(x, e) => match self.eval(e, env) {
                Some(v) => {
                    env.insert(x.clone(), v);
                    Flow::Next
                }
                None => Flow::Stop(Stop::Undetermined),
            },
            StmtKind::Call { outs, callee, args } => self.call(outs, callee, args, env, havoc, observe),
            StmtKind::If { cond, then_block, else_block } => {
                let Some(c) = self.holds(cond, env) else { return Flow::Stop(Stop::Undetermined) };
                let (branch, block) = if c { (0, then_block) } else { (1, else_block) };
                path.push(branch);
                let flow = self.block(proc, block, env, path, havoc, observe);
                path.pop();
                flow
            }
            StmtKind::While { guard, body, .. } => {
                for _ in 0..=self.max_iterations {
                    observe(Site { procedure: &proc.name, path }, env);
                    match self.holds(guard, env) {
                        Some(true) => {}
                        Some(false) => return Flow::Next,
                        None => return Flow::Stop(Stop::Undetermined),
                    }
                    if let Flow::Stop(s) = self.block(proc, body, env, path, havoc, observe) {
                        return Flow::Stop(s);
                    }
                }
                Flow::Stop(Stop::IterationCap)
            }
        }
    }

    fn call(
        &self,
        outs: &[Ident],
        callee: &str,
        args: &[Expr],
        env: &mut Env,
        havoc: &mut dyn FnMut(Type) -> Value,
        observe: &mut dyn FnMut(Site, &Env),
    ) -> Flow {
        let Some(decl) = self.program.procedure(callee) else { return Flow::Stop(Stop::Undetermined) };
        if decl.body.is_none() {
            return Flow::Stop(Stop::Undetermined);
        }
        let mut inner: Env = self
            .program
            .globals
            .iter()
            .filter_map(|g| env.get(&g.name).map(|v| (g.name.clone(), v.clone())))
            .collect();
        for (p, a) in decl.ins.iter().zip(args) {
            let Some(v) = self.eval(a, env) else { return Flow::Stop(Stop::Undetermined) };
            inner.insert(p.name.clone(), v);
        }
        for r in &decl.requires {
            match self.holds(r, &inner) {
                Some(true) => {}
                Some(false) => return Flow::Stop(Stop::Blocked),
                None => return Flow::Stop(Stop::Undetermined),
            }
        }
        match self.run(decl, &mut inner, havoc, observe) {
            Stop::Finished => {}
            s => return Flow::Stop(s),
        }
        for (o, formal) in outs.iter().zip(&decl.outs) {
            env.insert(o.clone(), inner[&formal.name].clone());
        }
        for g in &decl.modifies {
            if let Some(v) = inner.get(g) {
                env.insert(g.clone(), v.clone());
            }
        }
        Flow::Next
    }
}
