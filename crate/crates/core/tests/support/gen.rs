//! Random well-typed programs for round-trip testing.

use invforge::frontend::{
    Axiom, BinOp, Binder, Body, Expr, ExprKind, FunctionDecl, ProcedureDecl, Program, Quantifier, Span, Stmt, StmtKind,
    Type, UnOp, VarDecl,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const TYPES: [Type; 3] = [Type::Int, Type::Bool, Type::Map];

struct Gen {
    rng: StdRng,
    binders: usize,
    functions: Vec<(String, Vec<Type>, Type)>,
}

fn decl(name: String, ty: Type) -> VarDecl {
    VarDecl { name, ty, span: Span::default() }
}

fn stmt(kind: StmtKind) -> Stmt {
    Stmt { kind, span: Span::default() }
}

impl Gen {
    fn ty(&mut self) -> Type {
        *TYPES.choose(&mut self.rng).unwrap()
    }

    fn leaf(&mut self, ty: Type, vars: &[VarDecl]) -> Expr {
        let pool: Vec<&VarDecl> = vars.iter().filter(|v| v.ty == ty).collect();
        if !pool.is_empty() && self.rng.gen_bool(0.6) {
            return Expr::var(pool.choose(&mut self.rng).unwrap().name.clone());
        }
        match ty {
            Type::Int => Expr::int(self.rng.gen_range(0..20)),
            Type::Bool => Expr::bool(self.rng.gen()),
            Type::Map => {
                // no map literals: build a store over a map variable when possible
                match pool.choose(&mut self.rng) {
                    Some(v) => Expr::var(v.name.clone()),
                    None => unreachable!("callers only ask for maps when one is in scope"),
                }
            }
        }
    }

    fn has_map(vars: &[VarDecl]) -> bool {
        vars.iter().any(|v| v.ty == Type::Map)
    }

    fn expr(&mut self, ty: Type, vars: &[VarDecl], depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaf(ty, vars);
        }
        let d = depth - 1;
        match ty {
            Type::Int => match self.rng.gen_range(0..5) {
                0 => {
                    let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Mod].choose(&mut self.rng).unwrap();
                    Expr::binary(op, self.expr(Type::Int, vars, d), self.expr(Type::Int, vars, d))
                }
                1 => Expr::synth(ExprKind::Unary(UnOp::Neg, Box::new(self.expr(Type::Int, vars, d)))),
                2 if Self::has_map(vars) => Expr::select(self.expr(Type::Map, vars, d), self.expr(Type::Int, vars, d)),
                3 => self.call(Type::Int, vars, d),
                _ => Expr::int(-self.rng.gen_range(1..9)),
            },
            Type::Bool => match self.rng.gen_range(0..7) {
                0 => {
                    let op = *[BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne].choose(&mut self.rng).unwrap();
                    Expr::binary(op, self.expr(Type::Int, vars, d), self.expr(Type::Int, vars, d))
                }
                1 => {
                    let op = *[BinOp::And, BinOp::Or, BinOp::Implies, BinOp::Iff].choose(&mut self.rng).unwrap();
                    Expr::binary(op, self.expr(Type::Bool, vars, d), self.expr(Type::Bool, vars, d))
                }
                2 => Expr::not(self.expr(Type::Bool, vars, d)),
                3 => self.quant(vars, d),
                4 if Self::has_map(vars) => {
                    Expr::binary(BinOp::Eq, self.expr(Type::Map, vars, d), self.expr(Type::Map, vars, d))
                }
                5 => self.call(Type::Bool, vars, d),
                _ => Expr::binary(BinOp::Le, self.expr(Type::Int, vars, d), self.expr(Type::Int, vars, d)),
            },
            Type::Map => {
                if self.rng.gen_bool(0.5) {
                    Expr::store(self.expr(Type::Map, vars, d), self.expr(Type::Int, vars, d), self.expr(Type::Int, vars, d))
                } else {
                    self.leaf(Type::Map, vars)
                }
            }
        }
    }

    fn call(&mut self, ty: Type, vars: &[VarDecl], depth: u32) -> Expr {
        let fits: Vec<_> = self
            .functions
            .iter()
            .filter(|(_, ps, r)| *r == ty && (!ps.contains(&Type::Map) || Self::has_map(vars)))
            .cloned()
            .collect();
        match fits.choose(&mut self.rng) {
            Some((name, params, _)) => {
                let args = params.iter().map(|t| self.expr(*t, vars, depth)).collect();
                Expr::synth(ExprKind::Call(name.clone(), args))
            }
            None => self.leaf(ty, vars),
        }
    }

    fn quant(&mut self, vars: &[VarDecl], depth: u32) -> Expr {
        let q = if self.rng.gen() { Quantifier::Forall } else { Quantifier::Exists };
        let n = self.rng.gen_range(1..=2);
        let mut inner = vars.to_vec();
        let mut binders = Vec::new();
        for _ in 0..n {
            self.binders += 1;
            let b = Binder { name: format!("b{}", self.binders), ty: self.ty(), span: Span::default() };
            inner.push(decl(b.name.clone(), b.ty));
            binders.push(b);
        }
        Expr::synth(ExprKind::Quant(q, binders, Box::new(self.expr(Type::Bool, &inner, depth))))
    }

    fn block(&mut self, vars: &[VarDecl], writable: &[VarDecl], procs: &[ProcedureDecl], me: &ProcedureDecl, depth: u32) -> Vec<Stmt> {
        let n = self.rng.gen_range(0..4);
        (0..n).map(|_| self.stmt(vars, writable, procs, me, depth)).collect()
    }

    fn stmt(&mut self, vars: &[VarDecl], writable: &[VarDecl], procs: &[ProcedureDecl], me: &ProcedureDecl, depth: u32) -> Stmt {
        let choice = if depth == 0 { self.rng.gen_range(0..4) } else { self.rng.gen_range(0..7) };
        match choice {
            0 if !writable.is_empty() => {
                let w = writable.choose(&mut self.rng).unwrap().clone();
                stmt(StmtKind::Assign(w.name, self.expr(w.ty, vars, 2)))
            }
            1 if !writable.is_empty() => stmt(StmtKind::Havoc(writable.choose(&mut self.rng).unwrap().name.clone())),
            2 => stmt(StmtKind::Assert(self.expr(Type::Bool, vars, 2))),
            3 => {
                let callees: Vec<&ProcedureDecl> = procs
                    .iter()
                    .filter(|p| p.modifies.iter().all(|m| me.modifies.contains(m)))
                    .filter(|p| p.ins.iter().all(|d| d.ty != Type::Map) || Self::has_map(vars))
                    .collect();
                let Some(callee) = callees.choose(&mut self.rng) else {
                    return stmt(StmtKind::Assume(self.expr(Type::Bool, vars, 2)));
                };
                let mut outs: Vec<String> = Vec::new();
                for o in &callee.outs {
                    let pool: Vec<&VarDecl> = writable.iter().filter(|w| w.ty == o.ty && !outs.contains(&w.name)).collect();
                    match pool.choose(&mut self.rng) {
                        Some(w) => outs.push(w.name.clone()),
                        None => return stmt(StmtKind::Assume(self.expr(Type::Bool, vars, 2))),
                    }
                }
                let args = callee.ins.iter().map(|d| self.expr(d.ty, vars, 2)).collect();
                stmt(StmtKind::Call { outs, callee: callee.name.clone(), args })
            }
            4 => stmt(StmtKind::If {
                cond: self.expr(Type::Bool, vars, 2),
                then_block: self.block(vars, writable, procs, me, depth - 1),
                else_block: self.block(vars, writable, procs, me, depth - 1),
            }),
            5 => {
                let k = self.rng.gen_range(0..3);
                stmt(StmtKind::While {
                    guard: self.expr(Type::Bool, vars, 2),
                    invariants: (0..k).map(|_| self.expr(Type::Bool, vars, 2)).collect(),
                    body: self.block(vars, writable, procs, me, depth - 1),
                })
            }
            _ => stmt(StmtKind::Assume(self.expr(Type::Bool, vars, 2))),
        }
    }
}

/// A random program that type checks, determined by `seed`.
pub fn program(seed: u64) -> Program {
    let mut g = Gen { rng: StdRng::seed_from_u64(seed), binders: 0, functions: Vec::new() };
    let mut p = Program::default();
    for k in 0..g.rng.gen_range(0..3) {
        p.globals.push(decl(format!("g{k}"), g.ty()));
    }
    for k in 0..g.rng.gen_range(0..3) {
        let params: Vec<VarDecl> = (0..g.rng.gen_range(1..3)).map(|i| decl(format!("a{i}"), g.ty())).collect();
        let ret = if g.rng.gen() { Type::Int } else { Type::Bool };
        // bodies may only call functions declared before, so there is no recursion
        let body = g.rng.gen_bool(0.5).then(|| g.expr(ret, &params, 2));
        g.functions.push((format!("f{k}"), params.iter().map(|d| d.ty).collect(), ret));
        p.functions.push(FunctionDecl { name: format!("f{k}"), params, ret, body, span: Span::default() });
    }
    for _ in 0..g.rng.gen_range(0..2) {
        let formula = g.quant(&[], 3);
        p.axioms.push(Axiom { formula, span: Span::default() });
    }
    let mut procs: Vec<ProcedureDecl> = Vec::new();
    for k in 0..g.rng.gen_range(1..4) {
        let ins: Vec<VarDecl> = (0..g.rng.gen_range(0..3)).map(|i| decl(format!("x{i}"), g.ty())).collect();
        let outs: Vec<VarDecl> = (0..g.rng.gen_range(0..3)).map(|i| decl(format!("r{i}"), g.ty())).collect();
        let modifies: Vec<String> = p.globals.iter().filter(|_| g.rng.gen()).map(|d| d.name.clone()).collect();
        let pre_vars: Vec<VarDecl> = p.globals.iter().chain(&ins).cloned().collect();
        let post_vars: Vec<VarDecl> = pre_vars.iter().chain(&outs).cloned().collect();
        let requires = (0..g.rng.gen_range(0..3)).map(|_| g.expr(Type::Bool, &pre_vars, 3)).collect();
        let ensures = (0..g.rng.gen_range(0..3)).map(|_| g.expr(Type::Bool, &post_vars, 3)).collect();
        let mut pr = ProcedureDecl {
            name: format!("p{k}"),
            ins,
            outs,
            requires,
            ensures,
            modifies,
            body: None,
            span: Span::default(),
        };
        if g.rng.gen_bool(0.8) {
            let locals: Vec<VarDecl> = (0..g.rng.gen_range(0..4)).map(|i| decl(format!("l{i}"), g.ty())).collect();
            let vars: Vec<VarDecl> = post_vars.iter().chain(&locals).cloned().collect();
            let writable: Vec<VarDecl> = pr
                .outs
                .iter()
                .chain(&locals)
                .chain(p.globals.iter().filter(|d| pr.modifies.contains(&d.name)))
                .cloned()
                .collect();
            let n = g.rng.gen_range(1..6);
            let stmts = (0..n).map(|_| g.stmt(&vars, &writable, &procs, &pr, 2)).collect();
            pr.body = Some(Body { locals, stmts });
        }
        procs.push(pr);
    }
    p.procedures = procs;
    p
}
