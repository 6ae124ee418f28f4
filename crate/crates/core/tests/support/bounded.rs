//! Bounded concrete execution: runs a procedure on every small input (or a
//! seeded sample when there are too many) and evaluates invariants at each
//! arrival at their loop head.

use std::collections::HashSet;

use invforge::analysis::LoopId;
use invforge::frontend::{BinOp, Expr, ExprKind, ProcedureDecl, Program, Stmt, StmtKind, Type, VarDecl};
use invforge::interp::{Env, Interp, Stop, Value};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const INT_RANGE: std::ops::RangeInclusive<i64> = -4..=4;
pub const MAX_LEN: usize = 4;

/// Arrays indexed from 1 with at most `MAX_LEN` entries in `INT_RANGE`.
pub fn small_arrays() -> Vec<Value> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..MAX_LEN {
        let mut next = Vec::new();
        for a in &frontier {
            for v in INT_RANGE {
                let mut b: Vec<i64> = a.clone();
                b.push(v);
                next.push(b);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.iter().map(|a| Value::array(a)).collect()
}

fn domain(ty: Type, arrays: &[Value]) -> Vec<Value> {
    match ty {
        Type::Int => INT_RANGE.map(Value::Int).collect(),
        Type::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Type::Map => arrays.to_vec(),
    }
}

fn random_value(ty: Type, rng: &mut StdRng) -> Value {
    match ty {
        Type::Int => Value::Int(rng.gen_range(INT_RANGE)),
        Type::Bool => Value::Bool(rng.gen()),
        Type::Map => {
            let len = rng.gen_range(0..=MAX_LEN);
            let vals: Vec<i64> = (0..len).map(|_| rng.gen_range(INT_RANGE)).collect();
            Value::array(&vals)
        }
    }
}

fn has_havoc(stmts: &[Stmt]) -> bool {
    stmts.iter().any(|s| match &s.kind {
        StmtKind::Havoc(_) => true,
        StmtKind::If { then_block, else_block, .. } => has_havoc(then_block) || has_havoc(else_block),
        StmtKind::While { body, .. } => has_havoc(body),
        _ => false,
    })
}

fn conjuncts(e: &Expr, out: &mut Vec<Expr>) {
    match &e.kind {
        ExprKind::Binary(BinOp::And, l, r) => {
            conjuncts(l, out);
            conjuncts(r, out);
        }
        _ => out.push(e.clone()),
    }
}

#[derive(Debug, Default)]
pub struct CrossCheck {
    /// Inputs satisfying the precondition that were executed.
    pub inputs: usize,
    pub exhaustive: bool,
    pub runs: usize,
    /// Runs cut short because something could not be computed.
    pub undetermined_runs: usize,
    /// Invariant evaluations that came out true or false.
    pub decided: usize,
    pub undecided: usize,
    pub violations: Vec<String>,
}

/// Executes `proc` on the small inputs and evaluates each of `invariants` at
/// every visit of its loop head. Enumerates exhaustively when the raw input
/// space has at most `limit` points, otherwise draws `limit` seeded samples.
pub fn cross_check(program: &Program, proc: &ProcedureDecl, invariants: &[(LoopId, Expr)], limit: usize, seed: u64) -> CrossCheck {
    let interp = Interp::new(program);
    let arrays = small_arrays();
    // Scalars first so that requires clauses over them prune early.
    let mut vars: Vec<VarDecl> = proc.ins.iter().chain(&program.globals).cloned().collect();
    vars.sort_by_key(|v| v.ty == Type::Map);
    let domains: Vec<Vec<Value>> = vars.iter().map(|v| domain(v.ty, &arrays)).collect();
    let mut pre = Vec::new();
    for r in &proc.requires {
        conjuncts(r, &mut pre);
    }
    // The precondition conjuncts decidable once the first k variables are set.
    let mut at_level: Vec<Vec<Expr>> = vec![Vec::new(); vars.len() + 1];
    for c in pre {
        let fv = c.free_vars();
        let level = vars
            .iter()
            .enumerate()
            .filter(|(_, v)| fv.contains(&v.name))
            .map(|(k, _)| k + 1)
            .max()
            .unwrap_or(0);
        at_level[level].push(c);
    }
    let admits = |env: &Env, level: usize| at_level[level].iter().all(|c| interp.eval(c, env) == Some(Value::Bool(true)));

    let seeds = if has_havoc(proc.stmts()) { 32 } else { 1 };
    let mut out = CrossCheck::default();
    let mut rng = StdRng::seed_from_u64(seed);
    let execute = |env: &Env, out: &mut CrossCheck, rng: &mut StdRng| {
        out.inputs += 1;
        for _ in 0..seeds {
            let mut state = env.clone();
            let mut havoc_rng = StdRng::seed_from_u64(rng.gen());
            let mut observe = |site: invforge::interp::Site, st: &Env| {
                if site.procedure != proc.name {
                    return;
                }
                for (id, inv) in invariants {
                    if id.path != site.path {
                        continue;
                    }
                    match interp.eval(inv, st) {
                        Some(Value::Bool(true)) => out.decided += 1,
                        Some(Value::Bool(false)) => {
                            out.decided += 1;
                            if out.violations.len() < 10 {
                                let mut shown: Vec<String> = st.iter().map(|(k, v)| format!("{k}={v:?}")).collect();
                                shown.sort();
                                out.violations.push(format!("{inv} at {id}: {}", shown.join(", ")));
                            }
                        }
                        _ => out.undecided += 1,
                    }
                }
            };
            let stop = interp.run(proc, &mut state, &mut |t| random_value(t, &mut havoc_rng), &mut observe);
            out.runs += 1;
            if stop == Stop::Undetermined {
                out.undetermined_runs += 1;
            }
        }
    };

    let raw: f64 = domains.iter().map(|d| d.len() as f64).product();
    if !admits(&Env::new(), 0) {
        return out;
    }
    if raw <= limit as f64 {
        out.exhaustive = true;
        let mut env = Env::new();
        fn dfs(
            k: usize,
            vars: &[VarDecl],
            domains: &[Vec<Value>],
            env: &mut Env,
            admits: &dyn Fn(&Env, usize) -> bool,
            leaf: &mut dyn FnMut(&Env),
        ) {
            if k == vars.len() {
                leaf(env);
                return;
            }
            for v in &domains[k] {
                env.insert(vars[k].name.clone(), v.clone());
                if admits(env, k + 1) {
                    dfs(k + 1, vars, domains, env, admits, leaf);
                }
            }
            env.remove(&vars[k].name);
        }
        let mut leaf = |env: &Env| execute(env, &mut out, &mut rng);
        dfs(0, &vars, &domains, &mut env, &admits, &mut leaf);
    } else {
        let mut seen = HashSet::new();
        let mut draw = StdRng::seed_from_u64(seed ^ 0x5eed);
        'sample: for _ in 0..limit {
            let mut env = Env::new();
            for (k, v) in vars.iter().enumerate() {
                let mut ok = false;
                for _ in 0..200 {
                    let val = domains[k][draw.gen_range(0..domains[k].len())].clone();
                    env.insert(v.name.clone(), val);
                    if admits(&env, k + 1) {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    continue 'sample;
                }
            }
            let mut key: Vec<String> = env.iter().map(|(k, v)| format!("{k}={v:?}")).collect();
            key.sort();
            if seen.insert(key.join(";")) {
                execute(&env, &mut out, &mut rng);
            }
        }
    }
    out
}
