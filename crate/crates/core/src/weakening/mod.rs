//! Candidate invariants obtained by weakening postconditions.
//!
//! Each candidate records how it was derived: the ensures clause (and, with
//! conjunct splitting, the conjunct) it started from and the substitutions
//! applied to it. Replaying the trace on the origin reproduces the formula.

mod aging;

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Serialize, Serializer};

use crate::analysis::{
    all_loops, count_occurrences, outer_loops, replace_all, replace_nth, subexpressions,
    type_within, AnalysisError, LoopId, LoopInfo, SyntacticClass,
};
use crate::frontend::{alpha_key, Expr, Ident, ProcedureDecl, Program, Scope, Type};

pub use aging::aging;

/// Which heuristics are enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HeuristicLevel {
    pub relaxation: bool,
    pub aging: bool,
    pub uncoupling: bool,
    pub conjunct_split: bool,
    pub double_uncoupling: bool,
    /// One occurrence of a loop target that occurs several times replaced by
    /// another target. Not part of any preset.
    pub target_uncoupling: bool,
}

impl HeuristicLevel {
    pub const MAX_PRESET: u8 = 4;

    /// Cumulative presets: 0 none, 1 relaxation, 2 +aging,
    /// 3 +uncoupling and conjunct splitting, 4 +double uncoupling.
    pub fn preset(level: u8) -> HeuristicLevel {
        HeuristicLevel {
            relaxation: level >= 1,
            aging: level >= 2,
            uncoupling: level >= 3,
            conjunct_split: level >= 3,
            double_uncoupling: level >= 4,
            target_uncoupling: false,
        }
    }

    /// True when every heuristic enabled here is also enabled in `other`.
    pub fn implies(&self, other: &HeuristicLevel) -> bool {
        (!self.relaxation || other.relaxation)
            && (!self.aging || other.aging)
            && (!self.uncoupling || other.uncoupling)
            && (!self.conjunct_split || other.conjunct_split)
            && (!self.double_uncoupling || other.double_uncoupling)
            && (!self.target_uncoupling || other.target_uncoupling)
    }
}

impl Default for HeuristicLevel {
    fn default() -> Self {
        HeuristicLevel::preset(3)
    }
}

/// Where a candidate comes from: an ensures clause, or one top-level
/// conjunct of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Origin {
    pub clause: usize,
    pub conjunct: Option<usize>,
}

impl Origin {
    pub fn formula(&self, proc: &ProcedureDecl) -> Option<Expr> {
        let clause = proc.ensures.get(self.clause)?;
        match self.conjunct {
            None => Some(clause.clone()),
            Some(k) => clause.conjuncts().get(k).map(|c| (*c).clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    /// Every occurrence of the constant replaced.
    Relaxation,
    /// A single occurrence replaced.
    Uncoupling,
    /// Two occurrences replaced by two different variables (two steps).
    DoubleUncoupling,
    /// A single occurrence of a loop target replaced by another target.
    TargetUncoupling,
}

fn ser_expr<S: Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(e)
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub heuristic: Heuristic,
    pub class: SyntacticClass,
    #[serde(serialize_with = "ser_expr")]
    pub constant: Expr,
    pub variable: Ident,
    #[serde(serialize_with = "ser_expr")]
    pub replacement: Expr,
    /// Occurrence replaced; `None` means all of them.
    pub position: Option<usize>,
    pub aged: bool,
    /// Index of the constant among the distinct constants of its class.
    #[serde(skip)]
    pub constant_rank: usize,
}

impl TraceStep {
    fn key(&self) -> (Heuristic, u8, usize, &str, bool, String, Option<usize>) {
        let class_rank = match self.class {
            SyntacticClass::Id => 0,
            SyntacticClass::Map => 1,
            SyntacticClass::Number => 2,
        };
        (
            self.heuristic,
            class_rank,
            self.constant_rank,
            &self.variable,
            self.aged,
            self.replacement.to_string(),
            self.position,
        )
    }

    fn apply(&self, f: &Expr) -> Result<Expr, AnalysisError> {
        match self.position {
            None => replace_all(f, &self.constant, &self.replacement),
            Some(n) => replace_nth(f, &self.constant, &self.replacement, n),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    #[serde(serialize_with = "ser_expr")]
    pub formula: Expr,
    pub origin: Origin,
    pub trace: Vec<TraceStep>,
    /// Outer loop whose targets supplied the substituted variables.
    pub source_loop: Option<LoopId>,
    #[serde(skip)]
    pub source_ordinal: usize,
}

impl Candidate {
    /// Re-derives the formula from the origin clause and the trace.
    pub fn replay(&self, proc: &ProcedureDecl) -> Result<Expr, AnalysisError> {
        let mut f = self
            .origin
            .formula(proc)
            .ok_or_else(|| AnalysisError::Type(format!("no ensures clause {:?}", self.origin)))?;
        for step in &self.trace {
            f = step.apply(&f)?;
        }
        Ok(f)
    }

    pub fn key(&self) -> String {
        alpha_key(&self.formula)
    }

    fn order(&self, other: &Candidate) -> Ordering {
        let a: Vec<_> = self.trace.iter().map(TraceStep::key).collect();
        let b: Vec<_> = other.trace.iter().map(TraceStep::key).collect();
        self.origin
            .cmp(&other.origin)
            .then(self.source_ordinal.cmp(&other.source_ordinal))
            .then(a.cmp(&b))
    }
}

/// The ensures clauses, plus their top-level conjuncts when splitting is on,
/// without alpha-equivalent repeats.
pub fn postconditions(proc: &ProcedureDecl, level: &HeuristicLevel) -> Vec<(Origin, Expr)> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (clause, f) in proc.ensures.iter().enumerate() {
        if seen.insert(alpha_key(f)) {
            out.push((Origin { clause, conjunct: None }, f.clone()));
        }
        if level.conjunct_split {
            for (k, c) in f.conjuncts().into_iter().enumerate() {
                if seen.insert(alpha_key(c)) {
                    out.push((Origin { clause, conjunct: Some(k) }, c.clone()));
                }
            }
        }
    }
    out
}

/// A relaxable constant: its distinct expression, class, rank within the
/// class, and type.
#[derive(Debug, Clone)]
pub struct Constant {
    pub expr: Expr,
    pub class: SyntacticClass,
    pub rank: usize,
    pub ty: Type,
}

/// Sub-expressions of `post` that `lp` cannot modify, in class order
/// Id, Map, Number and first-occurrence order within a class.
pub fn loop_constants(post: &Expr, lp: &LoopInfo, scope: &Scope) -> Vec<Constant> {
    let mut out = Vec::new();
    for class in [SyntacticClass::Id, SyntacticClass::Map, SyntacticClass::Number] {
        let mut distinct: Vec<Expr> = Vec::new();
        for occ in subexpressions(post, class) {
            let e = occ.subexpression;
            let eligible = match class {
                SyntacticClass::Id => !occ.bound && !lp.targets.contains(e.as_var().unwrap_or("")),
                SyntacticClass::Number => true,
                // bound variables may appear in the index
                SyntacticClass::Map => e
                    .free_vars()
                    .iter()
                    .all(|v| !lp.targets.contains(v)),
            };
            if eligible && !distinct.contains(&e) {
                distinct.push(e);
            }
        }
        for (rank, expr) in distinct.into_iter().enumerate() {
            if let Ok(ty) = type_within(post, &expr, scope) {
                out.push(Constant { expr, class, rank, ty });
            }
        }
    }
    out
}

fn step(
    heuristic: Heuristic,
    c: &Constant,
    variable: &str,
    replacement: &Expr,
    position: Option<usize>,
    aged: bool,
) -> TraceStep {
    TraceStep {
        heuristic,
        class: c.class,
        constant: c.expr.clone(),
        variable: variable.to_string(),
        replacement: replacement.clone(),
        position,
        aged,
        constant_rank: c.rank,
    }
}

/// The plain variable followed by its aged forms (when aging is enabled).
fn replacements(variable: &str, lp: &LoopInfo, level: &HeuristicLevel) -> Vec<(Expr, bool)> {
    let mut out = vec![(Expr::var(variable), false)];
    if level.aging {
        out.extend(aging(variable, lp).into_iter().map(|a| (a, true)));
    }
    out
}

/// Every weakening of `post` with respect to outer loop `lp`, the unchanged
/// formula first. Not deduplicated.
pub fn build_weakenings(
    post: &Expr,
    origin: Origin,
    lp: &LoopInfo,
    level: &HeuristicLevel,
    scope: &Scope,
) -> Vec<Candidate> {
    let make = |formula: Expr, trace: Vec<TraceStep>| Candidate {
        formula,
        origin,
        trace,
        source_loop: Some(lp.id.clone()),
        source_ordinal: lp.ordinal,
    };
    let mut out = vec![make(post.clone(), Vec::new())];
    if !level.relaxation {
        return out;
    }
    let variables: Vec<(&Ident, Type)> = lp
        .targets
        .iter()
        .filter_map(|v| scope.lookup(v).map(|t| (v, t)))
        .collect();

    for c in loop_constants(post, lp, scope) {
        let count = count_occurrences(post, &c.expr);
        let vars: Vec<&Ident> =
            variables.iter().filter(|(_, t)| *t == c.ty).map(|(v, _)| *v).collect();
        for v in &vars {
            for (r, aged) in replacements(v, lp, level) {
                let f = replace_all(post, &c.expr, &r).expect("constants are never binders");
                out.push(make(f, vec![step(Heuristic::Relaxation, &c, v, &r, None, aged)]));
                if level.uncoupling {
                    for n in 1..=count {
                        let f = replace_nth(post, &c.expr, &r, n).expect("occurrence in range");
                        out.push(make(
                            f,
                            vec![step(Heuristic::Uncoupling, &c, v, &r, Some(n), aged)],
                        ));
                    }
                }
            }
        }
        if level.double_uncoupling {
            for p in 1..=count {
                for q in p + 1..=count {
                    for v1 in &vars {
                        for v2 in &vars {
                            if v1 == v2 {
                                continue;
                            }
                            for (r1, a1) in replacements(v1, lp, level) {
                                for (r2, a2) in replacements(v2, lp, level) {
                                    // the later occurrence first, so `p` keeps its number
                                    let s2 = step(Heuristic::DoubleUncoupling, &c, v2, &r2, Some(q), a2);
                                    let s1 = step(Heuristic::DoubleUncoupling, &c, v1, &r1, Some(p), a1);
                                    let f = s2.apply(post).and_then(|f| s1.apply(&f));
                                    if let Ok(f) = f {
                                        out.push(make(f, vec![s2, s1]));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    if level.target_uncoupling {
        target_uncouplings(post, lp, level, &variables, &mut |f, s| out.push(make(f, vec![s])));
    }
    out
}

/// Splits a loop target occurring at least twice in `post`: each occurrence
/// in turn is replaced by another target of the same type.
fn target_uncouplings(
    post: &Expr,
    lp: &LoopInfo,
    level: &HeuristicLevel,
    variables: &[(&Ident, Type)],
    emit: &mut dyn FnMut(Expr, TraceStep),
) {
    let mut distinct: Vec<Expr> = Vec::new();
    for occ in subexpressions(post, SyntacticClass::Id) {
        let e = occ.subexpression;
        if !occ.bound && lp.targets.contains(e.as_var().unwrap_or("")) && !distinct.contains(&e) {
            distinct.push(e);
        }
    }
    for (rank, t) in distinct.into_iter().enumerate() {
        let count = count_occurrences(post, &t);
        let Some(&(_, ty)) = variables.iter().find(|(v, _)| Some(v.as_str()) == t.as_var()) else { continue };
        if count < 2 {
            continue;
        }
        let c = Constant { expr: t.clone(), class: SyntacticClass::Id, rank, ty };
        for (v, _) in variables.iter().filter(|(v, vt)| *vt == ty && Some(v.as_str()) != t.as_var()) {
            for (r, aged) in replacements(v, lp, level) {
                for n in 1..=count {
                    let f = replace_nth(post, &t, &r, n).expect("occurrence in range");
                    emit(f, step(Heuristic::TargetUncoupling, &c, v, &r, Some(n), aged));
                }
            }
        }
    }
}

/// All candidates for `proc`, sorted by origin, source loop and trace, with
/// alpha-equivalent repeats removed (the first one is kept).
pub fn generate_candidates(
    program: &Program,
    proc: &ProcedureDecl,
    level: &HeuristicLevel,
) -> Result<Vec<Candidate>, AnalysisError> {
    if all_loops(program, proc)?.is_empty() {
        return Ok(Vec::new());
    }
    let scope = Scope::procedure(program, proc);
    let outer = outer_loops(program, proc)?;
    let mut all = Vec::new();
    for (origin, post) in postconditions(proc, level) {
        for lp in &outer {
            all.extend(build_weakenings(&post, origin, lp, level, &scope));
        }
    }
    all.sort_by(|a, b| a.order(b));
    let mut seen = HashSet::new();
    all.retain(|c| seen.insert(c.key()));
    Ok(all)
}
