//! End-to-end inference for one procedure: generate, instrument, check.

use std::time::Instant;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::analysis::{all_loops, AnalysisError, LoopId};
use crate::frontend::{check_formula, Expr, Ident, ProcedureDecl, Program, Scope};
use crate::weakening::{generate_candidates, Candidate, HeuristicLevel, Origin, TraceStep};

use super::fixpoint::{annotate, declared, Checker, Instance, Round, VcRecord};
use super::solver::{Solver, SolverError};

#[derive(Debug, Clone)]
pub struct InferConfig {
    pub level: HeuristicLevel,
    /// Worker threads checking candidates concurrently.
    pub jobs: usize,
    /// Re-check failed candidates assuming the verified ones.
    pub assume_verified: bool,
    /// Prove declared loop invariants before assuming them.
    pub check_declared: bool,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig { level: HeuristicLevel::default(), jobs: 1, assume_verified: false, check_declared: false }
    }
}

#[derive(Debug, Error)]
pub enum InferError {
    #[error("no procedure named `{0}`")]
    UnknownProcedure(Ident),
    #[error("procedure `{0}` has no body")]
    NoBody(Ident),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("cannot create worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    /// Inductive at one loop head at least.
    Verified,
    /// Every instance was refuted by a counterexample.
    Rejected,
    /// No instance survived and some check was inconclusive.
    Unknown,
    /// The solver could not be run.
    Error,
    /// Ill-formed at the loop heads.
    Discarded,
}

fn ser_expr<S: Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(e)
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateReport {
    pub index: usize,
    #[serde(serialize_with = "ser_expr")]
    pub formula: Expr,
    pub origin: Origin,
    pub source_loop: Option<LoopId>,
    pub trace: Vec<TraceStep>,
    pub status: CandidateStatus,
    /// Loops whose heads the candidate was proved at.
    pub loops: Vec<LoopId>,
    pub rounds: Vec<Round>,
    pub checks: Vec<VcRecord>,
    /// Verified only once other verified invariants were assumed.
    pub assisted: bool,
    pub diagnostic: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeclaredReport {
    pub loop_id: LoopId,
    #[serde(serialize_with = "ser_expr")]
    pub formula: Expr,
    /// False when `--check-declared` refuted it; it is then not assumed.
    pub kept: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InferenceReport {
    pub procedure: Ident,
    pub level: HeuristicLevel,
    pub solver: String,
    pub budget_seconds: f64,
    pub declared: Vec<DeclaredReport>,
    pub candidates: Vec<CandidateReport>,
    pub solver_queries: usize,
    pub wall_seconds: f64,
}

impl InferenceReport {
    pub fn verified(&self) -> impl Iterator<Item = &CandidateReport> {
        self.candidates.iter().filter(|c| c.status == CandidateStatus::Verified)
    }

    pub fn count(&self, status: CandidateStatus) -> usize {
        self.candidates.iter().filter(|c| c.status == status).count()
    }

    pub fn has_error(&self) -> bool {
        self.count(CandidateStatus::Error) > 0
    }
}

/// Procedures worth analysing by default: with a body, a postcondition and a
/// loop.
pub fn default_procedures(program: &Program) -> Vec<&ProcedureDecl> {
    program
        .procedures
        .iter()
        .filter(|p| {
            p.body.is_some()
                && !p.ensures.is_empty()
                && all_loops(program, p).map(|l| !l.is_empty()).unwrap_or(false)
        })
        .collect()
}

/// Generates candidates for `procedure` and keeps those the solver proves
/// inductive at some loop head.
pub fn infer(
    program: &Program,
    procedure: &str,
    config: &InferConfig,
    solver: &Solver,
) -> Result<InferenceReport, InferError> {
    let start = Instant::now();
    let proc = program
        .procedure(procedure)
        .ok_or_else(|| InferError::UnknownProcedure(procedure.to_string()))?;
    if proc.body.is_none() {
        return Err(InferError::NoBody(procedure.to_string()));
    }
    let queries_before = solver.queries();
    let loops = all_loops(program, proc)?;
    let mut checker = Checker { program, proc, loops: &loops, solver, base: Default::default() };

    let decl: Vec<Instance> = loops
        .iter()
        .flat_map(|l| {
            l.declared_invariants.iter().map(|f| Instance { loop_id: l.id.clone(), formula: f.clone() })
        })
        .collect();
    let kept: Vec<bool> = if config.check_declared && !decl.is_empty() {
        let out = checker.fixpoint(&decl, &format!("{procedure}-declared"))?;
        (0..decl.len()).map(|k| out.surviving.contains(&k)).collect()
    } else {
        vec![true; decl.len()]
    };
    if config.check_declared {
        for (inst, _) in decl.iter().zip(&kept).filter(|(_, k)| **k) {
            annotate(&mut checker.base, std::slice::from_ref(&inst.loop_id), &inst.formula);
        }
    } else {
        checker.base = declared(&loops);
    }
    let declared_reports = decl
        .iter()
        .zip(&kept)
        .map(|(i, &kept)| DeclaredReport { loop_id: i.loop_id.clone(), formula: i.formula.clone(), kept })
        .collect();

    let candidates = generate_candidates(program, proc, &config.level)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| InferError::Pool(e.to_string()))?;
    let all: Vec<usize> = (0..candidates.len()).collect();
    let mut reports = check_all(&pool, &checker, &candidates, &all, false);

    if config.assume_verified {
        loop {
            let mut assisted = checker.base.clone();
            for r in reports.iter().filter(|r| r.status == CandidateStatus::Verified) {
                annotate(&mut assisted, &r.loops, &r.formula);
            }
            let retry: Vec<usize> = reports
                .iter()
                .filter(|r| matches!(r.status, CandidateStatus::Rejected | CandidateStatus::Unknown))
                .map(|r| r.index)
                .collect();
            let helper = Checker { base: assisted, ..checker.clone() };
            let again = check_all(&pool, &helper, &candidates, &retry, true);
            let mut progress = false;
            for r in again.into_iter().filter(|r| r.status == CandidateStatus::Verified) {
                let k = r.index;
                reports[k] = r;
                progress = true;
            }
            if !progress {
                break;
            }
        }
    }

    Ok(InferenceReport {
        procedure: procedure.to_string(),
        level: config.level,
        solver: solver.config().path.clone(),
        budget_seconds: solver.config().budget.as_secs_f64(),
        declared: declared_reports,
        candidates: reports,
        solver_queries: solver.queries() - queries_before,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn check_all(
    pool: &rayon::ThreadPool,
    checker: &Checker,
    candidates: &[Candidate],
    which: &[usize],
    assisted: bool,
) -> Vec<CandidateReport> {
    use rayon::prelude::*;
    pool.install(|| {
        which
            .par_iter()
            .map(|&k| check_candidate(checker, &candidates[k], k, assisted))
            .collect()
    })
}

fn check_candidate(checker: &Checker, cand: &Candidate, index: usize, assisted: bool) -> CandidateReport {
    let start = Instant::now();
    let mut report = CandidateReport {
        index,
        formula: cand.formula.clone(),
        origin: cand.origin,
        source_loop: cand.source_loop.clone(),
        trace: cand.trace.clone(),
        status: CandidateStatus::Discarded,
        loops: Vec::new(),
        rounds: Vec::new(),
        checks: Vec::new(),
        assisted,
        diagnostic: None,
        seconds: 0.0,
    };
    let scope = Scope::procedure(checker.program, checker.proc);
    if let Err(e) = check_formula(&cand.formula, &scope) {
        report.diagnostic = Some(e.to_string());
        return report;
    }
    let instances = checker.everywhere(&cand.formula);
    match checker.fixpoint(&instances, &format!("{}-c{index}", checker.proc.name)) {
        Ok(out) => {
            report.status = if !out.surviving.is_empty() {
                CandidateStatus::Verified
            } else if out.saw_unknown() {
                CandidateStatus::Unknown
            } else {
                CandidateStatus::Rejected
            };
            report.loops = out.surviving.iter().map(|&k| instances[k].loop_id.clone()).collect();
            report.rounds = out.rounds;
            report.checks = out.checks;
        }
        Err(e) => {
            report.status = CandidateStatus::Error;
            report.diagnostic = Some(e.to_string());
        }
    }
    report.seconds = start.elapsed().as_secs_f64();
    report
}
