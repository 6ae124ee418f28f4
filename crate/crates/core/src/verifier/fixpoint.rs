//! Remove-failing-instances fixpoint.
//!
//! An instance is a formula placed at one loop head. Each round assumes every
//! live instance at its loop, checks initiation and consecution of each one,
//! and drops all instances with a non-valid condition. The loop stops when a
//! round drops nothing or nothing is left.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use crate::analysis::{LoopId, LoopInfo};
use crate::frontend::{Expr, ProcedureDecl, Program, Scope};

use super::smtlib;
use super::solver::{Solver, SolverError, SolverVerdict};
use super::vcgen::{Annotations, VcGen, VcKind};

#[derive(Debug, Clone)]
pub struct Instance {
    pub loop_id: LoopId,
    pub formula: Expr,
}

#[derive(Debug, Clone, Serialize)]
pub struct VcRecord {
    pub round: usize,
    pub loop_id: LoopId,
    pub kind: VcKind,
    #[serde(flatten)]
    pub verdict: SolverVerdict,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Round {
    /// Loops holding a live instance when the round started.
    pub live: Vec<LoopId>,
    pub removed: Vec<LoopId>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct FixpointOutcome {
    pub rounds: Vec<Round>,
    /// Indices into the instance list that survived.
    #[serde(skip)]
    pub surviving: Vec<usize>,
    pub checks: Vec<VcRecord>,
}

impl FixpointOutcome {
    pub fn saw_unknown(&self) -> bool {
        self.checks.iter().any(|c| matches!(c.verdict, SolverVerdict::Unknown { .. }))
    }
}

/// Everything needed to check instances in one procedure.
#[derive(Clone)]
pub struct Checker<'a> {
    pub program: &'a Program,
    pub proc: &'a ProcedureDecl,
    pub loops: &'a [LoopInfo],
    pub solver: &'a Solver,
    /// Assumed at every round, in addition to the live instances.
    pub base: Annotations,
}

impl<'a> Checker<'a> {
    fn info(&self, id: &LoopId) -> &'a LoopInfo {
        self.loops.iter().find(|l| &l.id == id).expect("instance loop belongs to the procedure")
    }

    fn verdict(
        &self,
        gen: &VcGen,
        kind: VcKind,
        inst: &Instance,
        label: &str,
    ) -> Result<(SolverVerdict, f64), SolverError> {
        let lp = self.info(&inst.loop_id);
        let vc = match kind {
            VcKind::Initiation => gen.initiation(lp, &inst.formula),
            VcKind::Consecution => gen.consecution(lp, &inst.formula),
        };
        let scope = Scope::procedure(self.program, self.proc);
        let script = smtlib::script(&vc.formula, &scope).map_err(SolverError::Encoding)?;
        let start = Instant::now();
        let v = self.solver.check(&format!("{label}-{}-{kind}", inst.loop_id), &script)?;
        Ok((v, start.elapsed().as_secs_f64()))
    }

    /// Runs the fixpoint over `instances`. Consecution of an instance is not
    /// checked when its initiation already failed in the same round.
    pub fn fixpoint(&self, instances: &[Instance], label: &str) -> Result<FixpointOutcome, SolverError> {
        let mut live: Vec<usize> = (0..instances.len()).collect();
        let mut out = FixpointOutcome::default();
        while !live.is_empty() {
            let round = out.rounds.len() + 1;
            let mut anns: Annotations = self.base.clone();
            for &k in &live {
                anns.entry(instances[k].loop_id.clone()).or_default().push(instances[k].formula.clone());
            }
            let gen = VcGen::new(self.program, self.proc, self.loops, &anns);
            let mut failed = Vec::new();
            for &k in &live {
                let inst = &instances[k];
                for kind in [VcKind::Initiation, VcKind::Consecution] {
                    let (verdict, seconds) = self.verdict(&gen, kind, inst, label)?;
                    let ok = verdict.is_valid();
                    out.checks.push(VcRecord { round, loop_id: inst.loop_id.clone(), kind, verdict, seconds });
                    if !ok {
                        failed.push(k);
                        break;
                    }
                }
            }
            out.rounds.push(Round {
                live: live.iter().map(|&k| instances[k].loop_id.clone()).collect(),
                removed: failed.iter().map(|&k| instances[k].loop_id.clone()).collect(),
            });
            if failed.is_empty() {
                break;
            }
            live.retain(|k| !failed.contains(k));
        }
        out.surviving = live;
        Ok(out)
    }

    /// Instances of `formula` at every loop of the procedure.
    pub fn everywhere(&self, formula: &Expr) -> Vec<Instance> {
        self.loops
            .iter()
            .map(|l| Instance { loop_id: l.id.clone(), formula: formula.clone() })
            .collect()
    }
}

/// Adds `formula` at each of `loops` to `anns`.
pub fn annotate(anns: &mut Annotations, loops: &[LoopId], formula: &Expr) {
    for l in loops {
        anns.entry(l.clone()).or_default().push(formula.clone());
    }
}

/// Declared loop invariants of `loops`, keyed by loop.
pub fn declared(loops: &[LoopInfo]) -> Annotations {
    let mut anns: Annotations = HashMap::new();
    for l in loops {
        if !l.declared_invariants.is_empty() {
            anns.insert(l.id.clone(), l.declared_invariants.clone());
        }
    }
    anns
}
