//! Syntactic facts consumed by candidate generation: loop structure, target
//! sets, occurrence enumeration and substitution.

mod loops;
mod occurrences;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::frontend::{Ident, ProcedureDecl, Program};

pub use loops::{all_loops, max_nesting, outer_loops, targets, variables, LoopId, LoopInfo};
pub use occurrences::{
    count_occurrences, replace_all, replace_all_checked, replace_nth, replace_nth_checked,
    subexpressions, type_within, Occurrence, SyntacticClass,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("call to undeclared procedure `{0}`")]
    UnknownCallee(Ident),
    #[error("occurrence {n} requested but the expression occurs {count} time(s)")]
    OccurrenceOutOfRange { n: usize, count: usize },
    #[error("cannot replace bound variable `{binder}` by non-variable `{replacement}`")]
    BinderReplacement { binder: Ident, replacement: String },
    #[error("{0}")]
    Type(String),
}

/// Target sets and occurrence tables of one procedure, for debugging output.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisDump {
    pub procedure: Ident,
    pub loops: Vec<LoopDump>,
    pub clauses: Vec<ClauseDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoopDump {
    pub id: LoopId,
    pub ordinal: usize,
    pub parent: Option<LoopId>,
    pub depth: usize,
    pub targets: BTreeSet<Ident>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClauseDump {
    pub index: usize,
    pub formula: String,
    pub id: Vec<Occurrence>,
    pub number: Vec<Occurrence>,
    pub map: Vec<Occurrence>,
}

pub fn dump(program: &Program, proc: &ProcedureDecl) -> Result<AnalysisDump, AnalysisError> {
    let loops = all_loops(program, proc)?
        .into_iter()
        .map(|l| LoopDump {
            id: l.id,
            ordinal: l.ordinal,
            parent: l.parent,
            depth: l.depth,
            targets: l.targets,
        })
        .collect();
    let clauses = proc
        .ensures
        .iter()
        .enumerate()
        .map(|(index, f)| ClauseDump {
            index,
            formula: f.to_string(),
            id: subexpressions(f, SyntacticClass::Id),
            number: subexpressions(f, SyntacticClass::Number),
            map: subexpressions(f, SyntacticClass::Map),
        })
        .collect();
    Ok(AnalysisDump { procedure: proc.name.clone(), loops, clauses })
}
