//! Checking candidates: VC generation, SMT-LIB encoding, the solver driver
//! and the remove-failing-instances fixpoint.

pub mod fixpoint;
pub mod infer;
pub mod smtlib;
pub mod solver;
pub mod vcgen;

pub use fixpoint::{Checker, FixpointOutcome, Instance, Round, VcRecord};
pub use infer::{
    default_procedures, infer, CandidateReport, CandidateStatus, DeclaredReport, InferConfig,
    InferError, InferenceReport,
};
pub use solver::{Solver, SolverConfig, SolverError, SolverVerdict, UnknownReason, DEFAULT_BUDGET};
pub use vcgen::{Annotations, VcGen, VcKind, VerificationCondition};
