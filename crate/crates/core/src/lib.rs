//! Loop-invariant inference by postcondition weakening.

pub mod analysis;
pub mod frontend;
pub mod interp;
pub mod verifier;
pub mod weakening;
