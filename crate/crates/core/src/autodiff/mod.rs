//! Minimal n-dimensional tensor engine with reverse-mode differentiation,
//! the Adam optimizer, and a finite-difference gradient checker.
//!
//! A [`Tape`] records one forward computation; [`Tape::backward`] fills
//! gradients for every node. Tapes are single-threaded; distinct tapes may
//! run concurrently.

mod adam;
mod gradcheck;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, run_suite, GradCheckReport, OpReport};
pub use tape::{ActKind, Group, Param, ParamSet, Shape, Tape, Var};
