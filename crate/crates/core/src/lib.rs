//! Two-qubit entanglement analysis.
//!
//! Concurrence is computed twice: numerically from `rho * rho~`
//! and by the closed-form Ferrari roots of its characteristic quartic in the
//! canonical local-unitary frame. Separability is also decided by the sign of
//! `det(rho^PT)`, and the [`harness`] checks that all of these agree.

pub mod criteria;
pub mod entanglement;
pub mod error;
pub mod harness;
pub mod io;
pub mod matcore;
pub mod quartic;
pub mod states;

pub use error::{Error, Result};
