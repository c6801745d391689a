//! Numerical laboratory for ontological models of a single qubit.
//!
//! - [`bloch`]: rays, Bloch vectors, the Born rule and two-qubit steering.
//! - [`measures`]: symbolic epistemic states and their integrals.
//! - [`models`]: the Beltrametti-Bugajski, Bell-Mermin and Kochen-Specker models.
//! - [`analysis`]: ψ-complete / ψ-supplemented / ψ-epistemic classification and
//!   the Bell-Mermin reductions.
//! - [`experiments`]: the steering nonlocality certificate and the
//!   two-detector argument.

pub mod analysis;
pub mod bloch;
pub mod error;
pub mod experiments;
pub mod measures;
pub mod models;
pub mod report;

pub use error::{Error, Result};
