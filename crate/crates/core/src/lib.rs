//! Networks of interacting reinforced stochastic processes.
//!
//! Each vertex `l` of a weighted digraph carries an inclination `Z_{n,l}` in
//! `[0, 1]`. At every step the vertices draw conditionally independent binary
//! actions with success probabilities `W^T Z_n`, and each inclination moves
//! towards its own action by the reinforcement step `r_n`:
//!
//! ```text
//! Z_{n+1} = (1 - r_n) Z_n + r_n X_{n+1}
//! ```
//!
//! The crate is organised around four areas:
//!
//! * [`matrix`], [`spectral`], [`condensation`]: validation of the interaction
//!   matrix, its period and cyclic classes, the Perron vector, the projectors
//!   splitting an inclination vector into the leading, periodic and residual
//!   components, and the block structure of reducible matrices.
//! * [`schedule`], [`dynamics`], [`decompose`]: reinforcement sequences, the
//!   stochastic recurrence, trajectories with per-checkpoint diagnostics.
//! * [`regime`]: the first-order asymptotic regime predicted from the
//!   summability of `r_n`, the period and the normalisation mode.
//! * [`harness`]: seeded Monte Carlo ensembles, verdict checking, preset
//!   scenarios and an exact enumeration oracle for small instances.

pub mod condensation;
pub mod decompose;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod harness;
pub mod matrix;
pub mod regime;
pub mod schedule;
pub mod spectral;

pub use error::{Error, Result};
pub use matrix::{InteractionMatrix, Mode};
pub use schedule::{ReinforcementSchedule, ScheduleFamily, Summability};
pub use spectral::SpectralStructure;

/// Name of the pseudo-random generator used for every stochastic run.
pub const RNG_ALGORITHM: &str = "ChaCha8";
