//! Numerical laboratory for the coupled cubic Schrodinger system
//!
//! ```text
//! i u_t + u_xx + (|u|^2 + omega |v|^2) u = 0
//! i v_t + v_xx + (|v|^2 + omega |u|^2) v = 0
//! ```
//!
//! The crate covers ground states and linearized operators, the corrected
//! two-soliton ansatz, the interaction projections that drive the soliton
//! separation, the reduced modulation ODEs, a split-step propagator for the
//! full system, and the trackers and fits that compare simulated separations
//! with the logarithmic laws.

pub mod banded;
pub mod error;
pub mod grid;
pub mod interactions;
pub mod linops;
pub mod reduced_ode;
pub mod setup;
pub mod sim;
pub mod solitons;
pub mod tracking;

pub use error::{Error, Result};
pub use grid::{derivative, inner, integrate, ComplexField, Grid, Spectral};
pub use solitons::{AnsatzMode, SolitonParams};
