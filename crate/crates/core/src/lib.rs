#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Quasi-steady-state (QSSA) and delayed quasi-steady-state (D-QSSA)
//! reduction of mass-action reaction networks, with fixed-step ODE and
//! delay-equation integrators and tools to measure reduction error.

pub mod analysis;
pub mod error;
pub mod expr;
pub mod models;
pub mod network;
pub mod reduction;
pub mod solver;
pub mod system;

pub use error::{Error, Result};
pub use system::{Delay, DelaySpec, DynamicalSystem};
