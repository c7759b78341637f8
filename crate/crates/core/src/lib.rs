//! Classical capacity of one-mode Gaussian measurement channels.
//!
//! [`gaussian`] holds the validated state and noise types, [`capacity`] the
//! closed-form capacities, [`duality`] the dual ensemble construction and
//! [`numerics`] a truncated Fock-space engine that checks the closed forms by
//! brute force.

pub mod capacity;
pub mod cli;
pub mod duality;
pub mod error;
pub mod gaussian;
pub mod numerics;
pub mod optimize;

pub use error::{Error, Result};
