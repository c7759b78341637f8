//! Truncated Fock-basis verification engine.

pub mod clt;
pub mod density;
pub mod dual_check;
pub mod ensemble;
pub mod fock;
pub mod quadrature;
pub mod search;
