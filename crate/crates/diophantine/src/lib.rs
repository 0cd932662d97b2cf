//! Exact construction and verification of two-dimensional linear forms
//! whose best-approximation errors track a prescribed decay function.

pub mod cli;
pub mod construction;
pub mod lattice;
pub mod psi;
pub mod quad;
pub mod rational;
pub mod trace;
pub mod verify;
