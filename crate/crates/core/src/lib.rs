//! Symbolic tooling for point symmetries of scalar ordinary differential equations.

pub mod catalog;
pub mod expr;
pub mod harness;
pub mod invariance;
pub mod invdiff;
pub mod jet;
pub mod liedet;
pub mod linalg;
pub mod linear_ode;
pub mod parse;
pub mod eval;
pub mod poly;
pub mod zero;
