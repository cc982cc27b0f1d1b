//! Symbolic toolkit for nonlinear self-adjointness of evolution equations
//! `u_t = F(t, x, u, u_x, ...)`: jet-space calculus, formal adjoints, the
//! self-adjointness determining system, conserved vectors from point
//! symmetries and a small numerical cross-check.

pub mod conslaw;
pub mod expr;
pub mod io;
pub mod jet;
pub mod numverify;
pub mod variational;

pub use expr::{Atom, Coeff, Exponent, Expression, IndepVar, Jet, Name};
pub use jet::{EvolutionEquation, Generator};
