//! Shape-constrained mixture-weight estimation by maximum likelihood.
//!
//! Given samples `X_1, …, X_N` and a fixed basis `b_1, …, b_M`, the crate
//! minimizes `f(w) = -(1/N) Σ_j log Σ_i w_i b_i(X_j)` over weight vectors in
//! the probability simplex, optionally intersected with a shape constraint
//! (monotone, concave, convex, their combinations, or unimodal). The solver is
//! a cubic-regularized Newton method whose subproblems are solved by away-step
//! Frank-Wolfe over the closed-form vertex catalog of the constraint set.
//!
//! The crate is `no_std` (with `alloc`) and single-threaded; file formats and
//! the command-line interface live in the companion `shapemix` crate.

#![no_std]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod afw;
pub mod basis;
pub mod cubic_newton;
pub mod error;
pub mod kw;
pub mod numeric;
pub mod objective;
pub mod polytope;
pub mod reference;

pub use basis::{BasisSpec, MixtureProblem};
pub use cubic_newton::{fit_unimodal, minimize, SolveResult, SolveTrace, SolverConfig, Status};

pub use error::{Error, Result};
pub use objective::SimplexWeights;
pub use polytope::{Shape, ShapeConstraint, VertexId};
