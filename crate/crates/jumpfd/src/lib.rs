//! Compact 9-point finite differences for two-dimensional elliptic problems
//! with a smooth immersed interface.
//!
//! The library solves −∇·(a∇u) = f on a rectangle, where the coefficient `a`
//! jumps across a curve Γ = {ψ = 0} and the solution satisfies prescribed
//! jumps [u] = g₁ and [a∇u·n] = g₂ on Γ. The discretisation is a compact
//! 9-point scheme that is fourth-order accurate away from the interface and
//! third-order accurate at grid points next to it, together with a local
//! gradient recovery of matching quality.
//!
//! The pipeline is organised as a chain of modules:
//!
//! * [`exprjet`] — expression parsing and truncated Taylor (jet) arithmetic,
//!   the numerical substrate everything else consumes;
//! * [`geometry`] — grid handling, point classification against ψ, base-point
//!   projection onto Γ and a local parametrisation of the curve;
//! * [`reduction`] — elimination of higher derivatives of u through the PDE,
//!   the derived polynomial bases, and the interface coupling map that
//!   expresses one-sided jets on the other side of Γ;
//! * [`stencils`] — derivation of the 9-point equation and gradient-recovery
//!   rows, both from explicit formulas and from local linear algebra;
//! * [`solver`] — sparse assembly and the linear solvers (banded LU and
//!   BiCGStab) plus condition-number estimation;
//! * [`harness`] — problem descriptions, built-in benchmark cases, grid
//!   refinement studies, error norms and report emission.

pub mod error;
pub mod exprjet;
pub mod geometry;
pub mod harness;
pub mod reduction;
pub mod solver;
pub mod stencils;

pub use error::{Error, Result};
