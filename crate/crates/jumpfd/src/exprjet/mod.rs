//! Expression parsing and truncated Taylor (jet) arithmetic.
//!
//! Scalar fields (coefficients, sources, jump data, level sets) enter the
//! solver as expression text. This module parses that text into an [`Expr`]
//! tree and evaluates it either pointwise ([`eval_expr`]) or as a bivariate
//! jet ([`jet_eval`]): the dense triangle of Taylor coefficients up to a
//! requested total degree. Jet arithmetic makes every partial derivative the
//! scheme needs exact up to roundoff, with no finite-difference noise.
//!
//! Sub-modules:
//!
//! * [`index`] — graded multi-index sets Λ_K, Λ¹_K, Λ²_K that fix the
//!   ordering of Taylor coefficients project-wide;
//! * [`jet`] — the [`Jet2`] type and its arithmetic;
//! * [`univariate`] — small helpers for Taylor series in a single curve
//!   parameter, used by the interface geometry;
//! * [`expr`] — the expression tree, parser, printer and evaluators.

pub mod expr;
pub mod index;
pub mod jet;
pub mod univariate;

pub use expr::{eval_expr, parse_expr, Expr};
pub use index::{binomial, factorial, IndexKind, MultiIndexSet};
pub use jet::{jet_eval, Jet2, MAX_DEGREE};

use crate::Result;

/// Truncated product of two jets with equal center and degree.
pub fn jet_product(a: &Jet2, b: &Jet2) -> Jet2 {
    a * b
}

/// Truncated quotient of two jets with equal center and degree.
///
/// Fails when the constant term of `b` vanishes.
pub fn jet_divide(a: &Jet2, b: &Jet2) -> Result<Jet2> {
    a.div(b)
}

/// Composition of a univariate Taylor series with a jet.
///
/// `outer` lists the Taylor coefficients of the outer function expanded at
/// `g.value()`, one per degree from 0 to `g.degree()`.
pub fn jet_compose_univariate(outer: &[f64], g: &Jet2) -> Jet2 {
    g.compose_univariate(outer)
}

/// The (m, n) partial derivative stored in a jet: m!·n!·c\[m\]\[n\].
///
/// Fails when m + n exceeds the jet degree.
pub fn partial(j: &Jet2, m: usize, n: usize) -> Result<f64> {
    j.partial(m, n)
}
