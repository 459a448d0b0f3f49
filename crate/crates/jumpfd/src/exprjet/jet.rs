//! Bivariate truncated Taylor arithmetic.
//!
//! A [`Jet2`] stores the Taylor coefficients c\[m\]\[n\] = ∂^{m+n}φ/∂x^m∂y^n / (m!·n!)
//! of a scalar field φ at a fixed center, for all m + n ≤ K. Arithmetic on
//! jets (sums, truncated products, quotients, composition with elementary
//! functions) propagates every derivative exactly up to roundoff, which is
//! what the stencil derivation relies on: finite-difference approximations of
//! high derivatives would destroy the order of the scheme.

use crate::error::{Error, Result};
use crate::exprjet::expr::Expr;
use crate::exprjet::factorial;
use std::ops::{Add, Mul, Neg, Sub};

/// Largest supported jet degree.
///
/// The scheme itself needs total degree at most 5 plus a safety margin for
/// deriving source jets from manufactured solutions.
pub const MAX_DEGREE: usize = 8;

/// Dense triangular jet of a scalar field at a fixed center.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    center: (f64, f64),
    degree: usize,
    /// Graded-lex layout: coefficient (m, n) lives at m+n choose 2 offsets,
    /// see [`Jet2::idx`].
    coeffs: Vec<f64>,
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::DegreeCap {
            requested: degree,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

impl Jet2 {
    /// The jet of the constant field `value`.
    pub fn constant(value: f64, center: (f64, f64), degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let mut jet = Jet2::zero(center, degree);
        jet.coeffs[0] = value;
        Ok(jet)
    }

    /// The jet of the coordinate field x.
    pub fn var_x(center: (f64, f64), degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let mut jet = Jet2::zero(center, degree);
        jet.coeffs[0] = center.0;
        if degree >= 1 {
            let i = jet.idx(1, 0);
            jet.coeffs[i] = 1.0;
        }
        Ok(jet)
    }

    /// The jet of the coordinate field y.
    pub fn var_y(center: (f64, f64), degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let mut jet = Jet2::zero(center, degree);
        jet.coeffs[0] = center.1;
        if degree >= 1 {
            let i = jet.idx(0, 1);
            jet.coeffs[i] = 1.0;
        }
        Ok(jet)
    }

    /// All-zero jet.
    pub fn zero(center: (f64, f64), degree: usize) -> Self {
        let len = (degree + 1) * (degree + 2) / 2;
        Jet2 {
            center,
            degree,
            coeffs: vec![0.0; len],
        }
    }

    fn idx(&self, m: usize, n: usize) -> usize {
        let d = m + n;
        debug_assert!(d <= self.degree);
        d * (d + 1) / 2 + m
    }

    /// Expansion center.
    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    /// Truncation degree K.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The field value at the center, c\[0\]\[0\].
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient c\[m\]\[n\]. Zero outside the stored triangle.
    pub fn coeff(&self, m: usize, n: usize) -> f64 {
        if m + n > self.degree {
            0.0
        } else {
            self.coeffs[self.idx(m, n)]
        }
    }

    /// Overwrite a Taylor coefficient. Intended for assembling jets from
    /// known derivative data in tests and oracles.
    pub fn set_coeff(&mut self, m: usize, n: usize, value: f64) {
        let i = self.idx(m, n);
        self.coeffs[i] = value;
    }

    /// The partial derivative ∂^{m+n}/∂x^m∂y^n at the center: m!·n!·c\[m\]\[n\].
    pub fn partial(&self, m: usize, n: usize) -> Result<f64> {
        if m + n > self.degree {
            return Err(Error::domain(format!(
                "partial ({m}, {n}) requested from a degree-{} jet",
                self.degree
            )));
        }
        Ok(factorial(m) * factorial(n) * self.coeffs[self.idx(m, n)])
    }

    /// All coefficients finite?
    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn assert_compatible(&self, other: &Jet2) {
        assert_eq!(
            self.degree, other.degree,
            "jet arithmetic requires equal degrees"
        );
        debug_assert_eq!(
            self.center, other.center,
            "jet arithmetic requires equal centers"
        );
    }

    /// Multiply every coefficient by a scalar.
    pub fn scale(&self, s: f64) -> Jet2 {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    /// Truncated quotient self / other.
    ///
    /// Fails when the constant term of `other` vanishes: the quotient field
    /// is singular at the center and its jet does not exist.
    pub fn div(&self, other: &Jet2) -> Result<Jet2> {
        Ok(self * &other.recip()?)
    }

    /// Truncated reciprocal 1 / self.
    ///
    /// Computed degree by degree from the convolution identity
    /// (self · recip) = 1, which needs only the constant term inverted.
    pub fn recip(&self) -> Result<Jet2> {
        let a0 = self.value();
        if a0 == 0.0 {
            return Err(Error::domain(
                "division by a field vanishing at the expansion center",
            ));
        }
        let inv0 = 1.0 / a0;
        let mut out = Jet2::zero(self.center, self.degree);
        out.coeffs[0] = inv0;
        for d in 1..=self.degree {
            for m in 0..=d {
                let n = d - m;
                // Coefficient (m, n) of self·out must vanish; all terms of
                // out with total degree < d are already known.
                let mut acc = 0.0;
                for p in 0..=m {
                    for q in 0..=n {
                        if p + q == 0 {
                            continue;
                        }
                        acc += self.coeff(p, q) * out.coeff(m - p, n - q);
                    }
                }
                let i = out.idx(m, n);
                out.coeffs[i] = -inv0 * acc;
            }
        }
        Ok(out)
    }

    /// Integer power by repeated truncated multiplication.
    pub fn powi(&self, exponent: u32) -> Jet2 {
        let mut out = Jet2::zero(self.center, self.degree);
        out.coeffs[0] = 1.0;
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }

    /// Compose a univariate Taylor series with this jet.
    ///
    /// `outer` holds the Taylor coefficients of the outer function expanded
    /// at `self.value()`, one per degree from 0 to `self.degree()`. The
    /// result is the jet of outer∘self, evaluated by Horner's rule on the
    /// zero-constant part of `self`.
    pub fn compose_univariate(&self, outer: &[f64]) -> Jet2 {
        assert!(
            outer.len() > self.degree,
            "outer series must reach the jet degree"
        );
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut out = Jet2::zero(self.center, self.degree);
        out.coeffs[0] = outer[self.degree];
        for k in (0..self.degree).rev() {
            out = &out * &delta;
            out.coeffs[0] += outer[k];
        }
        out
    }

    /// Jet of sin(self).
    pub fn sin(&self) -> Jet2 {
        let v = self.value();
        let table = [v.sin(), v.cos(), -v.sin(), -v.cos()];
        let outer: Vec<f64> = (0..=self.degree)
            .map(|k| table[k % 4] / factorial(k))
            .collect();
        self.compose_univariate(&outer)
    }

    /// Jet of cos(self).
    pub fn cos(&self) -> Jet2 {
        let v = self.value();
        let table = [v.cos(), -v.sin(), -v.cos(), v.sin()];
        let outer: Vec<f64> = (0..=self.degree)
            .map(|k| table[k % 4] / factorial(k))
            .collect();
        self.compose_univariate(&outer)
    }

    /// Jet of exp(self).
    pub fn exp(&self) -> Jet2 {
        let e = self.value().exp();
        let outer: Vec<f64> = (0..=self.degree).map(|k| e / factorial(k)).collect();
        self.compose_univariate(&outer)
    }

    /// Jet of sqrt(self).
    ///
    /// Fails unless the value at the center is strictly positive: at zero the
    /// derivatives of the square root blow up and the jet does not exist.
    pub fn sqrt(&self) -> Result<Jet2> {
        let v = self.value();
        if v <= 0.0 {
            return Err(Error::domain(format!(
                "square root of a non-positive field value {v:.6e}"
            )));
        }
        let mut derivative = v.sqrt();
        let mut outer = vec![0.0; self.degree + 1];
        outer[0] = derivative;
        for k in 1..=self.degree {
            derivative *= (1.5 - k as f64) / v;
            outer[k] = derivative / factorial(k);
        }
        Ok(self.compose_univariate(&outer))
    }

    /// Jet of ∂self/∂x at the same center and declared degree.
    ///
    /// Only coefficients with m + n ≤ K − 1 are meaningful; the top band is
    /// zero. Callers that differentiate repeatedly must budget the starting
    /// degree accordingly.
    pub fn dx(&self) -> Jet2 {
        let mut out = Jet2::zero(self.center, self.degree);
        for d in 0..self.degree {
            for m in 0..=d {
                let n = d - m;
                let i = out.idx(m, n);
                out.coeffs[i] = (m + 1) as f64 * self.coeff(m + 1, n);
            }
        }
        out
    }

    /// Jet of ∂self/∂y, with the same degree convention as [`Jet2::dx`].
    pub fn dy(&self) -> Jet2 {
        let mut out = Jet2::zero(self.center, self.degree);
        for d in 0..self.degree {
            for m in 0..=d {
                let n = d - m;
                let i = out.idx(m, n);
                out.coeffs[i] = (n + 1) as f64 * self.coeff(m, n + 1);
            }
        }
        out
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        self.assert_compatible(rhs);
        let mut out = self.clone();
        for (c, r) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *c += r;
        }
        out
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        self.assert_compatible(rhs);
        let mut out = self.clone();
        for (c, r) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *c -= r;
        }
        out
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        self.assert_compatible(rhs);
        let mut out = Jet2::zero(self.center, self.degree);
        for d1 in 0..=self.degree {
            for m1 in 0..=d1 {
                let n1 = d1 - m1;
                let a = self.coeff(m1, n1);
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=(self.degree - d1) {
                    for m2 in 0..=d2 {
                        let n2 = d2 - m2;
                        let i = out.idx(m1 + m2, n1 + n2);
                        out.coeffs[i] += a * rhs.coeff(m2, n2);
                    }
                }
            }
        }
        out
    }
}

/// Evaluate an expression as a jet at `center` to total degree `degree`.
///
/// Domain violations in sqrt or division are hard errors, never NaN.
pub fn jet_eval(e: &Expr, center: (f64, f64), degree: usize) -> Result<Jet2> {
    check_degree(degree)?;
    jet_eval_node(e, center, degree)
}

fn jet_eval_node(e: &Expr, center: (f64, f64), degree: usize) -> Result<Jet2> {
    match e {
        Expr::Const(v) => Jet2::constant(*v, center, degree),
        Expr::Pi => Jet2::constant(std::f64::consts::PI, center, degree),
        Expr::X => Jet2::var_x(center, degree),
        Expr::Y => Jet2::var_y(center, degree),
        Expr::Add(a, b) => Ok(&jet_eval_node(a, center, degree)? + &jet_eval_node(b, center, degree)?),
        Expr::Mul(a, b) => Ok(&jet_eval_node(a, center, degree)? * &jet_eval_node(b, center, degree)?),
        Expr::Div(a, b) => jet_eval_node(a, center, degree)?.div(&jet_eval_node(b, center, degree)?),
        Expr::Pow(a, k) => Ok(jet_eval_node(a, center, degree)?.powi(*k)),
        Expr::Neg(a) => Ok(-&jet_eval_node(a, center, degree)?),
        Expr::Sin(a) => Ok(jet_eval_node(a, center, degree)?.sin()),
        Expr::Cos(a) => Ok(jet_eval_node(a, center, degree)?.cos()),
        Expr::Exp(a) => Ok(jet_eval_node(a, center, degree)?.exp()),
        Expr::Sqrt(a) => jet_eval_node(a, center, degree)?.sqrt(),
    }
}
