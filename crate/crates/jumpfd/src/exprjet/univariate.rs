//! Taylor series in a single curve parameter.
//!
//! The interface geometry works with short Taylor expansions in the curve
//! parameter t (positions, tangents, arclength factors). These are plain
//! coefficient slices `c[k]`, the coefficient of t^k, with a fixed length
//! chosen by the caller; every operation truncates to the length of its
//! first argument.

use crate::error::{Error, Result};

/// Truncated product of two t-series, to the length of `a`.
pub fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            if i + j >= out.len() {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Coefficient-wise sum, to the length of `a`.
pub fn series_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .enumerate()
        .map(|(k, &ak)| ak + b.get(k).copied().unwrap_or(0.0))
        .collect()
}

/// Multiply a t-series by a scalar.
pub fn series_scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|&ak| ak * s).collect()
}

/// Derivative d/dt of a t-series; same length, top coefficient zero.
pub fn series_derivative(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for k in 1..a.len() {
        out[k - 1] = k as f64 * a[k];
    }
    out
}

/// Truncated square root of a t-series with positive constant term.
///
/// Solved degree by degree from r·r = a.
pub fn series_sqrt(a: &[f64]) -> Result<Vec<f64>> {
    let a0 = a[0];
    if a0 <= 0.0 {
        return Err(Error::domain(format!(
            "square root of a series with non-positive constant term {a0:.6e}"
        )));
    }
    let mut r = vec![0.0; a.len()];
    r[0] = a0.sqrt();
    for k in 1..a.len() {
        let mut acc = 0.0;
        for i in 1..k {
            acc += r[i] * r[k - i];
        }
        r[k] = (a[k] - acc) / (2.0 * r[0]);
    }
    Ok(r)
}
