//! Real polynomial arithmetic on coefficient lists in descending powers of s.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

/// Degree of `p` after ignoring exact leading zeros. Empty or all-zero
/// polynomials report degree 0.
pub fn degree(p: &[f64]) -> usize {
    let lead = p.iter().position(|&c| c != 0.0).unwrap_or(p.len());
    p.len().saturating_sub(lead + 1)
}

/// Drops exact leading zeros, keeping at least one coefficient.
pub fn trim(p: &[f64]) -> Vec<f64> {
    let lead = p.iter().position(|&c| c != 0.0).unwrap_or(p.len());
    if lead >= p.len() {
        vec![0.0]
    } else {
        p[lead..].to_vec()
    }
}

pub fn is_zero(p: &[f64]) -> bool {
    p.iter().all(|&c| c == 0.0)
}

/// Sum with tails aligned (constant terms line up).
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &c) in a.iter().enumerate() {
        out[n - a.len() + i] += c;
    }
    for (i, &c) in b.iter().enumerate() {
        out[n - b.len() + i] += c;
    }
    out
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![0.0];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn scale(p: &[f64], k: f64) -> Vec<f64> {
    p.iter().map(|&c| c * k).collect()
}

/// Multiplies by s^k (appends k zero coefficients).
pub fn shift_up(p: &[f64], k: usize) -> Vec<f64> {
    let mut out = p.to_vec();
    out.extend(core::iter::repeat_n(0.0, k));
    out
}

/// Horner evaluation at a real point.
pub fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Horner evaluation at a complex point.
pub fn eval_complex(p: &[f64], z: Complex64) -> Complex64 {
    p.iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Derivative coefficients (descending powers).
pub fn derivative(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    if n <= 1 {
        return vec![0.0];
    }
    p[..n - 1]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (n - 1 - i) as f64)
        .collect()
}
