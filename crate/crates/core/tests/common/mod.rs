//! Brute-force oracles kept independent of the library's implementation
//! paths: rank by row reduction with partial pivoting (no SVD), real
//! spectrum by evaluating the characteristic polynomial (no rank test, no
//! eigensolver).
#![allow(dead_code)] // each test target uses a different slice of this module

use coorbit_core::GroupAction;
use nalgebra::DMatrix;

/// Rank by Gaussian elimination with partial pivoting.
pub fn row_reduction_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut rank = 0usize;
    for col in 0..cols {
        let pivot = (rank..rows)
            .max_by(|&r, &s| a[(r, col)].abs().total_cmp(&a[(s, col)].abs()))
            .filter(|&r| a[(r, col)].abs() > tol * scale);
        let Some(pivot) = pivot else { continue };
        a.swap_rows(rank, pivot);
        let inv = 1.0 / a[(rank, col)];
        for c in col..cols {
            a[(rank, c)] *= inv;
        }
        for r in 0..rows {
            if r != rank {
                let factor = a[(r, col)];
                if factor != 0.0 {
                    for c in col..cols {
                        a[(r, c)] -= factor * a[(rank, c)];
                    }
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Characteristic polynomial coefficients by the Faddeev-LeVerrier
/// recurrence: `p(lambda) = lambda^d + c[1] lambda^{d-1} + ... + c[d]`.
fn characteristic_polynomial(m: &DMatrix<f64>) -> Vec<f64> {
    let d = m.nrows();
    let mut coeffs = vec![1.0f64];
    let mut work = DMatrix::<f64>::zeros(d, d);
    for k in 1..=d {
        for i in 0..d {
            work[(i, i)] += coeffs[k - 1];
        }
        work = m * work;
        coeffs.push(-work.trace() / k as f64);
    }
    coeffs
}

fn eval_poly(coeffs: &[f64], lambda: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * lambda + c)
}

/// Real spectrum of an orthogonal matrix by scanning the candidate roots
/// `+1` and `-1` of the characteristic polynomial (unit modulus forces any
/// real eigenvalue onto those two).
pub fn char_poly_real_spectrum(m: &DMatrix<f64>, tol: f64) -> Vec<f64> {
    let coeffs = characteristic_polynomial(m);
    let mut out = Vec::new();
    for lambda in [1.0f64, -1.0] {
        if eval_poly(&coeffs, lambda).abs() <= tol {
            out.push(lambda);
        }
    }
    out
}

/// Brute-force profile: per non-identity element, the minimum row-reduction
/// rank of `U - lambda I` over the characteristic-polynomial real spectrum
/// (the full dimension when that spectrum is empty), sorted descending.
pub fn brute_force_gamma(action: &GroupAction, tol: f64) -> Vec<usize> {
    let d = action.dim();
    let identity = DMatrix::<f64>::identity(d, d);
    let mut values: Vec<usize> = (1..action.order())
        .map(|g| {
            let element = action.element(g);
            let spectrum = char_poly_real_spectrum(element, tol);
            spectrum
                .iter()
                .map(|&lambda| row_reduction_rank(&(element - &identity * lambda), tol))
                .min()
                .unwrap_or(d)
        })
        .collect();
    values.sort_unstable_by(|a, b| b.cmp(a));
    values
}

/// All built-in actions with dimensions in the given ranges.
pub fn builtin_actions(dims: std::ops::RangeInclusive<usize>) -> Vec<(String, GroupAction)> {
    let mut out = Vec::new();
    for d in dims {
        out.push((format!("cyclic d={d}"), GroupAction::cyclic_shift(d).unwrap()));
        out.push((format!("sign_flip d={d}"), GroupAction::sign_flip(d).unwrap()));
        if d >= 3 {
            out.push((format!("dihedral d={d}"), GroupAction::dihedral(d).unwrap()));
        }
    }
    out
}
