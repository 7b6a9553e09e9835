//! Small numerical helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Floor applied to probabilities and eigenvalues inside logarithms.
pub const LOG_FLOOR: f64 = 1e-300;

/// Pairwise summation with a fixed split order, so that reductions are
/// reproducible regardless of how the summands were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        let mut acc = Complex64::new(0.0, 0.0);
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// `-x log x` with the convention `0 log 0 = 0`.
pub fn entropy_term(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Table of `ln(n!)` for `n = 0..=n_max`.
pub fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n_max + 1);
    table.push(0.0);
    let mut acc = 0.0;
    for n in 1..=n_max {
        acc += (n as f64).ln();
        table.push(acc);
    }
    table
}

/// Poisson probabilities `e^{-x} x^n / n!` for `n = 0..=n_max`, evaluated in
/// log space. Entries far outside the bulk underflow to zero.
pub fn poisson_weights(x: f64, ln_fact: &[f64]) -> Vec<f64> {
    let n_max = ln_fact.len() - 1;
    let mut out = vec![0.0; n_max + 1];
    if x <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    let lx = x.ln();
    let (lo, hi) = poisson_window(x, n_max);
    for n in lo..=hi {
        out[n] = (-x + n as f64 * lx - ln_fact[n]).exp();
    }
    out
}

/// Index window `[lo, hi]` outside which Poisson(x) weights are below
/// `1e-30` relative to the mode.
pub fn poisson_window(x: f64, n_max: usize) -> (usize, usize) {
    let spread = 12.0 * x.sqrt() + 40.0;
    let lo = (x - spread).floor().max(0.0) as usize;
    let hi = ((x + spread).ceil() as usize).min(n_max);
    (lo.min(hi), hi)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// ascending order. Columns of the returned matrix are the eigenvectors.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    // symmetrize before handing to the solver
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn norm_sqr(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// `<u|v>` with the first argument conjugated.
pub fn inner(u: &DVector<Complex64>, v: &DVector<Complex64>) -> Complex64 {
    u.dotc(v)
}

/// Ordinary least squares fit `y = intercept + slope * x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }

    #[test]
    fn poisson_weights_sum_to_one() {
        let lf = ln_factorials(400);
        for &x in &[0.0, 0.5, 3.0, 50.0, 200.0] {
            let s: f64 = poisson_weights(x, &lf).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "x = {x}: {s}");
        }
    }

    #[test]
    fn eigen_sorted_ascending() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(2.0, 0.0),
            ],
        );
        let (vals, _) = hermitian_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_line() {
        let (a, b) = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }
}
