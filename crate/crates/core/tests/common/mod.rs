//! Independent oracles: closed forms and plain 1-D quadrature that share no
//! code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Classical Gibbs data for a radial one-mode symbol `h(|z|^2)`, using
/// `dz = π du` with `u = |z|^2`: returns `(Z, S_B)`.
pub fn radial_gibbs(h: impl Fn(f64) -> f64 + Copy, beta: f64, u_max: f64) -> (f64, f64) {
    let n = 200_000;
    let z = PI * simpson(|u| (-beta * h(u)).exp(), 0.0, u_max, n);
    let e = PI * simpson(|u| h(u) * (-beta * h(u)).exp(), 0.0, u_max, n) / z;
    (z, z.ln() + beta * e)
}

/// Quantum Gibbs entropy and `log Z` from an explicit list of levels.
pub fn levels_gibbs(levels: &[f64], beta: f64) -> (f64, f64) {
    let e0 = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = levels.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let mean: f64 = levels.iter().zip(&w).map(|(e, wi)| (e - e0) * wi).sum::<f64>() / z;
    let log_z = z.ln() - beta * e0;
    (z.ln() + beta * mean, log_z)
}

/// Harmonic one-mode closed forms at `q = e^{−βε}`.
pub fn harmonic_z_scaled(beta: f64, eps: f64) -> f64 {
    PI * eps / (1.0 - (-beta * eps).exp())
}

pub fn harmonic_s_vn(beta: f64, eps: f64) -> f64 {
    let q = (-beta * eps).exp();
    -(1.0 - q).ln() - q * q.ln() / (1.0 - q)
}

pub fn harmonic_s_w(beta: f64, eps: f64) -> f64 {
    let q = (-beta * eps).exp();
    -(1.0 - q).ln() + 1.0
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

fn fact(n: u32) -> f64 {
    (1..=n).map(|t| t as f64).product()
}

/// Closed-form upper symbol of `z̄^i z^j` (one mode) at `z`:
/// `Σ_a (−ε)^a a! C(i,a) C(j,a) z̄^{i−a} z^{j−a}`.
pub fn upper_monomial(i: u32, j: u32, eps: f64, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..=i.min(j) {
        let c = (-eps).powi(a as i32) * fact(a) * binom(i, a) * binom(j, a);
        acc += z.conj().powu(i - a) * z.powu(j - a) * c;
    }
    acc
}

/// `e^{−|z−c|^2/v}/(πv)` in one mode.
pub fn gaussian(z: Complex64, c: Complex64, v: f64) -> f64 {
    (-(z - c).norm_sqr() / v).exp() / (PI * v)
}
