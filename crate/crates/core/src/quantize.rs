//! Polynomial phase-space symbols, Wick and anti-Wick quantization, lower
//! symbols and the exact upper-symbol expansion.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num::bigint::BigInt;
use num::complex::Complex;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{coherent_vector_with, FockSpec, OperatorMatrix};
use crate::numeric::{hermitian_eigen, ln_factorials};
use crate::quadrature::{QuadratureGrid, Scheme};

pub type MultiIndex = Vec<u32>;
type Monomial = (MultiIndex, MultiIndex);

/// One term `c z̄^i z^j` in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm {
    pub i: MultiIndex,
    pub j: MultiIndex,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// `Σ c_{i,j} z̄^i z^j` over multi-indices `i, j` of length `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SymbolTerm>", into = "Vec<SymbolTerm>")]
pub struct PolySymbol {
    d: usize,
    terms: BTreeMap<Monomial, Complex64>,
}

impl TryFrom<Vec<SymbolTerm>> for PolySymbol {
    type Error = Error;

    fn try_from(list: Vec<SymbolTerm>) -> Result<Self> {
        let d = list.first().map_or(0, |t| t.i.len());
        let mut sym = PolySymbol::zero(d);
        for t in list {
            if t.i.len() != d || t.j.len() != d {
                return Err(Error::Config(format!(
                    "symbol term has multi-index lengths {} and {}, expected {d}",
                    t.i.len(),
                    t.j.len()
                )));
            }
            sym.add_term(t.i, t.j, Complex64::new(t.re, t.im));
        }
        Ok(sym)
    }
}

impl From<PolySymbol> for Vec<SymbolTerm> {
    fn from(sym: PolySymbol) -> Self {
        sym.terms
            .into_iter()
            .map(|((i, j), c)| SymbolTerm {
                i,
                j,
                re: c.re,
                im: c.im,
            })
            .collect()
    }
}

fn unit(d: usize, l: usize) -> MultiIndex {
    let mut v = vec![0; d];
    v[l] = 1;
    v
}

/// All multi-indices `α` with `α ≤ bound` componentwise.
fn indices_below(bound: &[u32]) -> Vec<MultiIndex> {
    let mut out = vec![Vec::new()];
    for &b in bound {
        let mut next = Vec::new();
        for prefix in &out {
            for a in 0..=b {
                let mut v = prefix.clone();
                v.push(a);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// All multi-indices of length `d` with `|α| = total`.
fn compositions(d: usize, total: u32) -> Vec<MultiIndex> {
    if d == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(d - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn factorial_f64(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl PolySymbol {
    pub fn zero(d: usize) -> Self {
        PolySymbol {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: f64) -> Self {
        let mut s = PolySymbol::zero(d);
        s.add_term(vec![0; d], vec![0; d], Complex64::new(c, 0.0));
        s
    }

    pub fn monomial(i: MultiIndex, j: MultiIndex, c: Complex64) -> Self {
        let mut s = PolySymbol::zero(i.len());
        s.add_term(i, j, c);
        s
    }

    /// `λ |z|^{2p}` expanded by the multinomial theorem.
    pub fn radial(d: usize, p: u32, lambda: f64) -> Self {
        let mut s = PolySymbol::zero(d);
        let pf = factorial_f64(p);
        for alpha in compositions(d, p) {
            let denom: f64 = alpha.iter().map(|&a| factorial_f64(a)).product();
            s.add_term(alpha.clone(), alpha, Complex64::new(lambda * pf / denom, 0.0));
        }
        s
    }

    /// `Re z_l = (z_l + z̄_l)/2`.
    pub fn re_z(d: usize, l: usize) -> Self {
        let mut s = PolySymbol::zero(d);
        s.add_term(unit(d, l), vec![0; d], Complex64::new(0.5, 0.0));
        s.add_term(vec![0; d], unit(d, l), Complex64::new(0.5, 0.0));
        s
    }

    /// `⟨z|ξ⟩ = Σ z̄_l ξ_l`.
    pub fn bra_linear(xi: &[Complex64]) -> Self {
        let d = xi.len();
        let mut s = PolySymbol::zero(d);
        for (l, &x) in xi.iter().enumerate() {
            s.add_term(unit(d, l), vec![0; d], x);
        }
        s
    }

    /// `⟨ξ|z⟩ = Σ conj(ξ_l) z_l`.
    pub fn ket_linear(xi: &[Complex64]) -> Self {
        let d = xi.len();
        let mut s = PolySymbol::zero(d);
        for (l, &x) in xi.iter().enumerate() {
            s.add_term(vec![0; d], unit(d, l), x.conj());
        }
        s
    }

    pub fn add_term(&mut self, i: MultiIndex, j: MultiIndex, c: Complex64) {
        let key = (i, j);
        let entry = self.terms.entry(key.clone()).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.terms.remove(&key);
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, Complex64)> {
        self.terms.iter().map(|((i, j), c)| (i, j, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, i: &[u32], j: &[u32]) -> Complex64 {
        self.terms
            .get(&(i.to_vec(), j.to_vec()))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|(i, j)| i.iter().sum::<u32>() + j.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Every term has `i == j`, so the Wick quantization is diagonal.
    pub fn is_number_conserving(&self) -> bool {
        self.terms.keys().all(|(i, j)| i == j)
    }

    /// `c_{i,j} = conj(c_{j,i})` up to `tol` times the largest coefficient.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        self.terms.iter().all(|((i, j), c)| {
            let mirror = self.coefficient(j, i);
            (c - mirror.conj()).norm() <= tol * scale
        })
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((i, j), c) in &self.terms {
            let mut m = *c;
            for l in 0..self.d {
                if i[l] > 0 {
                    m *= z[l].conj().powu(i[l]);
                }
                if j[l] > 0 {
                    m *= z[l].powu(j[l]);
                }
            }
            acc += m;
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.d = self.d.max(other.d);
        for ((i, j), c) in &other.terms {
            out.add_term(i.clone(), j.clone(), *c);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = PolySymbol::zero(self.d);
        for ((i, j), v) in &self.terms {
            out.add_term(i.clone(), j.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = PolySymbol::zero(self.d.max(other.d));
        for ((i1, j1), c1) in &self.terms {
            for ((i2, j2), c2) in &other.terms {
                let i: MultiIndex = i1.iter().zip(i2).map(|(a, b)| a + b).collect();
                let j: MultiIndex = j1.iter().zip(j2).map(|(a, b)| a + b).collect();
                out.add_term(i, j, c1 * c2);
            }
        }
        out
    }

    /// Sum of `|c|` over terms of each total degree, used for growth bounds.
    fn abs_coefficients_by_degree(&self) -> BTreeMap<u32, f64> {
        let mut out = BTreeMap::new();
        for ((i, j), c) in &self.terms {
            let deg = i.iter().sum::<u32>() + j.iter().sum::<u32>();
            *out.entry(deg).or_insert(0.0) += c.norm();
        }
        out
    }
}

fn fmt_index(v: &[u32]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for PolySymbol {
    /// Canonical one-line form, terms in multi-index order:
    /// `(re+imi) zbar^[i] z^[j] + ...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|((i, j), c)| {
                format!("({}{:+}i) zbar^[{}] z^[{}]", c.re, c.im, fmt_index(i), fmt_index(j))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// The operator `h̃_p` of a homogeneous block `⟨z^⊗p | h̃_p z^⊗p⟩`.
#[derive(Clone, Debug, PartialEq)]
pub enum HTilde {
    /// `λ` times the identity, giving `λ |z|^{2p}`.
    Radial(f64),
    /// Hermitian matrix on `(C^d)^⊗p`, row/column index `Σ_k i_k d^{p-1-k}`.
    Matrix(DMatrix<Complex64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct H0Block {
    pub p: u32,
    pub op: HTilde,
}

impl H0Block {
    pub fn radial(p: u32, lambda: f64) -> Self {
        H0Block {
            p,
            op: HTilde::Radial(lambda),
        }
    }

    fn min_eigenvalue(&self) -> f64 {
        match &self.op {
            HTilde::Radial(l) => *l,
            HTilde::Matrix(m) => hermitian_eigen(m).0.first().copied().unwrap_or(0.0),
        }
    }

    fn to_poly(&self, d: usize) -> PolySymbol {
        match &self.op {
            HTilde::Radial(l) => PolySymbol::radial(d, self.p, *l),
            HTilde::Matrix(m) => {
                let p = self.p as usize;
                let n = d.pow(self.p);
                let counts = |mut idx: usize| {
                    let mut c = vec![0u32; d];
                    for _ in 0..p {
                        c[idx % d] += 1;
                        idx /= d;
                    }
                    c
                };
                let mut s = PolySymbol::zero(d);
                for r in 0..n {
                    for c in 0..n {
                        if m[(r, c)] != Complex64::new(0.0, 0.0) {
                            s.add_term(counts(r), counts(c), m[(r, c)]);
                        }
                    }
                }
                s
            }
        }
    }
}

/// Symbols `h = Σ_p ⟨z^⊗p|h̃_p z^⊗p⟩ + V` with `h̃_p ≥ 0`, `h̃_{p_max} > 0`
/// and `deg V < 2 p_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolClassS {
    d: usize,
    h0: Vec<H0Block>,
    v: PolySymbol,
    poly: PolySymbol,
}

impl SymbolClassS {
    pub fn new(d: usize, mut h0: Vec<H0Block>, v: PolySymbol) -> Result<Self> {
        if h0.is_empty() {
            return Err(Error::ClassS("h0 needs at least one block".into()));
        }
        h0.sort_by_key(|b| b.p);
        for w in h0.windows(2) {
            if w[0].p == w[1].p {
                return Err(Error::ClassS(format!("duplicate block p = {}", w[0].p)));
            }
        }
        for b in &h0 {
            if b.p == 0 {
                return Err(Error::ClassS("block degree p must be at least 1".into()));
            }
            if let HTilde::Matrix(m) = &b.op {
                let n = d.pow(b.p);
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::ClassS(format!(
                        "h~_{} must be {n}x{n}, got {}x{}",
                        b.p,
                        m.nrows(),
                        m.ncols()
                    )));
                }
                let defect = (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
                if defect > 1e-12 * m.iter().map(|c| c.norm()).fold(0.0, f64::max) {
                    return Err(Error::ClassS(format!("h~_{} is not hermitian", b.p)));
                }
            }
            if b.min_eigenvalue() < -1e-12 {
                return Err(Error::ClassS(format!("h~_{} is not positive semidefinite", b.p)));
            }
        }
        let top = h0.last().unwrap();
        if top.min_eigenvalue() <= 1e-12 {
            return Err(Error::ClassS(format!("h~_{} is not positive definite", top.p)));
        }
        let v = if v.is_empty() { PolySymbol::zero(d) } else { v };
        if v.d() != d {
            return Err(Error::ClassS(format!("V has {} modes, expected {d}", v.d())));
        }
        if v.degree() >= 2 * top.p && !v.is_empty() {
            return Err(Error::ClassS(format!(
                "deg V = {} is not below 2 p_max = {}",
                v.degree(),
                2 * top.p
            )));
        }
        if !v.is_hermitian(1e-12) {
            return Err(Error::ClassS("V is not real-valued".into()));
        }
        let mut poly = v.clone();
        for b in &h0 {
            poly = poly.add(&b.to_poly(d));
        }
        Ok(SymbolClassS { d, h0, v, poly })
    }

    /// `λ |z|^2` in `d` modes.
    pub fn harmonic(d: usize, lambda: f64) -> Self {
        SymbolClassS::new(d, vec![H0Block::radial(1, lambda)], PolySymbol::zero(d))
            .expect("radial harmonic symbol is in class S")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h0(&self) -> &[H0Block] {
        &self.h0
    }

    pub fn v(&self) -> &PolySymbol {
        &self.v
    }

    pub fn p_max(&self) -> u32 {
        self.h0.last().unwrap().p
    }

    /// The full symbol as a polynomial.
    pub fn poly(&self) -> &PolySymbol {
        &self.poly
    }

    pub fn eval(&self, z: &[Complex64]) -> f64 {
        self.poly.eval(z).re
    }

    /// `λ` when the top block is radial quadratic (`p_max = 1`).
    pub fn radial_quadratic(&self) -> Option<f64> {
        match (self.h0.last(), self.h0.len()) {
            (Some(H0Block { p: 1, op: HTilde::Radial(l) }), 1) => Some(*l),
            _ => None,
        }
    }
}

/// Exact complex rational.
pub type ExactCoeff = Complex<BigRational>;

/// `b^up_ε = base + Σ_k ε^k corrections[k]`, with exact coefficients kept
/// alongside the floating-point view.
#[derive(Clone, Debug)]
pub struct SymbolExpansion {
    pub base: PolySymbol,
    pub corrections: BTreeMap<u32, PolySymbol>,
    exact: BTreeMap<(u32, Monomial), ExactCoeff>,
}

impl SymbolExpansion {
    pub fn d(&self) -> usize {
        self.base.d()
    }

    /// Exact coefficient of `ε^k z̄^i z^j`.
    pub fn exact_coefficient(&self, k: u32, i: &[u32], j: &[u32]) -> ExactCoeff {
        self.exact
            .get(&(k, (i.to_vec(), j.to_vec())))
            .cloned()
            .unwrap_or_else(|| Complex::new(BigRational::zero(), BigRational::zero()))
    }

    /// `(k, i, j, coefficient)` for every exact term, in canonical order.
    pub fn exact_terms(&self) -> impl Iterator<Item = (u32, &MultiIndex, &MultiIndex, &ExactCoeff)> {
        self.exact.iter().map(|((k, (i, j)), c)| (*k, i, j, c))
    }

    /// The polynomial `b^up_ε` at a fixed `ε`.
    pub fn at_eps(&self, eps: f64) -> PolySymbol {
        let mut out = self.base.clone();
        for (k, p) in &self.corrections {
            out = out.add(&p.scale(Complex64::new(eps.powi(*k as i32), 0.0)));
        }
        out
    }

    pub fn eval(&self, z: &[Complex64], eps: f64) -> Complex64 {
        let mut acc = self.base.eval(z);
        for (k, p) in &self.corrections {
            acc += p.eval(z) * eps.powi(*k as i32);
        }
        acc
    }

    /// `P(z) = Σ_k |correction_k(z)|` so that `|b^up_ε - b| ≤ ε P(z)` for ε ≤ 1.
    pub fn pointwise_bound(&self, z: &[Complex64]) -> f64 {
        self.corrections.values().map(|p| p.eval(z).norm()).sum()
    }
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coefficient")
}

fn falling(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for t in 0..k {
        acc *= BigInt::from(n - t);
    }
    acc
}

fn factorial_big(n: u32) -> BigInt {
    falling(n, n)
}

/// Exact upper symbol of the unit monomial `z̄^i z^j` as a map
/// `(k, monomial) -> coefficient of ε^k`, by reordering anti-normal into
/// normal order:
/// `up(z̄^i z^j) = z̄^i z^j − Σ_{α≠0} ε^{|α|}/α! · (i)_α (j)_α · up(z̄^{i−α} z^{j−α})`.
fn upper_monomial(
    i: &[u32],
    j: &[u32],
    memo: &mut HashMap<Monomial, BTreeMap<(u32, Monomial), BigRational>>,
) -> BTreeMap<(u32, Monomial), BigRational> {
    let key = (i.to_vec(), j.to_vec());
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let mut out: BTreeMap<(u32, Monomial), BigRational> = BTreeMap::new();
    out.insert((0, key.clone()), BigRational::one());
    let bound: Vec<u32> = i.iter().zip(j).map(|(a, b)| *a.min(b)).collect();
    for alpha in indices_below(&bound) {
        let k: u32 = alpha.iter().sum();
        if k == 0 {
            continue;
        }
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for l in 0..i.len() {
            num *= falling(i[l], alpha[l]) * falling(j[l], alpha[l]);
            den *= factorial_big(alpha[l]);
        }
        let coef = BigRational::new(num, den);
        let ri: Vec<u32> = i.iter().zip(&alpha).map(|(a, b)| a - b).collect();
        let rj: Vec<u32> = j.iter().zip(&alpha).map(|(a, b)| a - b).collect();
        let sub = upper_monomial(&ri, &rj, memo);
        for ((k2, mono), c) in sub {
            let slot = out.entry((k + k2, mono)).or_insert_with(BigRational::zero);
            *slot -= &coef * c;
        }
    }
    out.retain(|_, c| !c.is_zero());
    memo.insert(key, out.clone());
    out
}

/// Exact expansion `b^up_ε = b + Σ_k ε^k b_k` of the upper symbol of a
/// polynomial symbol, so that `anti_wick(b^up_ε) = wick(b)`.
pub fn upper_symbol(sym: &PolySymbol) -> SymbolExpansion {
    let d = sym.d();
    let mut memo = HashMap::new();
    let mut exact: BTreeMap<(u32, Monomial), ExactCoeff> = BTreeMap::new();
    for ((i, j), c) in &sym.terms {
        let cq = Complex::new(rational(c.re), rational(c.im));
        for ((k, mono), r) in upper_monomial(i, j, &mut memo) {
            let slot = exact
                .entry((k, mono))
                .or_insert_with(|| Complex::new(BigRational::zero(), BigRational::zero()));
            *slot = slot.clone() + Complex::new(&cq.re * &r, &cq.im * &r);
        }
    }
    exact.retain(|_, c| !(c.re.is_zero() && c.im.is_zero()));
    let mut base = PolySymbol::zero(d);
    let mut corrections: BTreeMap<u32, PolySymbol> = BTreeMap::new();
    for ((k, (i, j)), c) in &exact {
        let v = Complex64::new(c.re.to_f64().unwrap_or(0.0), c.im.to_f64().unwrap_or(0.0));
        if *k == 0 {
            base.add_term(i.clone(), j.clone(), v);
        } else {
            corrections
                .entry(*k)
                .or_insert_with(|| PolySymbol::zero(d))
                .add_term(i.clone(), j.clone(), v);
        }
    }
    SymbolExpansion {
        base,
        corrections,
        exact,
    }
}

/// Normal-ordered quantization `Σ c_{i,j} (a*)^i a^j` on the truncated space.
/// Number-conserving symbols give diagonal storage.
pub fn wick_quantize(sym: &PolySymbol, spec: &FockSpec) -> Result<OperatorMatrix> {
    if !sym.is_empty() && sym.d() != spec.d {
        return Err(Error::Argument(format!(
            "symbol has {} modes, Fock space has {}",
            sym.d(),
            spec.d
        )));
    }
    let dim = spec.dim();
    let lf = ln_factorials(spec.n_max);
    let ln_eps = spec.eps.ln();
    let n_max = spec.n_max as i64;
    // ⟨m|(a*)^i a^j|n⟩ for m = n − j + i
    let element = |i: &[u32], j: &[u32], col: usize| -> Option<(usize, f64)> {
        let mut ln_amp = 0.0;
        let mut occ_m = Vec::with_capacity(spec.d);
        for l in 0..spec.d {
            let n = spec.occupation(col, l) as i64;
            let r = n - j[l] as i64;
            if r < 0 {
                return None;
            }
            let m = r + i[l] as i64;
            if m > n_max {
                return None;
            }
            ln_amp += 0.5
                * ((i[l] + j[l]) as f64 * ln_eps + lf[n as usize] + lf[m as usize]
                    - 2.0 * lf[r as usize]);
            occ_m.push(m as usize);
        }
        Some((spec.index_of(&occ_m), ln_amp.exp()))
    };
    if sym.is_number_conserving() {
        let mut diag = vec![Complex64::new(0.0, 0.0); dim];
        for ((i, j), c) in &sym.terms {
            for (col, slot) in diag.iter_mut().enumerate() {
                if let Some((_, amp)) = element(i, j, col) {
                    *slot += c * amp;
                }
            }
        }
        return Ok(OperatorMatrix::from_diagonal(diag));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for ((i, j), c) in &sym.terms {
        for col in 0..dim {
            if let Some((row, amp)) = element(i, j, col) {
                m[(row, col)] += c * amp;
            }
        }
    }
    if sym.is_hermitian(1e-12) {
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        OperatorMatrix::from_dense(h, true)
    } else {
        OperatorMatrix::from_dense(m, false)
    }
}

const ANTI_WICK_CHUNK: usize = 256;

/// `∫ f(z) |z_ε⟩⟨z_ε| dz/(πε)^d` by quadrature on `grid`.
pub fn anti_wick_quantize<F>(f: F, spec: &FockSpec, grid: &QuadratureGrid) -> Result<OperatorMatrix>
where
    F: Fn(&[Complex64]) -> f64 + Sync + Send,
{
    let values = grid.sample(&f);
    anti_wick_from_samples(&values, spec, grid)
}

/// Anti-Wick quantization of a function already sampled at the grid nodes.
pub fn anti_wick_from_samples(
    values: &[f64],
    spec: &FockSpec,
    grid: &QuadratureGrid,
) -> Result<OperatorMatrix> {
    if grid.d() != spec.d {
        return Err(Error::Argument("grid and Fock space dimensions differ".into()));
    }
    let dim = spec.dim();
    let lf = ln_factorials(spec.n_max);
    let norm = (std::f64::consts::PI * spec.eps).powi(spec.d as i32);
    let n_nodes = grid.len();
    let chunks: Vec<usize> = (0..n_nodes).step_by(ANTI_WICK_CHUNK).collect();
    let partials: Vec<DMatrix<Complex64>> = chunks
        .par_iter()
        .map(|&start| {
            let end = (start + ANTI_WICK_CHUNK).min(n_nodes);
            let width = end - start;
            let mut v = DMatrix::<Complex64>::zeros(dim, width);
            let mut vw = DMatrix::<Complex64>::zeros(dim, width);
            for (c, k) in (start..end).enumerate() {
                let coh = coherent_vector_with(spec, grid.node(k), &lf);
                let w = grid.weights()[k] * values[k] / norm;
                v.set_column(c, &coh.entries);
                vw.set_column(c, &(coh.entries * Complex64::new(w, 0.0)));
            }
            vw * v.adjoint()
        })
        .collect();
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    for p in partials {
        acc += p;
    }
    let h = (&acc + acc.adjoint()) * Complex64::new(0.5, 0.0);
    OperatorMatrix::from_dense(h, true)
}

/// Anti-Wick quantization refined until successive grids agree to `tol` in
/// max-norm. Returns the operator, the final grid and the change history.
pub fn anti_wick_quantize_certified<F>(
    f: F,
    spec: &FockSpec,
    grid: &QuadratureGrid,
    tol: f64,
    max_levels: usize,
) -> Result<(OperatorMatrix, QuadratureGrid, Vec<f64>)>
where
    F: Fn(&[Complex64]) -> f64 + Sync + Send,
{
    let mut current = grid.clone();
    let mut prev = anti_wick_quantize(&f, spec, &current)?;
    let mut history = Vec::new();
    for _ in 0..max_levels {
        let next = current.refine()?;
        let op = anti_wick_quantize(&f, spec, &next)?;
        let change = op.max_abs_diff(&prev);
        history.push(change);
        if change <= tol {
            return Ok((op, next, history));
        }
        prev = op;
        current = next;
    }
    Err(Error::ConvergenceFailure {
        levels: history.len(),
        detail: format!("anti-Wick operator changes {history:?} above {tol:e}"),
    })
}

/// Coherent deficit above which lower symbols are refused.
pub const LOWER_SYMBOL_DEFICIT_TOL: f64 = 1e-10;

/// Cutoff at which the coherent deficit at `|z|^2 = r2` is negligible.
pub fn suggest_n_max(r2: f64, eps: f64) -> usize {
    let x = r2 / eps;
    (x + 12.0 * x.sqrt() + 40.0).ceil() as usize
}

/// `⟨z_ε|A|z_ε⟩`.
pub fn lower_symbol(a: &OperatorMatrix, spec: &FockSpec, z: &[Complex64]) -> Result<Complex64> {
    if z.len() != spec.d {
        return Err(Error::Argument("point dimension mismatch".into()));
    }
    let lf = ln_factorials(spec.n_max);
    let coh = coherent_vector_with(spec, z, &lf);
    if coh.deficit > LOWER_SYMBOL_DEFICIT_TOL {
        let r2 = z.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
        return Err(Error::Truncation {
            detail: format!("coherent deficit {:.3e} at the evaluation point", coh.deficit),
            suggested_n_max: suggest_n_max(r2, spec.eps),
        });
    }
    let v: &DVector<Complex64> = &coh.entries;
    Ok(v.dotc(&a.apply(v)))
}

/// Constants with `h(z) ≥ C |z|^{2 p_max} − C̃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthBound {
    pub c: f64,
    pub c_tilde: f64,
    pub p_max: u32,
    /// Beyond this radius the bound holds by leading-term domination.
    pub radius_star: f64,
}

impl GrowthBound {
    /// Radius with `e^{−β C R^{2p} + β C̃} < 1e-16`.
    pub fn radius(&self, beta: f64) -> f64 {
        let target = beta * self.c_tilde + 16.0 * std::f64::consts::LN_10;
        (target / (beta * self.c)).powf(1.0 / (2.0 * self.p_max as f64))
    }
}

/// Certified growth constants. Without `V` the bound is exact with
/// `C = λ_min(h̃_{p_max})`, `C̃ = 0`. Otherwise `C = λ_min/2` and `C̃` is the
/// maximum of `C|z|^{2p} − h` over the grid nodes and an internal mesh of the
/// ball outside of which the leading term dominates.
pub fn symbol_growth_bound(h: &SymbolClassS, grid: &QuadratureGrid) -> Result<GrowthBound> {
    let p = h.p_max();
    if !h.v().is_empty() && h.v().degree() >= 2 * p {
        return Err(Error::ClassS("deg V is not below 2 p_max".into()));
    }
    let lam = h.h0().last().unwrap().min_eigenvalue();
    if h.v().is_empty() {
        return Ok(GrowthBound {
            c: lam,
            c_tilde: 0.0,
            p_max: p,
            radius_star: 0.0,
        });
    }
    let c = lam / 2.0;
    // |V(z)| ≤ Σ_deg a_deg r^deg ≤ (Σ a_deg) r^{deg V} for r ≥ 1
    let a_sum: f64 = h.v().abs_coefficients_by_degree().values().sum();
    let gap = (2 * p - h.v().degree()) as f64;
    let radius_star = (a_sum / c).powf(1.0 / gap).max(1.0);
    let deficit = |z: &[Complex64]| {
        let r2: f64 = z.iter().map(|x| x.norm_sqr()).sum();
        c * r2.powi(p as i32) - h.eval(z)
    };
    let mut worst = 0.0f64;
    for z in grid.nodes() {
        let r2: f64 = z.iter().map(|x| x.norm_sqr()).sum();
        if r2.sqrt() <= radius_star {
            worst = worst.max(deficit(z));
        }
    }
    let per_axis = match h.d() {
        1 => 161,
        2 => 21,
        _ => 7,
    };
    let mesh = QuadratureGrid::new(
        h.d(),
        Scheme::UniformTensor {
            radius: radius_star,
            spacing: 2.0 * radius_star / per_axis as f64,
        },
    )?;
    for z in mesh.nodes() {
        worst = worst.max(deficit(z));
    }
    Ok(GrowthBound {
        c,
        c_tilde: worst,
        p_max: p,
        radius_star,
    })
}

/// Default phase-space grid for integrals against `e^{−β h}`: Gauss-Hermite
/// matched to the Gaussian decay when `h` is radial quadratic, otherwise a
/// uniform grid on the radius from [`symbol_growth_bound`].
pub fn default_grid(h: &SymbolClassS, beta: f64) -> Result<QuadratureGrid> {
    if let Some(lambda) = h.radial_quadratic() {
        if h.v().is_empty() {
            return QuadratureGrid::gauss_hermite(h.d(), 8, beta * lambda);
        }
    }
    let probe = QuadratureGrid::uniform(h.d(), 1.0, 0.5)?;
    let bound = symbol_growth_bound(h, &probe)?;
    let r = bound.radius(beta);
    let cells = match h.d() {
        1 => 64.0,
        2 => 16.0,
        _ => 8.0,
    };
    QuadratureGrid::uniform(h.d(), r, 2.0 * r / cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{annihilator, creator, number_operator};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn number_operator_is_wick_of_modulus_squared() {
        let spec = FockSpec::new(2, 3, 0.5).unwrap();
        let w = wick_quantize(&PolySymbol::radial(2, 1, 1.0), &spec).unwrap();
        assert!(w.max_abs_diff(&number_operator(&spec)) < 1e-15);
    }

    #[test]
    fn wick_of_bra_linear_is_creator() {
        let spec = FockSpec::new(1, 5, 0.3).unwrap();
        let w = wick_quantize(&PolySymbol::bra_linear(&[c(1.0)]), &spec).unwrap();
        assert!(w.max_abs_diff(&creator(&spec, 0).unwrap()) < 1e-15);
    }

    #[test]
    fn quartic_wick_diagonal() {
        let spec = FockSpec::new(1, 6, 0.5).unwrap();
        let w = wick_quantize(&PolySymbol::radial(1, 2, 1.0), &spec).unwrap();
        for (n, v) in w.diagonal().unwrap().iter().enumerate() {
            let n = n as f64;
            assert!((v.re - 0.25 * n * (n - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn wick_matches_matrix_products() {
        let spec = FockSpec::new(1, 6, 0.7).unwrap();
        let a = annihilator(&spec, 0).unwrap();
        let ad = creator(&spec, 0).unwrap();
        // z̄^2 z: (a*)^2 a
        let sym = PolySymbol::monomial(vec![2], vec![1], c(1.0));
        let w = wick_quantize(&sym, &spec).unwrap();
        let expect = ad.mul(&ad).mul(&a);
        assert!(w.max_abs_diff(&expect) < 1e-13);
    }

    #[test]
    fn upper_symbol_of_modulus_squared() {
        let up = upper_symbol(&PolySymbol::radial(1, 1, 1.0));
        assert_eq!(up.base, PolySymbol::radial(1, 1, 1.0));
        assert_eq!(up.corrections.len(), 1);
        assert_eq!(up.corrections[&1], PolySymbol::constant(1, -1.0));
        let exact = up.exact_coefficient(1, &[0], &[0]);
        assert_eq!(exact.re, -BigRational::one());
    }

    #[test]
    fn upper_symbol_of_quartic() {
        let up = upper_symbol(&PolySymbol::radial(1, 2, 1.0));
        assert_eq!(up.corrections[&1], PolySymbol::radial(1, 1, -4.0));
        assert_eq!(up.corrections[&2], PolySymbol::constant(1, 2.0));
    }

    #[test]
    fn linear_symbols_have_no_corrections() {
        assert!(upper_symbol(&PolySymbol::re_z(2, 1)).corrections.is_empty());
    }

    #[test]
    fn literal_round_trip() {
        let sym = PolySymbol::radial(2, 2, 0.5).add(&PolySymbol::re_z(2, 0));
        let text = serde_json::to_string(&sym).unwrap();
        let back: PolySymbol = serde_json::from_str(&text).unwrap();
        assert_eq!(sym, back);
        assert!(sym.to_string().contains("zbar^[2,0] z^[2,0]"));
    }

    #[test]
    fn growth_bounds() {
        let grid = QuadratureGrid::uniform(1, 3.0, 0.1).unwrap();
        let b = symbol_growth_bound(&SymbolClassS::harmonic(1, 1.0), &grid).unwrap();
        assert_eq!((b.c, b.c_tilde), (1.0, 0.0));
        let h = SymbolClassS::new(
            1,
            vec![H0Block::radial(2, 1.0)],
            PolySymbol::radial(1, 1, -1.0),
        )
        .unwrap();
        let b = symbol_growth_bound(&h, &grid).unwrap();
        assert_eq!(b.c, 0.5);
        assert!(b.c_tilde <= 0.5 && b.c_tilde > 0.49);
        let bad = SymbolClassS::new(1, vec![H0Block::radial(1, 1.0)], PolySymbol::radial(1, 1, 0.5));
        assert!(matches!(bad, Err(Error::ClassS(_))));
    }

    #[test]
    fn anti_wick_of_upper_symbol_is_wick() {
        let spec = FockSpec::new(1, 8, 1.0).unwrap();
        let grid = QuadratureGrid::gauss_hermite(1, 16, 1.0 / spec.eps).unwrap();
        let sym = PolySymbol::radial(1, 2, 1.0);
        let up = upper_symbol(&sym).at_eps(spec.eps);
        let aw = anti_wick_quantize(|z| up.eval(z).re, &spec, &grid).unwrap();
        let w = wick_quantize(&sym, &spec).unwrap();
        assert!(aw.max_abs_diff(&w) < 1e-10, "{}", aw.max_abs_diff(&w));
    }
}
