//! Truncated multi-mode bosonic Fock space with the ε-scaled CCR.
//!
//! Basis states are multi-indices `(n_0, .., n_{d-1})` with `0 <= n_j <= n_max`,
//! enumerated lexicographically with mode 0 varying slowest.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{hermitian_eigen, ln_factorials};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Hard cap on the basis dimension, to fail early instead of exhausting memory.
pub const MAX_DIM: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockSpec {
    pub d: usize,
    pub n_max: usize,
    pub eps: f64,
}

impl FockSpec {
    pub fn new(d: usize, n_max: usize, eps: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Argument("number of modes must be positive".into()));
        }
        if n_max == 0 {
            return Err(Error::Argument("n_max must be at least 1".into()));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Argument(format!("eps must be positive, got {eps}")));
        }
        let dim = (n_max + 1)
            .checked_pow(d as u32)
            .filter(|&n| n <= MAX_DIM)
            .ok_or_else(|| {
                Error::Resource(format!("Fock dimension ({}+1)^{} too large", n_max, d))
            })?;
        let _ = dim;
        Ok(FockSpec { d, n_max, eps })
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1).pow(self.d as u32)
    }

    /// Same `d` and `eps`, different cutoff.
    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        FockSpec::new(self.d, n_max, self.eps)
    }

    fn stride(&self, mode: usize) -> usize {
        (self.n_max + 1).pow((self.d - 1 - mode) as u32)
    }

    /// Occupation of `mode` in basis state `index`.
    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % (self.n_max + 1)
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        (0..self.d).map(|j| self.occupation(index, j)).collect()
    }

    pub fn total_occupation(&self, index: usize) -> usize {
        (0..self.d).map(|j| self.occupation(index, j)).sum()
    }

    pub fn index_of(&self, occ: &[usize]) -> usize {
        occ.iter().fold(0, |acc, &n| acc * (self.n_max + 1) + n)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.d {
            return Err(Error::Argument(format!(
                "mode {mode} out of range for d = {}",
                self.d
            )));
        }
        Ok(())
    }

    fn check_point(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.d {
            return Err(Error::Argument(format!(
                "phase-space point has {} components, expected {}",
                z.len(),
                self.d
            )));
        }
        Ok(())
    }
}

/// Storage of an operator on the truncated space. Diagonal operators
/// (number-conserving Hamiltonians, Gibbs weights) are kept as vectors so
/// that cutoffs in the thousands stay cheap.
#[derive(Clone, Debug)]
pub enum Storage {
    Diagonal(Vec<Complex64>),
    Dense(DMatrix<Complex64>),
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    storage: Storage,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Dense operator. With `hermitian = true` the hermiticity defect is
    /// checked against `1e-12 * max|A|`.
    pub fn from_dense(m: DMatrix<Complex64>, hermitian: bool) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Argument("operator matrix must be square".into()));
        }
        let op = OperatorMatrix {
            storage: Storage::Dense(m),
            hermitian,
        };
        if hermitian {
            let defect = op.hermiticity_defect();
            let scale = op.max_abs();
            if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Argument(format!(
                    "matrix flagged hermitian has defect {defect:e} (max entry {scale:e})"
                )));
            }
        }
        Ok(op)
    }

    pub fn from_diagonal(diag: Vec<Complex64>) -> Self {
        let hermitian = diag.iter().all(|c| c.im == 0.0);
        OperatorMatrix {
            storage: Storage::Diagonal(diag),
            hermitian,
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        OperatorMatrix {
            storage: Storage::Diagonal(diag.iter().map(|&x| Complex64::new(x, 0.0)).collect()),
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        OperatorMatrix::from_diagonal(vec![ONE; dim])
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Diagonal(v) => v.len(),
            Storage::Dense(m) => m.nrows(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn diagonal(&self) -> Option<&[Complex64]> {
        match &self.storage {
            Storage::Diagonal(v) => Some(v),
            Storage::Dense(_) => None,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        match &self.storage {
            Storage::Diagonal(v) => {
                if row == col {
                    v[row]
                } else {
                    ZERO
                }
            }
            Storage::Dense(m) => m[(row, col)],
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match &self.storage {
            Storage::Diagonal(v) => DMatrix::from_diagonal(&DVector::from_column_slice(v)),
            Storage::Dense(m) => m.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(v) => v.iter().map(|c| c.norm()).fold(0.0, f64::max),
            Storage::Dense(m) => m.iter().map(|c| c.norm()).fold(0.0, f64::max),
        }
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(v) => v.iter().map(|c| c.im.abs() * 2.0).fold(0.0, f64::max),
            Storage::Dense(m) => {
                let n = m.nrows();
                let mut worst = 0.0f64;
                for i in 0..n {
                    for j in i..n {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        match &self.storage {
            Storage::Diagonal(v) => v.iter().sum(),
            Storage::Dense(m) => m.trace(),
        }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        match &self.storage {
            Storage::Diagonal(d) => DVector::from_iterator(
                d.len(),
                d.iter().zip(v.iter()).map(|(a, b)| a * b),
            ),
            Storage::Dense(m) => m * v,
        }
    }

    pub fn adjoint(&self) -> Self {
        match &self.storage {
            Storage::Diagonal(v) => OperatorMatrix {
                storage: Storage::Diagonal(v.iter().map(|c| c.conj()).collect()),
                hermitian: self.hermitian,
            },
            Storage::Dense(m) => OperatorMatrix {
                storage: Storage::Dense(m.adjoint()),
                hermitian: self.hermitian,
            },
        }
    }

    /// Operator product; the result is not flagged hermitian.
    pub fn mul(&self, other: &Self) -> Self {
        let storage = match (&self.storage, &other.storage) {
            (Storage::Diagonal(a), Storage::Diagonal(b)) => {
                Storage::Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            _ => Storage::Dense(self.to_dense() * other.to_dense()),
        };
        OperatorMatrix {
            storage,
            hermitian: false,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let storage = match (&self.storage, &other.storage) {
            (Storage::Diagonal(a), Storage::Diagonal(b)) => {
                Storage::Diagonal(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            _ => Storage::Dense(self.to_dense() + other.to_dense()),
        };
        OperatorMatrix {
            storage,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let storage = match &self.storage {
            Storage::Diagonal(a) => Storage::Diagonal(a.iter().map(|x| x * c).collect()),
            Storage::Dense(m) => Storage::Dense(m * c),
        };
        OperatorMatrix {
            storage,
            hermitian: self.hermitian && c.im == 0.0,
        }
    }

    /// Max-norm distance between two operators of the same dimension.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        match (&self.storage, &other.storage) {
            (Storage::Diagonal(a), Storage::Diagonal(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max),
            _ => (self.to_dense() - other.to_dense())
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max),
        }
    }

    /// Ascending eigenvalues and eigenvectors (columns) of a hermitian operator.
    /// Diagonal storage returns the diagonal unsorted with the identity basis,
    /// so callers must not assume ordering.
    pub fn hermitian_spectrum(&self) -> (Vec<f64>, Option<DMatrix<Complex64>>) {
        match &self.storage {
            Storage::Diagonal(v) => (v.iter().map(|c| c.re).collect(), None),
            Storage::Dense(m) => {
                let (vals, vecs) = hermitian_eigen(m);
                (vals, Some(vecs))
            }
        }
    }

    pub fn to_dump(&self) -> MatrixDump {
        let n = self.dim();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let c = self.get(i, j);
                entries.push([c.re, c.im]);
            }
        }
        MatrixDump { dim: n, entries }
    }

    pub fn from_dump(dump: &MatrixDump) -> Result<Self> {
        if dump.entries.len() != dump.dim * dump.dim {
            return Err(Error::Argument("dump entry count does not match dim".into()));
        }
        let m = DMatrix::from_fn(dump.dim, dump.dim, |i, j| {
            let [re, im] = dump.entries[i * dump.dim + j];
            Complex64::new(re, im)
        });
        OperatorMatrix::from_dense(m, false)
    }
}

/// Row-major JSON dump of an operator: `{"dim": n, "entries": [[re, im], ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

/// JSON dump of a vector: `{"dim": n, "entries": [[re, im], ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorDump {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

#[derive(Clone, Debug)]
pub struct StateVector {
    pub entries: DVector<Complex64>,
    /// `1 - ||v||^2` for coherent constructors, 0 otherwise.
    pub deficit: f64,
}

impl StateVector {
    pub fn new(entries: DVector<Complex64>) -> Self {
        StateVector {
            entries,
            deficit: 0.0,
        }
    }

    pub fn vacuum(spec: &FockSpec) -> Self {
        let mut v = DVector::zeros(spec.dim());
        v[0] = ONE;
        StateVector::new(v)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }

    /// Warning text when the truncation deficit exceeds `tol`.
    pub fn truncation_warning(&self, tol: f64) -> Option<String> {
        (self.deficit > tol).then(|| {
            format!(
                "coherent truncation deficit {:.3e} exceeds tolerance {:.1e}",
                self.deficit, tol
            )
        })
    }

    pub fn to_dump(&self) -> VectorDump {
        VectorDump {
            dim: self.dim(),
            entries: self.entries.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Lower,
    Raise,
}

/// Applies `a_mode` or `a*_mode` to a vector without forming the matrix.
/// The raising operator drops components pushed past `n_max`.
pub fn ladder_apply(
    spec: &FockSpec,
    mode: usize,
    ladder: Ladder,
    v: &DVector<Complex64>,
) -> DVector<Complex64> {
    let stride = spec.stride(mode);
    let mut out = DVector::zeros(v.len());
    for idx in 0..v.len() {
        let n = spec.occupation(idx, mode);
        match ladder {
            Ladder::Lower => {
                if n > 0 {
                    out[idx - stride] += v[idx] * (spec.eps * n as f64).sqrt();
                }
            }
            Ladder::Raise => {
                if n < spec.n_max {
                    out[idx + stride] += v[idx] * (spec.eps * (n + 1) as f64).sqrt();
                }
            }
        }
    }
    out
}

fn ladder_matrix(spec: &FockSpec, mode: usize, ladder: Ladder) -> DMatrix<Complex64> {
    let dim = spec.dim();
    let stride = spec.stride(mode);
    let mut m = DMatrix::zeros(dim, dim);
    for idx in 0..dim {
        let n = spec.occupation(idx, mode);
        match ladder {
            Ladder::Lower if n > 0 => {
                m[(idx - stride, idx)] = Complex64::new((spec.eps * n as f64).sqrt(), 0.0);
            }
            Ladder::Raise if n < spec.n_max => {
                m[(idx + stride, idx)] = Complex64::new((spec.eps * (n + 1) as f64).sqrt(), 0.0);
            }
            _ => {}
        }
    }
    m
}

/// `a_ε` on `mode` (0-based): `a|n> = sqrt(ε n)|n-1>`.
pub fn annihilator(spec: &FockSpec, mode: usize) -> Result<OperatorMatrix> {
    spec.check_mode(mode)?;
    OperatorMatrix::from_dense(ladder_matrix(spec, mode, Ladder::Lower), false)
}

/// `a*_ε` on `mode`, the conjugate transpose of [`annihilator`].
pub fn creator(spec: &FockSpec, mode: usize) -> Result<OperatorMatrix> {
    spec.check_mode(mode)?;
    OperatorMatrix::from_dense(ladder_matrix(spec, mode, Ladder::Raise), false)
}

/// `N_ε`, diagonal with `ε (n_0 + .. + n_{d-1})`.
pub fn number_operator(spec: &FockSpec) -> OperatorMatrix {
    let diag: Vec<f64> = (0..spec.dim())
        .map(|idx| spec.eps * spec.total_occupation(idx) as f64)
        .collect();
    OperatorMatrix::from_real_diagonal(&diag)
}

/// Amplitudes `e^{-|z|^2/2ε} z^n / sqrt(ε^n n!)` for `n = 0..=n_max`.
pub fn coherent_amplitudes(z: Complex64, eps: f64, ln_fact: &[f64]) -> Vec<Complex64> {
    let n_max = ln_fact.len() - 1;
    let r2 = z.norm_sqr();
    let mut out = vec![ZERO; n_max + 1];
    if r2 == 0.0 {
        out[0] = ONE;
        return out;
    }
    let ln_r = 0.5 * r2.ln();
    let ln_eps = eps.ln();
    let phase = z.arg();
    for (n, slot) in out.iter_mut().enumerate() {
        let nf = n as f64;
        let ln_mod = -r2 / (2.0 * eps) + nf * ln_r - 0.5 * nf * ln_eps - 0.5 * ln_fact[n];
        if ln_mod > -745.0 {
            *slot = Complex64::from_polar(ln_mod.exp(), nf * phase);
        }
    }
    out
}

/// Tensor product of per-mode vectors (mode 0 slowest).
pub fn tensor_product(factors: &[Vec<Complex64>]) -> DVector<Complex64> {
    let mut acc = vec![ONE];
    for f in factors {
        let mut next = Vec::with_capacity(acc.len() * f.len());
        for a in &acc {
            for b in f {
                next.push(a * b);
            }
        }
        acc = next;
    }
    DVector::from_vec(acc)
}

/// Truncated coherent state `|z_ε>`, with the truncation deficit `1 - ||v||^2`.
pub fn coherent_vector(spec: &FockSpec, z: &[Complex64]) -> Result<StateVector> {
    spec.check_point(z)?;
    let lf = ln_factorials(spec.n_max);
    Ok(coherent_vector_with(spec, z, &lf))
}

/// [`coherent_vector`] with a precomputed `ln n!` table of length `n_max + 1`.
pub fn coherent_vector_with(spec: &FockSpec, z: &[Complex64], ln_fact: &[f64]) -> StateVector {
    let factors: Vec<Vec<Complex64>> = z
        .iter()
        .map(|&zj| coherent_amplitudes(zj, spec.eps, ln_fact))
        .collect();
    let entries = tensor_product(&factors);
    let deficit = (1.0 - entries.norm_squared()).max(0.0);
    StateVector { entries, deficit }
}

/// Untruncated coherent overlap `<z_ε|w_ε> = exp(-(|z|^2+|w|^2)/2ε + <z|w>/ε)`.
pub fn coherent_overlap(z: &[Complex64], w: &[Complex64], eps: f64) -> Complex64 {
    let mut expo = ZERO;
    for (a, b) in z.iter().zip(w) {
        expo += (-(a.norm_sqr() + b.norm_sqr()) / 2.0 + a.conj() * b) / eps;
    }
    expo.exp()
}

/// Upper bound on the truncation deficit of `|z_ε>` without building it:
/// one minus the product of per-mode Poisson masses up to `n_max`.
pub fn coherent_deficit(spec: &FockSpec, z: &[Complex64], ln_fact: &[f64]) -> f64 {
    let mut kept = 1.0;
    for zj in z {
        let x = zj.norm_sqr() / spec.eps;
        let w = crate::numeric::poisson_weights(x, ln_fact);
        kept *= w.iter().sum::<f64>().min(1.0);
    }
    (1.0 - kept).max(0.0)
}

/// Hermitian generator `(a(ζ) + a*(ζ))/sqrt 2` with `a(ζ) = Σ conj(ζ_j) a_j`.
fn weyl_generator(spec: &FockSpec, zeta: &[Complex64]) -> DMatrix<Complex64> {
    let dim = spec.dim();
    let mut g = DMatrix::zeros(dim, dim);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for (j, &zj) in zeta.iter().enumerate() {
        let stride = spec.stride(j);
        for idx in 0..dim {
            let n = spec.occupation(idx, j);
            if n < spec.n_max {
                let amp = (spec.eps * (n + 1) as f64).sqrt() * s;
                // a*_j raises idx -> idx+stride with weight ζ_j; a_j is its adjoint
                g[(idx + stride, idx)] += zj * amp;
                g[(idx, idx + stride)] += zj.conj() * amp;
            }
        }
    }
    g
}

/// `W_ε(ζ) = exp(i (a_ε(ζ) + a*_ε(ζ))/sqrt 2)` on the truncated space, via
/// eigendecomposition of the hermitian generator.
pub fn weyl_operator(spec: &FockSpec, zeta: &[Complex64]) -> Result<OperatorMatrix> {
    spec.check_point(zeta)?;
    if zeta.iter().all(|c| c.norm_sqr() == 0.0) {
        return Ok(OperatorMatrix::identity(spec.dim()));
    }
    let g = weyl_generator(spec, zeta);
    let (vals, vecs) = hermitian_eigen(&g);
    let mut scaled = vecs.clone();
    for (k, lam) in vals.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, *lam);
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= phase;
        }
    }
    OperatorMatrix::from_dense(scaled * vecs.adjoint(), false)
}

/// `W_ε(ζ) v` without forming the matrix: scaled Taylor steps on the sparse
/// generator. Intended for cutoffs too large for a dense eigendecomposition.
pub fn weyl_apply(
    spec: &FockSpec,
    zeta: &[Complex64],
    v: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    spec.check_point(zeta)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let apply_gen = |x: &DVector<Complex64>| -> DVector<Complex64> {
        let mut out = DVector::zeros(x.len());
        for (j, &zj) in zeta.iter().enumerate() {
            let up = ladder_apply(spec, j, Ladder::Raise, x);
            let down = ladder_apply(spec, j, Ladder::Lower, x);
            out += up * (zj * s) + down * (zj.conj() * s);
        }
        out
    };
    // ||G|| <= sqrt(2 ε n_max) |ζ|_1
    let zeta_l1: f64 = zeta.iter().map(|c| c.norm()).sum();
    let bound = (2.0 * spec.eps * spec.n_max as f64).sqrt() * zeta_l1;
    let steps = (bound / 0.5).ceil().max(1.0) as usize;
    let tau = Complex64::new(0.0, 1.0 / steps as f64);
    let mut x = v.clone();
    for _ in 0..steps {
        let mut term = x.clone();
        let mut acc = x.clone();
        for k in 1..60 {
            term = apply_gen(&term) * (tau / k as f64);
            acc += &term;
            if term.norm() <= 1e-17 * acc.norm() {
                break;
            }
        }
        x = acc;
    }
    Ok(x)
}

/// Max entry of `[a_j, a*_k] - ε δ_jk` over all mode pairs, restricted to
/// basis states with every `n_l <= n_max - 1`.
pub fn ccr_defect(spec: &FockSpec) -> f64 {
    ccr_defect_impl(spec, true)
}

/// As [`ccr_defect`] but over the full truncated space, which exposes the
/// cutoff boundary term `ε (n_max + 1)`.
pub fn ccr_defect_unrestricted(spec: &FockSpec) -> f64 {
    ccr_defect_impl(spec, false)
}

fn ccr_defect_impl(spec: &FockSpec, restrict: bool) -> f64 {
    let dim = spec.dim();
    let interior = |idx: usize| (0..spec.d).all(|l| spec.occupation(idx, l) < spec.n_max);
    let mut worst = 0.0f64;
    for j in 0..spec.d {
        for k in 0..spec.d {
            for col in 0..dim {
                if restrict && !interior(col) {
                    continue;
                }
                let mut e = DVector::zeros(dim);
                e[col] = ONE;
                let ak = ladder_apply(spec, k, Ladder::Raise, &e);
                let lhs = ladder_apply(spec, j, Ladder::Lower, &ak);
                let aj = ladder_apply(spec, j, Ladder::Lower, &e);
                let rhs = ladder_apply(spec, k, Ladder::Raise, &aj);
                let mut c = lhs - rhs;
                if j == k {
                    c[col] -= Complex64::new(spec.eps, 0.0);
                }
                for row in 0..dim {
                    if restrict && !interior(row) {
                        continue;
                    }
                    worst = worst.max(c[row].norm());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn annihilator_entries() {
        let spec = FockSpec::new(1, 2, 1.0).unwrap();
        let a = annihilator(&spec, 0).unwrap().to_dense();
        assert_eq!(a[(0, 1)], c(1.0));
        assert!((a[(1, 2)] - c(2f64.sqrt())).norm() < 1e-15);
        let nonzero = a.iter().filter(|x| x.norm() > 0.0).count();
        assert_eq!(nonzero, 2);

        let spec = FockSpec::new(1, 2, 0.25).unwrap();
        let a = annihilator(&spec, 0).unwrap().to_dense();
        assert!((a[(0, 1)] - c(0.5)).norm() < 1e-15);
        assert!((a[(1, 2)] - c(0.5 * 2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn creator_is_adjoint() {
        let spec = FockSpec::new(2, 3, 0.7).unwrap();
        for j in 0..2 {
            let a = annihilator(&spec, j).unwrap().to_dense();
            let ad = creator(&spec, j).unwrap().to_dense();
            assert_eq!(a.adjoint(), ad);
        }
        assert!(annihilator(&spec, 2).is_err());
    }

    #[test]
    fn number_operator_diagonals() {
        let spec = FockSpec::new(1, 3, 1.0).unwrap();
        let n: Vec<f64> = number_operator(&spec).diagonal().unwrap().iter().map(|c| c.re).collect();
        assert_eq!(n, vec![0.0, 1.0, 2.0, 3.0]);
        let spec = FockSpec::new(2, 1, 0.5).unwrap();
        let n: Vec<f64> = number_operator(&spec).diagonal().unwrap().iter().map(|c| c.re).collect();
        assert_eq!(n, vec![0.0, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn ccr_interior_and_corner() {
        for &(d, n_max, eps) in &[(1, 6, 0.3), (2, 3, 1.0), (3, 2, 0.125)] {
            let spec = FockSpec::new(d, n_max, eps).unwrap();
            assert!(ccr_defect(&spec) <= 1e-12);
        }
        let spec = FockSpec::new(1, 5, 0.25).unwrap();
        assert!((ccr_defect_unrestricted(&spec) - 0.25 * 6.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_vacuum_and_poisson() {
        let spec = FockSpec::new(1, 60, 1.0).unwrap();
        let v = coherent_vector(&spec, &[c(0.0)]).unwrap();
        assert_eq!(v.entries[0], ONE);
        assert_eq!(v.deficit, 0.0);
        let v = coherent_vector(&spec, &[c(1.0)]).unwrap();
        let lf = ln_factorials(60);
        for n in 0..10 {
            let expect = (-0.5f64).exp() / lf[n].exp().sqrt();
            assert!((v.entries[n].re - expect).abs() < 1e-15);
        }
        assert!(v.deficit < 1e-15);
    }

    #[test]
    fn weyl_of_scaled_point_is_coherent() {
        let spec = FockSpec::new(1, 40, 0.5).unwrap();
        let z = Complex64::new(0.6, -0.3);
        let zeta = z * 2f64.sqrt() / (Complex64::new(0.0, 1.0) * spec.eps);
        let w = weyl_operator(&spec, &[zeta]).unwrap();
        let out = w.apply(&StateVector::vacuum(&spec).entries);
        let coh = coherent_vector(&spec, &[z]).unwrap();
        assert!((out - &coh.entries).norm() < 1e-9);
        let out2 = weyl_apply(&spec, &[zeta], &StateVector::vacuum(&spec).entries).unwrap();
        assert!((out2 - coh.entries).norm() < 1e-9);
    }

    #[test]
    fn weyl_zero_is_identity() {
        let spec = FockSpec::new(2, 2, 1.0).unwrap();
        let w = weyl_operator(&spec, &[ZERO, ZERO]).unwrap();
        assert_eq!(w.max_abs_diff(&OperatorMatrix::identity(9)), 0.0);
    }

    #[test]
    fn dump_round_trip() {
        let spec = FockSpec::new(1, 3, 1.0).unwrap();
        let a = annihilator(&spec, 0).unwrap();
        let json = serde_json::to_string(&a.to_dump()).unwrap();
        let back: MatrixDump = serde_json::from_str(&json).unwrap();
        let b = OperatorMatrix::from_dump(&back).unwrap();
        assert_eq!(a.max_abs_diff(&b), 0.0);
    }
}
