//! Quantum states on the truncated Fock space: Gibbs states, von Neumann and
//! Wehrl entropies, Husimi functions, characteristic functions and the
//! moment bounds used to control Husimi tails.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{coherent_amplitudes, coherent_vector_with, weyl_apply, FockSpec, OperatorMatrix};
use crate::numeric::{entropy_term, hermitian_eigen, ln_factorials, pairwise_sum, poisson_window, LOG_FLOOR};
use crate::quadrature::{
    relative_entropy_sampled, ClassicalDensity, QuadratureGrid, INFINITE_MASS_TOL, NORMALIZATION_TOL,
};

/// Tolerance on `|Tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `[-NEGATIVE_EIGEN_TOL, 0]` are clamped to zero.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-10;
/// Largest admissible Gibbs weight of the boundary sector `{n : some n_j = n_max}`.
pub const TOP_SECTOR_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub enum Repr {
    /// Diagonal in the Fock basis.
    Diagonal(Vec<f64>),
    /// `Σ_i λ_i |u_i⟩⟨u_i|` with orthonormal columns `u_i`, `λ` descending.
    Spectral {
        values: Vec<f64>,
        vectors: DMatrix<Complex64>,
    },
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    spec: FockSpec,
    repr: Repr,
}

fn clamp_eigen(values: &mut [f64]) -> Result<()> {
    for v in values.iter_mut() {
        if *v < -NEGATIVE_EIGEN_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {v:e}")));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let tr: f64 = pairwise_sum(values);
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
    }
    Ok(())
}

impl DensityMatrix {
    pub fn from_diagonal(spec: &FockSpec, mut populations: Vec<f64>) -> Result<Self> {
        if populations.len() != spec.dim() {
            return Err(Error::Argument("population vector has wrong length".into()));
        }
        clamp_eigen(&mut populations)?;
        Ok(DensityMatrix {
            spec: *spec,
            repr: Repr::Diagonal(populations),
        })
    }

    /// State from eigenvalues and orthonormal eigenvectors (columns).
    pub fn from_spectral(
        spec: &FockSpec,
        values: Vec<f64>,
        vectors: DMatrix<Complex64>,
    ) -> Result<Self> {
        if vectors.nrows() != spec.dim() || vectors.ncols() != values.len() {
            return Err(Error::Argument("spectral data has inconsistent shape".into()));
        }
        let gram = vectors.adjoint() * &vectors;
        let defect = (gram - DMatrix::<Complex64>::identity(values.len(), values.len()))
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if defect > 1e-8 {
            return Err(Error::InvalidDensity(format!(
                "eigenvectors not orthonormal (defect {defect:e})"
            )));
        }
        let mut values = values;
        clamp_eigen(&mut values)?;
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let sorted_values = order.iter().map(|&i| values[i]).collect();
        let mut sorted = DMatrix::zeros(vectors.nrows(), vectors.ncols());
        for (c, &i) in order.iter().enumerate() {
            sorted.set_column(c, &vectors.column(i));
        }
        Ok(DensityMatrix {
            spec: *spec,
            repr: Repr::Spectral {
                values: sorted_values,
                vectors: sorted,
            },
        })
    }

    /// Validates a hermitian unit-trace PSD operator and diagonalizes it.
    pub fn from_operator(spec: &FockSpec, op: &OperatorMatrix) -> Result<Self> {
        if op.dim() != spec.dim() {
            return Err(Error::Argument("operator dimension mismatch".into()));
        }
        let defect = op.hermiticity_defect();
        if defect > 1e-12 * op.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidDensity(format!("hermiticity defect {defect:e}")));
        }
        if let Some(diag) = op.diagonal() {
            return Self::from_diagonal(spec, diag.iter().map(|c| c.re).collect());
        }
        let (vals, vecs) = hermitian_eigen(&op.to_dense());
        Self::from_spectral(spec, vals, vecs)
    }

    /// Pure state `|v⟩⟨v|/‖v‖²`.
    pub fn pure(spec: &FockSpec, v: &DVector<Complex64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidDensity("zero vector".into()));
        }
        let u = DMatrix::from_column_slice(v.len(), 1, (v / Complex64::new(n, 0.0)).as_slice());
        Self::from_spectral(spec, vec![1.0], u)
    }

    /// Random state `G G† / Tr` with `G` a `dim × rank` complex Gaussian matrix.
    pub fn random_wishart<R: Rng + ?Sized>(spec: &FockSpec, rank: usize, rng: &mut R) -> Result<Self> {
        let dim = spec.dim();
        let g = DMatrix::from_fn(dim, rank, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let mut m = &g * g.adjoint();
        let tr = m.trace().re;
        m /= Complex64::new(tr, 0.0);
        let (vals, vecs) = hermitian_eigen(&m);
        let mut vals = vals;
        let sum: f64 = vals.iter().map(|v| v.max(0.0)).sum();
        for v in vals.iter_mut() {
            *v = v.max(0.0) / sum;
        }
        Self::from_spectral(spec, vals, vecs)
    }

    pub fn spec(&self) -> &FockSpec {
        &self.spec
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Diagonal(p) => {
                let mut v = p.clone();
                v.sort_by(|a, b| b.total_cmp(a));
                v
            }
            Repr::Spectral { values, .. } => values.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(p) => pairwise_sum(p),
            Repr::Spectral { values, .. } => pairwise_sum(values),
        }
    }

    /// Dense matrix; only sensible for moderate dimensions.
    pub fn to_operator(&self) -> OperatorMatrix {
        match &self.repr {
            Repr::Diagonal(p) => OperatorMatrix::from_real_diagonal(p),
            Repr::Spectral { values, vectors } => {
                let mut scaled = vectors.clone();
                for (k, lam) in values.iter().enumerate() {
                    for r in 0..scaled.nrows() {
                        scaled[(r, k)] *= *lam;
                    }
                }
                let m = scaled * vectors.adjoint();
                let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
                OperatorMatrix::from_dense(h, true).expect("symmetrized matrix is hermitian")
            }
        }
    }

    /// Diagonal of ρ in the Fock basis.
    pub fn fock_populations(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Diagonal(p) => p.clone(),
            Repr::Spectral { values, vectors } => (0..vectors.nrows())
                .map(|r| {
                    values
                        .iter()
                        .enumerate()
                        .map(|(k, lam)| lam * vectors[(r, k)].norm_sqr())
                        .sum()
                })
                .collect(),
        }
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, a: &OperatorMatrix) -> Complex64 {
        match &self.repr {
            Repr::Diagonal(p) => {
                let terms: Vec<Complex64> = p
                    .iter()
                    .enumerate()
                    .map(|(n, pn)| a.get(n, n) * *pn)
                    .collect();
                terms.iter().sum()
            }
            Repr::Spectral { values, vectors } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, lam) in values.iter().enumerate() {
                    if *lam == 0.0 {
                        continue;
                    }
                    let u: DVector<Complex64> = vectors.column(k).into();
                    acc += u.dotc(&a.apply(&u)) * *lam;
                }
                acc
            }
        }
    }

    /// Weight of the boundary sector where some occupation equals `n_max`.
    pub fn boundary_weight(&self) -> f64 {
        let pops = self.fock_populations();
        let spec = &self.spec;
        let terms: Vec<f64> = pops
            .iter()
            .enumerate()
            .filter(|(idx, _)| (0..spec.d).any(|j| spec.occupation(*idx, j) == spec.n_max))
            .map(|(_, p)| *p)
            .collect();
        pairwise_sum(&terms)
    }

    /// `ρ` with the same matrix entries at a different `ε` (same cutoff).
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let spec = FockSpec::new(self.spec.d, self.spec.n_max, eps)?;
        Ok(DensityMatrix {
            spec,
            repr: self.repr.clone(),
        })
    }
}

/// Spectral data of a hermitian operator, sorted ascending for dense input.
struct Spectrum {
    values: Vec<f64>,
    vectors: Option<DMatrix<Complex64>>,
}

fn spectrum(h: &OperatorMatrix) -> Result<Spectrum> {
    if h.hermiticity_defect() > 1e-12 * h.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Argument("Hamiltonian is not hermitian".into()));
    }
    let (values, vectors) = h.hermitian_spectrum();
    Ok(Spectrum { values, vectors })
}

#[derive(Clone, Debug)]
pub struct GibbsState {
    pub rho: DensityMatrix,
    /// `Z = Tr e^{−βH}` (may overflow for large negative spectra; see `log_z`).
    pub z: f64,
    pub log_z: f64,
    /// Mass of the boundary sector, must stay below [`TOP_SECTOR_TOL`].
    pub top_sector_weight: f64,
}

/// `e^{−βH}/Z` from the spectrum of `H`.
pub fn gibbs_state(spec: &FockSpec, h: &OperatorMatrix, beta: f64) -> Result<GibbsState> {
    let g = gibbs_state_unchecked(spec, h, beta)?;
    if g.top_sector_weight >= TOP_SECTOR_TOL {
        return Err(Error::Truncation {
            detail: format!(
                "Gibbs weight {:.3e} on the boundary sector at n_max = {}",
                g.top_sector_weight, spec.n_max
            ),
            suggested_n_max: 2 * spec.n_max,
        });
    }
    Ok(g)
}

/// [`gibbs_state`] without the boundary-sector check.
pub fn gibbs_state_unchecked(spec: &FockSpec, h: &OperatorMatrix, beta: f64) -> Result<GibbsState> {
    if !(beta > 0.0) {
        return Err(Error::Argument("beta must be positive".into()));
    }
    if h.dim() != spec.dim() {
        return Err(Error::Argument("Hamiltonian dimension mismatch".into()));
    }
    let sp = spectrum(h)?;
    let lmin = sp.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let boltz: Vec<f64> = sp.values.iter().map(|l| (-beta * (l - lmin)).exp()).collect();
    let sum = pairwise_sum(&boltz);
    let log_z = sum.ln() - beta * lmin;
    let probs: Vec<f64> = boltz.iter().map(|b| b / sum).collect();
    let rho = match sp.vectors {
        None => DensityMatrix {
            spec: *spec,
            repr: Repr::Diagonal(probs),
        },
        Some(v) => {
            let mut order: Vec<usize> = (0..probs.len()).collect();
            order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
            let values = order.iter().map(|&i| probs[i]).collect();
            let mut vectors = DMatrix::zeros(v.nrows(), v.ncols());
            for (c, &i) in order.iter().enumerate() {
                vectors.set_column(c, &v.column(i));
            }
            DensityMatrix {
                spec: *spec,
                repr: Repr::Spectral { values, vectors },
            }
        }
    };
    let top = rho.boundary_weight();
    Ok(GibbsState {
        rho,
        z: log_z.exp(),
        log_z,
        top_sector_weight: top,
    })
}

/// `−Σ λ log λ` with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let terms: Vec<f64> = rho.eigenvalues().iter().map(|&x| entropy_term(x)).collect();
    pairwise_sum(&terms)
}

/// `Tr ρ (log ρ − log σ)`, `+∞` when ρ has weight outside the support of σ.
pub fn relative_entropy_vn(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.spec().dim() != sigma.spec().dim() {
        return Err(Error::Argument("states live on different spaces".into()));
    }
    let neg_s = -von_neumann_entropy(rho);
    // weights ⟨s_k|ρ|s_k⟩ against σ's eigenvalues s_k
    let (sig_vals, weights): (Vec<f64>, Vec<f64>) = match &sigma.repr {
        Repr::Diagonal(q) => (q.clone(), rho.fock_populations()),
        Repr::Spectral { values, vectors } => {
            let w = match &rho.repr {
                Repr::Diagonal(p) => (0..vectors.ncols())
                    .map(|k| {
                        (0..vectors.nrows())
                            .map(|r| p[r] * vectors[(r, k)].norm_sqr())
                            .sum()
                    })
                    .collect(),
                Repr::Spectral {
                    values: lam,
                    vectors: u,
                } => {
                    let overlap = vectors.adjoint() * u;
                    (0..vectors.ncols())
                        .map(|k| {
                            (0..u.ncols())
                                .map(|i| lam[i] * overlap[(k, i)].norm_sqr())
                                .sum()
                        })
                        .collect()
                }
            };
            (values.clone(), w)
        }
    };
    // ρ-weight outside the span of σ's stored eigenvectors (rank-deficient σ)
    let total: f64 = weights.iter().sum();
    if 1.0 - total > 1e-10 {
        return Ok(f64::INFINITY);
    }
    let mut cross = Vec::with_capacity(weights.len());
    for (s, w) in sig_vals.iter().zip(&weights) {
        if *s <= LOG_FLOOR {
            if *w > INFINITE_MASS_TOL {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross.push(-w * s.ln());
    }
    Ok(neg_s + pairwise_sum(&cross))
}

/// Husimi function `f_ε(z_k) = ⟨z_k|ρ|z_k⟩` sampled on a grid.
#[derive(Clone, Debug)]
pub struct HusimiField {
    pub grid: QuadratureGrid,
    pub values: Vec<f64>,
    pub eps: f64,
    pub d: usize,
    /// `∫ f dz / (πε)^d` on the grid.
    pub normalization_check: f64,
    /// Largest coherent truncation deficit over the nodes.
    pub max_deficit: f64,
}

impl HusimiField {
    pub fn phase_volume(&self) -> f64 {
        (std::f64::consts::PI * self.eps).powi(self.d as i32)
    }

    /// The probability density `f/(πε)^d` at the nodes.
    pub fn density(&self) -> Vec<f64> {
        let v = self.phase_volume();
        self.values.iter().map(|f| f / v).collect()
    }

    /// As a [`ClassicalDensity`] sampled on the field's grid.
    pub fn to_classical(&self) -> Result<ClassicalDensity> {
        ClassicalDensity::from_samples(self.density(), &self.grid)
    }
}

/// Poisson weights `e^{-x} x^n/n!` on the window returned by
/// [`poisson_window`], as `(lo, weights)`.
fn poisson_window_weights(x: f64, n_max: usize, lf: &[f64]) -> (usize, Vec<f64>) {
    if x <= 0.0 {
        return (0, vec![1.0]);
    }
    let (lo, hi) = poisson_window(x, n_max);
    let lx = x.ln();
    let w = (lo..=hi).map(|n| (-x + n as f64 * lx - lf[n]).exp()).collect();
    (lo, w)
}

/// Husimi value of a Fock-diagonal state at `z`.
fn husimi_diagonal(spec: &FockSpec, pops: &[f64], z: &[Complex64], lf: &[f64]) -> f64 {
    if spec.d == 1 {
        let (lo, w) = poisson_window_weights(z[0].norm_sqr() / spec.eps, spec.n_max, lf);
        let terms: Vec<f64> = w.iter().enumerate().map(|(k, wk)| wk * pops[lo + k]).collect();
        return pairwise_sum(&terms);
    }
    let per_mode: Vec<Vec<f64>> = z
        .iter()
        .map(|zj| {
            let (lo, w) = poisson_window_weights(zj.norm_sqr() / spec.eps, spec.n_max, lf);
            let mut full = vec![0.0; spec.n_max + 1];
            full[lo..lo + w.len()].copy_from_slice(&w);
            full
        })
        .collect();
    let terms: Vec<f64> = pops
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let mut w = *p;
            for (j, pm) in per_mode.iter().enumerate() {
                w *= pm[spec.occupation(idx, j)];
            }
            w
        })
        .collect();
    pairwise_sum(&terms)
}

/// `f_ε(z) = ⟨z_ε|ρ|z_ε⟩` at every grid node. Coherent deficits are
/// reported; they do not bias the value since ρ lives in the truncated space.
pub fn husimi(rho: &DensityMatrix, grid: &QuadratureGrid) -> Result<HusimiField> {
    let spec = *rho.spec();
    if grid.d() != spec.d {
        return Err(Error::Argument("grid and state dimensions differ".into()));
    }
    let lf = ln_factorials(spec.n_max);
    let values: Vec<f64> = match &rho.repr {
        Repr::Diagonal(p) => grid.sample(|z| husimi_diagonal(&spec, p, z, &lf)),
        Repr::Spectral { values, vectors } => {
            // eigenvalues below 1e-18 of the largest change f by at most rank·1e-18
            let floor = values.first().copied().unwrap_or(0.0) * 1e-18;
            let r = values.iter().take_while(|v| **v > floor).count();
            let u = vectors.columns(0, r).adjoint();
            grid.sample(|z| {
                let coh = coherent_vector_with(&spec, z, &lf);
                let proj = &u * &coh.entries;
                let terms: Vec<f64> = (0..r).map(|i| values[i] * proj[i].norm_sqr()).collect();
                pairwise_sum(&terms)
            })
        }
    };
    let max_deficit = grid
        .sample(|z| crate::fock::coherent_deficit(&spec, z, &lf))
        .into_iter()
        .fold(0.0, f64::max);
    let vol = (std::f64::consts::PI * spec.eps).powi(spec.d as i32);
    let normalization_check = grid.sum_sampled(&values) / vol;
    Ok(HusimiField {
        grid: grid.clone(),
        values,
        eps: spec.eps,
        d: spec.d,
        normalization_check,
        max_deficit,
    })
}

fn check_normalized(field: &HusimiField) -> Result<()> {
    if (field.normalization_check - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::ConvergenceFailure {
            levels: field.grid.level(),
            detail: format!(
                "Husimi normalization {} on the grid; enlarge the grid",
                field.normalization_check
            ),
        });
    }
    Ok(())
}

/// `S_W = −∫ f log f dz/(πε)^d`.
pub fn wehrl_entropy(field: &HusimiField) -> Result<f64> {
    check_normalized(field)?;
    let terms: Vec<f64> = field.values.iter().map(|&f| entropy_term(f.max(0.0))).collect();
    Ok(field.grid.sum_sampled(&terms) / field.phase_volume())
}

/// Kullback-Leibler divergence between the Husimi measures of ρ and σ.
pub fn wehrl_relative_entropy(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let a = husimi(rho, grid)?;
    let b = husimi(sigma, grid)?;
    check_normalized(&a)?;
    check_normalized(&b)?;
    Ok(relative_entropy_sampled(&a.density(), &b.density(), grid))
}

/// `g_{β,ε}(z) = ⟨z_ε|e^{−βH}|z_ε⟩` with the spectral data of `H` cached.
pub struct ThermalKernel {
    spec: FockSpec,
    beta: f64,
    energies: Vec<f64>,
    vectors: Option<DMatrix<Complex64>>,
    lf: Vec<f64>,
}

impl ThermalKernel {
    pub fn new(spec: &FockSpec, h: &OperatorMatrix, beta: f64) -> Result<Self> {
        let sp = spectrum(h)?;
        Ok(ThermalKernel {
            spec: *spec,
            beta,
            energies: sp.values,
            vectors: sp.vectors,
            lf: ln_factorials(spec.n_max),
        })
    }

    pub fn at(&self, z: &[Complex64]) -> f64 {
        let w: Vec<f64> = self.energies.iter().map(|e| (-self.beta * e).exp()).collect();
        match &self.vectors {
            None => husimi_diagonal(&self.spec, &w, z, &self.lf),
            Some(u) => {
                let coh = coherent_vector_with(&self.spec, z, &self.lf);
                let proj = u.adjoint() * coh.entries;
                let terms: Vec<f64> = w.iter().zip(proj.iter()).map(|(a, p)| a * p.norm_sqr()).collect();
                pairwise_sum(&terms)
            }
        }
    }
}

pub fn coherent_expectation(
    spec: &FockSpec,
    h: &OperatorMatrix,
    beta: f64,
    z: &[Complex64],
) -> Result<f64> {
    Ok(ThermalKernel::new(spec, h, beta)?.at(z))
}

/// `e^{-x/2} L_n(x)` for `n = 0..=n_max`, the diagonal of a displacement
/// with `|α|^2 = x` in the number basis.
fn displaced_diagonal(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let pre = (-0.5 * x).exp();
    let (mut l0, mut l1) = (1.0, 1.0 - x);
    out.push(pre * l0);
    if n_max >= 1 {
        out.push(pre * l1);
    }
    for k in 1..n_max {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 - x) * l1 - kf * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
        out.push(pre * l1);
    }
    out
}

/// `Tr(ρ W_ε(ζ))`. Fock-diagonal states use the Laguerre form of
/// `⟨n|W|n⟩`; spectral states apply the truncated Weyl operator.
pub fn characteristic_function(rho: &DensityMatrix, zeta: &[Complex64]) -> Result<Complex64> {
    let spec = *rho.spec();
    if zeta.len() != spec.d {
        return Err(Error::Argument("zeta dimension mismatch".into()));
    }
    match &rho.repr {
        Repr::Diagonal(p) => {
            // W_ε(ζ) is a displacement with |α_j|^2 = ε|ζ_j|^2/2 per mode
            let diags: Vec<Vec<f64>> = zeta
                .iter()
                .map(|zj| displaced_diagonal(spec.eps * zj.norm_sqr() / 2.0, spec.n_max))
                .collect();
            let terms: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(idx, pn)| {
                    let mut w = *pn;
                    for (j, dj) in diags.iter().enumerate() {
                        w *= dj[spec.occupation(idx, j)];
                    }
                    w
                })
                .collect();
            Ok(Complex64::new(pairwise_sum(&terms), 0.0))
        }
        Repr::Spectral { values, vectors } => {
            let r = values.iter().take_while(|v| **v > 0.0).count();
            let parts: Vec<Result<Complex64>> = (0..r)
                .into_par_iter()
                .map(|k| {
                    let u: DVector<Complex64> = vectors.column(k).into();
                    let wu = weyl_apply(&spec, zeta, &u)?;
                    Ok(u.dotc(&wu) * values[k])
                })
                .collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for p in parts {
                acc += p?;
            }
            Ok(acc)
        }
    }
}

/// `∫ e^{iκ Re⟨ζ|z⟩} dμ(z)` on `grid`.
pub fn classical_characteristic(
    mu: &ClassicalDensity,
    zeta: &[Complex64],
    kappa: f64,
    grid: &QuadratureGrid,
) -> Result<Complex64> {
    let f = mu.values_on(grid)?;
    let phases = grid.sample(|z| {
        let s: f64 = zeta.iter().zip(z).map(|(a, b)| (a.conj() * b).re).sum();
        Complex64::from_polar(1.0, kappa * s)
    });
    let terms: Vec<Complex64> = phases
        .iter()
        .zip(&f)
        .zip(grid.weights())
        .map(|((p, fv), w)| p * (fv * w))
        .collect();
    Ok(crate::numeric::pairwise_sum_complex(&terms))
}

/// Characteristic function of a point mass at `w`.
pub fn point_mass_characteristic(w: &[Complex64], zeta: &[Complex64], kappa: f64) -> Complex64 {
    let s: f64 = zeta.iter().zip(w).map(|(a, b)| (a.conj() * b).re).sum();
    Complex64::from_polar(1.0, kappa * s)
}

/// Calibration of the classical phase constant `κ`: the phase of
/// `⟨w_ε|W_ε(ζ)|w_ε⟩` divided by `Re⟨ζ|w⟩` on a reference coherent state.
pub fn calibrate_kappa() -> Result<f64> {
    let eps = 1.0 / 64.0;
    let w = Complex64::new(0.5, 0.2);
    let zeta = Complex64::new(0.7, 0.0);
    let n_max = crate::quantize::suggest_n_max(w.norm_sqr(), eps);
    let spec = FockSpec::new(1, n_max, eps)?;
    let lf = ln_factorials(n_max);
    let coh = coherent_vector_with(&spec, &[w], &lf);
    let moved = weyl_apply(&spec, &[zeta], &coh.entries)?;
    let value = coh.entries.dotc(&moved);
    let re_pair = (zeta.conj() * w).re;
    Ok(value.arg() / re_pair)
}

/// `‖(N_ε+ε)^{k/2} e^{−βH} (N_ε+ε)^{k/2}‖`.
pub fn assumption_a_norm(spec: &FockSpec, h: &OperatorMatrix, beta: f64, k: u32) -> Result<f64> {
    let sp = spectrum(h)?;
    let weight = |idx: usize| (spec.eps * (spec.total_occupation(idx) as f64 + 1.0)).powi(k as i32);
    match sp.vectors {
        None => Ok(sp
            .values
            .iter()
            .enumerate()
            .map(|(idx, e)| weight(idx) * (-beta * e).exp())
            .fold(0.0, f64::max)),
        Some(u) => {
            let dim = spec.dim();
            let sq: Vec<f64> = (0..dim).map(|i| weight(i).sqrt()).collect();
            let mut scaled = u.clone();
            for c in 0..dim {
                let b = (-beta * sp.values[c] / 2.0).exp();
                for r in 0..dim {
                    scaled[(r, c)] *= sq[r] * b;
                }
            }
            let m = &scaled * scaled.adjoint();
            let (vals, _) = hermitian_eigen(&m);
            Ok(vals.last().copied().unwrap_or(0.0))
        }
    }
}

/// Terms of the Husimi tail estimate at one point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailCheck {
    /// `g_{β,ε}(z)`.
    pub g: f64,
    /// `C_k ⟨z|(N+ε)^{-k}|z⟩`.
    pub moment_bound: f64,
    /// `C_k Π_j k!/|z_j|^{2k}`.
    pub product_bound: f64,
}

/// `g ≤ C_k ⟨z|(N+ε)^{-k}|z⟩ ≤ C_k Π_j k!/|z_j|^{2k}` for `|z_j| ≥ 1`. The
/// last step is proved for one mode; for several modes only the first
/// inequality is guaranteed.
pub fn husimi_tail_check(
    spec: &FockSpec,
    h: &OperatorMatrix,
    beta: f64,
    k: u32,
    z: &[Complex64],
) -> Result<TailCheck> {
    let c_k = assumption_a_norm(spec, h, beta, k)?;
    let kernel = ThermalKernel::new(spec, h, beta)?;
    let g = kernel.at(z);
    let lf = ln_factorials(spec.n_max);
    let inv: Vec<f64> = (0..spec.dim())
        .map(|idx| (spec.eps * (spec.total_occupation(idx) as f64 + 1.0)).powi(-(k as i32)))
        .collect();
    let moment = husimi_diagonal(spec, &inv, z, &lf);
    let kfact: f64 = (1..=k).map(|t| t as f64).product();
    let product: f64 = z.iter().map(|zj| kfact / zj.norm_sqr().powi(k as i32)).product();
    Ok(TailCheck {
        g,
        moment_bound: c_k * moment,
        product_bound: c_k * product,
    })
}

/// Trace distance `‖ρ − σ‖_1 / 2` through dense matrices.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let diff = rho.to_operator().to_dense() - sigma.to_operator().to_dense();
    let (vals, _) = hermitian_eigen(&diff);
    vals.iter().map(|v| v.abs()).sum::<f64>() / 2.0
}

/// Single-mode coherent amplitudes, re-exported for state construction.
pub fn coherent_column(spec: &FockSpec, z: &[Complex64]) -> DVector<Complex64> {
    let lf = ln_factorials(spec.n_max);
    let factors: Vec<Vec<Complex64>> = z
        .iter()
        .map(|&zj| coherent_amplitudes(zj, spec.eps, &lf))
        .collect();
    crate::fock::tensor_product(&factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::number_operator;
    use std::f64::consts::{LN_2, PI};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn harmonic_gibbs_geometric() {
        let spec = FockSpec::new(1, 80, 1.0).unwrap();
        let g = gibbs_state(&spec, &number_operator(&spec), LN_2).unwrap();
        assert!((g.z - 2.0).abs() < 1e-12);
        let ev = g.rho.eigenvalues();
        assert!((ev[0] - 0.5).abs() < 1e-14 && (ev[1] - 0.25).abs() < 1e-14);
        assert!((von_neumann_entropy(&g.rho) - 2.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn small_cutoff_is_flagged() {
        let spec = FockSpec::new(1, 10, 1.0).unwrap();
        let r = gibbs_state(&spec, &number_operator(&spec), LN_2);
        assert!(matches!(r, Err(Error::Truncation { .. })));
    }

    #[test]
    fn vacuum_relative_to_gibbs() {
        let spec = FockSpec::new(1, 80, 1.0).unwrap();
        let g = gibbs_state(&spec, &number_operator(&spec), LN_2).unwrap();
        let mut p = vec![0.0; 81];
        p[0] = 1.0;
        let vac = DensityMatrix::from_diagonal(&spec, p).unwrap();
        assert!((relative_entropy_vn(&vac, &g.rho).unwrap() - LN_2).abs() < 1e-12);
        let dense_vac = DensityMatrix::pure(&spec, &coherent_column(&spec, &[c(0.0)])).unwrap();
        assert!((relative_entropy_vn(&dense_vac, &g.rho).unwrap() - LN_2).abs() < 1e-12);
        assert_eq!(relative_entropy_vn(&g.rho, &vac).unwrap(), f64::INFINITY);
    }

    #[test]
    fn husimi_of_vacuum_and_gibbs() {
        let spec = FockSpec::new(1, 80, 1.0).unwrap();
        let grid = QuadratureGrid::uniform(1, 9.0, 0.1).unwrap();
        let mut p = vec![0.0; 81];
        p[0] = 1.0;
        let vac = DensityMatrix::from_diagonal(&spec, p).unwrap();
        let f = husimi(&vac, &grid).unwrap();
        for (k, z) in grid.nodes().enumerate().step_by(97) {
            assert!((f.values[k] - (-z[0].norm_sqr()).exp()).abs() < 1e-14);
        }
        assert!((wehrl_entropy(&f).unwrap() - 1.0).abs() < 1e-9);
        let g = gibbs_state(&spec, &number_operator(&spec), LN_2).unwrap();
        let fg = husimi(&g.rho, &grid).unwrap();
        assert!((wehrl_entropy(&fg).unwrap() - (1.0 + LN_2)).abs() < 1e-8);
        assert!((fg.normalization_check - 1.0).abs() < 1e-10);
        let _ = PI;
    }

    #[test]
    fn laguerre_diagonal_matches_dense_weyl() {
        let spec = FockSpec::new(1, 60, 0.5).unwrap();
        let g = gibbs_state(&spec, &number_operator(&spec), 2.0).unwrap();
        let zeta = [Complex64::new(0.8, -0.4)];
        let a = characteristic_function(&g.rho, &zeta).unwrap();
        let w = crate::fock::weyl_operator(&spec, &zeta).unwrap();
        let b = g.rho.expectation(&w);
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn kappa_is_sqrt_two() {
        assert!((calibrate_kappa().unwrap() - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn assumption_norm_k0() {
        let spec = FockSpec::new(1, 50, 0.25).unwrap();
        let n = assumption_a_norm(&spec, &number_operator(&spec), 1.0, 0).unwrap();
        assert!((n - 1.0).abs() < 1e-15);
    }
}
