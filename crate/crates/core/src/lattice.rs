//! Dyadic lattices of coherent states, their Gram–Schmidt orthonormal
//! system, the lattice states built on it and the slower-renormalization
//! divergence experiment.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{coherent_vector_with, number_operator, weyl_apply, FockSpec};
use crate::numeric::{entropy_term, hermitian_eigen, ln_factorials, linear_fit, pairwise_sum};
use crate::quadrature::ClassicalDensity;
use crate::quantize::suggest_n_max;
use crate::states::{gibbs_state, relative_entropy_vn, von_neumann_entropy, DensityMatrix};

/// Largest lattice `build_lattice` will enumerate.
pub const MAX_LATTICE_POINTS: usize = 1 << 12;
/// Residual norm below which Gram–Schmidt reports near-dependence.
pub const DEPENDENCE_TOL: f64 = 1e-6;
/// Threshold of the default strict admissibility guard.
pub const ADMISSIBILITY_TOL: f64 = 1e-8;

/// Points `2^{-M} k`, `k ∈ ℤ^d ∩ [−M2^M, M2^M]^d`, placed on the real
/// section of `ℂ^d`. The enumeration is nested: `Λ_M` is a prefix of
/// `Λ_{M+1}`.
#[derive(Clone, Debug, Serialize)]
pub struct DyadicLattice {
    m: u32,
    d: usize,
    /// Integer coordinates at scale `2^{-M}`.
    coords: Vec<Vec<i64>>,
}

fn lattice_len(m: u32, d: usize) -> Option<usize> {
    let side = 2usize.checked_mul(m as usize)?.checked_mul(1usize.checked_shl(m)?)? + 1;
    side.checked_pow(d as u32)
}

fn box_points(half: i64, d: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::with_capacity(out.len() * (2 * half as usize + 1));
        for p in &out {
            for k in -half..=half {
                let mut q = p.clone();
                q.push(k);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

pub fn build_lattice(m: u32, d: usize) -> Result<DyadicLattice> {
    if d == 0 {
        return Err(Error::Argument("lattice needs d >= 1".into()));
    }
    match lattice_len(m, d) {
        Some(n) if n <= MAX_LATTICE_POINTS => {}
        _ => {
            return Err(Error::Resource(format!(
                "lattice M = {m}, d = {d} exceeds {MAX_LATTICE_POINTS} points"
            )))
        }
    }
    let mut coords: Vec<Vec<i64>> = vec![vec![0; d]];
    for level in 1..=m {
        // rescale the previous level to the finer grid, then append the rest
        let mut seen: std::collections::HashSet<Vec<i64>> = std::collections::HashSet::new();
        for c in coords.iter_mut() {
            for x in c.iter_mut() {
                *x *= 2;
            }
            seen.insert(c.clone());
        }
        let half = level as i64 * (1i64 << level);
        for p in box_points(half, d) {
            if !seen.contains(&p) {
                coords.push(p);
            }
        }
    }
    Ok(DyadicLattice { m, d, coords })
}

impl DyadicLattice {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        0.5f64.powi(self.m as i32)
    }

    pub fn point(&self, k: usize) -> Vec<Complex64> {
        let s = self.spacing();
        self.coords[k]
            .iter()
            .map(|&x| Complex64::new(x as f64 * s, 0.0))
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<Complex64>> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Largest `|z|^2` over the lattice.
    pub fn max_norm_sqr(&self) -> f64 {
        (self.m as f64).powi(2) * self.d as f64
    }

    /// `|Λ_M|^2 exp(−2^{−2M−1}/ε)`, the bound on `|N_ε^2 − 1|`.
    pub fn admissibility_bound(&self, eps: f64) -> f64 {
        let n = self.len() as f64;
        n * n * (-(self.spacing().powi(2)) / (2.0 * eps)).exp()
    }

    /// Smallest ε for which the bound stays below `threshold`.
    pub fn min_admissible_eps(&self, threshold: f64) -> f64 {
        let n = self.len() as f64;
        let denom = (n * n / threshold).ln();
        if denom <= 0.0 {
            f64::INFINITY
        } else {
            self.spacing().powi(2) / (2.0 * denom)
        }
    }

    /// Largest `|⟨z_i|z_j⟩| = e^{−|z_i−z_j|^2/2ε}` over distinct points.
    pub fn max_overlap(&self, eps: f64) -> f64 {
        if self.len() < 2 {
            0.0
        } else {
            (-(self.spacing().powi(2)) / (2.0 * eps)).exp()
        }
    }

    /// CSV dump `index,re_1,im_1,...`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["index".to_string()];
        for j in 0..self.d {
            header.push(format!("re_{j}"));
            header.push(format!("im_{j}"));
        }
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut rec = vec![k.to_string()];
            for c in self.point(k) {
                rec.push(format!("{:.16e}", c.re));
                rec.push(format!("{:.16e}", c.im));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// How the admissibility bound is enforced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum Admissibility {
    /// Reject when the bound exceeds the threshold.
    Strict { threshold: f64 },
    /// Only reject numerically degenerate Gram–Schmidt; the bound is reported.
    NearDependenceOnly,
}

impl Default for Admissibility {
    fn default() -> Self {
        Admissibility::Strict {
            threshold: ADMISSIBILITY_TOL,
        }
    }
}

impl Admissibility {
    pub fn check(&self, lattice: &DyadicLattice, eps: f64) -> Result<f64> {
        let bound = lattice.admissibility_bound(eps);
        if let Admissibility::Strict { threshold } = *self {
            if !(bound < threshold) {
                return Err(Error::Inadmissible {
                    detail: format!("|N^2 - 1| bound {bound:e} at eps = {eps:e}"),
                    min_eps: lattice.min_admissible_eps(threshold),
                });
            }
        }
        Ok(bound)
    }
}

/// Orthonormal system `e_ε(z_m)` obtained from the lattice coherent states.
#[derive(Clone, Debug)]
pub struct CoherentONS {
    pub spec: FockSpec,
    /// Columns `e_ε(z_m)` in enumeration order.
    pub vectors: DMatrix<Complex64>,
    /// Squared residual norms `N_ε^2` before normalization.
    pub gram_norms: Vec<f64>,
}

impl CoherentONS {
    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, k: usize) -> DVector<Complex64> {
        self.vectors.column(k).into()
    }

    /// `max |⟨e_i|e_j⟩ − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }
}

/// Modified Gram–Schmidt over the enumeration with one reorthogonalization
/// pass.
pub fn gram_schmidt_coherent(lattice: &DyadicLattice, spec: &FockSpec) -> Result<CoherentONS> {
    if lattice.d() != spec.d {
        return Err(Error::Argument("lattice and Fock space differ in d".into()));
    }
    let lf = ln_factorials(spec.n_max);
    let raw: Vec<DVector<Complex64>> = (0..lattice.len())
        .into_par_iter()
        .map(|k| coherent_vector_with(spec, &lattice.point(k), &lf).entries)
        .collect();
    let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(raw.len());
    let mut gram_norms = Vec::with_capacity(raw.len());
    let mut degenerate = Vec::new();
    for (k, v0) in raw.into_iter().enumerate() {
        let mut v = v0;
        let mut first_norm = 0.0;
        for pass in 0..2 {
            for e in &basis {
                let c = e.dotc(&v);
                v.axpy(-c, e, Complex64::new(1.0, 0.0));
            }
            if pass == 0 {
                first_norm = v.norm();
            }
        }
        let r = v.norm();
        if first_norm < DEPENDENCE_TOL || r < DEPENDENCE_TOL {
            degenerate.push(k);
            basis.push(v);
            gram_norms.push(0.0);
            continue;
        }
        gram_norms.push(first_norm * first_norm);
        v.unscale_mut(r);
        basis.push(v);
    }
    if !degenerate.is_empty() {
        return Err(Error::DegenerateBasis {
            indices: degenerate,
        });
    }
    let vectors = DMatrix::from_columns(&basis);
    Ok(CoherentONS {
        spec: *spec,
        vectors,
        gram_norms,
    })
}

/// `|⟨e_m|W(ζ)|e_m⟩ − ⟨z_m|W(ζ)|z_m⟩/N_ε^2|` and the bound
/// `m Σ_{j<m} e^{−|z_m−z_j|^2/2ε} / N_ε^2` (`m` counted from 1).
pub fn orthonormalization_remainder(
    lattice: &DyadicLattice,
    ons: &CoherentONS,
    m: usize,
    zeta: &[Complex64],
) -> Result<(f64, f64)> {
    let spec = ons.spec;
    let lf = ln_factorials(spec.n_max);
    let zm = lattice.point(m);
    let coh = coherent_vector_with(&spec, &zm, &lf).entries;
    let e = ons.column(m);
    let lhs = e.dotc(&weyl_apply(&spec, zeta, &e)?);
    let raw = coh.dotc(&weyl_apply(&spec, zeta, &coh)?);
    let n2 = ons.gram_norms[m];
    let sum: f64 = (0..m)
        .map(|j| {
            let zj = lattice.point(j);
            let dist: f64 = zm.iter().zip(&zj).map(|(a, b)| (a - b).norm_sqr()).sum();
            (-dist / (2.0 * spec.eps)).exp()
        })
        .sum();
    Ok(((lhs - raw / n2).norm(), (m + 1) as f64 * sum / n2))
}

/// `ρ_{M,ε}(μ) = Σ_m f(z_m)/(2^{dM} N_M) |e_ε(z_m)⟩⟨e_ε(z_m)|`.
#[derive(Clone, Debug)]
pub struct LatticeState {
    pub rho: DensityMatrix,
    pub ons: CoherentONS,
    pub m: u32,
    pub eps: f64,
    /// Weights in enumeration order.
    pub weights: Vec<f64>,
    /// Density values `f(z_m)`.
    pub samples: Vec<f64>,
    /// `N_M = Σ f(z_m)/2^{dM}`.
    pub n_m: f64,
    pub admissibility_bound: f64,
}

/// Cutoff keeping every lattice coherent state within deficit tolerance.
pub fn lattice_cutoff(lattice: &DyadicLattice, eps: f64) -> usize {
    suggest_n_max(lattice.max_norm_sqr(), eps)
}

pub fn lattice_state(
    f: &ClassicalDensity,
    lattice: &DyadicLattice,
    spec: &FockSpec,
    policy: Admissibility,
) -> Result<LatticeState> {
    let bound = policy.check(lattice, spec.eps)?;
    let samples: Vec<f64> = (0..lattice.len())
        .map(|k| {
            f.eval(&lattice.point(k)).ok_or_else(|| {
                Error::InvalidDensity("lattice states need a closed-form density".into())
            })
        })
        .collect::<Result<_>>()?;
    let cell = (-(lattice.d() as f64) * lattice.m() as f64 * LN_2).exp();
    let n_m = pairwise_sum(&samples) * cell;
    if !(n_m > 0.0) {
        return Err(Error::InvalidDensity("density vanishes on the lattice".into()));
    }
    let weights: Vec<f64> = samples.iter().map(|v| v * cell / n_m).collect();
    let ons = gram_schmidt_coherent(lattice, spec)?;
    let rho = DensityMatrix::from_spectral(spec, weights.clone(), ons.vectors.clone())?;
    Ok(LatticeState {
        rho,
        ons,
        m: lattice.m(),
        eps: spec.eps,
        weights,
        samples,
        n_m,
        admissibility_bound: bound,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LatticeEntropy {
    /// Eigenvalues of `W^{1/2} E†E W^{1/2}` from the assembled vectors.
    pub spectral: f64,
    /// `−(1/N_M) Σ f log f /2^{dM} + log N_M + dM log 2`.
    pub formula: f64,
    /// `formula − dM log 2`.
    pub renormalized: f64,
}

pub fn lattice_entropy(state: &LatticeState) -> LatticeEntropy {
    let e = &state.ons.vectors;
    let m = state.weights.len();
    let sq: Vec<f64> = state.weights.iter().map(|w| w.sqrt()).collect();
    let mut g = e.adjoint() * e;
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] *= sq[i] * sq[j];
        }
    }
    let (vals, _) = hermitian_eigen(&g);
    let spectral = pairwise_sum(&vals.iter().map(|&x| entropy_term(x.max(0.0))).collect::<Vec<_>>());
    let d = state.rho.spec().d as f64;
    let dm_log2 = d * state.m as f64 * LN_2;
    let cell = (-dm_log2).exp();
    let sum: Vec<f64> = state
        .samples
        .iter()
        .map(|&v| if v > 0.0 { v * cell * v.ln() } else { 0.0 })
        .collect();
    let formula = -pairwise_sum(&sum) / state.n_m + state.n_m.ln() + dm_log2;
    LatticeEntropy {
        spectral,
        formula,
        renormalized: formula - dm_log2,
    }
}

/// One level of the divergence experiment.
#[derive(Clone, Debug, Serialize)]
pub struct DivergenceRow {
    #[serde(rename = "M")]
    pub m: u32,
    pub eps: f64,
    pub n_max: usize,
    #[serde(rename = "S_vN")]
    pub s_vn: f64,
    /// `S_vN(ρ_{M,ε(M)} ‖ Γ_{β,ε(M)})` from the state representations.
    #[serde(rename = "S_rel")]
    pub s_rel: f64,
    /// Same from `−S_vN + β Tr(ρH) + log Z`.
    pub s_rel_formula: f64,
    pub renormalized: f64,
    pub spectral_formula_gap: f64,
    pub energy: f64,
    pub admissibility_bound: f64,
    pub orthonormality_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub delta: f64,
    pub beta: f64,
    pub rows: Vec<DivergenceRow>,
    pub slope: f64,
    pub intercept: f64,
    /// `d (1+δ) log 2`.
    pub expected_slope: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct DivergenceOptions {
    pub beta: f64,
    pub policy: Admissibility,
    /// Levels whose Fock dimension would exceed this are dropped.
    pub max_dim: usize,
}

impl Default for DivergenceOptions {
    fn default() -> Self {
        DivergenceOptions {
            beta: 1.0,
            policy: Admissibility::NearDependenceOnly,
            max_dim: 1 << 17,
        }
    }
}

/// `ε(M) = 2^{−(2+δ)M}/π`.
pub fn divergence_eps(m: u32, delta: f64) -> f64 {
    (-(2.0 + delta) * m as f64 * LN_2).exp() / PI
}

/// Relative entropy of the lattice states against the Gibbs state of
/// `H = N_ε` along `ε(M)`, with an affine fit in `M`.
pub fn divergence_experiment(
    f: &ClassicalDensity,
    d: usize,
    delta: f64,
    m_list: &[u32],
    options: &DivergenceOptions,
) -> Result<DivergenceReport> {
    let beta = options.beta;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &m in m_list {
        let eps = divergence_eps(m, delta);
        let lattice = build_lattice(m, d)?;
        let gibbs_cut = (24.0 / (beta * eps)).ceil() as usize;
        let n_max = lattice_cutoff(&lattice, eps).max(gibbs_cut);
        let dim = (n_max + 1).checked_pow(d as u32);
        if dim.map_or(true, |x| x > options.max_dim) {
            warnings.push(format!("M = {m} dropped: n_max = {n_max} too large"));
            continue;
        }
        let spec = FockSpec::new(d, n_max, eps)?;
        let state = lattice_state(f, &lattice, &spec, options.policy)?;
        let h = number_operator(&spec);
        let gibbs = gibbs_state(&spec, &h, beta)?;
        let ent = lattice_entropy(&state);
        let s_vn = von_neumann_entropy(&state.rho);
        let energy = state.rho.expectation(&h).re;
        let s_rel = relative_entropy_vn(&state.rho, &gibbs.rho)?;
        rows.push(DivergenceRow {
            m,
            eps,
            n_max,
            s_vn,
            s_rel,
            s_rel_formula: -ent.formula + beta * energy + gibbs.log_z,
            renormalized: ent.renormalized,
            spectral_formula_gap: (ent.spectral - ent.formula).abs(),
            energy,
            admissibility_bound: state.admissibility_bound,
            orthonormality_defect: state.ons.orthonormality_defect(),
        });
    }
    if rows.len() < 2 {
        return Err(Error::Resource("fewer than two feasible lattice levels".into()));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.s_rel).collect();
    let (intercept, slope) = linear_fit(&xs, &ys);
    Ok(DivergenceReport {
        delta,
        beta,
        rows,
        slope,
        intercept,
        expected_slope: d as f64 * (1.0 + delta) * LN_2,
        warnings,
    })
}

/// `g(Re z) 1_{|Im z| ≤ 1/2}` with `g` a centered Gaussian of standard
/// deviation `sigma` (one mode). Its Boltzmann entropy equals that of `g`.
pub fn strip_gaussian(sigma: f64, grid: &crate::quadrature::QuadratureGrid) -> ClassicalDensity {
    let log_norm = 0.5 * (2.0 * PI * sigma * sigma).ln();
    ClassicalDensity::from_fn_normalized(
        std::sync::Arc::new(move |z: &[Complex64]| {
            if z[0].im.abs() <= 0.5 {
                (-z[0].re * z[0].re / (2.0 * sigma * sigma)).exp()
            } else {
                0.0
            }
        }),
        log_norm,
        grid,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_sizes_and_nesting() {
        for m in 0..4 {
            let l = build_lattice(m, 1).unwrap();
            assert_eq!(l.len(), lattice_len(m, 1).unwrap());
        }
        assert_eq!(build_lattice(1, 1).unwrap().len(), 5);
        let a = build_lattice(2, 1).unwrap();
        let b = build_lattice(3, 1).unwrap();
        for k in 0..a.len() {
            assert_eq!(a.point(k), b.point(k));
        }
    }

    #[test]
    fn two_point_residual() {
        let lattice = build_lattice(1, 1).unwrap();
        let eps = 0.5;
        let spec = FockSpec::new(1, 80, eps).unwrap();
        let ons = gram_schmidt_coherent(&lattice, &spec).unwrap();
        let z0 = lattice.point(0);
        let z1 = lattice.point(1);
        let s = crate::fock::coherent_overlap(&z0, &z1, eps);
        assert!((ons.gram_norms[1] - (1.0 - s.norm_sqr())).abs() < 1e-12);
        assert!(ons.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn uniform_density_is_maximally_mixed() {
        let lattice = build_lattice(1, 1).unwrap();
        let eps = 0.02;
        let spec = FockSpec::new(1, lattice_cutoff(&lattice, eps), eps).unwrap();
        let grid = crate::quadrature::QuadratureGrid::uniform(1, 2.0, 0.1).unwrap();
        let f = ClassicalDensity::from_fn_normalized(std::sync::Arc::new(|_: &[Complex64]| 1.0), 0.0, &grid);
        let st = lattice_state(&f, &lattice, &spec, Admissibility::NearDependenceOnly).unwrap();
        let e = lattice_entropy(&st);
        assert!((e.spectral - 5f64.ln()).abs() < 1e-10);
        assert!((e.formula - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn strict_policy_rejects_dense_lattices() {
        let lattice = build_lattice(1, 1).unwrap();
        let err = Admissibility::default().check(&lattice, 0.04).unwrap_err();
        match err {
            Error::Inadmissible { min_eps, .. } => {
                assert!(lattice.admissibility_bound(min_eps) <= ADMISSIBILITY_TOL * (1.0 + 1e-9))
            }
            e => panic!("unexpected {e}"),
        }
    }
}
