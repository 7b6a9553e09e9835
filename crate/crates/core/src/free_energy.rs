//! Free-energy functionals, the entropy-convergence sweep and the
//! coherent-state recovery sequence.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result, ResultExt};
use crate::fock::{FockSpec, OperatorMatrix};
use crate::numeric::pairwise_sum;
use crate::quadrature::{
    boltzmann_entropy, classical_gibbs, norm_sqr, relative_entropy_classical,
    relative_entropy_sampled, ClassicalDensity, QuadratureGrid,
};
use crate::quantize::{
    anti_wick_from_samples, suggest_n_max, symbol_growth_bound, upper_symbol, wick_quantize,
    PolySymbol, SymbolClassS,
};
use crate::states::{
    gibbs_state, husimi, relative_entropy_vn, von_neumann_entropy, wehrl_entropy, DensityMatrix,
    GibbsState,
};

/// Tolerance on the identity `value = relative_value − log_partition/β`.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Dense Hamiltonians above this dimension are refused.
pub const DENSE_DIM_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FreeEnergyKind {
    Boltzmann,
    VonNeumann,
    Wehrl,
}

#[derive(Clone, Debug, Serialize)]
pub struct FreeEnergyReport {
    pub kind: FreeEnergyKind,
    pub value: f64,
    /// `S(· ‖ Gibbs)/β`.
    pub relative_value: f64,
    pub beta: f64,
    pub eps: Option<f64>,
    pub renormalized: bool,
    /// Constant with `value = relative_value − log_partition/β`.
    pub log_partition: f64,
}

impl FreeEnergyReport {
    /// `|value − (relative_value − log_partition/β)|`.
    pub fn identity_defect(&self) -> f64 {
        (self.value - (self.relative_value - self.log_partition / self.beta)).abs()
    }

    /// Subtracts `(d/β) log(πε)` from the value (quantum reports only).
    pub fn renormalize(&self, d: usize) -> Self {
        let mut out = self.clone();
        if let (Some(eps), false) = (self.eps, self.renormalized) {
            let shift = d as f64 * (PI * eps).ln();
            out.value -= shift / self.beta;
            out.log_partition += shift;
            out.renormalized = true;
        }
        out
    }

    fn checked(self) -> Result<Self> {
        let defect = self.identity_defect();
        let scale = 1.0 + self.value.abs();
        if !(defect <= IDENTITY_TOL * scale) {
            return Err(Error::ConvergenceFailure {
                levels: 0,
                detail: format!("{:?} free-energy identity off by {defect:e}", self.kind),
            });
        }
        Ok(self)
    }
}

/// `F_B(μ) = ∫ h dμ − S_B(μ)/β` and its relative form `S_B(μ‖γ_β)/β`.
pub fn classical_free_energy(
    mu: &ClassicalDensity,
    h: &SymbolClassS,
    beta: f64,
    grid: &QuadratureGrid,
) -> Result<FreeEnergyReport> {
    let hh = h.clone();
    let gamma = classical_gibbs(move |z| hh.eval(z), beta, grid)?;
    let energy = mu.expectation(|z| h.eval(z), grid)?;
    let s = boltzmann_entropy(mu, grid)?;
    let rel = relative_entropy_classical(mu, &gamma, grid)?;
    FreeEnergyReport {
        kind: FreeEnergyKind::Boltzmann,
        value: energy - s / beta,
        relative_value: rel / beta,
        beta,
        eps: None,
        renormalized: false,
        log_partition: gamma.log_normalization(),
    }
    .checked()
}

/// `F_vN(ρ) = Tr(Hρ) − S_vN(ρ)/β` and `S_vN(ρ‖Γ)/β`.
pub fn vn_free_energy(rho: &DensityMatrix, h: &OperatorMatrix, beta: f64) -> Result<FreeEnergyReport> {
    let gibbs = gibbs_state(rho.spec(), h, beta)?;
    vn_free_energy_with(rho, h, &gibbs, beta)
}

pub fn vn_free_energy_with(
    rho: &DensityMatrix,
    h: &OperatorMatrix,
    gibbs: &GibbsState,
    beta: f64,
) -> Result<FreeEnergyReport> {
    let energy = rho.expectation(h).re;
    let s = von_neumann_entropy(rho);
    let rel = relative_entropy_vn(rho, &gibbs.rho)?;
    FreeEnergyReport {
        kind: FreeEnergyKind::VonNeumann,
        value: energy - s / beta,
        relative_value: rel / beta,
        beta,
        eps: Some(rho.spec().eps),
        renormalized: false,
        log_partition: gibbs.log_z,
    }
    .checked()
}

/// `F_W(ρ) = ∫ h^up f dz/(πε)^d − S_B(φ)/β + (d/β) log(πε)` and the relative
/// form `S_B(φ‖γ_{β,ε})/β`, with `γ_{β,ε}` the Gibbs measure of `h^up_ε`.
pub fn wehrl_free_energy(
    rho: &DensityMatrix,
    h: &SymbolClassS,
    beta: f64,
    grid: &QuadratureGrid,
) -> Result<FreeEnergyReport> {
    let spec = *rho.spec();
    let d = spec.d as f64;
    let up = upper_symbol(h.poly()).at_eps(spec.eps);
    let field = husimi(rho, grid)?;
    let phi = field.density();
    let up_vals = grid.sample(|z| up.eval(z).re);
    let energy = grid.sum_sampled(&phi.iter().zip(&up_vals).map(|(a, b)| a * b).collect::<Vec<_>>());
    let s_b = -grid.sum_sampled(
        &phi.iter()
            .map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 })
            .collect::<Vec<_>>(),
    );
    let gamma = classical_gibbs(move |z| up.eval(z).re, beta, grid)?;
    let gamma_vals = gamma.values_on(grid)?;
    let rel = relative_entropy_sampled(&phi, &gamma_vals, grid);
    let log_vol = d * (PI * spec.eps).ln();
    let _ = wehrl_entropy(&field)?;
    FreeEnergyReport {
        kind: FreeEnergyKind::Wehrl,
        value: energy - s_b / beta + log_vol / beta,
        relative_value: rel / beta,
        beta,
        eps: Some(spec.eps),
        renormalized: false,
        log_partition: gamma.log_normalization() - log_vol,
    }
    .checked()
}

/// A quantum Hamiltonian together with its Gibbs state at a certified cutoff.
#[derive(Clone, Debug)]
pub struct Truncated {
    pub spec: FockSpec,
    pub hamiltonian: OperatorMatrix,
    pub gibbs: GibbsState,
}

/// Initial cutoff guess from the growth bound: occupations where
/// `β (C (εn)^p − C̃) ≈ 30`.
pub fn initial_cutoff(h: &SymbolClassS, beta: f64, eps: f64) -> Result<usize> {
    let probe = QuadratureGrid::uniform(h.d(), 1.0, 0.25)?;
    let b = symbol_growth_bound(h, &probe)?;
    let r2 = ((30.0 / beta + b.c_tilde) / b.c).powf(1.0 / b.p_max as f64);
    Ok(((r2 / eps).ceil() as usize).max(4))
}

/// Smallest cutoff (from the growth-bound guess, doubling) at which the
/// Gibbs state of `H = wick(h)` passes the boundary-sector check.
pub fn truncate(h: &SymbolClassS, beta: f64, eps: f64) -> Result<Truncated> {
    let mut n_max = initial_cutoff(h, beta, eps)?;
    for _ in 0..8 {
        let spec = FockSpec::new(h.d(), n_max, eps)?;
        if !h.poly().is_number_conserving() && spec.dim() > DENSE_DIM_CAP {
            return Err(Error::Resource(format!(
                "dense Hamiltonian of dimension {} at eps = {eps}",
                spec.dim()
            )));
        }
        let hamiltonian = wick_quantize(h.poly(), &spec)?;
        match gibbs_state(&spec, &hamiltonian, beta) {
            Ok(gibbs) => {
                return Ok(Truncated {
                    spec,
                    hamiltonian,
                    gibbs,
                })
            }
            Err(Error::Truncation { .. }) => n_max *= 2,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Truncation {
        detail: format!("no adequate cutoff found at eps = {eps}"),
        suggested_n_max: n_max,
    })
}

/// One row of an entropy-convergence sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub n_max: usize,
    /// `(πε)^d Z_{β,ε}`.
    pub z_scaled: f64,
    pub s_vn_renorm: f64,
    pub s_w_renorm: f64,
    pub s_b_target: f64,
    pub err_vn: f64,
    pub err_w: f64,
    pub f_vn_renorm: f64,
    pub f_w_renorm: f64,
    pub f_b_target: f64,
    /// `Z_{β,0} = ∫ e^{−βh}`.
    pub z_classical: f64,
    /// `∫ e^{−β h^up_ε}`.
    pub z_upper: f64,
    pub identity_defect_vn: f64,
    pub identity_defect_w: f64,
    pub husimi_normalization: f64,
    /// Largest change of (Z_scaled, S_vN, S_W) when the cutoff is doubled.
    pub cutoff_change: Option<f64>,
    /// Largest change of (S_W, S_B) when the grid spacing is halved.
    pub grid_change: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub grid: QuadratureGrid,
    pub check_cutoff: bool,
    pub check_grid: bool,
}

impl SweepOptions {
    /// Uniform grid wide enough for `e^{−βh}` and the Husimi functions of
    /// the Gibbs states in the sweep.
    pub fn for_symbol(h: &SymbolClassS, beta: f64) -> Result<Self> {
        let probe = QuadratureGrid::uniform(h.d(), 1.0, 0.25)?;
        let r = 1.3 * symbol_growth_bound(h, &probe)?.radius(beta);
        let cells = match h.d() {
            1 => 200.0,
            2 => 24.0,
            _ => 10.0,
        };
        Ok(SweepOptions {
            grid: QuadratureGrid::uniform(h.d(), r, 2.0 * r / cells)?,
            check_cutoff: false,
            check_grid: false,
        })
    }
}

struct RowCore {
    z_scaled: f64,
    s_vn: f64,
    s_w: f64,
    husimi_norm: f64,
    vn: FreeEnergyReport,
    w: FreeEnergyReport,
}

fn row_core(t: &Truncated, h: &SymbolClassS, beta: f64, grid: &QuadratureGrid) -> Result<RowCore> {
    let d = t.spec.d;
    let log_vol = d as f64 * (PI * t.spec.eps).ln();
    let s_vn = von_neumann_entropy(&t.gibbs.rho);
    let field = husimi(&t.gibbs.rho, grid)?;
    let s_w = wehrl_entropy(&field)?;
    let vn = vn_free_energy_with(&t.gibbs.rho, &t.hamiltonian, &t.gibbs, beta)?.renormalize(d);
    let w = wehrl_free_energy(&t.gibbs.rho, h, beta, grid)?.renormalize(d);
    Ok(RowCore {
        z_scaled: (t.gibbs.log_z + log_vol).exp(),
        s_vn: s_vn + log_vol,
        s_w: s_w + log_vol,
        husimi_norm: field.normalization_check,
        vn,
        w,
    })
}

/// Classical Gibbs targets on `grid`: `(S_B(γ_β), F_B(γ_β), Z_{β,0})`.
pub fn classical_targets(h: &SymbolClassS, beta: f64, grid: &QuadratureGrid) -> Result<(f64, f64, f64)> {
    let hh = h.clone();
    let gamma = classical_gibbs(move |z| hh.eval(z), beta, grid)?;
    let s = boltzmann_entropy(&gamma, grid)?;
    let log_z = gamma.log_normalization();
    Ok((s, -log_z / beta, log_z.exp()))
}

/// Renormalized quantum entropies and free energies of the Gibbs states of
/// `wick(h)` along `eps_list`, against the classical Gibbs targets.
pub fn entropy_convergence_experiment(
    h: &SymbolClassS,
    beta: f64,
    eps_list: &[f64],
    options: &SweepOptions,
) -> Result<Vec<ConvergenceRow>> {
    let grid = &options.grid;
    let (s_b, f_b, z_classical) = classical_targets(h, beta, grid).context("classical targets")?;
    let up_poly = upper_symbol(h.poly());
    eps_list
        .par_iter()
        .map(|&eps| -> Result<ConvergenceRow> {
            let t = truncate(h, beta, eps).context(&format!("cutoff at eps = {eps}"))?;
            let core = row_core(&t, h, beta, grid).context(&format!("row at eps = {eps}"))?;
            let up = up_poly.at_eps(eps);
            let z_upper = crate::quadrature::integrate_real(|z| (-beta * up.eval(z).re).exp(), grid);
            let cutoff_change = if options.check_cutoff {
                let spec2 = t.spec.with_n_max(2 * t.spec.n_max)?;
                let h2 = wick_quantize(h.poly(), &spec2)?;
                let g2 = gibbs_state(&spec2, &h2, beta)?;
                let t2 = Truncated {
                    spec: spec2,
                    hamiltonian: h2,
                    gibbs: g2,
                };
                let c2 = row_core(&t2, h, beta, grid)?;
                Some(
                    [
                        (c2.z_scaled - core.z_scaled).abs(),
                        (c2.s_vn - core.s_vn).abs(),
                        (c2.s_w - core.s_w).abs(),
                    ]
                    .into_iter()
                    .fold(0.0, f64::max),
                )
            } else {
                None
            };
            let grid_change = if options.check_grid {
                let fine = grid.densify()?;
                let c2 = row_core(&t, h, beta, &fine)?;
                let (s_b2, _, _) = classical_targets(h, beta, &fine)?;
                Some((c2.s_w - core.s_w).abs().max((s_b2 - s_b).abs()))
            } else {
                None
            };
            Ok(ConvergenceRow {
                eps,
                n_max: t.spec.n_max,
                z_scaled: core.z_scaled,
                s_vn_renorm: core.s_vn,
                s_w_renorm: core.s_w,
                s_b_target: s_b,
                err_vn: (core.s_vn - s_b).abs(),
                err_w: (core.s_w - s_b).abs(),
                f_vn_renorm: core.vn.value,
                f_w_renorm: core.w.value,
                f_b_target: f_b,
                z_classical,
                z_upper,
                identity_defect_vn: core.vn.identity_defect(),
                identity_defect_w: core.w.identity_defect(),
                husimi_normalization: core.husimi_norm,
                cutoff_change,
                grid_change,
            })
        })
        .collect()
}

/// Both sides of the Jensen lower bound
/// `β Tr(HΓ) = S_vN(Γ) + log Z ≥ (β/Z) ∫ h^up_ε e^{−βh} dz/(πε)^d`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct JensenReport {
    pub eps: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl JensenReport {
    pub fn gap(&self) -> f64 {
        self.lhs - self.rhs
    }
}

pub fn jensen_lower_bound_check(
    h: &SymbolClassS,
    beta: f64,
    eps: f64,
    grid: &QuadratureGrid,
) -> Result<JensenReport> {
    let t = truncate(h, beta, eps)?;
    let s = von_neumann_entropy(&t.gibbs.rho);
    let lhs = s - t.gibbs.log_z;
    let up = upper_symbol(h.poly()).at_eps(eps);
    let integral = crate::quadrature::integrate_real(
        |z| up.eval(z).re * (-beta * h.eval(z)).exp(),
        grid,
    );
    let vol = (PI * eps).powi(h.d() as i32);
    let rhs = beta * integral / vol * (-t.gibbs.log_z).exp();
    Ok(JensenReport { eps, lhs, rhs })
}

/// Trial state `ρ_ε(f) = ∫ f(z) |z_ε⟩⟨z_ε| dz`.
#[derive(Clone, Debug)]
pub struct RecoveryState {
    pub rho: DensityMatrix,
    /// Trace before normalization (below 1 by truncation and quadrature).
    pub raw_trace: f64,
}

/// Relative size below which density samples are dropped from the assembly.
pub const RECOVERY_SAMPLE_CUTOFF: f64 = 1e-18;

pub fn recovery_sequence(
    f: &ClassicalDensity,
    spec: &FockSpec,
    grid: &QuadratureGrid,
) -> Result<RecoveryState> {
    let vals = f.values_on(grid)?;
    let vmax = vals.iter().cloned().fold(0.0, f64::max);
    let vol = (PI * spec.eps).powi(spec.d as i32);
    let scaled: Vec<f64> = vals
        .iter()
        .map(|&v| if v > RECOVERY_SAMPLE_CUTOFF * vmax { v * vol } else { 0.0 })
        .collect();
    let op = anti_wick_from_samples(&scaled, spec, grid)?;
    let raw_trace = op.trace().re;
    let normalized = op.scale(Complex64::new(1.0 / raw_trace, 0.0));
    let rho = DensityMatrix::from_operator(spec, &normalized)?;
    Ok(RecoveryState { rho, raw_trace })
}

/// Cutoff that keeps the coherent deficit negligible for every point where
/// `f` has mass above the sample cutoff.
pub fn recovery_cutoff(f: &ClassicalDensity, grid: &QuadratureGrid, eps: f64) -> Result<usize> {
    let vals = f.values_on(grid)?;
    let vmax = vals.iter().cloned().fold(0.0, f64::max);
    let mut r2 = 0.0f64;
    for (k, v) in vals.iter().enumerate() {
        if *v > RECOVERY_SAMPLE_CUTOFF * vmax {
            r2 = r2.max(grid.node(k).iter().map(|c| c.norm_sqr()).fold(0.0, f64::max));
        }
    }
    Ok(suggest_n_max(r2, eps))
}

/// Gaussian convolution `∫ f(w) e^{−|z−w|^2/ε} dw/(πε)^d` by quadrature.
pub fn gaussian_convolution(
    f: &ClassicalDensity,
    grid: &QuadratureGrid,
    eps: f64,
    z: &[Complex64],
) -> Result<f64> {
    let vals = f.values_on(grid)?;
    let d = grid.d();
    let vol = (PI * eps).powi(d as i32);
    let terms: Vec<f64> = (0..grid.len())
        .map(|k| {
            let w = grid.node(k);
            let dist: f64 = z.iter().zip(w).map(|(a, b)| (a - b).norm_sqr()).sum();
            grid.weights()[k] * vals[k] * (-dist / eps).exp()
        })
        .collect();
    Ok(pairwise_sum(&terms) / vol)
}

/// Grids of a recovery sweep: `assembly` resolves `f` and the coherent
/// kernel at the smallest ε, `entropy` covers the (wider, smoother) Husimi
/// functions.
#[derive(Clone, Debug)]
pub struct RecoveryGrids {
    pub assembly: QuadratureGrid,
    pub entropy: QuadratureGrid,
}

impl RecoveryGrids {
    /// Grids for an isotropic Gaussian of the given center and variance.
    pub fn for_gaussian(center: &[Complex64], variance: f64, eps_max: f64) -> Result<Self> {
        let c = center.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let d = center.len();
        Ok(RecoveryGrids {
            assembly: QuadratureGrid::uniform(d, c + 7.0 * variance.sqrt(), 0.05)?,
            entropy: QuadratureGrid::uniform(d, c + 7.0 * (variance + eps_max).sqrt(), 0.1)?,
        })
    }
}

/// One ε of a recovery-sequence sweep.
#[derive(Clone, Debug, Serialize)]
pub struct RecoveryRow {
    pub eps: f64,
    pub n_max: usize,
    pub raw_trace: f64,
    /// `S_W(ρ_ε(f)) + d log(πε)`.
    pub s_w_renorm: f64,
    pub s_b: f64,
    /// Largest pointwise difference between the Husimi density and the
    /// Gaussian convolution of `f` on the probe points.
    pub husimi_convolution_error: f64,
    /// `Tr(H ρ_ε(f))` and `∫ h f`.
    pub energy: f64,
    pub classical_energy: f64,
}

/// Recovery-sequence sweep for the density `f`. `probe` lists the points at
/// which the Husimi function is compared with the direct convolution.
pub fn gamma_upper_experiment(
    f: &ClassicalDensity,
    h: &SymbolClassS,
    eps_list: &[f64],
    grids: &RecoveryGrids,
    probe: &[Vec<Complex64>],
) -> Result<Vec<RecoveryRow>> {
    let grid = &grids.entropy;
    let s_b = boltzmann_entropy(f, grid)?;
    let classical_energy = f.expectation(|z| h.eval(z), grid)?;
    let d = grid.d();
    eps_list
        .iter()
        .map(|&eps| -> Result<RecoveryRow> {
            let n_max = recovery_cutoff(f, &grids.assembly, eps)?;
            let spec = FockSpec::new(d, n_max, eps)?;
            let state = recovery_sequence(f, &spec, &grids.assembly).context("recovery state")?;
            let field = husimi(&state.rho, grid)?;
            let s_w = wehrl_entropy(&field)?;
            let log_vol = d as f64 * (PI * eps).ln();
            let vol = log_vol.exp();
            let probe_grid_values: Vec<f64> = {
                let single = probe
                    .iter()
                    .map(|z| crate::states::coherent_column(&spec, z))
                    .collect::<Vec<_>>();
                let op = state.rho.to_operator();
                single
                    .iter()
                    .map(|v| v.dotc(&op.apply(v)).re / vol)
                    .collect()
            };
            let mut worst = 0.0f64;
            for (z, hv) in probe.iter().zip(&probe_grid_values) {
                let conv = gaussian_convolution(f, &grids.assembly, eps, z)?;
                worst = worst.max((hv - conv).abs());
            }
            let hq = wick_quantize(h.poly(), &spec)?;
            Ok(RecoveryRow {
                eps,
                n_max,
                raw_trace: state.raw_trace,
                s_w_renorm: s_w + log_vol,
                s_b,
                husimi_convolution_error: worst,
                energy: state.rho.expectation(&hq).re,
                classical_energy,
            })
        })
        .collect()
}

/// `e^{−|z−c|^2/s}/(πs)^d`, a normalized isotropic Gaussian.
pub fn gaussian_density(center: Vec<Complex64>, s: f64, grid: &QuadratureGrid) -> ClassicalDensity {
    let d = center.len();
    let log_norm = d as f64 * (PI * s).ln();
    ClassicalDensity::from_fn_normalized(
        std::sync::Arc::new(move |z: &[Complex64]| {
            let r2: f64 = z.iter().zip(&center).map(|(a, b)| (a - b).norm_sqr()).sum();
            (-r2 / s).exp()
        }),
        log_norm,
        grid,
    )
}

/// Harmonic closed forms at `q = e^{−βε}` (one mode).
pub mod harmonic {
    use std::f64::consts::PI;

    pub fn q(beta: f64, eps: f64) -> f64 {
        (-beta * eps).exp()
    }

    /// `(πε) Z = πε/(1 − q)`.
    pub fn z_scaled(beta: f64, eps: f64) -> f64 {
        PI * eps / (-(-beta * eps).exp_m1())
    }

    /// `−log(1−q) − q log q/(1−q)`.
    pub fn s_vn(beta: f64, eps: f64) -> f64 {
        let q = q(beta, eps);
        let one_m_q = -(-beta * eps).exp_m1();
        -one_m_q.ln() + q * beta * eps / one_m_q
    }

    /// `−log(1−q) + 1`.
    pub fn s_w(beta: f64, eps: f64) -> f64 {
        let one_m_q = -(-beta * eps).exp_m1();
        1.0 - one_m_q.ln()
    }

    /// `1 + log(π/β)`.
    pub fn s_b(beta: f64) -> f64 {
        1.0 + (PI / beta).ln()
    }
}

/// Convenience: the symbol `|z|^2 + λ4 |z|^4` in one mode.
pub fn anharmonic_symbol(lambda4: f64) -> Result<SymbolClassS> {
    SymbolClassS::new(
        1,
        vec![
            crate::quantize::H0Block::radial(1, 1.0),
            crate::quantize::H0Block::radial(2, lambda4),
        ],
        PolySymbol::zero(1),
    )
}

/// `|z|^2` sampled as a plain function (used by callers building densities).
pub fn modulus_squared(z: &[Complex64]) -> f64 {
    norm_sqr(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::number_operator;
    use std::f64::consts::LN_2;

    #[test]
    fn harmonic_vn_free_energy() {
        let spec = FockSpec::new(1, 90, 1.0).unwrap();
        let h = number_operator(&spec);
        let g = gibbs_state(&spec, &h, LN_2).unwrap();
        let r = vn_free_energy(&g.rho, &h, LN_2).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12);
        assert!(r.relative_value.abs() < 1e-12);
    }

    #[test]
    fn classical_free_energy_at_gibbs() {
        let h = SymbolClassS::harmonic(1, 1.0);
        let grid = QuadratureGrid::uniform(1, 8.0, 0.08).unwrap();
        let gamma = classical_gibbs(modulus_squared, 1.0, &grid).unwrap();
        let r = classical_free_energy(&gamma, &h, 1.0, &grid).unwrap();
        assert!((r.value + PI.ln()).abs() < 1e-9);
        assert!(r.relative_value.abs() < 1e-12);
    }

    #[test]
    fn harmonic_sweep_matches_closed_forms() {
        let h = SymbolClassS::harmonic(1, 1.0);
        let opts = SweepOptions::for_symbol(&h, 1.0).unwrap();
        let rows = entropy_convergence_experiment(&h, 1.0, &[0.25, 0.0625], &opts).unwrap();
        for r in rows {
            assert!((r.z_scaled - harmonic::z_scaled(1.0, r.eps)).abs() < 1e-8);
            assert!((r.s_vn_renorm - harmonic::s_vn(1.0, r.eps) - (PI * r.eps).ln()).abs() < 1e-8);
            assert!((r.s_w_renorm - harmonic::s_w(1.0, r.eps) - (PI * r.eps).ln()).abs() < 1e-8);
            assert!(r.identity_defect_w < 1e-8 && r.identity_defect_vn < 1e-8);
        }
    }
}
