//! Structural property suite behind `check-invariants`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::fock::{ccr_defect, coherent_deficit, number_operator, FockSpec, OperatorMatrix};
use crate::free_energy::{
    anharmonic_symbol, classical_free_energy, entropy_convergence_experiment, gaussian_density,
    jensen_lower_bound_check, truncate, vn_free_energy, wehrl_free_energy, SweepOptions,
};
use crate::quadrature::{integrate_real, relative_entropy_sampled, QuadratureGrid};
use crate::quantize::{anti_wick_quantize, upper_symbol, SymbolClassS};
use crate::states::{
    calibrate_kappa, gibbs_state, husimi, relative_entropy_vn, von_neumann_entropy,
    wehrl_entropy, DensityMatrix, ThermalKernel,
};

#[derive(Clone, Debug, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    /// The quantity compared against the threshold (`value ≤ threshold`).
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl InvariantCheck {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        InvariantCheck {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

/// Smallest margin `S_W − S_vN` and smallest `S_vN(ρ‖σ) − S_W(ρ‖σ)` (and
/// smallest relative entropy) over `count` random states and pairs.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DominanceReport {
    pub min_entropy_gap: f64,
    pub min_relative_gap: f64,
    pub min_relative_entropy: f64,
    pub max_normalization_defect: f64,
}

/// Random Wishart states on `n_max = 10`, `ε = 1/2`.
pub fn wehrl_dominance(count: usize, seed: u64) -> Result<DominanceReport> {
    let spec = FockSpec::new(1, 10, 0.5)?;
    let grid = QuadratureGrid::uniform(1, 7.0, 0.05)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DominanceReport {
        min_entropy_gap: f64::INFINITY,
        min_relative_gap: f64::INFINITY,
        min_relative_entropy: f64::INFINITY,
        max_normalization_defect: 0.0,
    };
    for _ in 0..count {
        let r1 = rng.random_range(1..=spec.dim());
        let rho = DensityMatrix::random_wishart(&spec, r1, &mut rng)?;
        let sigma = DensityMatrix::random_wishart(&spec, spec.dim(), &mut rng)?;
        let fr = husimi(&rho, &grid)?;
        let fs = husimi(&sigma, &grid)?;
        let sw = wehrl_entropy(&fr)?;
        wehrl_entropy(&fs)?;
        out.min_entropy_gap = out.min_entropy_gap.min(sw - von_neumann_entropy(&rho));
        let rel_vn = relative_entropy_vn(&rho, &sigma)?;
        let rel_w = relative_entropy_sampled(&fr.density(), &fs.density(), &grid);
        out.min_relative_gap = out.min_relative_gap.min(rel_vn - rel_w);
        out.min_relative_entropy = out.min_relative_entropy.min(rel_vn.min(rel_w));
        for f in [&fr, &fs] {
            out.max_normalization_defect = out
                .max_normalization_defect
                .max((f.normalization_check - 1.0).abs());
        }
    }
    Ok(out)
}

/// `max |∫ |z⟩⟨z| dz/(πε) − 1|` over matrix entries of the low sectors.
pub fn resolution_of_identity_defect(spec: &FockSpec) -> Result<f64> {
    let grid = QuadratureGrid::gauss_hermite(spec.d, 2 * spec.n_max + 8, 1.0 / spec.eps)?;
    let op = anti_wick_quantize(|_| 1.0, spec, &grid)?;
    let low = spec.n_max / 2;
    let mut worst = 0.0f64;
    for r in 0..spec.dim() {
        for c in 0..spec.dim() {
            let inside = spec.occupations(r).iter().chain(spec.occupations(c).iter()).all(|&n| n <= low);
            if inside {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((op.get(r, c) - target).norm());
            }
        }
    }
    Ok(worst)
}

/// Runs the whole suite with a seeded generator.
pub fn check_invariants(seed: u64) -> Result<Vec<InvariantCheck>> {
    let mut out = Vec::new();
    let harmonic = SymbolClassS::harmonic(1, 1.0);
    let beta = 1.0;

    for (d, n, eps) in [(1, 30, 0.25), (2, 8, 0.5)] {
        let spec = FockSpec::new(d, n, eps)?;
        out.push(InvariantCheck::at_most(&format!("ccr_interior_d{d}"), ccr_defect(&spec), 1e-12));
    }
    let spec = FockSpec::new(1, 16, 0.5)?;
    out.push(InvariantCheck::at_most(
        "resolution_of_identity",
        resolution_of_identity_defect(&spec)?,
        1e-10,
    ));

    let dom = wehrl_dominance(50, seed)?;
    out.push(InvariantCheck::at_most("wehrl_dominance_margin", -dom.min_entropy_gap, -1e-10));
    out.push(InvariantCheck::at_most("relative_ordering_margin", -dom.min_relative_gap, -1e-10));
    out.push(InvariantCheck::at_most("relative_entropy_nonnegative", -dom.min_relative_entropy, 1e-10));
    out.push(InvariantCheck::at_most("husimi_normalization", dom.max_normalization_defect, 1e-6));

    // sweep identities, squeeze and certification
    let mut opts = SweepOptions::for_symbol(&harmonic, beta)?;
    opts.check_cutoff = true;
    opts.check_grid = true;
    let rows = entropy_convergence_experiment(&harmonic, beta, &[0.25, 0.0625], &opts)?;
    let mut ledger = 0.0f64;
    let mut squeeze = f64::NEG_INFINITY;
    let mut doubling = 0.0f64;
    for r in &rows {
        ledger = ledger.max(r.identity_defect_vn).max(r.identity_defect_w);
        squeeze = squeeze
            .max(r.z_classical - r.z_scaled)
            .max(r.z_scaled - r.z_upper);
        doubling = doubling
            .max(r.cutoff_change.unwrap_or(0.0))
            .max(r.grid_change.unwrap_or(0.0));
    }
    out.push(InvariantCheck::at_most("partition_squeeze", squeeze, 1e-12));
    out.push(InvariantCheck::at_most("doubling_stability", doubling, 1e-8));

    // identity ledgers and variational dominance on perturbed states
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let eps = 0.25;
    let t = truncate(&harmonic, beta, eps)?;
    let grid = opts.grid.clone();
    let f_gibbs = vn_free_energy(&t.gibbs.rho, &t.hamiltonian, beta)?;
    let mut dominance = f64::NEG_INFINITY;
    for _ in 0..10 {
        let small = FockSpec::new(1, 12, eps)?;
        let noise = DensityMatrix::random_wishart(&small, 4, &mut rng)?;
        let mixed = embed_mix(&t.gibbs.rho, &noise, rng.random_range(0.05..0.5))?;
        let r = vn_free_energy(&mixed, &t.hamiltonian, beta)?;
        let w = wehrl_free_energy(&mixed, &harmonic, beta, &grid)?;
        ledger = ledger.max(r.identity_defect()).max(w.identity_defect());
        dominance = dominance.max(f_gibbs.value - r.value);
    }
    let gamma = gaussian_density(vec![Complex64::new(0.0, 0.0)], 1.0 / beta, &grid);
    let f_b = classical_free_energy(&gamma, &harmonic, beta, &grid)?;
    for k in 0..10 {
        let s = 0.5 + 0.1 * k as f64;
        let c = Complex64::new(0.1 * k as f64, -0.05 * k as f64);
        let mu = gaussian_density(vec![c], s, &grid);
        let r = classical_free_energy(&mu, &harmonic, beta, &grid)?;
        ledger = ledger.max(r.identity_defect());
        dominance = dominance.max(f_b.value - r.value);
    }
    out.push(InvariantCheck::at_most("identity_ledgers", ledger, 1e-8));
    out.push(InvariantCheck::at_most("variational_dominance", dominance, 1e-10));

    // Husimi log bound and the monotone-limit identity at ε = 1/4
    let kernel = ThermalKernel::new(&t.spec, &t.hamiltonian, beta)?;
    let vol = PI * eps;
    let log_zs = t.gibbs.log_z + vol.ln();
    let mut log_bound = f64::NEG_INFINITY;
    let lf = crate::numeric::ln_factorials(t.spec.n_max);
    for z in grid.nodes() {
        // the bound concerns the untruncated state; skip nodes whose
        // coherent vector is cut by the truncation
        if coherent_deficit(&t.spec, z, &lf) > 1e-12 {
            continue;
        }
        let g = kernel.at(z) / t.gibbs.z;
        if g > 0.0 {
            let lhs = -(g / vol).ln();
            log_bound = log_bound.max(lhs - beta * harmonic.eval(z) - log_zs);
        }
    }
    out.push(InvariantCheck::at_most("husimi_log_bound", log_bound, 1e-10));
    let up = upper_symbol(harmonic.poly()).at_eps(eps);
    let quad = integrate_real(|z| up.eval(z).re * kernel.at(z), &grid) / vol;
    let spectral = t.gibbs.rho.expectation(&t.hamiltonian).re * t.gibbs.z;
    out.push(InvariantCheck::at_most(
        "monotone_limit_identity",
        (quad - spectral).abs() / spectral.abs(),
        1e-8,
    ));

    // Jensen lower bound, harmonic and anharmonic
    let anh = anharmonic_symbol(0.5)?;
    let anh_grid = SweepOptions::for_symbol(&anh, beta)?.grid;
    let mut jensen = f64::NEG_INFINITY;
    for e in [0.25, 0.0625] {
        jensen = jensen.max(-jensen_lower_bound_check(&harmonic, beta, e, &grid)?.gap());
        jensen = jensen.max(-jensen_lower_bound_check(&anh, beta, e, &anh_grid)?.gap());
    }
    out.push(InvariantCheck::at_most("jensen_lower_bound", jensen, 0.0));

    // relative Wehrl free energy of Γ_{β,ε} decreases to the classical value 0
    let mut prev = f64::INFINITY;
    let mut increase = f64::NEG_INFINITY;
    for e in [0.5, 0.25, 0.125, 0.0625] {
        let t = truncate(&harmonic, beta, e)?;
        let w = wehrl_free_energy(&t.gibbs.rho, &harmonic, beta, &grid)?;
        increase = increase.max(w.relative_value - prev).max(-w.relative_value - 1e-10);
        prev = w.relative_value;
    }
    out.push(InvariantCheck::at_most("gamma_lower_bound_monotone", increase, 0.0));

    let kappa = calibrate_kappa()?;
    out.push(InvariantCheck::at_most("kappa_calibration", (kappa - SQRT_2).abs(), 1e-6));
    Ok(out)
}

/// `(1−t) ρ + t σ` with `σ` embedded from a smaller cutoff.
fn embed_mix(rho: &DensityMatrix, sigma: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    let spec = *rho.spec();
    let small = sigma.to_operator().to_dense();
    let mut m = rho.to_operator().to_dense() * Complex64::new(1.0 - t, 0.0);
    for r in 0..small.nrows() {
        for c in 0..small.ncols() {
            m[(r, c)] += small[(r, c)] * t;
        }
    }
    DensityMatrix::from_operator(&spec, &OperatorMatrix::from_dense(m, true)?)
}

/// Gibbs state of `N_ε` (used by examples and tests).
pub fn harmonic_gibbs(spec: &FockSpec, beta: f64) -> Result<DensityMatrix> {
    Ok(gibbs_state(spec, &number_operator(spec), beta)?.rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_of_identity_low_sectors() {
        let spec = FockSpec::new(1, 12, 0.25).unwrap();
        assert!(resolution_of_identity_defect(&spec).unwrap() < 1e-10);
    }
}
