//! Hand-derived values for the documented examples.

mod common;

use std::f64::consts::{LN_2, PI, SQRT_2};

use num_complex::Complex64;

use semiclassical::fock::{
    annihilator, ccr_defect_unrestricted, coherent_vector, ladder_apply, number_operator,
    weyl_apply, weyl_operator, FockSpec, Ladder, OperatorMatrix, StateVector,
};
use semiclassical::free_energy::{
    classical_free_energy, gaussian_density, jensen_lower_bound_check, recovery_sequence,
    vn_free_energy, wehrl_free_energy,
};
use semiclassical::lattice::{build_lattice, gram_schmidt_coherent};
use semiclassical::quadrature::QuadratureGrid;
use semiclassical::quantize::{upper_symbol, PolySymbol, SymbolClassS};
use semiclassical::states::{coherent_column, gibbs_state, trace_distance, DensityMatrix};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn nonzeros(op: &OperatorMatrix) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for r in 0..op.dim() {
        for c in 0..op.dim() {
            let v = op.get(r, c);
            if v.norm() > 0.0 {
                out.push((r, c, v.re));
            }
        }
    }
    out
}

#[test]
fn annihilator_entries() {
    let a = annihilator(&FockSpec::new(1, 2, 1.0).unwrap(), 0).unwrap();
    assert_eq!(nonzeros(&a), vec![(0, 1, 1.0), (1, 2, SQRT_2)]);
    let a = annihilator(&FockSpec::new(1, 2, 0.25).unwrap(), 0).unwrap();
    let nz = nonzeros(&a);
    assert_eq!((nz[0].0, nz[0].1), (0, 1));
    assert!((nz[0].2 - 0.5).abs() < 1e-15 && (nz[1].2 - 0.5 * SQRT_2).abs() < 1e-15);
    let spec = FockSpec::new(2, 3, 0.5).unwrap();
    let vac = StateVector::vacuum(&spec);
    assert!(ladder_apply(&spec, 1, Ladder::Lower, &vac.entries).norm() == 0.0);
    assert!(annihilator(&spec, 2).is_err());
}

#[test]
fn number_operator_diagonals() {
    let n = number_operator(&FockSpec::new(1, 3, 1.0).unwrap());
    assert_eq!((0..4).map(|k| n.get(k, k).re).collect::<Vec<_>>(), vec![0.0, 1.0, 2.0, 3.0]);
    let n = number_operator(&FockSpec::new(2, 1, 0.5).unwrap());
    assert_eq!((0..4).map(|k| n.get(k, k).re).collect::<Vec<_>>(), vec![0.0, 0.5, 0.5, 1.0]);
}

#[test]
fn coherent_vectors() {
    let spec = FockSpec::new(1, 40, 1.0).unwrap();
    let v = coherent_vector(&spec, &[Complex64::new(0.0, 0.0)]).unwrap();
    assert_eq!(v.entries[0], ONE);
    assert_eq!(v.deficit, 0.0);
    let v = coherent_vector(&spec, &[ONE]).unwrap();
    let mut fact = 1.0;
    for n in 0..=40 {
        if n > 0 {
            fact *= n as f64;
        }
        let want = (-0.5f64).exp() / fact.sqrt();
        assert!((v.entries[n].re - want).abs() < 1e-15);
    }
    assert!(v.deficit < 1e-15);
}

#[test]
fn weyl_of_rescaled_point_makes_coherent_state() {
    let spec = FockSpec::new(1, 40, 0.5).unwrap();
    let z = Complex64::new(0.6, -0.3);
    let zeta = z * SQRT_2 / Complex64::new(0.0, spec.eps);
    let w = weyl_operator(&spec, &[zeta]).unwrap();
    let coh = coherent_vector(&spec, &[z]).unwrap();
    let vac = StateVector::vacuum(&spec);
    assert!((w.apply(&vac.entries) - &coh.entries).norm() < 1e-10);
    assert!((weyl_apply(&spec, &[zeta], &vac.entries).unwrap() - &coh.entries).norm() < 1e-10);
    let id = weyl_operator(&spec, &[Complex64::new(0.0, 0.0)]).unwrap();
    assert!(id.max_abs_diff(&OperatorMatrix::identity(spec.dim())) < 1e-13);
}

#[test]
fn unrestricted_ccr_corner() {
    for (n, eps) in [(4, 1.0), (7, 0.25)] {
        let spec = FockSpec::new(1, n, eps).unwrap();
        assert!((ccr_defect_unrestricted(&spec) - eps * (n as f64 + 1.0)).abs() < 1e-12);
    }
}

#[test]
fn quartic_upper_symbol() {
    let up = upper_symbol(&PolySymbol::radial(1, 2, 1.0));
    let eps = 0.3;
    let z = Complex64::new(0.7, 0.4);
    let r2 = z.norm_sqr();
    let want = r2 * r2 - 4.0 * eps * r2 + 2.0 * eps * eps;
    assert!((up.eval(&[z], eps).re - want).abs() < 1e-13);
}

#[test]
fn von_neumann_free_energy_examples() {
    // harmonic, ε = 1, β = log 2: q = 1/2, Tr(Nρ) = 1, S = 2 log 2, F = −1
    let spec = FockSpec::new(1, 80, 1.0).unwrap();
    let h = number_operator(&spec);
    let g = gibbs_state(&spec, &h, LN_2).unwrap();
    let r = vn_free_energy(&g.rho, &h, LN_2).unwrap();
    assert!((r.value + 1.0).abs() < 1e-12);
    // vacuum: S(|0⟩⟨0| ‖ Γ) = −log(1 − q) = log 2, relative form log 2/β = 1
    let mut pops = vec![0.0; spec.dim()];
    pops[0] = 1.0;
    let vac = DensityMatrix::from_diagonal(&spec, pops).unwrap();
    let r = vn_free_energy(&vac, &h, LN_2).unwrap();
    assert!((r.relative_value - 1.0).abs() < 1e-12);
    assert!(r.identity_defect() < 1e-12);
}

/// KL divergence of `e^{−|z|²/s}/(πs)` from `e^{−|z|²/t}/(πt)`.
fn gaussian_kl(s: f64, t: f64) -> f64 {
    (t / s).ln() + s / t - 1.0
}

#[test]
fn classical_free_energy_examples() {
    let h = SymbolClassS::harmonic(1, 1.0);
    let grid = QuadratureGrid::uniform(1, 9.0, 0.06).unwrap();
    let gamma = gaussian_density(vec![Complex64::new(0.0, 0.0)], 1.0, &grid);
    let r = classical_free_energy(&gamma, &h, 1.0, &grid).unwrap();
    assert!((r.value + PI.ln()).abs() < 1e-9);
    assert!(r.relative_value.abs() < 1e-10);
    let mu = gaussian_density(vec![Complex64::new(0.0, 0.0)], 0.6, &grid);
    let r = classical_free_energy(&mu, &h, 1.0, &grid).unwrap();
    assert!((r.relative_value - gaussian_kl(0.6, 1.0)).abs() < 1e-9);
}

#[test]
fn wehrl_free_energy_of_harmonic_gibbs() {
    // Husimi density of Γ is Gaussian with variance ε/(1−q); γ_{β,ε} has 1/β
    let beta = LN_2;
    let eps = 1.0;
    let h = SymbolClassS::harmonic(1, 1.0);
    let spec = FockSpec::new(1, 90, eps).unwrap();
    let g = gibbs_state(&spec, &number_operator(&spec), beta).unwrap();
    let grid = QuadratureGrid::uniform(1, 14.0, 0.07).unwrap();
    let r = wehrl_free_energy(&g.rho, &h, beta, &grid).unwrap();
    let v1 = eps / 0.5;
    let v2 = 1.0 / beta;
    assert!((r.relative_value - gaussian_kl(v1, v2) / beta).abs() < 1e-9);
    assert!(r.identity_defect() < 1e-8);
}

#[test]
fn jensen_harmonic_closed_form() {
    let h = SymbolClassS::harmonic(1, 1.0);
    let grid = QuadratureGrid::uniform(1, 8.0, 0.05).unwrap();
    for eps in [0.25, 0.0625] {
        let beta = 1.0f64;
        let q = (-beta * eps).exp();
        let lhs = beta * eps * q / (1.0 - q);
        let rhs = beta * (1.0 - q) * (1.0 / (beta * beta) - eps / beta) / eps;
        let r = jensen_lower_bound_check(&h, beta, eps, &grid).unwrap();
        assert!((r.lhs - lhs).abs() < 1e-10 && (r.rhs - rhs).abs() < 1e-9);
        assert!(r.gap() > 0.0);
    }
}

#[test]
fn narrow_gaussian_recovers_coherent_state() {
    let w = Complex64::new(0.4, 0.1);
    let eps = 0.25;
    let grid = QuadratureGrid::uniform(1, 0.9, 0.004).unwrap();
    let f = gaussian_density(vec![w], 1e-3, &grid);
    let spec = FockSpec::new(1, 40, eps).unwrap();
    let st = recovery_sequence(&f, &spec, &grid).unwrap();
    let pure = DensityMatrix::pure(&spec, &coherent_column(&spec, &[w])).unwrap();
    assert!(trace_distance(&st.rho, &pure) < 0.02);
}

#[test]
fn two_point_gram_schmidt() {
    let lattice = build_lattice(1, 1).unwrap();
    assert_eq!(build_lattice(0, 1).unwrap().len(), 1);
    assert_eq!(lattice.len(), 5);
    let eps = 0.3;
    let spec = FockSpec::new(1, 60, eps).unwrap();
    let ons = gram_schmidt_coherent(&lattice, &spec).unwrap();
    let s = (-(lattice.point(1)[0] - lattice.point(0)[0]).norm_sqr() / (2.0 * eps)).exp();
    assert!((ons.gram_norms[1].sqrt() - (1.0 - s * s).sqrt()).abs() < 1e-12);
    assert!(ons.orthonormality_defect() < 1e-8);
}
