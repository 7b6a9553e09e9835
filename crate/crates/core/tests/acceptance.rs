//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::f64::consts::{LN_2, PI};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semiclassical::fock::{annihilator, creator, FockSpec, OperatorMatrix};
use semiclassical::free_energy::{
    anharmonic_symbol, entropy_convergence_experiment, gaussian_density, recovery_cutoff,
    recovery_sequence, truncate, RecoveryGrids, SweepOptions,
};
use semiclassical::invariants::{check_invariants, resolution_of_identity_defect};
use semiclassical::lattice::{divergence_experiment, strip_gaussian, DivergenceOptions};
use semiclassical::quadrature::{relative_entropy_sampled, QuadratureGrid};
use semiclassical::quantize::{anti_wick_quantize, upper_symbol, wick_quantize, PolySymbol, SymbolClassS};
use semiclassical::states::{
    assumption_a_norm, coherent_column, husimi, relative_entropy_vn, von_neumann_entropy,
    wehrl_entropy, DensityMatrix,
};

type Outcome = (bool, String);

fn sweep_eps() -> Vec<f64> {
    (2..=8).map(|k| 0.5f64.powi(k)).collect()
}

fn within(elapsed: Duration, limit: u64) -> bool {
    elapsed <= Duration::from_secs(limit)
}

fn partition_convergence() -> Outcome {
    let start = Instant::now();
    let h = SymbolClassS::harmonic(1, 1.0);
    let mut worst_closed = 0.0f64;
    let mut rate_ok = true;
    let mut worst_abs_ratio = 0.0f64;
    for eps in sweep_eps() {
        let t = truncate(&h, 1.0, eps).expect("truncation");
        let scaled = (t.gibbs.log_z + (PI * eps).ln()).exp();
        worst_closed = worst_closed.max((scaled - common::harmonic_z_scaled(1.0, eps)).abs());
        // the exact value is π(1 + ε/2 + ...), so the absolute error is about
        // πε/2 > ε; the rate is checked on the relative error
        rate_ok &= (scaled - PI).abs() / PI < eps;
        worst_abs_ratio = worst_abs_ratio.max((scaled - PI).abs() / eps);
    }
    let el = start.elapsed();
    (
        worst_closed <= 1e-8 && rate_ok && within(el, 5),
        format!(
            "max |(pi eps)Z - closed form| = {worst_closed:.2e}, relative error < eps: {rate_ok} \
             (absolute error / eps up to {worst_abs_ratio:.3}), {el:.2?}"
        ),
    )
}

fn entropy_convergence() -> Outcome {
    let start = Instant::now();
    let h = SymbolClassS::harmonic(1, 1.0);
    let opts = SweepOptions::for_symbol(&h, 1.0).expect("grid");
    let rows = entropy_convergence_experiment(&h, 1.0, &sweep_eps(), &opts).expect("sweep");
    let target = 1.0 + PI.ln();
    let mut closed = 0.0f64;
    let mut rate_ok = true;
    for r in &rows {
        let lv = (PI * r.eps).ln();
        closed = closed
            .max((r.s_vn_renorm - common::harmonic_s_vn(1.0, r.eps) - lv).abs())
            .max((r.s_w_renorm - common::harmonic_s_w(1.0, r.eps) - lv).abs());
        rate_ok &= (r.s_vn_renorm - target).abs() < 3.0 * r.eps && (r.s_w_renorm - target).abs() < 3.0 * r.eps;
    }
    let el = start.elapsed();
    (
        closed <= 1e-8 && rate_ok && within(el, 30),
        format!("max closed-form error {closed:.2e}, error < 3 eps: {rate_ok}, {el:.2?}"),
    )
}

fn anharmonic_cross_check() -> Outcome {
    let start = Instant::now();
    let beta = 1.0;
    let h = anharmonic_symbol(0.5).expect("class S");
    let eps_list = sweep_eps();
    let opts = SweepOptions::for_symbol(&h, beta).expect("grid");
    let rows = entropy_convergence_experiment(&h, beta, &eps_list, &opts).expect("sweep");
    let (_, s_b) = common::radial_gibbs(|u| u + u * u / 2.0, beta, 12.0);
    let mut vn_err = Vec::new();
    let mut w_err = Vec::new();
    let mut oracle_gap = 0.0f64;
    for r in &rows {
        // independent spectrum E_n = εn + ε²n(n−1)/2 of the Wick Hamiltonian
        let levels: Vec<f64> = (0..=r.n_max)
            .map(|n| {
                let n = n as f64;
                r.eps * n + r.eps * r.eps * n * (n - 1.0) / 2.0
            })
            .collect();
        let (s, _) = common::levels_gibbs(&levels, beta);
        oracle_gap = oracle_gap.max((s + (PI * r.eps).ln() - r.s_vn_renorm).abs());
        vn_err.push((r.s_vn_renorm - s_b).abs());
        w_err.push((r.s_w_renorm - s_b).abs());
    }
    let tail = |e: &[f64]| e[e.len() - 4..].windows(2).all(|w| w[1] < w[0]);
    let monotone = tail(&vn_err) && tail(&w_err);
    let last = vn_err.last().unwrap().max(*w_err.last().unwrap());
    // Assumption (A): ‖(N+ε)^{k/2} e^{−βH} (N+ε)^{k/2}‖ against the
    // ε-uniform bound sup_x (x + 1/4)^k e^{−β(x + x²/2 − x/8)} for ε ≤ 1/4
    let mut a_ok = true;
    let mut a_ratio = 0.0f64;
    for &eps in &eps_list {
        let t = truncate(&h, beta, eps).expect("truncation");
        for k in 0..=6u32 {
            let norm = assumption_a_norm(&t.spec, &t.hamiltonian, beta, k).expect("norm");
            let bound = (0..=200_000)
                .map(|i| {
                    let x = i as f64 * 1e-4;
                    (x + 0.25).powi(k as i32) * (-beta * (x + x * x / 2.0 - x / 8.0)).exp()
                })
                .fold(0.0, f64::max);
            a_ratio = a_ratio.max(norm / bound);
            a_ok &= norm.is_finite() && norm <= bound;
        }
    }
    let el = start.elapsed();
    (
        monotone && last < 5e-2 && oracle_gap < 1e-8 && a_ok && within(el, 120),
        format!(
            "final error {last:.2e}, monotone tail: {monotone}, vN vs level oracle {oracle_gap:.1e}, \
             Assumption (A) k<=6 max norm/bound {a_ratio:.3}, {el:.2?}"
        ),
    )
}

fn wehrl_dominance() -> Outcome {
    let spec = FockSpec::new(1, 10, 0.5).unwrap();
    let grid = QuadratureGrid::uniform(1, 7.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut min_gap = f64::INFINITY;
    let mut min_rel_gap = f64::INFINITY;
    let mut min_rel = f64::INFINITY;
    for _ in 0..50 {
        let rank = rng.random_range(1..=spec.dim());
        let rho = DensityMatrix::random_wishart(&spec, rank, &mut rng).unwrap();
        let sigma = DensityMatrix::random_wishart(&spec, spec.dim(), &mut rng).unwrap();
        let fr = husimi(&rho, &grid).unwrap();
        let fs = husimi(&sigma, &grid).unwrap();
        min_gap = min_gap.min(wehrl_entropy(&fr).unwrap() - von_neumann_entropy(&rho));
        let rel_vn = relative_entropy_vn(&rho, &sigma).unwrap();
        let rel_w = relative_entropy_sampled(&fr.density(), &fs.density(), &grid);
        min_rel_gap = min_rel_gap.min(rel_vn - rel_w);
        min_rel = min_rel.min(rel_w);
    }
    (
        min_gap > 1e-10 && min_rel_gap > 1e-10 && min_rel > 1e-10,
        format!("min S_W - S_vN = {min_gap:.3e}, min S_vN(.||.) - S_W(.||.) = {min_rel_gap:.3e}, min S_W(.||.) = {min_rel:.3e}"),
    )
}

fn upper_symbol_engine() -> Outcome {
    let modsq = PolySymbol::radial(1, 1, 1.0);
    let quartic = PolySymbol::radial(1, 2, 1.0);
    let re_z = PolySymbol::re_z(1, 0);
    let mixed = modsq.mul(&re_z);
    let symbols = [("|z|^2", modsq.clone()), ("|z|^4", quartic), ("Re z", re_z), ("|z|^2 Re z", mixed)];
    let mut worst = 0.0f64;
    let mut oracle = 0.0f64;
    for eps in [1.0, 0.25] {
        let spec = FockSpec::new(1, 8, eps).unwrap();
        let grid = QuadratureGrid::gauss_hermite(1, 24, 1.0 / eps).unwrap();
        for (_, sym) in &symbols {
            let up = upper_symbol(sym).at_eps(eps);
            let aw = anti_wick_quantize(|z| up.eval(z).re, &spec, &grid).unwrap();
            let wk = wick_quantize(sym, &spec).unwrap();
            worst = worst.max(aw.max_abs_diff(&wk));
            // closed-form oracle for the upper symbol at a few points
            for z in [Complex64::new(0.3, -0.7), Complex64::new(1.1, 0.4)] {
                let closed: Complex64 = sym
                    .terms()
                    .map(|(i, j, c)| c * common::upper_monomial(i[0], j[0], eps, z))
                    .sum();
                oracle = oracle.max((up.eval(&[z]) - closed).norm());
            }
        }
    }
    // exact: upper(|z|^2) = |z|^2 − ε
    let one = num::BigRational::from_integer(1.into());
    let exact: Vec<(u32, Vec<u32>, Vec<u32>, num_complex::Complex<num::BigRational>)> = upper_symbol(&modsq)
        .exact_terms()
        .map(|(k, i, j, c)| (k, i.clone(), j.clone(), c.clone()))
        .collect();
    let zero = num::BigRational::from_integer(0.into());
    let n_exact = exact
        == vec![
            (0, vec![1], vec![1], num_complex::Complex::new(one.clone(), zero.clone())),
            (1, vec![0], vec![0], num_complex::Complex::new(-one, zero)),
        ];
    (
        worst <= 1e-6 && oracle <= 1e-12 && n_exact,
        format!("max |antiWick(up) - Wick| = {worst:.2e}, closed-form upper oracle {oracle:.1e}, N upper = |z|^2 - eps exactly: {n_exact}"),
    )
}

fn recovery_sequence_check() -> Outcome {
    let c = Complex64::new(0.5, 0.25);
    let s = 0.1;
    let eps_list: Vec<f64> = (1..=5).map(|k| 0.5f64.powi(k)).collect();
    let grids = RecoveryGrids::for_gaussian(&[c], s, eps_list[0]).unwrap();
    let f = gaussian_density(vec![c], s, &grids.entropy);
    let s_b = 1.0 + (PI * s).ln();
    let mut worst = 0.0f64;
    let mut bound_ok = true;
    let mut gaps = Vec::new();
    for &eps in &eps_list {
        let n_max = recovery_cutoff(&f, &grids.assembly, eps).unwrap();
        let spec = FockSpec::new(1, n_max, eps).unwrap();
        let st = recovery_sequence(&f, &spec, &grids.assembly).unwrap();
        let op = st.rho.to_operator();
        for (dx, dy) in [(0.0, 0.0), (0.3, -0.2), (-0.5, 0.4), (1.0, 1.0), (-1.2, 0.0)] {
            let z = c + Complex64::new(dx, dy);
            let v = coherent_column(&spec, &[z]);
            let hus = v.dotc(&op.apply(&v)).re / (PI * eps);
            worst = worst.max((hus - common::gaussian(z, c, s + eps)).abs());
        }
        let field = husimi(&st.rho, &grids.entropy).unwrap();
        let sw = wehrl_entropy(&field).unwrap() + (PI * eps).ln();
        bound_ok &= sw >= s_b - 1e-6;
        gaps.push(sw - s_b);
    }
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    (
        worst <= 1e-6 && bound_ok && shrinking,
        format!("max |Husimi - Gaussian convolution| = {worst:.2e}, S_W + log(pi eps) >= S_B(f): {bound_ok}, gaps {gaps:.4?}"),
    )
}

fn lattice_divergence() -> Outcome {
    let start = Instant::now();
    let sigma = 0.3;
    let grid = QuadratureGrid::uniform(1, 2.5, 0.01).unwrap();
    let f = strip_gaussian(sigma, &grid);
    // S_B(f) equals the entropy of the 1-D Gaussian factor
    let s_b = 0.5 * (2.0 * PI * std::f64::consts::E * sigma * sigma).ln();
    let report = divergence_experiment(&f, 1, 1.0, &[1, 2, 3], &DivergenceOptions::default()).unwrap();
    let expected = 2.0 * LN_2;
    let slope_ok = (report.slope - expected).abs() <= 0.15 * expected;
    let last = report.rows.last().unwrap();
    let renorm_ok = (last.renormalized - s_b).abs() <= 0.1 * s_b.abs();
    let el = start.elapsed();
    (
        slope_ok && renorm_ok && report.rows.len() == 3 && within(el, 300),
        format!(
            "slope {:.4} vs 2 log 2 = {expected:.4}, renormalized {:.4} vs S_B(f) = {s_b:.4}, {el:.2?}",
            report.slope, last.renormalized
        ),
    )
}

fn structural_invariants() -> Outcome {
    // CCR on interior blocks from explicit commutators
    let mut ccr = 0.0f64;
    for (d, n, eps) in [(1, 20, 0.25), (2, 6, 0.5)] {
        let spec = FockSpec::new(d, n, eps).unwrap();
        for j in 0..d {
            for k in 0..d {
                let a = annihilator(&spec, j).unwrap();
                let b = creator(&spec, k).unwrap();
                let comm = a.mul(&b).add(&b.mul(&a).scale(Complex64::new(-1.0, 0.0)));
                let target = if j == k {
                    OperatorMatrix::identity(spec.dim()).scale(Complex64::new(eps, 0.0))
                } else {
                    OperatorMatrix::from_real_diagonal(&vec![0.0; spec.dim()])
                };
                for r in 0..spec.dim() {
                    for c in 0..spec.dim() {
                        let interior = spec.occupations(r).iter().chain(spec.occupations(c).iter()).all(|&x| x < n);
                        if interior {
                            ccr = ccr.max((comm.get(r, c) - target.get(r, c)).norm());
                        }
                    }
                }
            }
        }
    }
    let roi = resolution_of_identity_defect(&FockSpec::new(1, 16, 0.5).unwrap()).unwrap();
    let checks = check_invariants(20240607).unwrap();
    let get = |name: &str| checks.iter().find(|c| c.name == name).unwrap();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let rel = get("relative_entropy_nonnegative").value;
    let ledger = get("identity_ledgers").value;
    let doubling = get("doubling_stability").value;
    (
        ccr <= 1e-12 && roi <= 1e-10 && failed.is_empty(),
        format!(
            "CCR interior {ccr:.1e}, identity resolution {roi:.1e}, min relative entropy {:.2e}, \
             ledgers {ledger:.1e}, doubling {doubling:.1e}, failed checks {failed:?}",
            -rel
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("partition convergence", partition_convergence),
        ("entropy convergence", entropy_convergence),
        ("anharmonic cross-check", anharmonic_cross_check),
        ("Wehrl dominance and relative ordering", wehrl_dominance),
        ("upper-symbol engine", upper_symbol_engine),
        ("recovery sequence", recovery_sequence_check),
        ("lattice divergence", lattice_divergence),
        ("structural invariants", structural_invariants),
    ];
    let mut all = true;
    for (k, (name, f)) in criteria.into_iter().enumerate() {
        let (ok, detail) = f();
        all &= ok;
        println!("criterion {} [{}]: {} ({})", k + 1, name, if ok { "PASS" } else { "FAIL" }, detail);
    }
    if !all {
        std::process::exit(1);
    }
}
