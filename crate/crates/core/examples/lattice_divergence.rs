//! Relative entropy of coherent lattice states against the harmonic Gibbs
//! state grows like d(1+δ)M log 2 when ε(M) = 2^{-(2+δ)M}/π.

use semiclassical::lattice::{divergence_experiment, strip_gaussian, DivergenceOptions};
use semiclassical::quadrature::{boltzmann_entropy, QuadratureGrid};

fn main() -> semiclassical::Result<()> {
    let sigma = 0.3;
    let grid = QuadratureGrid::uniform(1, 2.5, 0.01)?;
    let f = strip_gaussian(sigma, &grid);
    let s_b = boltzmann_entropy(&f, &grid)?;
    let report = divergence_experiment(&f, 1, 1.0, &[1, 2, 3], &DivergenceOptions::default())?;
    println!("M  eps          n_max  S_vN      S_rel     S_rel(formula)  renormalized");
    for r in &report.rows {
        println!(
            "{}  {:.4e}  {:>6}  {:.6}  {:.6}  {:.6}        {:.6}",
            r.m, r.eps, r.n_max, r.s_vn, r.s_rel, r.s_rel_formula, r.renormalized
        );
    }
    println!("S_B(f) = {s_b:.6}");
    println!(
        "slope = {:.6}, expected d(1+delta) log 2 = {:.6}",
        report.slope, report.expected_slope
    );
    Ok(())
}
