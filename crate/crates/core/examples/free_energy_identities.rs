//! The three free energies, each reported both directly and through its
//! relative-entropy form, with the defect of the identity relating the two.

use semiclassical::free_energy::{
    anharmonic_symbol, classical_free_energy, truncate, vn_free_energy_with, wehrl_free_energy,
    SweepOptions,
};
use semiclassical::quadrature::classical_gibbs;

fn main() -> semiclassical::Result<()> {
    let beta = 1.0;
    let h = anharmonic_symbol(0.1)?;
    let grid = SweepOptions::for_symbol(&h, beta)?.grid;
    let hc = h.clone();
    let mu = classical_gibbs(move |z| hc.eval(z), beta, &grid)?;
    let fb = classical_free_energy(&mu, &h, beta, &grid)?;
    println!("Boltzmann   F = {:.10}  defect {:.1e}", fb.value, fb.identity_defect());
    for eps in [0.25, 0.0625, 0.015625] {
        let t = truncate(&h, beta, eps)?;
        let vn = vn_free_energy_with(&t.gibbs.rho, &t.hamiltonian, &t.gibbs, beta)?.renormalize(1);
        let w = wehrl_free_energy(&t.gibbs.rho, &h, beta, &grid)?.renormalize(1);
        println!(
            "eps {eps:<9} F_vN = {:.10} (defect {:.1e})  F_W = {:.10} (defect {:.1e})",
            vn.value,
            vn.identity_defect(),
            w.value,
            w.identity_defect()
        );
    }
    Ok(())
}
