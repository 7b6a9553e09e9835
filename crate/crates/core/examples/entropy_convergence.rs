//! Renormalized von Neumann and Wehrl entropies of Gibbs states approach the
//! classical Boltzmann entropy as eps shrinks.

use semiclassical::free_energy::{anharmonic_symbol, entropy_convergence_experiment, SweepOptions};

fn main() -> semiclassical::Result<()> {
    let beta = 1.0;
    let h = anharmonic_symbol(0.1)?;
    let opts = SweepOptions::for_symbol(&h, beta)?;
    let eps_list = [0.25, 0.125, 0.0625, 0.03125, 0.015625];
    let rows = entropy_convergence_experiment(&h, beta, &eps_list, &opts)?;
    println!("eps        n_max  S_vN+log(pi eps)  S_W+log(pi eps)  S_B         err_vN    err_W");
    for r in &rows {
        println!(
            "{:<9}  {:>5}  {:.10}      {:.10}     {:.8}  {:.2e}  {:.2e}",
            r.eps, r.n_max, r.s_vn_renorm, r.s_w_renorm, r.s_b_target, r.err_vn, r.err_w
        );
    }
    Ok(())
}
