//! Anti-Wick quantization of a classical density gives a sequence of quantum
//! states whose Husimi functions are the density smoothed at scale eps and
//! whose renormalized Wehrl entropy decreases to the Boltzmann entropy.

use num_complex::Complex64;
use semiclassical::free_energy::{gamma_upper_experiment, gaussian_density, RecoveryGrids};
use semiclassical::quantize::SymbolClassS;

fn main() -> semiclassical::Result<()> {
    let center = vec![Complex64::new(0.5, 0.25)];
    let variance = 0.1;
    let eps_list = [0.1, 0.05, 0.025, 0.0125];
    let grids = RecoveryGrids::for_gaussian(&center, variance, eps_list[0])?;
    let f = gaussian_density(center.clone(), variance, &grids.assembly);
    let h = SymbolClassS::harmonic(1, 1.0);
    let probe = vec![center.clone(), vec![Complex64::new(0.2, 0.0)]];
    let rows = gamma_upper_experiment(&f, &h, &eps_list, &grids, &probe)?;
    println!("eps      n_max  trace     S_W+log(pi eps)  S_B(f)     Husimi err  <H>       h(f)");
    for r in &rows {
        println!(
            "{:<7}  {:>5}  {:.6}  {:.8}       {:.8}  {:.1e}     {:.6}  {:.6}",
            r.eps, r.n_max, r.raw_trace, r.s_w_renorm, r.s_b, r.husimi_convolution_error, r.energy,
            r.classical_energy
        );
    }
    Ok(())
}
