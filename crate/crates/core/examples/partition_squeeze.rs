//! Scaled quantum partition functions squeezed between the classical and the
//! upper-symbol partition functions, for the harmonic oscillator and a quartic
//! perturbation.

use semiclassical::free_energy::{anharmonic_symbol, classical_targets, harmonic, truncate, SweepOptions};
use semiclassical::quadrature::integrate_real;
use semiclassical::quantize::upper_symbol;

fn main() -> semiclassical::Result<()> {
    let beta = 1.0;
    let h = anharmonic_symbol(0.1)?;
    let opts = SweepOptions::for_symbol(&h, beta)?;
    let (_, _, z0) = classical_targets(&h, beta, &opts.grid)?;
    println!("harmonic: (pi eps) Z vs closed form");
    for eps in [0.25, 0.0625, 0.015625] {
        let t = truncate(&semiclassical::quantize::SymbolClassS::harmonic(1, 1.0), beta, eps)?;
        let scaled = std::f64::consts::PI * eps * t.gibbs.log_z.exp();
        println!("  eps {eps:<9} n_max {:>5}  {scaled:.12}  {:.12}", t.spec.n_max, harmonic::z_scaled(beta, eps));
    }
    println!("quartic: Z_0 <= (pi eps) Z <= Z_up");
    let up = upper_symbol(h.poly());
    for eps in [0.25, 0.125, 0.0625, 0.03125] {
        let t = truncate(&h, beta, eps)?;
        let scaled = std::f64::consts::PI * eps * t.gibbs.log_z.exp();
        let z_up = integrate_real(|z| (-beta * up.eval(z, eps).re).exp(), &opts.grid);
        println!("  eps {eps:<8} {z0:.8} <= {scaled:.8} <= {z_up:.8}");
    }
    Ok(())
}
