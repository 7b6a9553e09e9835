//! Ladder operators on a truncated Fock space, the canonical commutation
//! defect, and coherent states produced by a Weyl operator acting on the vacuum.

use num_complex::Complex64;
use semiclassical::fock::{
    annihilator, ccr_defect, ccr_defect_unrestricted, coherent_overlap, coherent_vector,
    creator, weyl_operator, FockSpec, StateVector,
};

fn main() -> semiclassical::Result<()> {
    let spec = FockSpec::new(1, 4, 0.25)?;
    let a = annihilator(&spec, 0)?;
    let ad = creator(&spec, 0)?;
    println!("a on (d=1, n_max=4, eps=0.25):");
    for r in 0..spec.dim() {
        let row: Vec<String> = (0..spec.dim()).map(|c| format!("{:6.3}", a.get(r, c).re)).collect();
        println!("  [{}]", row.join(" "));
    }
    let comm = a.mul(&ad).add(&ad.mul(&a).scale(Complex64::new(-1.0, 0.0)));
    println!("[a, a*] diagonal: {:?}", (0..spec.dim()).map(|k| comm.get(k, k).re).collect::<Vec<_>>());
    println!(
        "CCR defect below the top level: {:.2e}, including it: {:.3}",
        ccr_defect(&spec),
        ccr_defect_unrestricted(&spec)
    );

    let spec = FockSpec::new(1, 60, 0.5)?;
    let z = Complex64::new(0.8, -0.4);
    let zeta = z * std::f64::consts::SQRT_2 / Complex64::new(0.0, spec.eps);
    let w = weyl_operator(&spec, &[zeta])?;
    let from_weyl = w.apply(&StateVector::vacuum(&spec).entries);
    let direct = coherent_vector(&spec, &[z])?;
    println!(
        "|W(zeta) vac - coherent(z)| = {:.2e}, truncation deficit {:.2e}",
        (from_weyl - &direct.entries).norm(),
        direct.deficit
    );
    let w2 = Complex64::new(0.1, 0.3);
    let overlap = coherent_overlap(&[z], &[w2], spec.eps);
    println!(
        "|<z|w>|^2 = {:.6}, exp(-|z-w|^2/eps) = {:.6}",
        overlap.norm_sqr(),
        (-(z - w2).norm_sqr() / spec.eps).exp()
    );
    Ok(())
}
