//! Wehrl entropy dominates von Neumann entropy, while the relative entropies
//! come in the opposite order. Random mixed states against a harmonic Gibbs state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semiclassical::fock::{number_operator, FockSpec};
use semiclassical::quadrature::QuadratureGrid;
use semiclassical::states::{
    gibbs_state, husimi, relative_entropy_vn, von_neumann_entropy, wehrl_entropy,
    wehrl_relative_entropy, DensityMatrix,
};

fn main() -> semiclassical::Result<()> {
    let spec = FockSpec::new(1, 60, 0.5)?;
    let grid = QuadratureGrid::uniform(1, 9.0, 0.05)?;
    let gibbs = gibbs_state(&spec, &number_operator(&spec), 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("rank  S_vN      S_W       S_vN(.||G)  S_W(.||G)");
    for rank in 1..=4 {
        let rho = DensityMatrix::random_wishart(&spec, rank, &mut rng)?;
        let field = husimi(&rho, &grid)?;
        println!(
            "{rank:>4}  {:.6}  {:.6}  {:.6}    {:.6}",
            von_neumann_entropy(&rho),
            wehrl_entropy(&field)?,
            relative_entropy_vn(&rho, &gibbs.rho)?,
            wehrl_relative_entropy(&rho, &gibbs.rho, &grid)?
        );
    }
    Ok(())
}
