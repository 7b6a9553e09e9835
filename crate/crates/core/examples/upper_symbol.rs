//! Exact upper symbols of polynomial symbols, checked against Wick quantization
//! through anti-Wick quantization on a Gauss-Hermite grid.

use semiclassical::fock::FockSpec;
use semiclassical::quadrature::QuadratureGrid;
use semiclassical::quantize::{anti_wick_quantize, upper_symbol, wick_quantize, PolySymbol};

fn main() -> semiclassical::Result<()> {
    let quartic = PolySymbol::radial(1, 2, 1.0);
    let up = upper_symbol(&quartic);
    println!("symbol: {quartic}");
    println!("upper symbol, exact coefficients (power of eps, zbar index, z index, coefficient):");
    for (k, i, j, c) in up.exact_terms() {
        println!("  eps^{k}  zbar^{i:?} z^{j:?}  {c}");
    }

    let sym = PolySymbol::radial(1, 1, 1.0).add(&quartic);
    let up = upper_symbol(&sym);
    for eps in [0.5, 0.125] {
        let spec = FockSpec::new(1, 10, eps)?;
        let wick = wick_quantize(&sym, &spec)?;
        let grid = QuadratureGrid::gauss_hermite(1, 40, 1.0 / eps)?;
        let anti = anti_wick_quantize(|z| up.eval(z, eps).re, &spec, &grid)?;
        // the top levels feel the truncation; compare the interior block
        let mut err = 0.0f64;
        for r in 0..7 {
            for c in 0..7 {
                err = err.max((anti.get(r, c) - wick.get(r, c)).norm());
            }
        }
        println!("eps = {eps}: max |antiWick(up) - Wick| on levels < 7 = {err:.2e}");
    }
    Ok(())
}
