//! Which combination `A I_u + B I_v + C I_w + D I_r` of the four basis
//! functionals can describe momentum fluctuations? Requiring additivity over
//! independent subsystems and the `k^2` law under dilations leaves only the
//! Fisher term.

use exact_uncertainty::theorem::{
    additivity_check, basis_terms, coefficient_filter, fluctuation_from_theorem, gaussian_density,
    scaling_check, GaussianMixture,
};
use exact_uncertainty::{Grid1D, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let grid = Grid1D::new(-32.0, 32.0, 1024)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ensemble = vec![
        gaussian_density(&grid, 0.0, 1.0)?,
        GaussianMixture::random(&mut rng).density(&grid)?,
        GaussianMixture::random(&mut rng).density(&grid)?,
    ];
    for p in &ensemble {
        let b = basis_terms(p)?;
        println!(
            "I_u {:+.6}  I_v {:+.6}  I_w {:.6}  I_r {:.6}",
            b.i_u, b.i_v, b.i_w, b.i_r
        );
    }

    let small = Grid1D::new(-16.0, 16.0, 256)?;
    let add = additivity_check(
        &gaussian_density(&small, 0.0, 1.0)?,
        &gaussian_density(&small, 1.0, 2.0)?,
    )?;
    for t in &add.terms {
        println!(
            "additivity {:?}: product {:+.10} sum {:+.10}",
            t.term, t.product, t.sum
        );
    }

    let mut reports = Vec::new();
    for p in &ensemble {
        for k in [0.5, 2.0, 3.0] {
            let r = scaling_check(p, k)?;
            let ratios: Vec<String> = r
                .terms
                .iter()
                .map(|t| format!("{:?} {:.4}", t.term, t.ratio_to_k2))
                .collect();
            println!("k = {k}: ratio to k^2 -> {}", ratios.join(", "));
            reports.push(r);
        }
    }
    let mask = coefficient_filter(&reports)?;
    println!("surviving coefficients (A,B,C,D) = {mask}");

    let f = fluctuation_from_theorem(&ensemble[1], 0.25)?;
    println!("deltaX * dN = {:.12} (sqrt C = 0.5)", f.product);
    Ok(())
}
