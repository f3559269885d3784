//! Squeezing a packet into a box with ever sharper walls: the Fisher length
//! shrinks, the nonclassical momentum spread grows, the product stays put.

use exact_uncertainty::uncertainty::{confinement_study, ConfinementSetup};
use exact_uncertainty::Result;

fn main() -> Result<()> {
    let setup = ConfinementSetup {
        x_min: -8.0,
        x_max: 8.0,
        a: -1.0,
        b: 1.0,
        x0: 0.0,
        sigma: 1.0,
        cells: 4.0,
        hbar: 1.0,
    };
    println!(
        "{:>6} {:>10} {:>10} {:>14} {:>12}",
        "n", "deltaX", "dP_nc", "product", "untruncated"
    );
    for row in confinement_study(&setup, &[256, 512, 1024, 2048, 4096])? {
        println!(
            "{:>6} {:>10.6} {:>10.6} {:>14.12} {:>12.6}",
            row.n, row.delta_x, row.dp_nc, row.product, row.control_delta_x
        );
    }
    Ok(())
}
