//! Position/momentum statistics of a few states and the exact relation
//! `deltaX * dP_nc = hbar/2`, which holds even when Heisenberg is far from tight.
//!
//! cargo run --example exact_product -- "superposition:x0=-2/2,sigma=1,k0=1/-1"

use exact_uncertainty::state::make_state;
use exact_uncertainty::uncertainty::{
    cramer_rao_check, kinetic_decomposition, variance_decomposition,
};
use exact_uncertainty::{Grid1D, Result, StateSpec};

fn main() -> Result<()> {
    let mut specs: Vec<String> = std::env::args().skip(1).collect();
    if specs.is_empty() {
        specs = [
            "gaussian:sigma=1",
            "boosted_gaussian:k0=3",
            "chirped_gaussian:sigma=0.8,alpha=0.6",
            "superposition:x0=-2/2,sigma=0.9,k0=1/-1",
        ]
        .map(String::from)
        .to_vec();
    }
    let grid = Grid1D::new(-16.0, 16.0, 1024)?;
    let hbar = 1.0;
    println!(
        "{:<44} {:>9} {:>9} {:>9} {:>9} {:>12} {:>9}",
        "state", "dX", "deltaX", "dP_cl", "dP_nc", "product", "dX*dP"
    );
    for text in &specs {
        let spec: StateSpec = text.parse()?;
        let psi = make_state(&spec, &grid, hbar)?;
        let r = variance_decomposition(&psi, hbar)?;
        println!(
            "{:<44} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>12.10} {:>9.5}",
            text, r.dx, r.delta_x, r.dp_cl, r.dp_nc, r.product_exact, r.heisenberg
        );
        let kin = kinetic_decomposition(&psi, hbar, 1.0)?;
        let cr = cramer_rao_check(&psi.density())?;
        println!(
            "    kinetic {:.6} = classical {:.6} + nonclassical {:.6};  dX >= deltaX: {}",
            kin.total, kin.classical, kin.nonclassical, cr.holds
        );
        for v in r.violations() {
            println!("    violated: {v}");
        }
    }
    Ok(())
}
