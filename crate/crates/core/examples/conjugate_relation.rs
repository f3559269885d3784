//! The same exact relation in the momentum representation: the momentum
//! Fisher length times the nonclassical position spread is also `hbar/2`.

use exact_uncertainty::state::make_state;
use exact_uncertainty::uncertainty::conjugate_uncertainty;
use exact_uncertainty::{Grid1D, Result};

fn main() -> Result<()> {
    let grid = Grid1D::new(-20.0, 20.0, 1024)?;
    for hbar in [0.5, 1.0, 2.0] {
        for spec in [
            "gaussian:sigma=1.2",
            "chirped_gaussian:sigma=0.9,alpha=0.5",
            "superposition:x0=-1.5/1.5,sigma=1,k0=0.5/-0.5",
        ] {
            let psi = make_state(&spec.parse()?, &grid, hbar)?;
            let r = conjugate_uncertainty(&psi, hbar)?;
            println!(
                "hbar={hbar:<4} {spec:<48} deltaP {:.6}  dX_nc {:.6}  product/(hbar/2) {:.12}",
                r.delta_p,
                r.dx_nc,
                r.product / (hbar / 2.0)
            );
        }
    }
    Ok(())
}
