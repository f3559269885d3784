//! Drift `u = s'/m` and osmotic `v = (hbar/2m)(ln p)'` velocities. The osmotic
//! energy `m^2 <v.v>` equals the nonclassical momentum variance.

use exact_uncertainty::dynamics::stochastic_velocities;
use exact_uncertainty::state::{make_state, wavefunction_to_fields};
use exact_uncertainty::{Grid1D, Result};

fn main() -> Result<()> {
    let grid = Grid1D::new(-14.0, 14.0, 512)?;
    for spec in [
        "gaussian:sigma=1",
        "boosted_gaussian:k0=2",
        "chirped_gaussian:alpha=0.3",
        "superposition:x0=-1.5/1.5,sigma=1,phase=0/1",
    ] {
        let psi = make_state(&spec.parse()?, &grid, 1.0)?;
        let r = stochastic_velocities(&wavefunction_to_fields(&psi, 1.0)?, 1.0, 1.0)?;
        let s = r.stats;
        println!(
            "{spec:<46} m^2<v.v> {:.10}  (dN)^2 {:.10}  <u.v> {:+.10}",
            s.m2_vv, s.delta_n2, s.uv
        );
    }
    Ok(())
}
