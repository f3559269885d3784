//! The Madelung fluid with `C = hbar^2/4` reproduces the Schrodinger equation:
//! both solvers are run over one period of a harmonic trap at three step sizes.

use exact_uncertainty::dynamics::{cross_validate, PotentialSpec, SolverConfig};
use exact_uncertainty::state::make_state;
use exact_uncertainty::{Grid1D, Result};

fn main() -> Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .map_or(Ok(128), |s| s.parse())
        .expect("grid size");
    let grid = Grid1D::new(-10.0, 10.0, n)?;
    let psi = make_state(
        &"gaussian:x0=2,sigma=0.7071067811865476".parse()?,
        &grid,
        1.0,
    )?;
    let steps = 640 * (n / 128).pow(2);
    let cfg = SolverConfig {
        dt: 2.0 * std::f64::consts::PI / steps as f64,
        steps,
        store_every: steps / 8,
        ..SolverConfig::default()
    };
    let r = cross_validate(&psi, &PotentialSpec::harmonic(1.0), &cfg, 0.25)?;
    let order = |o: Option<f64>| o.map_or("below roundoff".to_string(), |v| format!("{v:.2}"));
    println!("grid n = {n}, {steps} steps of {:.3e}", cfg.dt);
    println!(
        "L2 density gap     {:.3e} (dt/2: {:.3e}), order {}",
        r.l2_density,
        r.l2_density_refined,
        order(r.discrepancy_order)
    );
    println!("phase gradient gap {:.3e}", r.max_phase_gradient_gap);
    println!(
        "self-convergence   schrodinger {}, madelung {}",
        order(r.schrodinger_order),
        order(r.madelung_order)
    );
    println!(
        "norm drift         {:.1e} / {:.1e}",
        r.schrodinger_norm_drift, r.madelung_norm_drift
    );
    println!(
        "energy drift       {:.1e} / {:.1e}",
        r.schrodinger_energy_drift, r.madelung_energy_drift
    );
    Ok(())
}
