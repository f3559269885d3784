//! Split-step evolution of a free Gaussian. The width follows
//! `dX^2 = sigma^2 + (hbar t / 2 m sigma)^2` while the exact product stays at
//! `hbar/2`. The trace is written to `runs/free_spreading/trace.csv`.

use std::path::Path;

use exact_uncertainty::dynamics::{
    evolve_schrodinger, write_trace_csv, PotentialSpec, SolverConfig,
};
use exact_uncertainty::state::make_state;
use exact_uncertainty::{Grid1D, Result};

fn main() -> Result<()> {
    let grid = Grid1D::new(-20.0, 20.0, 1024)?;
    let sigma = 0.8;
    let psi = make_state(&format!("gaussian:sigma={sigma}").parse()?, &grid, 1.0)?;
    let cfg = SolverConfig {
        dt: 1e-3,
        steps: 3000,
        store_every: 500,
        ..SolverConfig::default()
    };
    let trace = evolve_schrodinger(&psi, &PotentialSpec::Free, &cfg)?;
    for d in &trace.diagnostics {
        let analytic = (sigma * sigma + (d.t / (2.0 * sigma)).powi(2)).sqrt();
        println!(
            "t {:.2}  dX {:.10} (analytic {:.10})  product {:.12}",
            d.t, d.dx, analytic, d.product
        );
    }
    let dir = Path::new("runs/free_spreading");
    std::fs::create_dir_all(dir)?;
    write_trace_csv(&trace, &dir.join("trace.csv"))?;
    println!(
        "norm drift {:.1e}, energy drift {:.1e}",
        trace.norm_drift(),
        trace.energy_drift()
    );
    Ok(())
}
