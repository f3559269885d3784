//! The same initial ensemble evolved as a classical fluid (`C = 0`) and with
//! the fluctuation term (`C = 1/4`). Without it a momentum-free ensemble never
//! spreads; with it the width grows exactly as for a quantum packet.

use exact_uncertainty::dynamics::{evolve_madelung, PotentialSpec, SolverConfig, SolverKind};
use exact_uncertainty::state::{make_state, wavefunction_to_fields};
use exact_uncertainty::{Grid1D, Result};

fn width(grid: &Grid1D, p: &[f64]) -> f64 {
    let dx = grid.dx();
    let xs = grid.points();
    let mean: f64 = xs.iter().zip(p).map(|(x, v)| x * v).sum::<f64>() * dx;
    (xs.iter()
        .zip(p)
        .map(|(x, v)| (x - mean).powi(2) * v)
        .sum::<f64>()
        * dx)
        .sqrt()
}

fn main() -> Result<()> {
    let grid = Grid1D::new(-16.0, 16.0, 256)?;
    let m0 = wavefunction_to_fields(&make_state(&"gaussian:sigma=1".parse()?, &grid, 1.0)?, 1.0)?;
    let cfg = SolverConfig {
        solver: SolverKind::Madelung,
        dt: 2e-3,
        steps: 1000,
        store_every: 250,
        track_uncertainty: false,
        ..SolverConfig::default()
    };
    let classical = evolve_madelung(&m0, &PotentialSpec::Free, &cfg, 0.0)?;
    let quantum = evolve_madelung(&m0, &PotentialSpec::Free, &cfg, 0.25)?;
    println!(
        "{:>5} {:>12} {:>12} {:>12}",
        "t", "C = 0", "C = 1/4", "sqrt(1+t^2/4)"
    );
    for (a, b) in classical.snapshots.iter().zip(&quantum.snapshots) {
        let t = a.t();
        println!(
            "{t:>5.2} {:>12.8} {:>12.8} {:>12.8}",
            width(&grid, &a.density()),
            width(&grid, &b.density()),
            (1.0 + t * t / 4.0).sqrt()
        );
    }
    Ok(())
}
