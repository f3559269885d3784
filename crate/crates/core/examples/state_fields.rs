//! Build a state from its text spec, split it into density and momentum
//! potential, look at it in momentum space and write the fields as CSV.
//!
//! cargo run --example state_fields -- "chirped_gaussian:x0=1,sigma=0.8,k0=2,alpha=0.4" out/

use std::path::PathBuf;

use exact_uncertainty::grid::{to_momentum, DerivativeMode};
use exact_uncertainty::output::write_csv;
use exact_uncertainty::state::{check_node_free, make_state, wavefunction_to_fields};
use exact_uncertainty::{Grid1D, Result, StateSpec};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let spec: StateSpec = args
        .next()
        .as_deref()
        .unwrap_or("chirped_gaussian:x0=1,sigma=0.8,k0=2,alpha=0.4")
        .parse()?;
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/state_fields".into()));
    let grid = Grid1D::new(-12.0, 12.0, 512)?;
    let psi = make_state(&spec, &grid, 1.0)?;
    println!("{spec} on {} points, dx = {}", grid.n(), grid.dx());

    let support = check_node_free(&psi.density())?;
    println!(
        "support [{}, {}]",
        grid.x(support.first),
        grid.x(support.last)
    );
    let fields = wavefunction_to_fields(&psi, 1.0)?;
    let grad = fields.s.derivative(1, DerivativeMode::Auto)?;
    println!("s' evaluated with {:?} (s is not periodic)", grad.mode);

    let (k, phi) = to_momentum(&psi)?;
    let mean_k: f64 =
        k.k.iter()
            .zip(phi.values())
            .map(|(k, z)| k * z.norm_sqr())
            .sum::<f64>()
            * k.dk;
    println!("<k> = {mean_k:.10}");

    std::fs::create_dir_all(&out)?;
    let xs = grid.points();
    write_csv(
        &out.join("fields.csv"),
        &["x", "p", "s", "ds"],
        (0..grid.n()).map(|j| {
            vec![
                xs[j],
                fields.p.values()[j],
                fields.s.values()[j],
                grad.field.values()[j],
            ]
        }),
    )?;
    println!("wrote {}", out.join("fields.csv").display());
    Ok(())
}
