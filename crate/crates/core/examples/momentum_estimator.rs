//! The classical momentum field `P_cl = s'` is the best position-only estimate
//! of momentum: any other estimator `f(x)` has a larger mean-square error.

use exact_uncertainty::state::make_state;
use exact_uncertainty::uncertainty::{
    classical_momentum_field, estimator_mse, variance_decomposition,
};
use exact_uncertainty::{Grid1D, RealField, Result};

type Shape = fn(f64) -> f64;

fn main() -> Result<()> {
    let grid = Grid1D::new(-16.0, 16.0, 1024)?;
    let psi = make_state(
        &"chirped_gaussian:x0=0.5,sigma=1.1,k0=0.7,alpha=0.4".parse()?,
        &grid,
        1.0,
    )?;
    let pcl = classical_momentum_field(&psi, 1.0)?;
    let best = estimator_mse(&psi, &pcl, 1.0)?;
    let dp_nc = variance_decomposition(&psi, 1.0)?.dp_nc;
    println!("MSE of P_cl      {best:.12}");
    println!("dP_nc^2          {:.12}", dp_nc * dp_nc);

    let bumps: [(&str, Shape); 3] = [
        ("constant", |_| 1.0),
        ("linear", |x| x),
        ("localized", |x| (-(x - 1.0) * (x - 1.0)).exp()),
    ];
    for (name, g) in bumps {
        for eps in [0.1, 0.01] {
            let shifted = RealField::new(
                grid,
                pcl.values()
                    .iter()
                    .zip(grid.points())
                    .map(|(v, x)| v + eps * g(x))
                    .collect(),
            )?;
            let mse = estimator_mse(&psi, &shifted, 1.0)?;
            println!("P_cl + {eps:<4} * {name:<9}  excess {:.3e}", mse - best);
        }
    }
    Ok(())
}
