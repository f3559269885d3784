//! The fluctuation kinetic term `C I[p] / 2m` has functional derivative equal
//! to the quantum potential `Q = -(hbar^2/2m) (sqrt p)'' / sqrt p`; here it is
//! checked by finite differences along a few perturbations, and the classical
//! and modified Lagrangians are evaluated for a stationary state.

use exact_uncertainty::dynamics::{
    classical_lagrangian, functional_derivative_check, modified_lagrangian, quantum_potential,
    PotentialSpec,
};
use exact_uncertainty::state::{make_state, wavefunction_to_fields};
use exact_uncertainty::{Grid1D, RealField, Result};

type Shape = fn(f64) -> f64;

fn main() -> Result<()> {
    let grid = Grid1D::new(-12.0, 12.0, 512)?;
    let (c, mass) = (0.25, 1.0);
    let hbar = 2.0 * f64::sqrt(c);
    let psi = make_state(
        &"superposition:x0=-1/1.5,sigma=1/0.8,weight=1/0.6".parse()?,
        &grid,
        hbar,
    )?;
    let p = psi.density();
    let q = quantum_potential(&p, hbar, mass)?;
    println!("Q at x = 0: {:.8}", q.values()[grid.midpoint()]);

    // perturbations that keep the norm and vanish in the tails
    let mean = |h: &dyn Fn(f64) -> f64| -> f64 {
        let w: Vec<f64> = p.values().iter().map(|v| v * v).collect();
        let num: f64 = grid.points().iter().zip(&w).map(|(&x, w)| w * h(x)).sum();
        num / w.iter().sum::<f64>()
    };
    let shapes: [(&str, Shape); 3] = [
        ("x", |x| x),
        ("x^2", |x| x * x),
        ("cos 2x", |x| (2.0 * x).cos()),
    ];
    for (name, h) in shapes {
        let m = mean(&h);
        let dp = RealField::new(
            grid,
            p.values()
                .iter()
                .zip(grid.points())
                .map(|(v, x)| v * v * (h(x) - m))
                .collect(),
        )?;
        let r = functional_derivative_check(&p, &dp, c, mass)?;
        println!(
            "dp ~ p^2 ({name:<6}): lhs {:+.10e}  rhs {:+.10e}  residual {:.1e} (tol {:.1e})",
            r.lhs, r.rhs, r.residual, r.tolerance
        );
    }

    // ground state of the unit trap: ds/dt = -E = -hbar/2
    let ground = wavefunction_to_fields(
        &make_state(&"gaussian:sigma=0.7071067811865476".parse()?, &grid, hbar)?,
        hbar,
    )?;
    let ds_dt = RealField::from_fn(grid, |_| -hbar / 2.0)?;
    let trap = PotentialSpec::harmonic(1.0);
    println!(
        "classical Lagrangian {:+.10}",
        classical_lagrangian(&ground, &ds_dt, &trap, mass)?
    );
    println!(
        "modified Lagrangian  {:+.10}",
        modified_lagrangian(&ground, &ds_dt, &trap, mass, c)?
    );
    Ok(())
}
