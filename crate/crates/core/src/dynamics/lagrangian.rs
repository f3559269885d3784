use serde::Serialize;

use super::PotentialSpec;
use crate::error::{Error, Result};
use crate::grid::{integrate_raw, spectral_derivative_real, DerivativeMode, RealField};
use crate::state::{self, MadelungState};
use crate::theorem::hbar_from_c;
use crate::uncertainty::{fisher_information, fisher_information_unchecked};

/// Instantaneous `int p [s_t + s'^2/2m + V] dx`.
pub fn classical_lagrangian(
    m: &MadelungState,
    ds_dt: &RealField,
    v: &PotentialSpec,
    mass: f64,
) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mass must be positive, got {mass}"
        )));
    }
    if ds_dt.grid() != m.grid() {
        return Err(Error::InvalidArgument(
            "ds_dt lives on a different grid".into(),
        ));
    }
    let g = m.grid();
    let grad = m.s.derivative(1, DerivativeMode::Auto)?.field;
    let pot = v.sample(g, mass)?;
    let integrand: Vec<f64> = (0..g.n())
        .map(|j| {
            let u = grad.values()[j];
            m.p.values()[j] * (ds_dt.values()[j] + u * u / (2.0 * mass) + pot.values()[j])
        })
        .collect();
    Ok(integrate_raw(&integrand, g.dx()))
}

/// `(dN)^2 / 2m` with `(dN)^2 = C int p (ln p)'^2 dx`.
pub fn fluctuation_kinetic_term(p: &RealField, c: f64, mass: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "C must be positive, got {c}"
        )));
    }
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mass must be positive, got {mass}"
        )));
    }
    Ok(c * fisher_information(p)? / (2.0 * mass))
}

pub fn modified_lagrangian(
    m: &MadelungState,
    ds_dt: &RealField,
    v: &PotentialSpec,
    mass: f64,
    c: f64,
) -> Result<f64> {
    let base = classical_lagrangian(m, ds_dt, v, mass)?;
    if c == 0.0 {
        return Ok(base);
    }
    Ok(base + fluctuation_kinetic_term(&m.p, c, mass)?)
}

/// `Q = -(hbar^2/2m) (sqrt p)'' / sqrt p`, constant outside the support.
pub fn quantum_potential(p: &RealField, hbar: f64, mass: f64) -> Result<RealField> {
    if !(hbar > 0.0) || !(mass > 0.0) {
        return Err(Error::InvalidArgument(
            "hbar and mass must be positive".into(),
        ));
    }
    let support = state::check_node_free(p)?;
    let q = quantum_potential_raw(p.values(), p.grid().dx(), hbar, mass, &support);
    RealField::new(*p.grid(), q)
}

fn quantum_potential_raw(
    p: &[f64],
    dx: f64,
    hbar: f64,
    mass: f64,
    support: &crate::grid::Support,
) -> Vec<f64> {
    let amp: Vec<f64> = p.iter().map(|v| v.max(0.0).sqrt()).collect();
    let d2 = spectral_derivative_real(&amp, dx, 2);
    let k = -hbar * hbar / (2.0 * mass);
    let mut q: Vec<f64> = d2
        .iter()
        .zip(&amp)
        .map(|(d, a)| if *a > 0.0 { k * d / a } else { 0.0 })
        .collect();
    support.extend_constant(&mut q);
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalDerivativeCheck {
    /// Central difference of the fluctuation term along `dp`.
    pub lhs: f64,
    /// `int Q dp dx`.
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub epsilon: f64,
}

impl FunctionalDerivativeCheck {
    pub fn passes(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Compare the directional derivative of `(dN)^2/2m` along `dp` with
/// `int Q dp`. The step `eps` is the largest value with
/// `eps max|dp| <= 1e-4 max p` that keeps `p +- eps dp` at least half of `p`
/// wherever `dp` is above `1e-13 max|dp|`.
pub fn functional_derivative_check(
    p: &RealField,
    dp: &RealField,
    c: f64,
    mass: f64,
) -> Result<FunctionalDerivativeCheck> {
    let hbar = hbar_from_c(c)?;
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mass must be positive, got {mass}"
        )));
    }
    if p.grid() != dp.grid() {
        return Err(Error::InvalidPerturbation(
            "perturbation lives on a different grid".into(),
        ));
    }
    let support = state::check_node_free(p)?;
    let dx = p.grid().dx();
    let pv = p.values();
    let dv = dp.values();
    let dmax = dv.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if dmax == 0.0 {
        return Ok(FunctionalDerivativeCheck {
            lhs: 0.0,
            rhs: 0.0,
            residual: 0.0,
            tolerance: 1e-10,
            epsilon: 0.0,
        });
    }
    let total: f64 = integrate_raw(dv, dx);
    let mass_of: f64 = dv.iter().map(|v| v.abs()).sum::<f64>() * dx;
    if total.abs() > 1e-10 * mass_of {
        return Err(Error::InvalidPerturbation(format!(
            "perturbation integrates to {total:e}, not 0"
        )));
    }
    let pmax = p.max();
    let mut eps = 1e-4 * pmax / dmax;
    for (j, (&pj, &dj)) in pv.iter().zip(dv).enumerate() {
        if dj.abs() <= 1e-13 * dmax {
            continue;
        }
        if !support.contains(j) || pj <= 0.0 {
            return Err(Error::InvalidPerturbation(format!(
                "perturbation reaches outside the node-free region at x = {}",
                p.grid().x(j)
            )));
        }
        eps = eps.min(0.5 * pj / dj.abs());
    }
    let term = |sign: f64| {
        let shifted: Vec<f64> = pv.iter().zip(dv).map(|(a, b)| a + sign * eps * b).collect();
        c * fisher_information_unchecked(&shifted, dx) / (2.0 * mass)
    };
    let lhs = (term(1.0) - term(-1.0)) / (2.0 * eps);
    let q = quantum_potential_raw(pv, dx, hbar, mass, &support);
    let rhs = integrate_raw(
        &q.iter().zip(dv).map(|(a, b)| a * b).collect::<Vec<_>>(),
        dx,
    );
    Ok(FunctionalDerivativeCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        tolerance: (1e-6 * rhs.abs()).max(1e-10),
        epsilon: eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::state::{make_state, wavefunction_to_fields, StateSpec};

    fn grid() -> Grid1D {
        Grid1D::new(-12.0, 12.0, 512).unwrap()
    }

    fn gaussian(g: &Grid1D, sigma: f64) -> RealField {
        RealField::from_fn(*g, |x| {
            (-x * x / (2.0 * sigma * sigma)).exp()
                / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt()
        })
        .unwrap()
    }

    fn ground_state(g: &Grid1D) -> MadelungState {
        let psi = make_state(
            &StateSpec::Gaussian {
                x0: 0.0,
                sigma: 0.5f64.sqrt(),
            },
            g,
            1.0,
        )
        .unwrap();
        wavefunction_to_fields(&psi, 1.0).unwrap()
    }

    #[test]
    fn harmonic_ground_state_lagrangians() {
        let g = grid();
        let m = ground_state(&g);
        let ds_dt = RealField::from_fn(g, |_| -0.5).unwrap();
        let v = PotentialSpec::harmonic(1.0);
        let l = classical_lagrangian(&m, &ds_dt, &v, 1.0).unwrap();
        assert!((l + 0.25).abs() < 1e-10, "{l}");
        let lm = modified_lagrangian(&m, &ds_dt, &v, 1.0, 0.25).unwrap();
        assert!(lm.abs() < 1e-8, "{lm}");
        assert_eq!(modified_lagrangian(&m, &ds_dt, &v, 1.0, 0.0).unwrap(), l);
        let f = fluctuation_kinetic_term(&m.p, 0.25, 1.0).unwrap();
        assert!((f - 0.25).abs() < 1e-10);
    }

    #[test]
    fn boosted_and_free_snapshots() {
        let g = grid();
        let psi = make_state(&"boosted_gaussian:k0=5".parse().unwrap(), &g, 1.0).unwrap();
        let m = wavefunction_to_fields(&psi, 1.0).unwrap();
        let zero = RealField::zeros(g);
        let l = classical_lagrangian(&m, &zero, &PotentialSpec::Free, 1.0).unwrap();
        assert!((l - 12.5).abs() < 1e-8, "{l}");

        let p = gaussian(&g, 1.0);
        let free = MadelungState::new(p.clone(), zero.clone(), 0.0).unwrap();
        assert!(
            classical_lagrangian(&free, &zero, &PotentialSpec::Free, 1.0)
                .unwrap()
                .abs()
                < 1e-15
        );
        let lm = modified_lagrangian(&free, &zero, &PotentialSpec::Free, 1.0, 0.25).unwrap();
        assert!((lm - 0.125).abs() < 1e-10);
    }

    #[test]
    fn fluctuation_term_scaling_and_errors() {
        let g = grid();
        let wide = fluctuation_kinetic_term(&gaussian(&g, 1.0), 0.25, 1.0).unwrap();
        let narrow = fluctuation_kinetic_term(&gaussian(&g, 0.5), 0.25, 1.0).unwrap();
        assert!((narrow / wide - 4.0).abs() < 1e-10);
        assert!(matches!(
            fluctuation_kinetic_term(&gaussian(&g, 1.0), 0.0, 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn quantum_potential_of_gaussian() {
        let g = grid();
        let q = quantum_potential(&gaussian(&g, 1.0), 1.0, 1.0).unwrap();
        for (x, qv) in g.points().iter().zip(q.values()) {
            if x.abs() < 5.0 {
                let exact = 0.25 - x * x / 8.0;
                assert!((qv - exact).abs() < 1e-9, "x = {x}");
            }
        }
        // scaling p(x) -> k p(kx) multiplies Q(x/k) by k^2
        let q2 = quantum_potential(&gaussian(&g, 0.5), 1.0, 1.0).unwrap();
        assert!((q2.values()[g.midpoint()] - 4.0 * 0.25).abs() < 1e-9);
    }

    #[test]
    fn quantum_potential_rejects_nodes() {
        let g = grid();
        let p = RealField::from_fn(g, |x| x * x * (-x * x).exp()).unwrap();
        assert!(matches!(
            quantum_potential(&p, 1.0, 1.0),
            Err(Error::NodePresent { .. })
        ));
    }

    #[test]
    fn functional_derivative_matches_quantum_potential() {
        let g = grid();
        let p = gaussian(&g, 1.0);
        let bump = |c: f64| move |x: f64| (-(x - c) * (x - c) / (2.0 * 0.16)).exp();
        let b1 = bump(-0.8);
        let b2 = bump(0.8);
        let dp = RealField::from_fn(g, |x| b1(x) - b2(x)).unwrap();
        let r = functional_derivative_check(&p, &dp, 0.25, 1.0).unwrap();
        assert!(r.passes(), "{r:?}");

        let zero = functional_derivative_check(&p, &RealField::zeros(g), 0.25, 1.0).unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));

        let lopsided = RealField::from_fn(g, b1).unwrap();
        assert!(matches!(
            functional_derivative_check(&p, &lopsided, 0.25, 1.0),
            Err(Error::InvalidPerturbation(_))
        ));
    }
}
