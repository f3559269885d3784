use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{integrate_raw, spectral_derivative_real, RealField};
use crate::state::{self, fields_to_wavefunction, MadelungState};
use crate::uncertainty::{classical_momentum_field, fisher_information_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StochasticStats {
    /// `m^2 <v.v>`.
    pub m2_vv: f64,
    /// `(dN)^2 = C I` with `C = hbar^2 / 4`.
    pub delta_n2: f64,
    /// `|m^2 <v.v> - (dN)^2| / (dN)^2`.
    pub residual: f64,
    /// `<u.v>`.
    pub uv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticVelocities {
    /// `u = s'/m`.
    pub u_drift: RealField,
    /// `v = (hbar/2m) (ln p)'`.
    pub v_osmotic: RealField,
    pub stats: StochasticStats,
}

/// Drift and osmotic velocities of a node-free state. Both are constant
/// outside the support of `p`.
pub fn stochastic_velocities(
    m: &MadelungState,
    hbar: f64,
    mass: f64,
) -> Result<StochasticVelocities> {
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mass must be positive, got {mass}"
        )));
    }
    let support = state::check_node_free(&m.p)?;
    let psi = fields_to_wavefunction(m, hbar)?;
    // s' = hbar Im(psi'/psi) avoids differentiating the non-periodic s
    let u = classical_momentum_field(&psi, hbar)?.map(|v| v / mass)?;
    let g = m.grid();
    let p = m.p.values();
    let dp = spectral_derivative_real(p, g.dx(), 1);
    let mut v: Vec<f64> = p
        .iter()
        .zip(&dp)
        .map(|(&pj, &d)| {
            if pj > 0.0 {
                hbar / (2.0 * mass) * d / pj
            } else {
                0.0
            }
        })
        .collect();
    support.extend_constant(&mut v);

    let on_support = |f: &dyn Fn(usize) -> f64| -> f64 {
        (support.first..=support.last).map(f).sum::<f64>() * g.dx()
    };
    let m2_vv = mass * mass * on_support(&|j| p[j] * v[j] * v[j]);
    let uv = on_support(&|j| p[j] * u.values()[j] * v[j]);
    let norm = integrate_raw(p, g.dx());
    let delta_n2 = 0.25 * hbar * hbar * fisher_information_unchecked(p, g.dx()) / norm;
    Ok(StochasticVelocities {
        v_osmotic: RealField::new(*g, v)?,
        u_drift: u,
        stats: StochasticStats {
            m2_vv,
            delta_n2,
            residual: (m2_vv - delta_n2).abs() / delta_n2,
            uv,
        },
    })
}
