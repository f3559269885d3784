use serde::Serialize;

use super::{
    evolve_madelung, evolve_schrodinger, EvolutionTrace, PotentialSpec, Snapshot, SolverConfig,
};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, RealField};
use crate::state::{fields_to_wavefunction, wavefunction_to_fields};
use crate::theorem::hbar_from_c;
use crate::uncertainty::classical_momentum_field;

/// `sqrt(int (a - b)^2 dx)`.
pub fn density_l2_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * dx).sqrt()
}

/// Differences below this L2 size are treated as roundoff when estimating
/// convergence orders.
pub const ORDER_FLOOR: f64 = 1e-11;

/// Dual-solver comparison at `dt`, `dt/2` and `dt/4`, all runs covering the
/// same time span.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    pub hbar: f64,
    pub c: f64,
    pub t_final: f64,
    pub dt: f64,
    /// Final-time L2 density distance between the solvers at `dt`.
    pub l2_density: f64,
    /// The same at `dt/2`.
    pub l2_density_refined: f64,
    /// `log2(l2_density / l2_density_refined)`, `None` once the refined
    /// distance is below `ORDER_FLOOR`.
    pub discrepancy_order: Option<f64>,
    /// Largest `|s'_schrodinger - s'_madelung|` where `p > 1e-6 max p`.
    pub max_phase_gradient_gap: f64,
    /// Self-convergence orders from `dt`, `dt/2`, `dt/4`, with the same floor.
    pub schrodinger_order: Option<f64>,
    pub madelung_order: Option<f64>,
    pub schrodinger_norm_drift: f64,
    pub madelung_norm_drift: f64,
    pub schrodinger_energy_drift: f64,
    pub madelung_energy_drift: f64,
}

/// Run both solvers from `psi0` with `hbar = 2 sqrt(C)` (the configured
/// `hbar` is ignored) at `dt`, `dt/2` and `dt/4`.
pub fn cross_validate(
    psi0: &ComplexField,
    potential: &PotentialSpec,
    cfg: &SolverConfig,
    c: f64,
) -> Result<CrossValidation> {
    let hbar = hbar_from_c(c)?;
    let m0 = wavefunction_to_fields(psi0, hbar)?;
    let g = *psi0.grid();
    let run = |level: u32| -> Result<(EvolutionTrace, EvolutionTrace)> {
        let factor = 1usize << level;
        let sub = SolverConfig {
            hbar,
            dt: cfg.dt / factor as f64,
            steps: cfg.steps * factor,
            store_every: cfg.store_every * factor,
            track_uncertainty: false,
            ..cfg.clone()
        };
        let s = evolve_schrodinger(psi0, potential, &sub)?.completed()?;
        let m = evolve_madelung(&m0, potential, &sub, c)?.completed()?;
        Ok((s, m))
    };
    let levels = [run(0)?, run(1)?, run(2)?];
    let finals: Vec<(Vec<f64>, Vec<f64>)> = levels
        .iter()
        .map(|(s, m)| (s.last().density(), m.last().density()))
        .collect();
    let dx = g.dx();
    let l2 = |i: usize| density_l2_distance(&finals[i].0, &finals[i].1, dx);
    let self_order = |pick: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| {
        observed_order(
            density_l2_distance(pick(&finals[0]), pick(&finals[1]), dx),
            density_l2_distance(pick(&finals[1]), pick(&finals[2]), dx),
        )
    };

    let (s0, m0t) = &levels[0];
    let gap = phase_gradient_gap(s0.last(), m0t.last(), hbar)?;
    Ok(CrossValidation {
        hbar,
        c,
        t_final: cfg.dt * cfg.steps as f64,
        dt: cfg.dt,
        l2_density: l2(0),
        l2_density_refined: l2(1),
        discrepancy_order: observed_order(l2(0), l2(1)),
        max_phase_gradient_gap: gap,
        schrodinger_order: self_order(|f| &f.0),
        madelung_order: self_order(|f| &f.1),
        schrodinger_norm_drift: s0.norm_drift(),
        madelung_norm_drift: m0t.norm_drift(),
        schrodinger_energy_drift: s0.energy_drift(),
        madelung_energy_drift: m0t.energy_drift(),
    })
}

/// `log2(coarse / fine)`, or `None` when `fine` is at roundoff level.
pub fn observed_order(coarse: f64, fine: f64) -> Option<f64> {
    (fine >= ORDER_FLOOR).then(|| (coarse / fine).log2())
}

fn phase_gradient_gap(wave: &Snapshot, fields: &Snapshot, hbar: f64) -> Result<f64> {
    let (Snapshot::Wave { psi, .. }, Snapshot::Fields(m)) = (wave, fields) else {
        return Err(Error::InvalidArgument(
            "expected one wave and one field snapshot".into(),
        ));
    };
    let mut m = m.clone();
    m.p = RealField::new(*m.grid(), m.p.values().iter().map(|v| v.max(0.0)).collect())?;
    let a = classical_momentum_field(psi, hbar)?;
    let b = classical_momentum_field(&fields_to_wavefunction(&m, hbar)?, hbar)?;
    let p = psi.density();
    let cut = 1e-6 * p.max();
    Ok(p.values()
        .iter()
        .zip(a.values().iter().zip(b.values()))
        .filter(|(pj, _)| **pj > cut)
        .map(|(_, (x, y))| (x - y).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_to_self_is_zero() {
        let a = vec![0.1, 0.4, 0.2];
        assert_eq!(density_l2_distance(&a, &a, 0.5), 0.0);
        assert!(
            (density_l2_distance(&a, &[0.1, 0.4, 0.0], 0.5) - 0.2 * 0.5f64.sqrt()).abs() < 1e-15
        );
    }

    #[test]
    fn orders_vanish_at_roundoff() {
        assert_eq!(observed_order(4e-6, 1e-6), Some(2.0));
        assert_eq!(observed_order(4e-12, 1e-12), None);
    }
}
