use rustfft::num_complex::Complex64;

use super::{EvolutionTrace, PotentialSpec, Snapshot, SolverConfig, SolverKind, StepDiagnostics};
use crate::error::{Error, Result};
use crate::grid::{density_leakage, fft_forward, fft_inverse, ComplexField, RealField};

/// `<H>` with the kinetic part evaluated in momentum space.
pub fn energy(psi: &ComplexField, potential: &RealField, hbar: f64, mass: f64) -> f64 {
    let g = psi.grid();
    let kgrid = g.momentum_grid();
    let mut buf = psi.values().to_vec();
    fft_forward(&mut buf);
    // sum |psi_k|^2 = n sum |psi_j|^2 for the unnormalized transform
    let kinetic: f64 = buf
        .iter()
        .zip(&kgrid.k)
        .map(|(c, k)| c.norm_sqr() * (hbar * k).powi(2) / (2.0 * mass))
        .sum::<f64>()
        * g.dx()
        / g.n() as f64;
    let pot: f64 = psi
        .values()
        .iter()
        .zip(potential.values())
        .map(|(z, v)| z.norm_sqr() * v)
        .sum::<f64>()
        * g.dx();
    kinetic + pot
}

/// Strang split-step integration: half potential kick, full kinetic drift in
/// momentum space, half potential kick.
pub fn evolve_schrodinger(
    psi0: &ComplexField,
    potential: &PotentialSpec,
    cfg: &SolverConfig,
) -> Result<EvolutionTrace> {
    cfg.validate()?;
    let hbar = cfg.hbar;
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "hbar must be positive, got {hbar}"
        )));
    }
    let norm = psi0.norm_sqr();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    let grid = *psi0.grid();
    let v = potential.sample(&grid, cfg.mass)?;
    let n = grid.n();
    let half_kick: Vec<Complex64> = v
        .values()
        .iter()
        .map(|&vj| Complex64::from_polar(1.0, -vj * cfg.dt / (2.0 * hbar)))
        .collect();
    let inv_n = 1.0 / n as f64;
    let drift: Vec<Complex64> = grid
        .momentum_grid()
        .k
        .iter()
        .map(|&k| Complex64::from_polar(inv_n, -hbar * k * k * cfg.dt / (2.0 * cfg.mass)))
        .collect();

    let diagnose = |step: usize, psi: &ComplexField| {
        let d = StepDiagnostics::new(
            step,
            step as f64 * cfg.dt,
            psi.norm_sqr(),
            energy(psi, &v, hbar, cfg.mass),
            density_leakage(psi.density().values()),
        );
        if cfg.track_uncertainty {
            d.with_uncertainty(psi, hbar)
        } else {
            d
        }
    };

    let mut trace = EvolutionTrace {
        grid,
        solver: SolverKind::Schrodinger,
        hbar,
        snapshots: vec![Snapshot::Wave {
            t: 0.0,
            psi: psi0.clone(),
        }],
        diagnostics: vec![diagnose(0, psi0)],
        halt: None,
    };
    let mut buf = psi0.values().to_vec();
    for step in 1..=cfg.steps {
        for (z, k) in buf.iter_mut().zip(&half_kick) {
            *z *= k;
        }
        fft_forward(&mut buf);
        for (z, d) in buf.iter_mut().zip(&drift) {
            *z *= d;
        }
        fft_inverse(&mut buf);
        for (z, k) in buf.iter_mut().zip(&half_kick) {
            *z *= k;
        }
        let leakage = edge_leakage(&buf);
        let t = step as f64 * cfg.dt;
        if leakage > cfg.leakage_limit {
            trace.halt = Some(Error::GridTooSmall {
                leakage,
                limit: cfg.leakage_limit,
            });
            let psi = ComplexField::from_raw(grid, buf);
            trace.diagnostics.push(diagnose(step, &psi));
            trace.snapshots.push(Snapshot::Wave { t, psi });
            break;
        }
        if cfg.stores(step) {
            let psi = ComplexField::from_raw(grid, buf.clone());
            trace.diagnostics.push(diagnose(step, &psi));
            trace.snapshots.push(Snapshot::Wave { t, psi });
        }
    }
    Ok(trace)
}

fn edge_leakage(buf: &[Complex64]) -> f64 {
    let p: Vec<f64> = buf.iter().map(|z| z.norm_sqr()).collect();
    density_leakage(&p)
}
