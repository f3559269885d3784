use rustfft::num_complex::Complex64;

use super::{
    energy, EvolutionTrace, PotentialSpec, Snapshot, SolverConfig, SolverKind, StepDiagnostics,
};
use crate::error::{Error, Result};
use crate::grid::{
    density_leakage, fd_derivative, integrate_raw, spectral_derivative, spectral_derivative_real,
};
use crate::grid::{ComplexField, Grid1D, RealField, Support};
use crate::state::{self, MadelungState};
use crate::theorem::hbar_from_c;

/// Samples below this fraction of the peak density form the far tails, where
/// `(p, s)` are replaced after every step by a smooth extension of
/// `ln p` and `s` fitted just inside. Roundoff in `s_t = -Re(psi* H psi) / p`
/// is amplified by `1/p` there, and left alone the tails turn into noise that
/// the packet later runs into.
pub const TAIL_REL: f64 = 1e-16;

/// Samples used for each tail fit.
const TAIL_FIT_POINTS: usize = 12;

/// Right-hand side of the hydrodynamic equations on a fixed grid.
struct Rhs {
    grid: Grid1D,
    v: Vec<f64>,
    hbar: f64,
    mass: f64,
}

impl Rhs {
    /// Continuity and quantum Hamilton-Jacobi equations, evaluated through
    /// `psi = sqrt(p) e^{is/hbar}`: `p_t = (2/hbar) Im(psi* H psi)` and
    /// `s_t = -Re(psi* H psi) / p`.
    fn quantum(&self, p: &[f64], s: &[f64], dp: &mut [f64], ds: &mut [f64]) {
        let psi = assemble(p, s, self.hbar);
        let d2 = spectral_derivative(&psi, self.grid.dx(), 2);
        let kin = -self.hbar * self.hbar / (2.0 * self.mass);
        for j in 0..p.len() {
            let h = kin * d2[j] + self.v[j] * psi[j];
            let w = psi[j].conj() * h;
            dp[j] = 2.0 * w.im / self.hbar;
            ds[j] = if p[j] > 0.0 { -w.re / p[j] } else { 0.0 };
        }
    }

    /// `C = 0`: `p_t = -(p s'/m)'`, `s_t = -s'^2/2m - V`. `s` is not periodic
    /// in general, so its gradient uses finite differences.
    fn classical(&self, p: &[f64], s: &[f64], dp: &mut [f64], ds: &mut [f64]) {
        let dx = self.grid.dx();
        let u = fd_derivative(s, dx, 1);
        let flux: Vec<f64> = p
            .iter()
            .zip(&u)
            .map(|(pj, uj)| pj * uj / self.mass)
            .collect();
        let div = spectral_derivative_real(&flux, dx, 1);
        for j in 0..p.len() {
            dp[j] = -div[j];
            ds[j] = -u[j] * u[j] / (2.0 * self.mass) - self.v[j];
        }
    }

    fn eval(&self, p: &[f64], s: &[f64], dp: &mut [f64], ds: &mut [f64]) {
        if self.hbar > 0.0 {
            self.quantum(p, s, dp, ds)
        } else {
            self.classical(p, s, dp, ds)
        }
    }

    fn energy(&self, p: &[f64], s: &[f64]) -> f64 {
        if self.hbar > 0.0 {
            let psi = ComplexField::from_raw(self.grid, assemble(p, s, self.hbar));
            let v = RealField::from_raw(self.grid, self.v.clone());
            energy(&psi, &v, self.hbar, self.mass)
        } else {
            let u = fd_derivative(s, self.grid.dx(), 1);
            let e: Vec<f64> = (0..p.len())
                .map(|j| p[j] * (u[j] * u[j] / (2.0 * self.mass) + self.v[j]))
                .collect();
            integrate_raw(&e, self.grid.dx())
        }
    }
}

fn assemble(p: &[f64], s: &[f64], hbar: f64) -> Vec<Complex64> {
    p.iter()
        .zip(s)
        .map(|(&pj, &sj)| Complex64::from_polar(pj.max(0.0).sqrt(), sj / hbar))
        .collect()
}

/// Least-squares polynomial of degree 1 or 2 through `(x_i, y_i)`, as
/// coefficients in `u = x - x0` with `x0` the window centre.
fn poly_fit(xs: &[f64], ys: &[f64], degree: usize) -> (f64, [f64; 3]) {
    let x0 = xs.iter().sum::<f64>() / xs.len() as f64;
    let dim = degree + 1;
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let u = x - x0;
        let basis = [1.0, u, u * u];
        for a in 0..dim {
            r[a] += basis[a] * y;
            for b in 0..dim {
                m[a][b] += basis[a] * basis[b];
            }
        }
    }
    for (a, row) in m.iter_mut().enumerate().skip(dim) {
        row[a] = 1.0;
    }
    (x0, solve3(m, r))
}

fn eval_poly((x0, c): (f64, [f64; 3]), x: f64) -> f64 {
    let u = x - x0;
    c[0] + u * (c[1] + u * c[2])
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        r.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut c = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * c[k]).sum();
        c[row] = (r[row] - tail) / m[row][row];
    }
    c
}

/// Replace both far tails (outside the hull of `p > TAIL_REL * max p`).
fn refit_tails(grid: &Grid1D, p: &mut [f64], s: &mut [f64]) {
    let n = p.len();
    let threshold = TAIL_REL * p.iter().copied().fold(0.0, f64::max);
    let Some(hull) = Support::above(p, threshold) else {
        return;
    };
    if hull.last + 1 - hull.first < 2 * TAIL_FIT_POINTS {
        return;
    }
    let mut extend = |fit: std::ops::Range<usize>, fill: std::ops::Range<usize>| {
        if fill.is_empty() {
            return;
        }
        let xs: Vec<f64> = fit.clone().map(|j| grid.x(j)).collect();
        let lp: Vec<f64> = fit.clone().map(|j| p[j].ln()).collect();
        let sv: Vec<f64> = fit.map(|j| s[j]).collect();
        // ln p keeps its curvature only when it bends down; s continues along
        // its edge slope so the tail carries no wavenumber the data did not
        let mut lf = poly_fit(&xs, &lp, 2);
        if lf.1[2] > 0.0 {
            lf = poly_fit(&xs, &lp, 1);
        }
        let sf = poly_fit(&xs, &sv, 1);
        let edge = lp[0].max(lp[lp.len() - 1]);
        for j in fill {
            let x = grid.x(j);
            p[j] = eval_poly(lf, x).min(edge).exp();
            s[j] = eval_poly(sf, x);
        }
    };
    extend(hull.first..hull.first + TAIL_FIT_POINTS, 0..hull.first);
    extend(
        hull.last + 1 - TAIL_FIT_POINTS..hull.last + 1,
        hull.last + 1..n,
    );
}

/// RK4 integration of `(p, s)` with nonclassicality constant `C`
/// (`hbar = 2 sqrt(C)`; `C = 0` is the classical ensemble).
///
/// Fails up front with `UnstableStep` when `dt` exceeds the explicit stability
/// bound, and with `NodePresent` for an initial density with a node. A node
/// that forms during the run halts it with `NodeFormed`.
pub fn evolve_madelung(
    m0: &MadelungState,
    potential: &PotentialSpec,
    cfg: &SolverConfig,
    c: f64,
) -> Result<EvolutionTrace> {
    cfg.validate()?;
    let hbar = if c == 0.0 { 0.0 } else { hbar_from_c(c)? };
    let grid = *m0.grid();
    let bound = cfg.madelung_dt_bound(&grid, hbar);
    if cfg.dt > bound {
        return Err(Error::UnstableStep { dt: cfg.dt, bound });
    }
    if hbar > 0.0 {
        state::check_node_free(&m0.p)?;
    }
    let rhs = Rhs {
        grid,
        v: potential.sample(&grid, cfg.mass)?.into_values(),
        hbar,
        mass: cfg.mass,
    };
    let n = grid.n();
    let dx = grid.dx();

    let diagnose = |step: usize, t: f64, p: &[f64], s: &[f64]| {
        let d = StepDiagnostics::new(
            step,
            t,
            integrate_raw(p, dx),
            rhs.energy(p, s),
            density_leakage(p),
        );
        if cfg.track_uncertainty && hbar > 0.0 {
            d.with_uncertainty(&ComplexField::from_raw(grid, assemble(p, s, hbar)), hbar)
        } else {
            d
        }
    };
    let snapshot = |t: f64, p: &[f64], s: &[f64]| {
        Snapshot::Fields(MadelungState {
            p: RealField::from_raw(grid, p.to_vec()),
            s: RealField::from_raw(grid, s.to_vec()),
            t,
        })
    };

    let mut p = m0.p.values().to_vec();
    let mut s = m0.s.values().to_vec();
    let t0 = m0.t;
    let mut trace = EvolutionTrace {
        grid,
        solver: SolverKind::Madelung,
        hbar,
        snapshots: vec![snapshot(t0, &p, &s)],
        diagnostics: vec![diagnose(0, t0, &p, &s)],
        halt: None,
    };

    let mut kp = vec![vec![0.0; n]; 4];
    let mut ks = vec![vec![0.0; n]; 4];
    let (mut pt, mut st) = (vec![0.0; n], vec![0.0; n]);
    let dt = cfg.dt;
    for step in 1..=cfg.steps {
        rhs.eval(&p, &s, &mut kp[0], &mut ks[0]);
        for stage in 1..4 {
            let h = if stage == 3 { dt } else { 0.5 * dt };
            for j in 0..n {
                pt[j] = p[j] + h * kp[stage - 1][j];
                st[j] = s[j] + h * ks[stage - 1][j];
            }
            rhs.eval(&pt, &st, &mut kp[stage], &mut ks[stage]);
        }
        for j in 0..n {
            p[j] += dt / 6.0 * (kp[0][j] + 2.0 * kp[1][j] + 2.0 * kp[2][j] + kp[3][j]);
            s[j] += dt / 6.0 * (ks[0][j] + 2.0 * ks[1][j] + 2.0 * ks[2][j] + ks[3][j]);
        }
        if hbar > 0.0 {
            refit_tails(&grid, &mut p, &mut s);
        }
        let t = t0 + step as f64 * dt;

        let halt = if p.iter().chain(&s).any(|v| !v.is_finite()) {
            Some(Error::UnstableStep { dt, bound })
        } else if let Some(e) = node_check(&p, &grid, hbar, t) {
            Some(e)
        } else {
            let leakage = density_leakage(&p);
            (leakage > cfg.leakage_limit).then_some(Error::GridTooSmall {
                leakage,
                limit: cfg.leakage_limit,
            })
        };
        if halt.is_some() || cfg.stores(step) {
            trace.diagnostics.push(diagnose(step, t, &p, &s));
            trace.snapshots.push(snapshot(t, &p, &s));
        }
        if halt.is_some() {
            trace.halt = halt;
            break;
        }
    }
    Ok(trace)
}

fn node_check(p: &[f64], grid: &Grid1D, hbar: f64, t: f64) -> Option<Error> {
    if hbar == 0.0 {
        return None;
    }
    let floor = state::p_floor(p);
    let support = Support::above(p, floor)?;
    support
        .interior_dip(p, floor)
        .map(|j| Error::NodeFormed { t, x: grid.x(j) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve_schrodinger;
    use crate::state::{make_state, wavefunction_to_fields, StateSpec};
    use crate::uncertainty::position_moments;

    fn fields(spec: &str, g: &Grid1D) -> MadelungState {
        let psi = make_state(&spec.parse().unwrap(), g, 1.0).unwrap();
        wavefunction_to_fields(&psi, 1.0).unwrap()
    }

    #[test]
    fn rejects_large_steps() {
        let g = Grid1D::new(-10.0, 10.0, 256).unwrap();
        let m = fields("gaussian:sigma=1", &g);
        let cfg = SolverConfig {
            dt: 0.01,
            steps: 1,
            ..SolverConfig::default()
        };
        let err = evolve_madelung(&m, &PotentialSpec::Free, &cfg, 0.25).unwrap_err();
        assert!(matches!(err, Error::UnstableStep { .. }));
    }

    #[test]
    fn rejects_initial_nodes() {
        let g = Grid1D::new(-10.0, 10.0, 256).unwrap();
        let psi = make_state(&"superposition:x0=-5/5,sigma=0.5".parse().unwrap(), &g, 1.0).unwrap();
        let p = psi.density();
        let m = MadelungState {
            s: RealField::zeros(g),
            p,
            t: 0.0,
        };
        let cfg = SolverConfig {
            dt: 1e-4,
            steps: 1,
            ..SolverConfig::default()
        };
        let err = evolve_madelung(&m, &PotentialSpec::Free, &cfg, 0.25).unwrap_err();
        assert!(matches!(err, Error::NodePresent { .. }));
    }

    #[test]
    fn free_spreading_matches_schrodinger() {
        let g = Grid1D::new(-12.0, 12.0, 256).unwrap();
        let psi = make_state(
            &StateSpec::Gaussian {
                x0: 0.5,
                sigma: 1.0,
            },
            &g,
            1.0,
        )
        .unwrap();
        let m = wavefunction_to_fields(&psi, 1.0).unwrap();
        let bound = SolverConfig::default().madelung_dt_bound(&g, 1.0);
        let steps = (1.0 / bound).ceil() as usize;
        let cfg = SolverConfig {
            dt: 1.0 / steps as f64,
            steps,
            store_every: steps,
            ..SolverConfig::default()
        };
        let tm = evolve_madelung(&m, &PotentialSpec::Free, &cfg, 0.25).unwrap();
        assert!(tm.halt.is_none(), "{:?}", tm.halt);
        let ts = evolve_schrodinger(&psi, &PotentialSpec::Free, &cfg).unwrap();
        let pm = RealField::new(g, tm.last().density()).unwrap();
        let (mean, var) = position_moments(&pm);
        assert!((mean - 0.5).abs() < 1e-8);
        assert!((var - 1.25).abs() < 1e-6, "{var}");
        let d = crate::dynamics::density_l2_distance(
            &tm.last().density(),
            &ts.last().density(),
            g.dx(),
        );
        assert!(d < 1e-6, "{d}");
        assert!(tm.norm_drift() < 1e-10);
    }

    #[test]
    fn classical_ensemble_keeps_its_width_without_force() {
        // a zero-velocity classical ensemble does not move or spread
        let g = Grid1D::new(-10.0, 10.0, 256).unwrap();
        let m = fields("gaussian:sigma=1", &g);
        let cfg = SolverConfig {
            dt: 1e-3,
            steps: 500,
            store_every: 500,
            ..SolverConfig::default()
        };
        let tr = evolve_madelung(&m, &PotentialSpec::Free, &cfg, 0.0).unwrap();
        assert_eq!(tr.hbar, 0.0);
        let d = crate::dynamics::density_l2_distance(&tr.last().density(), m.p.values(), g.dx());
        assert!(d < 1e-12);
    }

    #[test]
    fn harmonic_ground_state_is_stationary() {
        let g = Grid1D::new(-10.0, 10.0, 256).unwrap();
        let m = fields("gaussian:sigma=0.7071067811865476", &g);
        let period = 2.0 * std::f64::consts::PI;
        let steps = (period / SolverConfig::default().madelung_dt_bound(&g, 1.0)).ceil() as usize;
        let cfg = SolverConfig {
            dt: period / steps as f64,
            steps,
            store_every: steps / 8,
            ..SolverConfig::default()
        };
        let tr = evolve_madelung(&m, &PotentialSpec::harmonic(1.0), &cfg, 0.25).unwrap();
        assert!(tr.halt.is_none(), "{:?}", tr.halt);
        for snap in &tr.snapshots {
            let dev = snap
                .density()
                .iter()
                .zip(m.p.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-6, "t={} dev={dev}", snap.t());
        }
        assert!(tr.energy_drift() < 1e-5);
    }

    #[test]
    fn classical_chirp_follows_characteristics() {
        // x(t) = x0 (1 + alpha t), so p(x, t) = p0(x / a) / a with a = 1 + alpha t
        let g = Grid1D::new(-10.0, 10.0, 256).unwrap();
        let alpha = -0.5;
        let p0 = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let m = MadelungState {
            p: RealField::from_fn(g, p0).unwrap(),
            s: RealField::from_fn(g, |x| 0.5 * alpha * x * x).unwrap(),
            t: 0.0,
        };
        let cfg = SolverConfig {
            dt: 1e-3,
            steps: 1000,
            store_every: 1000,
            ..SolverConfig::default()
        };
        let tr = evolve_madelung(&m, &PotentialSpec::Free, &cfg, 0.0).unwrap();
        assert!(tr.halt.is_none(), "{:?}", tr.halt);
        let a = 1.0 + alpha;
        let oracle: Vec<f64> = g.points().iter().map(|&x| p0(x / a) / a).collect();
        let d = crate::dynamics::density_l2_distance(&tr.last().density(), &oracle, g.dx());
        assert!(d < 1e-4, "{d}");
    }
}
