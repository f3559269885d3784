//! Classical/nonclassical momentum split and the exact uncertainty product.
//!
//! Everything here works on a single pure state sampled on a [`Grid1D`].
//! Position-space quantities use spectral derivatives of `psi`; momentum
//! moments come from the unitary transform, so the variance decomposition
//! compares two independent computational routes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{
    self, density_leakage, spectral_derivative_real, to_momentum_about, ComplexField, Grid1D,
    RealField, Support,
};
use crate::state::{self, make_state, StateSpec, LEAKAGE_LIMIT};
use crate::Complex64;

/// Acceptance tolerances carried by every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// `|deltaX dP_nc - hbar/2| <= product_rel * hbar/2`.
    pub product_rel: f64,
    /// `variance_residual <= residual_rel * dP^2`.
    pub residual_rel: f64,
    /// Slack in `dX >= deltaX`.
    pub cramer_rao_slack: f64,
    /// Relative gap between the two `dP_nc` routes.
    pub route_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            product_rel: 1e-6,
            residual_rel: 1e-8,
            cramer_rao_slack: 1e-10,
            route_rel: 1e-7,
        }
    }
}

/// All scalar statistics of one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyReport {
    #[serde(rename = "dX")]
    pub dx: f64,
    #[serde(rename = "deltaX")]
    pub delta_x: f64,
    #[serde(rename = "dP")]
    pub dp: f64,
    #[serde(rename = "dP_cl")]
    pub dp_cl: f64,
    /// `sqrt(dP^2 - dP_cl^2)`: momentum-space variance minus the classical part.
    #[serde(rename = "dP_nc")]
    pub dp_nc: f64,
    /// `(hbar / 2) sqrt(Fisher information)`.
    #[serde(rename = "dP_nc_fisher")]
    pub dp_nc_fisher: f64,
    /// `|dP_nc - dP_nc_fisher| / dP_nc`.
    pub route_discrepancy: f64,
    pub mean_p: f64,
    pub mean_p_nc: f64,
    pub product_exact: f64,
    pub heisenberg: f64,
    /// `|dP^2 - dP_cl^2 - <(P - P_cl)^2>|` with the last term from the
    /// position-space operator form.
    pub variance_residual: f64,
    pub hbar: f64,
    pub tolerances: Tolerances,
    pub grid: Grid1D,
}

impl UncertaintyReport {
    /// Names of the invariants this report violates (empty when all hold).
    pub fn violations(&self) -> Vec<String> {
        let t = &self.tolerances;
        let mut out = Vec::new();
        let values = [
            self.dx,
            self.delta_x,
            self.dp,
            self.dp_cl,
            self.dp_nc,
            self.product_exact,
            self.heisenberg,
            self.variance_residual,
        ];
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            out.push("entries must be finite and nonnegative".into());
        }
        if self.dx < self.delta_x - t.cramer_rao_slack {
            out.push(format!(
                "Cramer-Rao: dX {} < deltaX {}",
                self.dx, self.delta_x
            ));
        }
        let half = 0.5 * self.hbar;
        if (self.product_exact - half).abs() > t.product_rel * half {
            out.push(format!("exact product {} != hbar/2", self.product_exact));
        }
        if self.variance_residual > t.residual_rel * self.dp * self.dp {
            out.push(format!("variance residual {}", self.variance_residual));
        }
        if self.route_discrepancy > t.route_rel {
            out.push(format!(
                "dP_nc route discrepancy {}",
                self.route_discrepancy
            ));
        }
        out
    }
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "hbar must be positive, got {hbar}"
        )))
    }
}

/// Shared position-space pieces of one state.
struct Local {
    p: Vec<f64>,
    dpsi: Vec<Complex64>,
    support: Support,
    /// `hbar Im(psi' / psi)` on the support, constant outside.
    p_cl: Vec<f64>,
}

impl Local {
    fn new(psi: &ComplexField, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        let density = psi.density();
        let support = state::check_node_free(&density)?;
        let dpsi = split_derivative(psi);
        let p = density.into_values();
        let mut p_cl: Vec<f64> = psi
            .values()
            .iter()
            .zip(&dpsi)
            .zip(&p)
            .map(|((z, dz), &pj)| {
                if pj > 0.0 {
                    hbar * (z.conj() * dz).im / pj
                } else {
                    0.0
                }
            })
            .collect();
        support.extend_constant(&mut p_cl);
        Ok(Self {
            p,
            dpsi,
            support,
            p_cl,
        })
    }

    /// Fisher information with `p' = 2 Re(psi* psi')`. The integrand
    /// `4 Re(psi* psi')^2 / p` is bounded by `4 |psi'|^2`, so it stays tame in
    /// the tails, and it needs no derivative of `p` or `sqrt(p)`.
    fn fisher(&self, psi: &ComplexField) -> f64 {
        let sum: f64 = psi
            .values()
            .iter()
            .zip(&self.dpsi)
            .zip(&self.p)
            .filter(|(_, &pj)| pj > 0.0)
            .map(|((z, dz), &pj)| {
                let re = (z.conj() * dz).re;
                4.0 * re * re / pj
            })
            .sum();
        sum * psi.grid().dx()
    }

    /// `<P_cl>`, `<P_cl^2>` and the (two-pass) variance over the support.
    fn classical_moments(&self, dx: f64) -> (f64, f64, f64) {
        let range = self.support.first..=self.support.last;
        let m1 = range.clone().map(|j| self.p[j] * self.p_cl[j]).sum::<f64>() * dx;
        let m2 = range
            .clone()
            .map(|j| self.p[j] * self.p_cl[j].powi(2))
            .sum::<f64>()
            * dx;
        let var = range
            .map(|j| self.p[j] * (self.p_cl[j] - m1).powi(2))
            .sum::<f64>()
            * dx;
        (m1, m2, var)
    }
}

/// Spectral `psi'` with real and imaginary parts differentiated separately, so
/// a real `psi` yields an exactly real derivative.
fn split_derivative(psi: &ComplexField) -> Vec<Complex64> {
    let dx = psi.grid().dx();
    let re: Vec<f64> = psi.values().iter().map(|z| z.re).collect();
    let im: Vec<f64> = psi.values().iter().map(|z| z.im).collect();
    let dre = spectral_derivative_real(&re, dx, 1);
    let dim = if im.iter().all(|&v| v == 0.0) {
        vec![0.0; im.len()]
    } else {
        spectral_derivative_real(&im, dx, 1)
    };
    dre.into_iter()
        .zip(dim)
        .map(|(a, b)| Complex64::new(a, b))
        .collect()
}

/// `P_cl(x) = (hbar / 2i)[psi'/psi - c.c.] = hbar Im(psi'/psi)`; outside the
/// support of `|psi|^2` the nearest support value is repeated.
pub fn classical_momentum_field(psi: &ComplexField, hbar: f64) -> Result<RealField> {
    let local = Local::new(psi, hbar)?;
    RealField::new(*psi.grid(), local.p_cl)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonclassicalStats {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of `P_nc = P - P_cl(X)` from the operator form
/// `int |(-i hbar d/dx - P_cl) psi|^2 dx`.
pub fn nonclassical_field(psi: &ComplexField, hbar: f64) -> Result<NonclassicalStats> {
    let local = Local::new(psi, hbar)?;
    Ok(nonclassical_from(psi, &local, hbar))
}

fn nonclassical_from(psi: &ComplexField, local: &Local, hbar: f64) -> NonclassicalStats {
    let dx = psi.grid().dx();
    let (mut mean, mut second) = (0.0, 0.0);
    for ((z, dz), &f) in psi.values().iter().zip(&local.dpsi).zip(&local.p_cl) {
        let r = Complex64::new(0.0, -hbar) * dz - z * f;
        mean += (z.conj() * r).re;
        second += r.norm_sqr();
    }
    let mean = mean * dx;
    NonclassicalStats {
        mean,
        variance: second * dx - mean * mean,
    }
}

/// Relative density level separating the two Fisher integrands.
pub const FISHER_SPLIT: f64 = 1e-8;

/// Fisher information `int p (d ln p/dx)^2 dx`.
///
/// Where `p > FISHER_SPLIT * max p` the integrand is `p'^2 / p`; in the far
/// tails the equivalent form `4 |d sqrt(p)/dx|^2` is used instead, which keeps
/// roundoff in `p'` from being divided by a vanishing `p`. (`sqrt(p)` itself
/// is poorly resolved near deep interference minima, so it is not used in
/// the bulk.)
pub fn fisher_information(p: &RealField) -> Result<f64> {
    let norm = grid::integrate(p)?;
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    if let Some(j) = p.values().iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidDensity(format!(
            "negative density at x = {}",
            p.grid().x(j)
        )));
    }
    let floor = state::p_floor(p.values());
    let support = Support::above(p.values(), floor)
        .ok_or_else(|| Error::InvalidDensity("density vanishes everywhere".into()))?;
    if let Some(j) = support.interior_dip(p.values(), floor) {
        return Err(Error::DensityUnderflow { x: p.grid().x(j) });
    }
    Ok(fisher_information_unchecked(p.values(), p.grid().dx()))
}

pub(crate) fn fisher_information_unchecked(p: &[f64], dx: f64) -> f64 {
    let cut = FISHER_SPLIT * p.iter().copied().fold(0.0, f64::max);
    let dp = spectral_derivative_real(p, dx, 1);
    let amp: Vec<f64> = p.iter().map(|v| v.max(0.0).sqrt()).collect();
    let da = spectral_derivative_real(&amp, dx, 1);
    let sum: f64 = (0..p.len())
        .map(|j| {
            if p[j] > cut {
                dp[j] * dp[j] / p[j]
            } else {
                4.0 * da[j] * da[j]
            }
        })
        .sum();
    sum * dx
}

/// Fisher length `deltaX = I^{-1/2}`.
pub fn fisher_length(p: &RealField) -> Result<f64> {
    Ok(fisher_information(p)?.powf(-0.5))
}

/// Mean and variance of `X` under `p`.
pub fn position_moments(p: &RealField) -> (f64, f64) {
    let g = p.grid();
    let dx = g.dx();
    let mean: f64 = p
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| v * g.x(j))
        .sum::<f64>()
        * dx;
    let var: f64 = p
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| v * (g.x(j) - mean).powi(2))
        .sum::<f64>()
        * dx;
    (mean, var)
}

/// Mean and variance of `P = hbar k` under `|phi(k)|^2`.
pub fn momentum_variance(psi: &ComplexField, hbar: f64) -> Result<(f64, f64)> {
    check_hbar(hbar)?;
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    let leakage = density_leakage(psi.density().values());
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::GridTooSmall {
            leakage,
            limit: LEAKAGE_LIMIT,
        });
    }
    let (kgrid, phi) = to_momentum_about(psi, 0.0);
    let w: Vec<f64> = phi.iter().map(|z| z.norm_sqr() * kgrid.dk).collect();
    let mean: f64 = w.iter().zip(&kgrid.k).map(|(w, k)| w * hbar * k).sum();
    let var: f64 = w
        .iter()
        .zip(&kgrid.k)
        .map(|(w, k)| w * (hbar * k - mean).powi(2))
        .sum();
    Ok((mean, var))
}

/// Fill an [`UncertaintyReport`] for `psi`.
pub fn variance_decomposition(psi: &ComplexField, hbar: f64) -> Result<UncertaintyReport> {
    let local = Local::new(psi, hbar)?;
    let g = *psi.grid();
    let dx = g.dx();
    let (mean_p, dp2) = momentum_variance(psi, hbar)?;
    let (_, _, dp_cl2) = local.classical_moments(dx);
    let nc = nonclassical_from(psi, &local, hbar);
    let density = RealField::from_raw(g, local.p.clone());
    // validates the density; the value itself comes from psi
    fisher_information(&density)?;
    let fisher = local.fisher(psi);
    let delta_x = fisher.powf(-0.5);
    let (_, x_var) = position_moments(&density);
    let dp_nc = (dp2 - dp_cl2).max(0.0).sqrt();
    let dp_nc_fisher = 0.5 * hbar * fisher.sqrt();
    let dp = dp2.sqrt();
    Ok(UncertaintyReport {
        dx: x_var.sqrt(),
        delta_x,
        dp,
        dp_cl: dp_cl2.sqrt(),
        dp_nc,
        dp_nc_fisher,
        route_discrepancy: (dp_nc - dp_nc_fisher).abs() / dp_nc,
        mean_p,
        mean_p_nc: nc.mean,
        product_exact: delta_x * dp_nc,
        heisenberg: x_var.sqrt() * dp,
        variance_residual: (dp2 - dp_cl2 - nc.variance).abs(),
        hbar,
        tolerances: Tolerances::default(),
        grid: g,
    })
}

/// `deltaX * dP_nc` with `dP_nc` from the variance decomposition.
pub fn exact_uncertainty_product(psi: &ComplexField, hbar: f64) -> Result<f64> {
    Ok(variance_decomposition(psi, hbar)?.product_exact)
}

/// Mean-square error `<(P - f(X))^2> = int |(-i hbar d/dx - f) psi|^2 dx` of
/// a position-only momentum estimator `f`.
pub fn estimator_mse(psi: &ComplexField, f: &RealField, hbar: f64) -> Result<f64> {
    check_hbar(hbar)?;
    if psi.grid() != f.grid() {
        return Err(Error::InvalidArgument(
            "estimator lives on a different grid".into(),
        ));
    }
    let dpsi = split_derivative(psi);
    let sum: f64 = psi
        .values()
        .iter()
        .zip(&dpsi)
        .zip(f.values())
        .map(|((z, dz), &fj)| (Complex64::new(0.0, -hbar) * dz - z * fj).norm_sqr())
        .sum();
    Ok(sum * psi.grid().dx())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KineticSplit {
    pub total: f64,
    pub classical: f64,
    pub nonclassical: f64,
    /// `|nonclassical - dP_nc^2 / 2m| / total`, with `dP_nc` from the Fisher route.
    pub residual: f64,
}

/// `<P^2>/2m = int p P_cl^2 / 2m + dP_nc^2 / 2m`.
pub fn kinetic_decomposition(psi: &ComplexField, hbar: f64, mass: f64) -> Result<KineticSplit> {
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mass must be positive, got {mass}"
        )));
    }
    let local = Local::new(psi, hbar)?;
    let (mean, var) = momentum_variance(psi, hbar)?;
    let total = (var + mean * mean) / (2.0 * mass);
    let (_, m2, _) = local.classical_moments(psi.grid().dx());
    let classical = m2 / (2.0 * mass);
    let nonclassical = total - classical;
    let fisher = local.fisher(psi);
    let expected = hbar * hbar * fisher / (8.0 * mass);
    Ok(KineticSplit {
        total,
        classical,
        nonclassical,
        residual: (nonclassical - expected).abs() / total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CramerRao {
    #[serde(rename = "dX")]
    pub dx: f64,
    #[serde(rename = "deltaX")]
    pub delta_x: f64,
    pub holds: bool,
}

/// Compare the standard deviation with the Fisher length: `dX >= deltaX`.
pub fn cramer_rao_check(p: &RealField) -> Result<CramerRao> {
    let delta_x = fisher_length(p)?;
    let (_, var) = position_moments(p);
    let dx = var.sqrt();
    Ok(CramerRao {
        dx,
        delta_x,
        holds: dx >= delta_x - 1e-10,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateReport {
    /// Fisher length of the momentum density.
    #[serde(rename = "deltaP")]
    pub delta_p: f64,
    /// Nonclassical position spread in the momentum representation.
    #[serde(rename = "dX_nc")]
    pub dx_nc: f64,
    pub product: f64,
}

/// Momentum-representation mirror of the exact relation: `deltaP * dX_nc`.
///
/// The momentum amplitude (taken about the box centre) is placed on its own
/// ascending grid of `P = hbar k` values and conjugated, which turns
/// `X = i hbar d/dP` into the same operator form as `P = -i hbar d/dx`; the
/// position-space routine then runs unchanged.
pub fn conjugate_uncertainty(psi: &ComplexField, hbar: f64) -> Result<ConjugateReport> {
    check_hbar(hbar)?;
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    let g = psi.grid();
    let n = g.n();
    let (kgrid, phi) = to_momentum_about(psi, g.center());
    let half = (n / 2) as f64 * hbar * kgrid.dk;
    let pgrid = Grid1D::new(-half, half, n)?;
    let scale = hbar.sqrt();
    let mirrored: Vec<Complex64> = kgrid
        .ascending_order()
        .into_iter()
        .map(|j| phi[j].conj() / scale)
        .collect();
    let chi = ComplexField::new(pgrid, mirrored)?;
    let report = variance_decomposition(&chi, hbar)?;
    Ok(ConjugateReport {
        delta_p: report.delta_x,
        dx_nc: report.dp_nc,
        product: report.product_exact,
    })
}

pub fn conjugate_uncertainty_product(psi: &ComplexField, hbar: f64) -> Result<f64> {
    Ok(conjugate_uncertainty(psi, hbar)?.product)
}

/// Fixed box, interval and packet used by [`confinement_study`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfinementSetup {
    pub x_min: f64,
    pub x_max: f64,
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub sigma: f64,
    /// Cut smoothing width in grid spacings (fixed across resolutions).
    pub cells: f64,
    pub hbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfinementRow {
    pub n: usize,
    #[serde(rename = "deltaX")]
    pub delta_x: f64,
    #[serde(rename = "dP_nc")]
    pub dp_nc: f64,
    pub product: f64,
    /// Fisher length of the untruncated Gaussian at the same resolution.
    pub control_delta_x: f64,
}

/// Sharpen the confinement by refining the grid: the cut is smoothed over a
/// fixed number of cells, so its physical width shrinks with `dx`.
pub fn confinement_study(
    setup: &ConfinementSetup,
    resolutions: &[usize],
) -> Result<Vec<ConfinementRow>> {
    resolutions
        .iter()
        .map(|&n| {
            let g = Grid1D::new(setup.x_min, setup.x_max, n)?;
            let spec = StateSpec::TruncatedGaussian {
                x0: setup.x0,
                sigma: setup.sigma,
                a: setup.a,
                b: setup.b,
                cells: setup.cells,
            };
            let psi = make_state(&spec, &g, setup.hbar)?;
            let report = variance_decomposition(&psi, setup.hbar)?;
            let control = make_state(
                &StateSpec::Gaussian {
                    x0: setup.x0,
                    sigma: setup.sigma,
                },
                &g,
                setup.hbar,
            )?;
            Ok(ConfinementRow {
                n,
                delta_x: report.delta_x,
                dp_nc: report.dp_nc,
                product: report.product_exact,
                control_delta_x: fisher_length(&control.density())?,
            })
        })
        .collect()
}
