//! Numerical execution of the uniqueness argument for the fluctuation term.
//!
//! The candidate fluctuation strength is a combination of four functionals of
//! the density,
//!
//! ```text
//! I_u = int p ln p        I_v = int x p'
//! I_w = int p (ln p)'^2   I_r = int p x^2
//! ```
//!
//! All four are additive over independent subsystems ([`additivity_check`]),
//! but only `I_w` picks up the factor `k^2` under the dilation
//! `p(x) -> k p(kx)` ([`scaling_check`]). [`coefficient_filter`] turns an
//! ensemble of scaling reports into the surviving coefficient mask.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{
    self, density_leakage, integrate_raw, spectral_derivative_real, Grid1D, RealField,
};
use crate::state::{self, LEAKAGE_LIMIT};
use crate::uncertainty::fisher_information_unchecked;

/// Largest product grid accepted by [`basis_terms_2d`].
pub const MAX_PRODUCT_POINTS: usize = 1024 * 1024;

/// Relative tolerance for the `k^2` classification.
pub const K2_TOLERANCE: f64 = 1e-6;

/// `hbar = 2 sqrt(C)`.
pub fn hbar_from_c(c: f64) -> Result<f64> {
    if c > 0.0 && c.is_finite() {
        Ok(2.0 * c.sqrt())
    } else {
        Err(Error::InvalidArgument(format!(
            "C must be positive, got {c}"
        )))
    }
}

/// `C = (hbar / 2)^2`.
pub fn c_from_hbar(hbar: f64) -> Result<f64> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(0.25 * hbar * hbar)
    } else {
        Err(Error::InvalidArgument(format!(
            "hbar must be positive, got {hbar}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    U,
    V,
    W,
    R,
}

impl Term {
    pub const ALL: [Term; 4] = [Term::U, Term::V, Term::W, Term::R];

    pub fn name(self) -> &'static str {
        match self {
            Term::U => "u",
            Term::V => "v",
            Term::W => "w",
            Term::R => "r2",
        }
    }

    /// Coefficient letter multiplying this term.
    pub fn coefficient(self) -> &'static str {
        match self {
            Term::U => "A",
            Term::V => "B",
            Term::W => "C",
            Term::R => "D",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisTerms {
    #[serde(rename = "I_u")]
    pub i_u: f64,
    #[serde(rename = "I_v")]
    pub i_v: f64,
    #[serde(rename = "I_w")]
    pub i_w: f64,
    #[serde(rename = "I_r")]
    pub i_r: f64,
}

impl BasisTerms {
    pub fn get(&self, t: Term) -> f64 {
        match t {
            Term::U => self.i_u,
            Term::V => self.i_v,
            Term::W => self.i_w,
            Term::R => self.i_r,
        }
    }
}

fn check_density(p: &RealField) -> Result<()> {
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
    state::check_node_free(p)?;
    Ok(())
}

fn entropy_integrand(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// The four basis functionals of a normalized, node-free 1-D density.
pub fn basis_terms(p: &RealField) -> Result<BasisTerms> {
    check_density(p)?;
    Ok(basis_terms_unchecked(p))
}

fn basis_terms_unchecked(p: &RealField) -> BasisTerms {
    let g = p.grid();
    let dx = g.dx();
    let v = p.values();
    let dp = spectral_derivative_real(v, dx, 1);
    let xs = g.points();
    BasisTerms {
        i_u: integrate_raw(
            &v.iter()
                .map(|&pj| entropy_integrand(pj))
                .collect::<Vec<_>>(),
            dx,
        ),
        i_v: integrate_raw(
            &xs.iter().zip(&dp).map(|(x, d)| x * d).collect::<Vec<_>>(),
            dx,
        ),
        i_w: fisher_information_unchecked(v, dx),
        i_r: integrate_raw(
            &xs.iter()
                .zip(v)
                .map(|(x, pj)| x * x * pj)
                .collect::<Vec<_>>(),
            dx,
        ),
    }
}

/// Basis functionals of the product density `p1(x) p2(y)`, computed on the
/// full 2-D array with spectral derivatives along each axis.
pub fn basis_terms_2d(p1: &RealField, p2: &RealField) -> Result<BasisTerms> {
    let (gx, gy) = (*p1.grid(), *p2.grid());
    let (nx, ny) = (gx.n(), gy.n());
    if nx.saturating_mul(ny) > MAX_PRODUCT_POINTS {
        return Err(Error::GridTooLarge(format!(
            "{nx} x {ny} product grid exceeds {MAX_PRODUCT_POINTS} points"
        )));
    }
    check_density(p1)?;
    check_density(p2)?;
    let p: Vec<f64> = p1
        .values()
        .iter()
        .flat_map(|a| p2.values().iter().map(move |b| a * b))
        .collect();
    let amp: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
    let (dpx, dpy) = gradient_2d(&p, nx, ny, gx.dx(), gy.dx());
    let (dax, day) = gradient_2d(&amp, nx, ny, gx.dx(), gy.dx());
    let (xs, ys) = (gx.points(), gy.points());
    let (mut i_u, mut i_v, mut i_w, mut i_r) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..nx {
        for j in 0..ny {
            let idx = i * ny + j;
            let (x, y) = (xs[i], ys[j]);
            i_u += entropy_integrand(p[idx]);
            i_v += x * dpx[idx] + y * dpy[idx];
            i_w += 4.0 * (dax[idx] * dax[idx] + day[idx] * day[idx]);
            i_r += (x * x + y * y) * p[idx];
        }
    }
    let area = gx.dx() * gy.dx();
    Ok(BasisTerms {
        i_u: i_u * area,
        i_v: i_v * area,
        i_w: i_w * area,
        i_r: i_r * area,
    })
}

/// Partial derivatives of a row-major `nx x ny` array (`x` is the slow axis).
fn gradient_2d(f: &[f64], nx: usize, ny: usize, dx: f64, dy: f64) -> (Vec<f64>, Vec<f64>) {
    let mut fy = vec![0.0; f.len()];
    for i in 0..nx {
        let row = spectral_derivative_real(&f[i * ny..(i + 1) * ny], dy, 1);
        fy[i * ny..(i + 1) * ny].copy_from_slice(&row);
    }
    let mut fx = vec![0.0; f.len()];
    let mut column = vec![0.0; nx];
    for j in 0..ny {
        for i in 0..nx {
            column[i] = f[i * ny + j];
        }
        let d = spectral_derivative_real(&column, dx, 1);
        for i in 0..nx {
            fx[i * ny + j] = d[i];
        }
    }
    (fx, fy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermAdditivity {
    pub term: Term,
    pub product: f64,
    pub sum: f64,
    pub residual: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditivityReport {
    pub first: BasisTerms,
    pub second: BasisTerms,
    pub product: BasisTerms,
    pub terms: Vec<TermAdditivity>,
    pub passes: bool,
}

/// Relative residual, absolute when the reference is below `1e-10`.
fn relative_residual(observed: f64, expected: f64) -> f64 {
    let diff = (observed - expected).abs();
    if expected.abs() < 1e-10 {
        diff
    } else {
        diff / expected.abs()
    }
}

/// Each basis term of `p1 (x) p2` against the sum of the subsystem values
/// (tolerance `1e-8` relative, `1e-10` absolute for near-zero sums).
pub fn additivity_check(p1: &RealField, p2: &RealField) -> Result<AdditivityReport> {
    let product = basis_terms_2d(p1, p2)?;
    let first = basis_terms_unchecked(p1);
    let second = basis_terms_unchecked(p2);
    let terms: Vec<TermAdditivity> = Term::ALL
        .iter()
        .map(|&t| {
            let sum = first.get(t) + second.get(t);
            let residual = relative_residual(product.get(t), sum);
            let bound = if sum.abs() < 1e-10 { 1e-10 } else { 1e-8 };
            TermAdditivity {
                term: t,
                product: product.get(t),
                sum,
                residual,
                passes: residual <= bound,
            }
        })
        .collect();
    let passes = terms.iter().all(|t| t.passes);
    Ok(AdditivityReport {
        first,
        second,
        product,
        terms,
        passes,
    })
}

/// Transformation law of one term under `p(x) -> k p(kx)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingLaw {
    /// `I -> I + ln k`.
    AddLogK,
    Invariant,
    /// `I -> k^2 I`.
    TimesK2,
    /// `I -> I / k^2`.
    OverK2,
}

impl ScalingLaw {
    pub fn of(t: Term) -> Self {
        match t {
            Term::U => ScalingLaw::AddLogK,
            Term::V => ScalingLaw::Invariant,
            Term::W => ScalingLaw::TimesK2,
            Term::R => ScalingLaw::OverK2,
        }
    }

    pub fn apply(self, value: f64, k: f64) -> f64 {
        match self {
            ScalingLaw::AddLogK => value + k.ln(),
            ScalingLaw::Invariant => value,
            ScalingLaw::TimesK2 => k * k * value,
            ScalingLaw::OverK2 => value / (k * k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermScaling {
    pub term: Term,
    pub law: ScalingLaw,
    pub original: f64,
    pub scaled: f64,
    /// Value predicted by `law`.
    pub expected: f64,
    /// Relative deviation from `law`.
    pub residual: f64,
    pub law_holds: bool,
    /// `scaled / (k^2 original)`.
    pub ratio_to_k2: f64,
    /// Compatible with the required `(dN)^2 -> k^2 (dN)^2`.
    pub k2_compatible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    /// Fingerprint of the unscaled density samples.
    pub density_id: String,
    pub k: f64,
    pub terms: Vec<TermScaling>,
}

fn fingerprint(p: &RealField) -> String {
    let mut h = DefaultHasher::new();
    p.grid().n().hash(&mut h);
    p.grid().x_min().to_bits().hash(&mut h);
    p.grid().x_max().to_bits().hash(&mut h);
    for v in p.values() {
        v.to_bits().hash(&mut h);
    }
    format!("{:016x}", h.finish())
}

/// `k p(kx)` on the grid of `p`, by trigonometric interpolation.
pub fn dilate(p: &RealField, k: f64) -> Result<RealField> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scale factor must be positive, got {k}"
        )));
    }
    let at: Vec<f64> = p.grid().points().iter().map(|x| k * x).collect();
    let values = p
        .interpolate(&at)
        .into_iter()
        .map(|v| k * v.max(0.0))
        .collect();
    RealField::new(*p.grid(), values)
}

/// Scaling behaviour of all four terms.
pub fn scaling_check(p: &RealField, k: f64) -> Result<ScalingReport> {
    scaling_check_terms(p, k, &Term::ALL)
}

/// Scaling behaviour of a chosen subset of terms. Each law is verified to
/// `1e-8` relative.
pub fn scaling_check_terms(p: &RealField, k: f64, terms: &[Term]) -> Result<ScalingReport> {
    check_density(p)?;
    let scaled = dilate(p, k)?;
    let leakage = density_leakage(scaled.values());
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::GridTooSmall {
            leakage,
            limit: LEAKAGE_LIMIT,
        });
    }
    let before = basis_terms_unchecked(p);
    let after = basis_terms_unchecked(&scaled);
    let terms = terms
        .iter()
        .map(|&t| {
            let law = ScalingLaw::of(t);
            let (original, scaled) = (before.get(t), after.get(t));
            let expected = law.apply(original, k);
            let residual = relative_residual(scaled, expected);
            let ratio_to_k2 = scaled / (k * k * original);
            TermScaling {
                term: t,
                law,
                original,
                scaled,
                expected,
                residual,
                law_holds: residual <= 1e-8,
                ratio_to_k2,
                k2_compatible: (ratio_to_k2 - 1.0).abs() < K2_TOLERANCE,
            }
        })
        .collect();
    Ok(ScalingReport {
        density_id: fingerprint(p),
        k,
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coefficient {
    Zero,
    Free,
}

/// Surviving coefficients `(A, B, C, D)` of the four-term ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub struct CoefficientMask {
    pub a: Coefficient,
    pub b: Coefficient,
    pub c: Coefficient,
    pub d: Coefficient,
}

impl CoefficientMask {
    pub fn get(&self, t: Term) -> Coefficient {
        match t {
            Term::U => self.a,
            Term::V => self.b,
            Term::W => self.c,
            Term::R => self.d,
        }
    }

    /// `A = B = D = 0`, `C` free.
    pub fn is_fisher_only(&self) -> bool {
        *self
            == CoefficientMask {
                a: Coefficient::Zero,
                b: Coefficient::Zero,
                c: Coefficient::Free,
                d: Coefficient::Zero,
            }
    }
}

impl fmt::Display for CoefficientMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |c: Coefficient| match c {
            Coefficient::Zero => "0",
            Coefficient::Free => "free",
        };
        write!(
            f,
            "({},{},{},{})",
            s(self.a),
            s(self.b),
            s(self.c),
            s(self.d)
        )
    }
}

/// A term keeps a free coefficient only if it was tested and found
/// `k^2`-compatible in every report; untested terms get zero. Needs reports
/// from at least 3 distinct densities and 3 distinct `k != 1`.
pub fn coefficient_filter(ensemble: &[ScalingReport]) -> Result<CoefficientMask> {
    let mut densities: Vec<&str> = ensemble.iter().map(|r| r.density_id.as_str()).collect();
    densities.sort_unstable();
    densities.dedup();
    if densities.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "scaling ensemble needs at least 3 distinct densities, got {}",
            densities.len()
        )));
    }
    let mut ks: Vec<f64> = ensemble.iter().map(|r| r.k).filter(|&k| k != 1.0).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    if ks.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "scaling ensemble needs at least 3 distinct k != 1, got {}",
            ks.len()
        )));
    }
    let verdict = |t: Term| -> Result<Coefficient> {
        let seen: Vec<bool> = ensemble
            .iter()
            .flat_map(|r| r.terms.iter().filter(move |s| s.term == t))
            .map(|s| s.k2_compatible)
            .collect();
        match (seen.iter().any(|&c| c), seen.iter().any(|&c| !c)) {
            (true, true) => Err(Error::InconsistentEvidence(format!(
                "term {} is k^2-compatible for some inputs and not for others",
                t.name()
            ))),
            (true, false) => Ok(Coefficient::Free),
            _ => Ok(Coefficient::Zero),
        }
    };
    Ok(CoefficientMask {
        a: verdict(Term::U)?,
        b: verdict(Term::V)?,
        c: verdict(Term::W)?,
        d: verdict(Term::R)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremFluctuation {
    #[serde(rename = "deltaN")]
    pub delta_n: f64,
    #[serde(rename = "deltaX")]
    pub fisher_length: f64,
    /// `deltaX * deltaN`, identically `sqrt(C)`.
    pub product: f64,
    pub residual: f64,
}

/// `dN = sqrt(C I_w)` and its product with the Fisher length.
pub fn fluctuation_from_theorem(p: &RealField, c: f64) -> Result<TheoremFluctuation> {
    hbar_from_c(c)?;
    check_density(p)?;
    let i_w = fisher_information_unchecked(p.values(), p.grid().dx());
    let delta_n = (c * i_w).sqrt();
    let fisher_length = i_w.powf(-0.5);
    let product = fisher_length * delta_n;
    Ok(TheoremFluctuation {
        delta_n,
        fisher_length,
        product,
        residual: (product - c.sqrt()).abs(),
    })
}

/// Unit-normalized Gaussian density on `grid`.
pub fn gaussian_density(grid: &Grid1D, x0: f64, sigma: f64) -> Result<RealField> {
    let norm = (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
    RealField::from_fn(*grid, |x| {
        (-(x - x0) * (x - x0) / (2.0 * sigma * sigma)).exp() / norm
    })
}

/// Convex combination of Gaussian densities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianMixture {
    /// `(center, sigma, weight)` per component; weights need not sum to 1.
    pub components: Vec<(f64, f64, f64)>,
}

impl GaussianMixture {
    /// 2 to 5 components with centres in `[-3, 3]`, widths in `[0.7, 1.5]`
    /// and weights in `[0.5, 1.5]`.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let count = rng.gen_range(2..=5);
        let components = (0..count)
            .map(|_| {
                (
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(0.7..1.5),
                    rng.gen_range(0.5..1.5),
                )
            })
            .collect();
        GaussianMixture { components }
    }

    pub fn density(&self, grid: &Grid1D) -> Result<RealField> {
        if self.components.is_empty()
            || self
                .components
                .iter()
                .any(|&(_, s, w)| !(s > 0.0) || !(w > 0.0))
        {
            return Err(Error::InvalidArgument(
                "mixture needs positive widths and weights".into(),
            ));
        }
        let total: f64 = self.components.iter().map(|c| c.2).sum();
        let two_pi = 2.0 * std::f64::consts::PI;
        RealField::from_fn(*grid, |x| {
            self.components
                .iter()
                .map(|&(x0, s, w)| {
                    w / total * (-(x - x0) * (x - x0) / (2.0 * s * s)).exp()
                        / (two_pi * s * s).sqrt()
                })
                .sum()
        })
    }
}

impl fmt::Display for GaussianMixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |pick: fn(&(f64, f64, f64)) -> f64| {
            self.components
                .iter()
                .map(|c| pick(c).to_string())
                .collect::<Vec<_>>()
                .join("/")
        };
        write!(
            f,
            "mixture:x0={},sigma={},weight={}",
            join(|c| c.0),
            join(|c| c.1),
            join(|c| c.2)
        )
    }
}
