//! Canonical test states and the wavefunction / Madelung-field conversion.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{self, boundary_leakage, ComplexField, Grid1D, RealField, Support, P_FLOOR_REL};

/// Largest relative edge density accepted for states that are meant to decay.
pub const LEAKAGE_LIMIT: f64 = 1e-10;

/// One Gaussian packet `w e^{i phase} g(x)` with
/// `g = (2 pi sigma^2)^{-1/4} exp(-(x-x0)^2 / 4 sigma^2 + i k0 x + i alpha (x-x0)^2 / 2 hbar)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub x0: f64,
    pub sigma: f64,
    pub k0: f64,
    pub alpha: f64,
    pub weight: f64,
    pub phase: f64,
}

impl Packet {
    pub fn gaussian(x0: f64, sigma: f64) -> Self {
        Self {
            x0,
            sigma,
            k0: 0.0,
            alpha: 0.0,
            weight: 1.0,
            phase: 0.0,
        }
    }

    fn amplitude(&self, x: f64, hbar: f64) -> Complex64 {
        let d = x - self.x0;
        let env = (2.0 * PI * self.sigma * self.sigma).powf(-0.25)
            * (-d * d / (4.0 * self.sigma * self.sigma)).exp();
        let phase = self.k0 * x + self.alpha * d * d / (2.0 * hbar) + self.phase;
        Complex64::from_polar(self.weight * env, phase)
    }
}

/// Catalogue of constructible states.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Gaussian {
        x0: f64,
        sigma: f64,
    },
    BoostedGaussian {
        x0: f64,
        sigma: f64,
        k0: f64,
    },
    ChirpedGaussian {
        x0: f64,
        sigma: f64,
        k0: f64,
        alpha: f64,
    },
    Superposition(Vec<Packet>),
    /// Gaussian multiplied by a tanh window that rises over `cells` grid
    /// spacings at each end of `[a, b]`.
    TruncatedGaussian {
        x0: f64,
        sigma: f64,
        a: f64,
        b: f64,
        cells: f64,
    },
    File(PathBuf),
}

impl StateSpec {
    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        let bad = |msg: String| Err(Error::StateSpecParse(msg));
        let check_sigma = |s: f64| {
            if s > 0.0 && s.is_finite() {
                Ok(())
            } else {
                bad(format!("sigma must be positive, got {s}"))
            }
        };
        match self {
            StateSpec::Gaussian { sigma, .. }
            | StateSpec::BoostedGaussian { sigma, .. }
            | StateSpec::ChirpedGaussian { sigma, .. } => check_sigma(*sigma),
            StateSpec::Superposition(ps) => {
                if ps.is_empty() {
                    return bad("superposition needs at least one component".into());
                }
                for p in ps {
                    check_sigma(p.sigma)?;
                }
                if ps.iter().all(|p| p.weight == 0.0) {
                    return bad("superposition weights are all zero".into());
                }
                Ok(())
            }
            StateSpec::TruncatedGaussian {
                sigma, a, b, cells, ..
            } => {
                check_sigma(*sigma)?;
                if !(a < b) || *a <= grid.x_min() || *b >= grid.x_max() {
                    return bad(format!(
                        "truncation interval [{a}, {b}] must lie inside the grid"
                    ));
                }
                if !(*cells > 0.0) {
                    return bad("smoothing width must be positive".into());
                }
                Ok(())
            }
            StateSpec::File(_) => Ok(()),
        }
    }

    fn packets(&self) -> Option<Vec<Packet>> {
        Some(match self {
            StateSpec::Gaussian { x0, sigma } => vec![Packet::gaussian(*x0, *sigma)],
            StateSpec::BoostedGaussian { x0, sigma, k0 } => vec![Packet {
                k0: *k0,
                ..Packet::gaussian(*x0, *sigma)
            }],
            StateSpec::ChirpedGaussian {
                x0,
                sigma,
                k0,
                alpha,
            } => vec![Packet {
                k0: *k0,
                alpha: *alpha,
                ..Packet::gaussian(*x0, *sigma)
            }],
            StateSpec::Superposition(ps) => ps.clone(),
            _ => return None,
        })
    }
}

/// Build a normalized wavefunction.
pub fn make_state(spec: &StateSpec, grid: &Grid1D, hbar: f64) -> Result<ComplexField> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "hbar must be positive, got {hbar}"
        )));
    }
    spec.validate(grid)?;
    let psi = match spec {
        StateSpec::TruncatedGaussian {
            x0,
            sigma,
            a,
            b,
            cells,
        } => {
            let w = cells * grid.dx();
            let g = Packet::gaussian(*x0, *sigma);
            let raw = ComplexField::from_fn(*grid, |x| {
                let window = 0.25 * (1.0 + ((x - a) / w).tanh()) * (1.0 - ((x - b) / w).tanh());
                g.amplitude(x, hbar) * window
            })?;
            return raw.normalized();
        }
        StateSpec::File(path) => read_state_csv(path, grid)?.normalized()?,
        _ => {
            let packets = spec.packets().expect("analytic state");
            ComplexField::from_fn(*grid, |x| {
                packets
                    .iter()
                    .map(|p| p.amplitude(x, hbar))
                    .sum::<Complex64>()
            })?
            .normalized()?
        }
    };
    let leakage = boundary_leakage(&psi);
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::GridTooSmall {
            leakage,
            limit: LEAKAGE_LIMIT,
        });
    }
    Ok(psi)
}

/// Read `index,re,im` rows; the indices must cover the grid exactly.
pub fn read_state_csv(path: &Path, grid: &Grid1D) -> Result<ComplexField> {
    let text = std::fs::read_to_string(path)?;
    let mut values = vec![None; grid.n()];
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(Error::GridMismatch(format!(
                "line {}: expected index,re,im",
                line_no + 1
            )));
        }
        let Ok(j) = cols[0].parse::<usize>() else {
            if line_no == 0 {
                continue; // header
            }
            return Err(Error::GridMismatch(format!(
                "line {}: bad index",
                line_no + 1
            )));
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::GridMismatch(format!("line {}: bad number {s:?}", line_no + 1)))
        };
        let z = Complex64::new(parse(cols[1])?, parse(cols[2])?);
        match values.get_mut(j) {
            Some(slot @ None) => *slot = Some(z),
            Some(Some(_)) => return Err(Error::GridMismatch(format!("index {j} repeated"))),
            None => {
                return Err(Error::GridMismatch(format!(
                    "index {j} outside grid of {} points",
                    grid.n()
                )))
            }
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(j, v)| v.ok_or_else(|| Error::GridMismatch(format!("index {j} missing"))))
        .collect::<Result<Vec<_>>>()?;
    ComplexField::new(*grid, values)
}

/// Hydrodynamic picture of a pure state: density `p`, momentum potential `s`
/// and the time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct MadelungState {
    pub p: RealField,
    pub s: RealField,
    pub t: f64,
}

impl MadelungState {
    pub fn new(p: RealField, s: RealField, t: f64) -> Result<Self> {
        if p.grid() != s.grid() {
            return Err(Error::InvalidArgument(
                "p and s live on different grids".into(),
            ));
        }
        if let Some(j) = p.values().iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidDensity(format!(
                "negative density at x = {}",
                p.grid().x(j)
            )));
        }
        let norm = grid::integrate(&p)?;
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { p, s, t })
    }

    pub fn grid(&self) -> &Grid1D {
        self.p.grid()
    }
}

/// Relative floor used to detect nodes, scaled by the peak of `p`.
pub fn p_floor(p: &[f64]) -> f64 {
    P_FLOOR_REL * p.iter().copied().fold(0.0, f64::max)
}

/// Fail with `NodePresent` if `p` dips to the floor anywhere inside its support.
pub fn check_node_free(p: &RealField) -> Result<Support> {
    let floor = p_floor(p.values());
    let support = Support::above(p.values(), floor)
        .ok_or_else(|| Error::InvalidDensity("density vanishes everywhere".into()))?;
    if let Some(j) = support.interior_dip(p.values(), floor) {
        return Err(Error::NodePresent { x: p.grid().x(j) });
    }
    Ok(support)
}

/// `p = |psi|^2`, `s = hbar * unwrapped arg psi`, anchored so `s` vanishes at
/// the grid midpoint. Nodes are rejected.
pub fn wavefunction_to_fields(psi: &ComplexField, hbar: f64) -> Result<MadelungState> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "hbar must be positive, got {hbar}"
        )));
    }
    let p = psi.density();
    check_node_free(&p)?;
    let norm = grid::integrate(&p)?;
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    let mut phase = Vec::with_capacity(psi.values().len());
    let mut prev = psi.values()[0].arg();
    let mut acc = prev;
    phase.push(acc);
    for z in &psi.values()[1..] {
        let a = z.arg();
        let mut jump = a - prev;
        while jump > PI {
            jump -= 2.0 * PI;
        }
        while jump < -PI {
            jump += 2.0 * PI;
        }
        acc += jump;
        prev = a;
        phase.push(acc);
    }
    let anchor = phase[psi.grid().midpoint()];
    let s = phase.into_iter().map(|ph| hbar * (ph - anchor)).collect();
    Ok(MadelungState {
        p,
        s: RealField::new(*psi.grid(), s)?,
        t: 0.0,
    })
}

/// `psi = sqrt(p) e^{i s / hbar}`.
pub fn fields_to_wavefunction(m: &MadelungState, hbar: f64) -> Result<ComplexField> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "hbar must be positive, got {hbar}"
        )));
    }
    if let Some(j) = m.p.values().iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidDensity(format!(
            "negative density at x = {}",
            m.grid().x(j)
        )));
    }
    ComplexField::new(
        *m.grid(),
        m.p.values()
            .iter()
            .zip(m.s.values())
            .map(|(&p, &s)| Complex64::from_polar(p.sqrt(), s / hbar))
            .collect(),
    )
}

/// Seeded random Gaussian mixture with 3 to 7 components (random centres,
/// widths, weights, phases, boosts and chirps). Draws that interfere almost
/// destructively anywhere the packets carry weight are redrawn, so every
/// returned state is comfortably node-free.
pub fn random_mixture<R: Rng>(
    rng: &mut R,
    grid: &Grid1D,
    hbar: f64,
) -> Result<(StateSpec, ComplexField)> {
    for _ in 0..10_000 {
        let count = rng.gen_range(3..=7);
        let packets: Vec<Packet> = (0..count)
            .map(|_| Packet {
                x0: rng.gen_range(-3.0..3.0),
                sigma: rng.gen_range(0.8..1.5),
                k0: rng.gen_range(-1.5..1.5),
                alpha: rng.gen_range(-0.3..0.3),
                weight: rng.gen_range(0.5..1.5),
                phase: rng.gen_range(0.0..2.0 * PI),
            })
            .collect();
        let spec = StateSpec::Superposition(packets.clone());
        let Ok(psi) = make_state(&spec, grid, hbar) else {
            continue;
        };
        // envelope: sum of component moduli, same normalization as psi
        let raw_norm = {
            let raw: Vec<Complex64> = grid
                .points()
                .iter()
                .map(|&x| packets.iter().map(|p| p.amplitude(x, hbar)).sum())
                .collect();
            (raw.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx()).sqrt()
        };
        let envelope: Vec<f64> = grid
            .points()
            .iter()
            .map(|&x| {
                let e: f64 = packets.iter().map(|p| p.amplitude(x, hbar).norm()).sum();
                (e / raw_norm).powi(2)
            })
            .collect();
        let peak = envelope.iter().copied().fold(0.0, f64::max);
        let deep = psi
            .values()
            .iter()
            .zip(&envelope)
            .any(|(z, &e)| e > 1e-8 * peak && z.norm_sqr() < 1e-3 * e);
        if !deep {
            return Ok((spec, psi));
        }
    }
    Err(Error::InvalidArgument(
        "could not draw a node-free mixture".into(),
    ))
}

// ---- compact string form: `kind:key=val,key=val` ----

fn parse_params(body: &str) -> Result<Vec<(String, String)>> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::StateSpecParse(format!("expected key=value, got {kv:?}")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

struct Params {
    kind: String,
    items: Vec<(String, String)>,
}

impl Params {
    fn take(&mut self, key: &str) -> Option<String> {
        let idx = self.items.iter().position(|(k, _)| k == key)?;
        Some(self.items.remove(idx).1)
    }

    fn num(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.take(key) {
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    Error::StateSpecParse(format!("{}: {key}={v:?} is not a number", self.kind))
                }),
            None => default
                .ok_or_else(|| Error::StateSpecParse(format!("{}: missing {key}", self.kind))),
        }
    }

    fn list(&mut self, key: &str, default: f64) -> Result<Vec<f64>> {
        match self.take(key) {
            Some(v) => v
                .split('/')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| {
                            Error::StateSpecParse(format!(
                                "{}: {key} has bad entry {x:?}",
                                self.kind
                            ))
                        })
                })
                .collect(),
            None => Ok(vec![default]),
        }
    }

    fn finish(self) -> Result<()> {
        match self.items.first() {
            Some((k, _)) => Err(Error::StateSpecParse(format!(
                "{}: unknown key {k:?}",
                self.kind
            ))),
            None => Ok(()),
        }
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    /// Superposition lists use `/` between components, e.g.
    /// `superposition:x0=-4/4,sigma=1,weight=1/1`; scalars broadcast.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        let kind = kind.trim().to_string();
        let mut p = Params {
            kind: kind.clone(),
            items: parse_params(body)?,
        };
        let spec = match kind.as_str() {
            "gaussian" => StateSpec::Gaussian {
                x0: p.num("x0", Some(0.0))?,
                sigma: p.num("sigma", Some(1.0))?,
            },
            "boosted_gaussian" => StateSpec::BoostedGaussian {
                x0: p.num("x0", Some(0.0))?,
                sigma: p.num("sigma", Some(1.0))?,
                k0: p.num("k0", None)?,
            },
            "chirped_gaussian" => StateSpec::ChirpedGaussian {
                x0: p.num("x0", Some(0.0))?,
                sigma: p.num("sigma", Some(1.0))?,
                k0: p.num("k0", Some(0.0))?,
                alpha: p.num("alpha", None)?,
            },
            "superposition" => {
                let fields = ["x0", "sigma", "k0", "alpha", "weight", "phase"];
                let defaults = [0.0, 1.0, 0.0, 0.0, 1.0, 0.0];
                let lists = fields
                    .iter()
                    .zip(defaults)
                    .map(|(k, d)| p.list(k, d))
                    .collect::<Result<Vec<_>>>()?;
                let count = lists.iter().map(Vec::len).max().unwrap_or(1);
                if lists.iter().any(|l| l.len() != 1 && l.len() != count) {
                    return Err(Error::StateSpecParse(
                        "superposition lists differ in length".into(),
                    ));
                }
                let at = |l: &Vec<f64>, i: usize| if l.len() == 1 { l[0] } else { l[i] };
                StateSpec::Superposition(
                    (0..count)
                        .map(|i| Packet {
                            x0: at(&lists[0], i),
                            sigma: at(&lists[1], i),
                            k0: at(&lists[2], i),
                            alpha: at(&lists[3], i),
                            weight: at(&lists[4], i),
                            phase: at(&lists[5], i),
                        })
                        .collect(),
                )
            }
            "truncated_gaussian" => StateSpec::TruncatedGaussian {
                x0: p.num("x0", Some(0.0))?,
                sigma: p.num("sigma", Some(1.0))?,
                a: p.num("a", None)?,
                b: p.num("b", None)?,
                cells: p.num("cells", Some(4.0))?,
            },
            "file" => StateSpec::File(PathBuf::from(
                p.take("path")
                    .ok_or_else(|| Error::StateSpecParse("file: missing path".into()))?,
            )),
            other => {
                return Err(Error::StateSpecParse(format!(
                    "unknown state kind {other:?}"
                )))
            }
        };
        p.finish()?;
        Ok(spec)
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Gaussian { x0, sigma } => write!(f, "gaussian:x0={x0},sigma={sigma}"),
            StateSpec::BoostedGaussian { x0, sigma, k0 } => {
                write!(f, "boosted_gaussian:x0={x0},sigma={sigma},k0={k0}")
            }
            StateSpec::ChirpedGaussian {
                x0,
                sigma,
                k0,
                alpha,
            } => {
                write!(
                    f,
                    "chirped_gaussian:x0={x0},sigma={sigma},k0={k0},alpha={alpha}"
                )
            }
            StateSpec::Superposition(ps) => {
                let join = |g: fn(&Packet) -> f64| {
                    ps.iter()
                        .map(|p| g(p).to_string())
                        .collect::<Vec<_>>()
                        .join("/")
                };
                write!(
                    f,
                    "superposition:x0={},sigma={},k0={},alpha={},weight={},phase={}",
                    join(|p| p.x0),
                    join(|p| p.sigma),
                    join(|p| p.k0),
                    join(|p| p.alpha),
                    join(|p| p.weight),
                    join(|p| p.phase)
                )
            }
            StateSpec::TruncatedGaussian {
                x0,
                sigma,
                a,
                b,
                cells,
            } => {
                write!(
                    f,
                    "truncated_gaussian:x0={x0},sigma={sigma},a={a},b={b},cells={cells}"
                )
            }
            StateSpec::File(path) => write!(f, "file:path={}", path.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DerivativeMode;

    fn grid() -> Grid1D {
        Grid1D::new(-20.0, 20.0, 1024).unwrap()
    }

    #[test]
    fn gaussian_peak_value() {
        let g = grid();
        let psi = make_state(&"gaussian:x0=0,sigma=1".parse().unwrap(), &g, 1.0).unwrap();
        let peak = psi.values()[g.midpoint()];
        assert!((peak.re - (2.0 * PI).powf(-0.25)).abs() < 1e-12);
        assert!(peak.im.abs() < 1e-15);
    }

    #[test]
    fn boost_keeps_modulus() {
        let g = grid();
        let a = make_state(
            &StateSpec::Gaussian {
                x0: 0.0,
                sigma: 1.0,
            },
            &g,
            1.0,
        )
        .unwrap();
        let b = make_state(&"boosted_gaussian:k0=5".parse().unwrap(), &g, 1.0).unwrap();
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u.norm() - v.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn two_packet_superposition_is_normalized() {
        let g = grid();
        let spec: StateSpec = "superposition:x0=-4/4,sigma=1,weight=1/1".parse().unwrap();
        let psi = make_state(&spec, &g, 1.0).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        // overlap oracle: raw norm^2 = 2 + 2 exp(-x0^2 / 2 sigma^2) with x0 = 4
        let raw: f64 = g
            .points()
            .iter()
            .map(|&x| {
                let a = Packet::gaussian(-4.0, 1.0).amplitude(x, 1.0)
                    + Packet::gaussian(4.0, 1.0).amplitude(x, 1.0);
                a.norm_sqr()
            })
            .sum::<f64>()
            * g.dx();
        assert!((raw - (2.0 + 2.0 * (-8.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let g = Grid1D::new(-3.0, 3.0, 128).unwrap();
        let err = make_state(
            &StateSpec::Gaussian {
                x0: 0.0,
                sigma: 1.0,
            },
            &g,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::GridTooSmall { .. }));
        let trunc: StateSpec = "truncated_gaussian:a=-2,b=2".parse().unwrap();
        assert!(make_state(&trunc, &g, 1.0).is_ok());
    }

    #[test]
    fn real_gaussian_has_flat_potential() {
        let g = grid();
        let psi = make_state(
            &StateSpec::Gaussian {
                x0: 0.0,
                sigma: 1.0,
            },
            &g,
            1.0,
        )
        .unwrap();
        let m = wavefunction_to_fields(&psi, 1.0).unwrap();
        assert!(m.s.values().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn boosted_potential_is_linear() {
        let g = grid();
        let psi = make_state(&"boosted_gaussian:k0=5".parse().unwrap(), &g, 1.0).unwrap();
        let m = wavefunction_to_fields(&psi, 1.0).unwrap();
        assert_eq!(m.s.values()[g.midpoint()], 0.0);
        let ds =
            m.s.derivative(1, DerivativeMode::FiniteDifference)
                .unwrap()
                .field;
        for v in ds.values() {
            assert!((v - 5.0).abs() < 1e-10);
        }
    }

    #[test]
    fn chirped_potential_gradient() {
        let g = grid();
        let psi = make_state(&"chirped_gaussian:alpha=0.3".parse().unwrap(), &g, 1.0).unwrap();
        let m = wavefunction_to_fields(&psi, 1.0).unwrap();
        let ds =
            m.s.derivative(1, DerivativeMode::FiniteDifference)
                .unwrap()
                .field;
        for (j, v) in ds.values().iter().enumerate() {
            assert!((v - 0.3 * g.x(j)).abs() < 1e-9, "x = {}", g.x(j));
        }
    }

    #[test]
    fn field_round_trip_up_to_global_phase() {
        let g = grid();
        let psi = make_state(
            &"chirped_gaussian:alpha=0.3,k0=1.2".parse().unwrap(),
            &g,
            1.0,
        )
        .unwrap();
        let m = wavefunction_to_fields(&psi, 1.0).unwrap();
        let back = fields_to_wavefunction(&m, 1.0).unwrap();
        let mid = g.midpoint();
        let rot = psi.values()[mid] / back.values()[mid];
        let rot = rot / rot.norm();
        for (a, b) in psi.values().iter().zip(back.values()) {
            assert!((a - b * rot).norm() < 1e-10);
        }
    }

    #[test]
    fn linear_potential_matches_boost() {
        let g = grid();
        let gauss = make_state(
            &StateSpec::Gaussian {
                x0: 0.0,
                sigma: 1.0,
            },
            &g,
            1.0,
        )
        .unwrap();
        let p = gauss.density();
        let s = RealField::from_fn(g, |x| 5.0 * x).unwrap();
        let m = MadelungState::new(p.clone(), s, 0.0).unwrap();
        let psi = fields_to_wavefunction(&m, 1.0).unwrap();
        let boosted = make_state(&"boosted_gaussian:k0=5".parse().unwrap(), &g, 1.0).unwrap();
        for (a, b) in psi.values().iter().zip(boosted.values()) {
            assert!((a - b).norm() < 1e-12);
        }
        let flat = MadelungState::new(p, RealField::zeros(g), 0.0).unwrap();
        let real = fields_to_wavefunction(&flat, 1.0).unwrap();
        assert!(real.values().iter().all(|z| z.im == 0.0 && z.re >= 0.0));
    }

    #[test]
    fn nodes_are_rejected() {
        let g = grid();
        let odd = ComplexField::from_fn(g, |x| Complex64::new(x * (-x * x / 2.0).exp(), 0.0))
            .unwrap()
            .normalized()
            .unwrap();
        assert!(matches!(
            wavefunction_to_fields(&odd, 1.0),
            Err(Error::NodePresent { .. })
        ));
    }

    #[test]
    fn negative_density_is_rejected() {
        let g = Grid1D::new(-1.0, 1.0, 16).unwrap();
        let mut p = vec![0.5; 16];
        p[3] = -0.1;
        let m = MadelungState {
            p: RealField::new(g, p).unwrap(),
            s: RealField::zeros(g),
            t: 0.0,
        };
        assert!(matches!(
            fields_to_wavefunction(&m, 1.0),
            Err(Error::InvalidDensity(_))
        ));
    }

    #[test]
    fn spec_parsing() {
        assert!(matches!(
            "gaussian:sigma=".parse::<StateSpec>(),
            Err(Error::StateSpecParse(_))
        ));
        assert!(matches!(
            "wobble:x=1".parse::<StateSpec>(),
            Err(Error::StateSpecParse(_))
        ));
        assert!(matches!(
            "gaussian:sigma=1,foo=2".parse::<StateSpec>(),
            Err(Error::StateSpecParse(_))
        ));
        assert!(matches!(
            "boosted_gaussian:sigma=1".parse::<StateSpec>(),
            Err(Error::StateSpecParse(_))
        ));
        let spec: StateSpec = "superposition:x0=-1/0/1,weight=1/2/1,phase=0/1/0"
            .parse()
            .unwrap();
        let again: StateSpec = spec.to_string().parse().unwrap();
        assert_eq!(spec, again);
        let g = grid();
        assert!(make_state(&"gaussian:sigma=-1".parse().unwrap(), &g, 1.0).is_err());
    }

    #[test]
    fn csv_state_requires_matching_grid() {
        let g = Grid1D::new(-10.0, 10.0, 64).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("psi.csv");
        let mut text = String::from("index,re,im\n");
        for j in 0..64 {
            let x = g.x(j);
            text.push_str(&format!("{j},{},{}\n", (-x * x / 2.0).exp(), 0.0));
        }
        std::fs::write(&path, &text).unwrap();
        let psi = make_state(&StateSpec::File(path.clone()), &g, 1.0).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        let other = Grid1D::new(-10.0, 10.0, 128).unwrap();
        assert!(matches!(
            make_state(&StateSpec::File(path), &other, 1.0),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn random_mixtures_are_deterministic() {
        use rand::SeedableRng;
        let g = grid();
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (sa, pa) = random_mixture(&mut a, &g, 1.0).unwrap();
        let (sb, pb) = random_mixture(&mut b, &g, 1.0).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(pa, pb);
        assert!(check_node_free(&pa.density()).is_ok());
    }
}
