use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, RealField};

/// External potential `V(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Free,
    /// `m omega^2 (x - center)^2 / 2`.
    Harmonic {
        omega: f64,
        center: f64,
    },
    /// Flat floor of width `width` with smooth walls of height `depth` and
    /// edge length `edge`.
    Well {
        depth: f64,
        width: f64,
        edge: f64,
    },
    /// Values on the simulation grid.
    Sampled(Vec<f64>),
}

impl PotentialSpec {
    pub fn harmonic(omega: f64) -> Self {
        PotentialSpec::Harmonic { omega, center: 0.0 }
    }

    pub fn sample(&self, grid: &Grid1D, mass: f64) -> Result<RealField> {
        match self {
            PotentialSpec::Free => Ok(RealField::zeros(*grid)),
            PotentialSpec::Harmonic { omega, center } => {
                RealField::from_fn(*grid, |x| 0.5 * mass * omega * omega * (x - center).powi(2))
            }
            PotentialSpec::Well { depth, width, edge } => RealField::from_fn(*grid, |x| {
                let half = 0.5 * width;
                depth * (1.0 - 0.5 * (((x + half) / edge).tanh() - ((x - half) / edge).tanh()))
            }),
            PotentialSpec::Sampled(v) => {
                if v.len() != grid.n() {
                    return Err(Error::InvalidArgument(format!(
                        "sampled potential has {} values, grid has {}",
                        v.len(),
                        grid.n()
                    )));
                }
                RealField::new(*grid, v.clone())
            }
        }
    }

    /// One value per line (an optional leading `x,` column is ignored).
    pub fn read_sampled(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cell = line.rsplit(',').next().unwrap_or(line).trim();
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::ConfigParse(format!(
                        "potential file line {}: {cell:?}",
                        i + 1
                    )))
                }
            }
        }
        Ok(PotentialSpec::Sampled(values))
    }
}

impl FromStr for PotentialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        let mut params = Vec::new();
        for kv in body.split(',').filter(|kv| !kv.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::ConfigParse(format!("potential: expected key=value, got {kv:?}"))
            })?;
            params.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut get = |key: &str, default: Option<f64>| -> Result<f64> {
            match params.iter().position(|(k, _)| k == key) {
                Some(i) => {
                    let (_, v) = params.remove(i);
                    v.parse::<f64>().map_err(|_| {
                        Error::ConfigParse(format!("potential: {key}={v:?} is not a number"))
                    })
                }
                None => default
                    .ok_or_else(|| Error::ConfigParse(format!("potential {kind}: missing {key}"))),
            }
        };
        let spec = match kind.trim() {
            "free" => PotentialSpec::Free,
            "harmonic" => PotentialSpec::Harmonic {
                omega: get("omega", Some(1.0))?,
                center: get("center", Some(0.0))?,
            },
            "well" => PotentialSpec::Well {
                depth: get("depth", None)?,
                width: get("width", None)?,
                edge: get("edge", Some(0.5))?,
            },
            "sampled" => {
                let idx = params
                    .iter()
                    .position(|(k, _)| k == "path")
                    .ok_or_else(|| Error::ConfigParse("sampled potential needs path=".into()))?;
                let (_, path) = params.remove(idx);
                PotentialSpec::read_sampled(Path::new(&path))?
            }
            other => return Err(Error::ConfigParse(format!("unknown potential {other:?}"))),
        };
        if let Some((k, _)) = params.first() {
            return Err(Error::ConfigParse(format!("potential: unknown key {k:?}")));
        }
        Ok(spec)
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Free => write!(f, "free"),
            PotentialSpec::Harmonic { omega, center } => {
                write!(f, "harmonic:omega={omega},center={center}")
            }
            PotentialSpec::Well { depth, width, edge } => {
                write!(f, "well:depth={depth},width={width},edge={edge}")
            }
            PotentialSpec::Sampled(v) => write!(f, "sampled:{} values", v.len()),
        }
    }
}
