//! Time evolution and the variational / hydrodynamic side of the theory.
//!
//! Two solvers evolve the same physics: [`evolve_schrodinger`] (Strang split
//! step on `psi`) and [`evolve_madelung`] (RK4 on the density `p` and the
//! momentum potential `s`). [`cross_validate`] runs both from identical data.

mod compare;
mod export;
mod lagrangian;
mod madelung;
mod potential;
mod schrodinger;
mod stochastic;

pub use compare::{
    cross_validate, density_l2_distance, observed_order, CrossValidation, ORDER_FLOOR,
};
pub use export::{write_field_dumps, write_trace_csv};
pub use lagrangian::{
    classical_lagrangian, fluctuation_kinetic_term, functional_derivative_check,
    modified_lagrangian, quantum_potential, FunctionalDerivativeCheck,
};
pub use madelung::{evolve_madelung, TAIL_REL};
pub use potential::PotentialSpec;
pub use schrodinger::{energy, evolve_schrodinger};
pub use stochastic::{stochastic_velocities, StochasticStats, StochasticVelocities};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid1D};
use crate::state::MadelungState;
use crate::uncertainty;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Schrodinger,
    Madelung,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub steps: usize,
    pub mass: f64,
    pub hbar: f64,
    pub solver: SolverKind,
    /// Store a snapshot every `store_every` steps (the last step is always stored).
    pub store_every: usize,
    /// `c` in the Madelung stability bound `dt <= c dx^2 m / hbar`.
    pub cfl_safety: f64,
    /// Relative edge density that halts a run.
    pub leakage_limit: f64,
    /// Compute uncertainty statistics for each stored step.
    pub track_uncertainty: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            steps: 1000,
            mass: 1.0,
            hbar: 1.0,
            solver: SolverKind::Schrodinger,
            store_every: 100,
            cfl_safety: 0.5,
            leakage_limit: crate::state::LEAKAGE_LIMIT,
            track_uncertainty: true,
        }
    }
}

impl SolverConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.mass > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if self.store_every == 0 {
            return Err(Error::InvalidArgument(
                "store_every must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Largest stable Madelung step on `grid` for the given `hbar`.
    pub fn madelung_dt_bound(&self, grid: &Grid1D, hbar: f64) -> f64 {
        if hbar == 0.0 {
            f64::INFINITY
        } else {
            self.cfl_safety * grid.dx() * grid.dx() * self.mass / hbar
        }
    }

    pub(crate) fn stores(&self, step: usize) -> bool {
        step.is_multiple_of(self.store_every) || step == self.steps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Wave { t: f64, psi: ComplexField },
    Fields(MadelungState),
}

impl Snapshot {
    pub fn t(&self) -> f64 {
        match self {
            Snapshot::Wave { t, .. } => *t,
            Snapshot::Fields(m) => m.t,
        }
    }

    /// Position density of the snapshot.
    pub fn density(&self) -> Vec<f64> {
        match self {
            Snapshot::Wave { psi, .. } => psi.density().into_values(),
            Snapshot::Fields(m) => m.p.values().to_vec(),
        }
    }
}

/// Per-stored-step diagnostics. Statistics that are undefined for the stored
/// state (a node, or a classical run) are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub leakage: f64,
    #[serde(rename = "dX")]
    pub dx: f64,
    #[serde(rename = "deltaX")]
    pub delta_x: f64,
    #[serde(rename = "dP_nc")]
    pub dp_nc: f64,
    pub product: f64,
}

impl StepDiagnostics {
    pub(crate) fn new(step: usize, t: f64, norm: f64, energy: f64, leakage: f64) -> Self {
        Self {
            step,
            t,
            norm,
            energy,
            leakage,
            dx: f64::NAN,
            delta_x: f64::NAN,
            dp_nc: f64::NAN,
            product: f64::NAN,
        }
    }

    pub(crate) fn with_uncertainty(mut self, psi: &ComplexField, hbar: f64) -> Self {
        if let Ok(r) = uncertainty::variance_decomposition(psi, hbar) {
            self.dx = r.dx;
            self.delta_x = r.delta_x;
            self.dp_nc = r.dp_nc;
            self.product = r.product_exact;
        }
        self
    }
}

/// Stored states and diagnostics of one run. A run that hits a runtime
/// failure keeps everything up to the failure and records it in `halt`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace {
    pub grid: Grid1D,
    pub solver: SolverKind,
    pub hbar: f64,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub halt: Option<Error>,
}

impl EvolutionTrace {
    pub fn last(&self) -> &Snapshot {
        self.snapshots
            .last()
            .expect("trace stores the initial state")
    }

    /// Largest `|norm(t) - norm(0)|` over the stored steps.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.diagnostics[0].norm;
        self.diagnostics
            .iter()
            .map(|d| (d.norm - n0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest relative energy deviation over the stored steps.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.diagnostics[0].energy;
        self.diagnostics
            .iter()
            .map(|d| (d.energy - e0).abs() / e0.abs())
            .fold(0.0, f64::max)
    }

    /// `Err(halt)` when the run stopped early.
    pub fn completed(self) -> Result<Self> {
        match self.halt {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}
