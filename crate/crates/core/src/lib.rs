//! Exact uncertainty relations and the fluctuation route from a classical
//! ensemble to Schrodinger dynamics, checked numerically on 1-D spectral grids.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: periodic grids, sampled fields, spectral derivatives,
//!   quadrature and the momentum representation.
//! - [`state`]: canonical wavefunctions and the `psi <-> (p, s)` conversion.
//! - [`uncertainty`]: classical/nonclassical momentum split, Fisher length,
//!   the exact product `deltaX * dP_nc = hbar/2` and its relatives.
//! - [`dynamics`]: split-step Schrodinger and Madelung field solvers, the
//!   classical and modified Lagrangians, the quantum potential and the
//!   stochastic-mechanics velocities.
//! - [`theorem`]: basis functionals of the fluctuation term, their
//!   additivity and dilation laws, and the coefficient filter.
//! - [`cli`]: the `analyze`, `evolve` and `verify-theorem` commands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod output;
pub mod state;
pub mod theorem;
pub mod uncertainty;

pub use error::{Error, Result};
pub use grid::{ComplexField, Grid1D, MomentumGrid, RealField};
pub use rustfft::num_complex::Complex64;
pub use state::{MadelungState, StateSpec};
pub use uncertainty::UncertaintyReport;
