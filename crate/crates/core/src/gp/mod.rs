//! The Gross-Pitaevskii functional on periodic and trapped grids, its
//! minimizers (including the rotating frame), and the 2D coupling.

mod functional;
mod minimize;
mod problem;

use thiserror::Error;

pub use functional::{angular_momentum, gp_energy, EnergyBreakdown, GpFunctional, GpState};
pub use minimize::{minimize_gp, minimize_gp_rotating, GpSolution, MinimizeOptions};
pub use problem::{coupling_2d, GpProblem, CONFINEMENT_MARGIN};

#[derive(Debug, Error)]
pub enum GpError {
    #[error("field has {found} samples, grid has {expected}")]
    GridMismatch { expected: usize, found: usize },
    #[error("minimization stopped after {iterations} iterations (residual {residual:e}, last energy change {energy_change:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        energy_change: f64,
    },
    #[error("energy became non-finite ({0})")]
    DivergentEnergy(f64),
    #[error("potential is not confining: {0}")]
    ConfinementError(String),
    #[error("outside the domain: {0}")]
    DomainError(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}
