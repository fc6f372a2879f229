//! Zero-energy scattering, the Neumann correlation problem on a ball, and
//! a numerical verifier for Dyson's lemma. All problems are radial and
//! solved for `u(r) = r·f(r)` on a one-dimensional grid.

mod dyson;
mod neumann;
mod potential;
mod zero_energy;

use thiserror::Error;

pub use dyson::{
    dyson_check, dyson_random_trials, DysonReport, DysonSweep, DysonTrial, GaussianMixture, RadialFunction,
    ScatteringProfile, DYSON_TOLERANCE,
};
pub use neumann::{eta_coefficients, solve_neumann, EtaCoefficients, NeumannSolution, DEFAULT_ELL0, EIGEN_TOLERANCE};
pub use potential::{PotentialKind, RadialPotential, GAUSSIAN_TRUNCATION};
pub use zero_energy::{
    born_comparison, default_r_max, scaled_scattering_length, scattering_length, scattering_length_integral,
    solve_zero_energy, ScatteringSolution, ASYMPTOTIC_TOLERANCE, MIN_GRID_POINTS,
};

#[derive(Debug, Error)]
pub enum ScatteringError {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("scattering solve did not converge: {0}")]
    NonConvergence(String),
    #[error("unsupported potential kind: {0}")]
    UnsupportedKind(&'static str),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("eigensolver failure: {0}")]
    EigensolveFailure(String),
    #[error("geometry error: {0}")]
    GeometryError(String),
    #[error("∫ U(r) r² dr = {integral} exceeds 1")]
    NormalizationError { integral: f64 },
}
