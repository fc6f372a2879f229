//! Numerics for dilute Bose gases in the Gross-Pitaevskii regime.
//!
//! - [`scattering`]: zero-energy scattering lengths, the Neumann
//!   correlation problem, Dyson's lemma.
//! - [`ideal_gas`]: grand-canonical condensation of the ideal gas on a torus.
//! - [`gp`]: the Gross-Pitaevskii functional and its minimizers.
//! - [`tdgp`]: split-step evolution of the time-dependent GP equation.
//! - [`bogoliubov`]: dispersion law, second-order energy, depletion and
//!   low-lying spectrum of the homogeneous gas on the unit torus.
//! - [`fock`]: truncated bosonic Fock spaces used as brute-force oracles.

pub mod bogoliubov;
pub mod fock;
pub mod gp;
pub mod grid;
pub mod ideal_gas;
pub mod io;
pub mod lattice;
pub mod scattering;
pub mod tdgp;
