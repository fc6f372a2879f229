//! Strang split-step evolution of `i∂_tφ = −Δφ + Vφ + 2·coupling·|φ|²φ`
//! (`coupling = 4π𝔞`, so the nonlinearity is `8π𝔞|φ|²φ`).
//!
//! Both sub-steps are unitary: a Fourier multiplier `e^{−ik²dt/2}` and the
//! pointwise phase `e^{−i(V + 2·coupling·|φ|²)dt}`, which is exact because
//! `|φ|` does not change under it.

use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gp::{GpError, GpFunctional, GpProblem, GpState};
use crate::grid::Grid;
use crate::io;
use crate::lattice::ordered_sum;

#[derive(Debug, Error)]
pub enum TdgpError {
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Serialize)]
pub struct TdgpConfig {
    pub dt: f64,
    pub n_steps: usize,
    /// A snapshot is taken at step 0 and every `snapshot_stride` steps.
    pub snapshot_stride: usize,
    /// Snapshots kept in memory; later ones are written to `spill_dir`.
    pub memory_cap: usize,
    pub spill_dir: Option<PathBuf>,
}

impl TdgpConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self {
            dt,
            n_steps,
            snapshot_stride: n_steps.max(1),
            memory_cap: 64,
            spill_dir: None,
        }
    }

    fn validate(&self) -> Result<(), TdgpError> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(TdgpError::InvalidConfig(format!("dt must be finite and nonzero, got {}", self.dt)));
        }
        if self.snapshot_stride == 0 {
            return Err(TdgpError::InvalidConfig("snapshot_stride must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum SnapshotData {
    Memory(Vec<Complex64>),
    /// JSON sidecar of a binary field file.
    Disk(PathBuf),
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub data: SnapshotData,
}

impl Snapshot {
    pub fn field(&self) -> Result<Vec<Complex64>, TdgpError> {
        match &self.data {
            SnapshotData::Memory(phi) => Ok(phi.clone()),
            SnapshotData::Disk(path) => Ok(io::read_field_binary(path)?.1),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Diagnostic {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: Grid,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<Diagnostic>,
    pub final_state: GpState,
    /// `max |‖φ_t‖ − ‖φ_0‖|` over snapshots.
    pub max_norm_drift: f64,
    /// `max |E(φ_t) − E(φ_0)|` over snapshots.
    pub max_energy_drift: f64,
}

/// Reusable split-step operator for one problem and time step.
pub struct Propagator<'a> {
    functional: GpFunctional<'a>,
    dt: f64,
    half_kinetic: Vec<Complex64>,
    full_kinetic: Vec<Complex64>,
}

impl<'a> Propagator<'a> {
    pub fn new(problem: &'a GpProblem, dt: f64) -> Result<Self, TdgpError> {
        if problem.is_rotating() {
            return Err(GpError::InvalidProblem("rotating-frame dynamics are not supported".into()).into());
        }
        let functional = GpFunctional::new(problem);
        let table = |t: f64| -> Vec<Complex64> {
            functional.spectral().k2().iter().map(|k2| Complex64::from_polar(1.0, -k2 * t)).collect()
        };
        let (half_kinetic, full_kinetic) = (table(0.5 * dt), table(dt));
        Ok(Self {
            functional,
            dt,
            half_kinetic,
            full_kinetic,
        })
    }

    fn kinetic(&self, phi: &mut [Complex64], table: &[Complex64]) {
        let sp = self.functional.spectral();
        sp.forward(phi);
        phi.par_iter_mut().zip(table).for_each(|(z, m)| *z *= m);
        sp.inverse(phi);
    }

    fn potential(&self, phi: &mut [Complex64]) {
        let problem = self.functional.problem;
        let (g2, dt) = (2.0 * problem.coupling, self.dt);
        phi.par_iter_mut()
            .zip(&problem.v_ext)
            .for_each(|(z, v)| *z *= Complex64::from_polar(1.0, -(v + g2 * z.norm_sqr()) * dt));
    }

    /// One Strang step in place.
    pub fn step(&self, phi: &mut [Complex64]) -> Result<(), TdgpError> {
        self.steps(phi, 1)
    }

    /// `count` Strang steps in place; adjacent kinetic half-steps are fused.
    pub fn steps(&self, phi: &mut [Complex64], count: usize) -> Result<(), TdgpError> {
        self.functional.check(phi)?;
        if count == 0 {
            return Ok(());
        }
        self.kinetic(phi, &self.half_kinetic);
        for k in 0..count {
            self.potential(phi);
            let table = if k + 1 == count { &self.half_kinetic } else { &self.full_kinetic };
            self.kinetic(phi, table);
        }
        Ok(())
    }

    pub fn energy(&self, phi: &[Complex64]) -> Result<f64, TdgpError> {
        Ok(self.functional.energy(phi)?.total)
    }
}

fn check_state(state: &GpState, problem: &GpProblem) -> Result<(), TdgpError> {
    if state.grid != problem.grid || state.phi.len() != problem.grid.len() {
        return Err(GpError::GridMismatch {
            expected: problem.grid.len(),
            found: state.phi.len(),
        }
        .into());
    }
    Ok(())
}

/// Advances `state` by one step of length `dt`.
pub fn step(state: &GpState, problem: &GpProblem, dt: f64) -> Result<GpState, TdgpError> {
    check_state(state, problem)?;
    let prop = Propagator::new(problem, dt)?;
    let mut phi = state.phi.clone();
    prop.step(&mut phi)?;
    Ok(prop.functional.state(phi)?)
}

/// Runs `config.n_steps` steps, recording snapshots and diagnostics.
pub fn evolve(state: &GpState, problem: &GpProblem, config: &TdgpConfig) -> Result<Trajectory, TdgpError> {
    config.validate()?;
    check_state(state, problem)?;
    let prop = Propagator::new(problem, config.dt)?;
    let grid = problem.grid;
    let mut phi = state.phi.clone();
    let mut snapshots = Vec::new();
    let mut diagnostics = Vec::new();
    let mut spill: Option<PathBuf> = None;
    let mut n = 0;
    loop {
        let time = n as f64 * config.dt;
        diagnostics.push(Diagnostic {
            step: n,
            time,
            norm: grid.norm(&phi),
            energy: prop.energy(&phi)?,
        });
        let data = if snapshots.len() < config.memory_cap {
            SnapshotData::Memory(phi.clone())
        } else {
            let dir = match &spill {
                Some(d) => d.clone(),
                None => {
                    let d = config.spill_dir.clone().unwrap_or_else(default_spill_dir);
                    std::fs::create_dir_all(&d)?;
                    spill = Some(d.clone());
                    d
                }
            };
            let (_, sidecar) = io::write_field_binary(dir.join(format!("snapshot_{n:08}")), &grid, &phi)?;
            SnapshotData::Disk(sidecar)
        };
        snapshots.push(Snapshot { step: n, time, data });
        if n == config.n_steps {
            break;
        }
        let next = (n + config.snapshot_stride).min(config.n_steps);
        prop.steps(&mut phi, next - n)?;
        n = next;
    }
    let (n0, e0) = (diagnostics[0].norm, diagnostics[0].energy);
    let max_norm_drift = diagnostics.iter().map(|d| (d.norm - n0).abs()).fold(0.0, f64::max);
    let max_energy_drift = diagnostics.iter().map(|d| (d.energy - e0).abs()).fold(0.0, f64::max);
    Ok(Trajectory {
        grid,
        snapshots,
        diagnostics,
        final_state: prop.functional.state(phi)?,
        max_norm_drift,
        max_energy_drift,
    })
}

fn default_spill_dir() -> PathBuf {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    std::env::temp_dir().join(format!(
        "gpbose-tdgp-{}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ))
}

/// `|⟨a, b⟩|` in L².
pub fn overlap(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> f64 {
    let re = ordered_sum(a.len(), |i| (a[i].conj() * b[i]).re);
    let im = ordered_sum(a.len(), |i| (a[i].conj() * b[i]).im);
    Complex64::new(re, im).norm() * grid.cell_volume()
}

/// RMS width `sqrt(∫|x − x̄|²|φ|² / ∫|φ|²)`.
pub fn rms_width(grid: &Grid, phi: &[Complex64]) -> f64 {
    let mass = ordered_sum(phi.len(), |i| phi[i].norm_sqr());
    let mean: Vec<f64> = (0..3)
        .map(|d| ordered_sum(phi.len(), |i| grid.position(i)[d] * phi[i].norm_sqr()) / mass)
        .collect();
    let var = ordered_sum(phi.len(), |i| {
        let x = grid.position(i);
        let r2: f64 = (0..3).map(|d| (x[d] - mean[d]).powi(2)).sum();
        r2 * phi[i].norm_sqr()
    });
    (var / mass).sqrt()
}
