//! Numerical check of Dyson's lemma on balls:
//!
//! `∫_B [μ|∇φ|² + ½ v|φ|²] ≥ μ a ∫_B U |φ|²`, with `a` the scattering
//! length of `v/μ`, `U ≥ 0` supported outside the range of `v` and
//! `∫ U(r) r² dr ≤ 1`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::zero_energy::{default_r_max, solve_zero_energy, ScatteringSolution};
use super::{RadialPotential, ScatteringError};
use crate::lattice::gauss_integrate;

const PANELS_PER_SEGMENT: usize = 400;

/// A radial trial function `φ(|x|)` with its radial derivative.
pub trait RadialFunction: Sync {
    fn value(&self, r: f64) -> f64;
    fn derivative(&self, r: f64) -> f64;
}

/// `φ(r) = Σ c_k exp(−r²/w_k²)`.
#[derive(Clone, Debug, Serialize)]
pub struct GaussianMixture {
    pub terms: Vec<(f64, f64)>,
}

impl RadialFunction for GaussianMixture {
    fn value(&self, r: f64) -> f64 {
        self.terms.iter().map(|&(c, w)| c * (-(r / w).powi(2)).exp()).sum()
    }

    fn derivative(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, w)| -2.0 * r / (w * w) * c * (-(r / w).powi(2)).exp())
            .sum()
    }
}

/// `φ = f = u/r` taken from a zero-energy scattering solution.
pub struct ScatteringProfile<'a>(pub &'a ScatteringSolution);

impl RadialFunction for ScatteringProfile<'_> {
    fn value(&self, r: f64) -> f64 {
        self.0.f_at(r)
    }

    fn derivative(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let (u, du) = self.0.eval(r);
        (du * r - u) / (r * r)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DysonReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// Scattering length of `v/μ`.
    pub scattering_length: f64,
}

/// Relative slack granted to quadrature error when comparing the two sides.
pub const DYSON_TOLERANCE: f64 = 1e-9;

fn ball_integral<F: Fn(f64, f64, f64) -> f64>(edges: &[f64], f: F) -> f64 {
    edges
        .windows(2)
        .map(|w| gauss_integrate(|r| f(r, w[0], w[1]), w[0], w[1], PANELS_PER_SEGMENT))
        .sum()
}

/// Evaluates both sides of Dyson's inequality on the ball of radius `ball_radius`.
pub fn dyson_check(
    v: &RadialPotential,
    shell: &RadialPotential,
    phi: &dyn RadialFunction,
    mu: f64,
    ball_radius: f64,
) -> Result<DysonReport, ScatteringError> {
    if v.is_hard_core() {
        return Err(ScatteringError::UnsupportedKind("hard-core v makes the potential term infinite"));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(ScatteringError::InvalidInput(format!("mu must lie in (0, 1], got {mu}")));
    }
    if !(ball_radius > 0.0 && ball_radius.is_finite()) {
        return Err(ScatteringError::InvalidInput(format!("ball radius must be positive, got {ball_radius}")));
    }
    if shell.is_hard_core() {
        return Err(ScatteringError::UnsupportedKind("U must be an integrable profile"));
    }
    let mass = shell.radial_moment()?;
    if mass > 1.0 + 1e-12 {
        return Err(ScatteringError::NormalizationError { integral: mass });
    }
    if !shell.is_zero() && shell.support_start() < v.range() * (1.0 - 1e-12) {
        return Err(ScatteringError::InvalidInput(format!(
            "U starts at r = {} inside the range {} of v",
            shell.support_start(),
            v.range()
        )));
    }

    let a = if v.is_zero() {
        0.0
    } else {
        let rescaled = v.scaled(1.0 / mu);
        solve_zero_energy(&rescaled, default_r_max(&rescaled), 4096)?.a
    };

    let mut edges = vec![0.0, ball_radius];
    edges.extend(v.breakpoints());
    edges.extend(shell.breakpoints());
    edges.retain(|&x| x >= 0.0 && x <= ball_radius);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let lhs = 4.0
        * PI
        * ball_integral(&edges, |r, lo, hi| {
            let p = phi.value(r);
            let dp = phi.derivative(r);
            (mu * dp * dp + 0.5 * v.value_on_segment(r, lo, hi) * p * p) * r * r
        });
    let rhs = if shell.is_zero() || a == 0.0 {
        0.0
    } else {
        4.0 * PI
            * mu
            * a
            * ball_integral(&edges, |r, lo, hi| {
                let p = phi.value(r);
                shell.value_on_segment(r, lo, hi) * p * p * r * r
            })
    };
    let slack = DYSON_TOLERANCE * lhs.abs().max(rhs.abs());
    Ok(DysonReport {
        lhs,
        rhs,
        satisfied: lhs >= rhs - slack,
        scattering_length: a,
    })
}

/// One randomized admissible input set.
#[derive(Clone, Debug, Serialize)]
pub struct DysonTrial {
    pub v: RadialPotential,
    pub shell: RadialPotential,
    pub phi: GaussianMixture,
    pub mu: f64,
    pub ball_radius: f64,
}

impl DysonTrial {
    /// Draws trial `index` from the stream selected by `seed`.
    pub fn random(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let v = if rng.gen_bool(0.5) {
            RadialPotential::square_well(rng.gen_range(0.1..50.0), rng.gen_range(0.2..1.5))
        } else {
            RadialPotential::gaussian(rng.gen_range(0.1..20.0), rng.gen_range(0.05..0.3))
        }
        .expect("valid by construction");
        let inner = v.range() + rng.gen_range(0.0..2.0);
        let outer = inner + rng.gen_range(0.01..1.0);
        let mass: f64 = rng.gen_range(0.05..1.0);
        let height = 3.0 * mass / (outer.powi(3) - inner.powi(3));
        let shell = RadialPotential::shell(height, inner, outer).expect("valid by construction");
        let terms = (0..rng.gen_range(1..=3))
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.3..4.0)))
            .collect();
        Self {
            v,
            shell,
            phi: GaussianMixture { terms },
            mu: rng.gen_range(0.05..=1.0),
            ball_radius: rng.gen_range(0.5 * inner..outer + 3.0),
        }
    }

    pub fn check(&self) -> Result<DysonReport, ScatteringError> {
        dyson_check(&self.v, &self.shell, &self.phi, self.mu, self.ball_radius)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DysonSweep {
    pub trials: usize,
    pub violations: usize,
    /// Smallest `lhs/rhs` among trials with `rhs > 0`.
    pub min_ratio: f64,
    pub reports: Vec<DysonReport>,
}

/// Runs `count` seeded trials data-parallel; results are ordered by trial
/// index, so the outcome is independent of thread scheduling.
pub fn dyson_random_trials(count: usize, seed: u64) -> Result<DysonSweep, ScatteringError> {
    let reports: Vec<DysonReport> = (0..count as u64)
        .into_par_iter()
        .map(|i| DysonTrial::random(seed, i).check())
        .collect::<Result<_, _>>()?;
    let violations = reports.iter().filter(|r| !r.satisfied).count();
    let min_ratio = reports
        .iter()
        .filter(|r| r.rhs > 0.0)
        .map(|r| r.lhs / r.rhs)
        .fold(f64::INFINITY, f64::min);
    Ok(DysonSweep {
        trials: count,
        violations,
        min_ratio,
        reports,
    })
}
