use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::functional::{GpFunctional, GpState};
use super::problem::normalized;
use super::{GpError, GpProblem};
use crate::lattice::ordered_sum;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MinimizeOptions {
    /// Energy change between iterations required for convergence.
    pub tol: f64,
    /// Bound on `‖Hφ − μφ‖`; defaults to `tol`.
    pub residual_tol: Option<f64>,
    pub max_iter: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            residual_tol: None,
            max_iter: 5000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GpSolution {
    pub state: GpState,
    /// Lagrange multiplier `μ = ⟨φ, Hφ⟩`.
    pub chemical_potential: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Energy after every accepted step, starting with the initial state.
    pub energy_history: Vec<f64>,
    /// `⟨L⟩` along the rotation axis (`z` when not rotating).
    pub angular_momentum: f64,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
const MAX_ANGLE: f64 = std::f64::consts::FRAC_PI_4;

struct Point {
    phi: Vec<Complex64>,
    h_phi: Vec<Complex64>,
    energy: f64,
}

fn axpy(a: f64, x: &[Complex64], y: &mut [Complex64]) {
    y.par_iter_mut().zip(x).for_each(|(y, x)| *y += x * a);
}

impl GpFunctional<'_> {
    fn point(&self, phi: Vec<Complex64>) -> Result<Point, GpError> {
        let k_phi = self.apply_linear(&phi);
        let quad = self.grid().inner(&phi, &k_phi);
        let energy = quad + self.interaction(&phi);
        if !energy.is_finite() {
            return Err(GpError::DivergentEnergy(energy));
        }
        let g2 = 2.0 * self.problem.coupling;
        let mut h_phi = k_phi;
        h_phi.par_iter_mut().zip(&phi).for_each(|(o, z)| *o += z * (g2 * z.norm_sqr()));
        Ok(Point { phi, h_phi, energy })
    }

    /// `S (α + k²)⁻¹ S r` with `S = (α + V + 2·coupling·|φ|²)^{−1/2}`. The
    /// overall scale is irrelevant since step lengths come from the curvature.
    fn precondition(&self, r: &[Complex64], phi: &[Complex64], alpha: f64) -> Vec<Complex64> {
        let g2 = 2.0 * self.problem.coupling;
        let s: Vec<f64> = phi
            .par_iter()
            .zip(&self.problem.v_ext)
            .map(|(z, v)| 1.0 / (alpha + (v + g2 * z.norm_sqr()).max(0.0)).sqrt())
            .collect();
        let scaled: Vec<Complex64> = r.iter().zip(&s).map(|(z, s)| z * s).collect();
        let k2 = self.spectral().k2();
        let mut out = self.spectral().multiplier(&scaled, |i| Complex64::new(1.0 / (alpha + k2[i]), 0.0));
        out.iter_mut().zip(&s).for_each(|(z, s)| *z *= s);
        out
    }

    /// Second derivative of `θ ↦ E(φ cos θ + p sin θ)` at `θ = 0`.
    fn curvature(&self, pt: &Point, p: &[Complex64]) -> f64 {
        let grid = self.grid();
        let quad_p = grid.inner(p, &self.apply_linear(p));
        let quad_phi = grid.inner(&pt.phi, &pt.h_phi) - 2.0 * self.interaction(&pt.phi);
        let quartic = ordered_sum(p.len(), |i| {
            let (f, q) = (pt.phi[i], p[i]);
            let sigma = 2.0 * (f.conj() * q).re;
            let f2 = f.norm_sqr();
            2.0 * sigma * sigma + 4.0 * f2 * (q.norm_sqr() - f2)
        });
        2.0 * (quad_p - quad_phi) + self.problem.coupling * quartic * grid.cell_volume()
    }
}

/// Preconditioned Riemannian conjugate gradient (Polak–Ribière+) on the
/// unit sphere, with geodesic steps `φ cos θ + p̂ sin θ`, a Newton initial
/// angle and Armijo backtracking.
fn minimize(functional: &GpFunctional, init: Vec<Complex64>, opts: &MinimizeOptions) -> Result<GpSolution, GpError> {
    if !(opts.tol > 0.0) {
        return Err(GpError::InvalidProblem(format!("tolerance must be positive, got {}", opts.tol)));
    }
    functional.check(&init)?;
    let grid = *functional.grid();
    let residual_tol = opts.residual_tol.unwrap_or(opts.tol);
    let norm0 = grid.norm(&init);
    if !(norm0 > 0.0 && norm0.is_finite()) {
        return Err(GpError::InvalidProblem("initial state must have finite nonzero norm".into()));
    }
    let mut pt = functional.point(normalized(&grid, init))?;
    let mut history = vec![pt.energy];
    let mut prev_r: Option<(Vec<Complex64>, Vec<Complex64>)> = None;
    let mut p_prev: Option<Vec<Complex64>> = None;
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;

    loop {
        let mu = grid.inner(&pt.phi, &pt.h_phi);
        let mut r = pt.h_phi.clone();
        axpy(-mu, &pt.phi, &mut r);
        let res = grid.norm(&r);
        if last_change.abs() < opts.tol && res <= residual_tol {
            return finish(functional, pt, mu, res, iterations, history);
        }
        if iterations >= opts.max_iter {
            return Err(GpError::NonConvergence {
                iterations,
                residual: res,
                energy_change: last_change,
            });
        }
        iterations += 1;

        let alpha = mu.max(1.0);
        let mut d = functional.precondition(&r, &pt.phi, alpha);
        let dphi = grid.inner(&pt.phi, &d);
        axpy(-dphi, &pt.phi, &mut d);

        let mut p: Vec<Complex64> = d.iter().map(|z| -z).collect();
        if let (Some((r_old, d_old)), Some(p_old)) = (&prev_r, &p_prev) {
            let denom = grid.inner(r_old, d_old);
            let diff: Vec<Complex64> = d.iter().zip(d_old).map(|(a, b)| a - b).collect();
            let beta = (grid.inner(&r, &diff) / denom).max(0.0);
            if beta.is_finite() && beta > 0.0 {
                let mut transported = p_old.clone();
                let c = grid.inner(&pt.phi, &transported);
                axpy(-c, &pt.phi, &mut transported);
                axpy(beta, &transported, &mut p);
            }
        }
        if grid.inner(&r, &p) >= 0.0 {
            p = d.iter().map(|z| -z).collect();
        }

        let (next, p_used) = match line_search(functional, &pt, &p)? {
            Some(next) => (next, p),
            None => {
                // fall back to the preconditioned steepest descent direction
                let sd: Vec<Complex64> = d.iter().map(|z| -z).collect();
                match line_search(functional, &pt, &sd)? {
                    Some(next) => (next, sd),
                    // no descent left above rounding noise
                    None if res <= residual_tol => return finish(functional, pt, mu, res, iterations, history),
                    None => {
                        return Err(GpError::NonConvergence {
                            iterations,
                            residual: res,
                            energy_change: last_change,
                        })
                    }
                }
            }
        };
        last_change = next.energy - pt.energy;
        history.push(next.energy);
        prev_r = Some((r, d));
        p_prev = Some(p_used);
        pt = next;
    }
}

fn line_search(functional: &GpFunctional, pt: &Point, p: &[Complex64]) -> Result<Option<Point>, GpError> {
    let grid = functional.grid();
    let p_norm = grid.norm(p);
    if !(p_norm > 0.0) {
        return Ok(None);
    }
    let p_hat: Vec<Complex64> = p.iter().map(|z| z / p_norm).collect();
    let slope = 2.0 * grid.inner(&pt.h_phi, &p_hat);
    if slope >= 0.0 {
        return Ok(None);
    }
    let curv = functional.curvature(pt, &p_hat);
    let mut theta = if curv > 0.0 { -slope / curv } else { 1e-2 };
    theta = theta.min(MAX_ANGLE);
    let noise = 8.0 * f64::EPSILON * pt.energy.abs().max(1.0);
    for _ in 0..MAX_BACKTRACK {
        let (s, c) = theta.sin_cos();
        let trial: Vec<Complex64> = pt.phi.iter().zip(&p_hat).map(|(f, q)| f * c + q * s).collect();
        let trial = normalized(grid, trial);
        let next = functional.point(trial)?;
        // below rounding noise the energy cannot arbitrate; trust the
        // quadratic model, which is exact to third order in θ
        let resolvable = -slope * theta > 1e3 * noise;
        if next.energy <= pt.energy + ARMIJO * theta * slope + noise || (!resolvable && next.energy <= pt.energy + 4.0 * noise) {
            return Ok(Some(next));
        }
        theta *= 0.5;
    }
    Ok(None)
}

fn finish(
    functional: &GpFunctional,
    pt: Point,
    mu: f64,
    residual: f64,
    iterations: usize,
    energy_history: Vec<f64>,
) -> Result<GpSolution, GpError> {
    let mut phi = pt.phi;
    let total: Complex64 = phi.iter().sum();
    if total.norm() > 1e-8 * phi.len() as f64 {
        let phase = total.conj() / total.norm();
        phi.iter_mut().for_each(|z| *z *= phase);
    }
    let angular_momentum = functional.angular_momentum(&phi);
    Ok(GpSolution {
        state: functional.state(phi)?,
        chemical_potential: mu,
        residual,
        iterations,
        energy_history,
        angular_momentum,
    })
}

/// Minimizes the non-rotating functional from `init` (default: constant on
/// the torus, Gaussian in a box). The returned `φ` is phase-fixed so that
/// `∫φ > 0`.
pub fn minimize_gp(
    problem: &GpProblem,
    init: Option<Vec<Complex64>>,
    opts: &MinimizeOptions,
) -> Result<GpSolution, GpError> {
    if problem.is_rotating() {
        return Err(GpError::InvalidProblem("use minimize_gp_rotating for Ω ≠ 0".into()));
    }
    let functional = GpFunctional::new(problem);
    minimize(&functional, init.unwrap_or_else(|| problem.default_init()), opts)
}

/// Minimizes the rotating-frame functional. With `Ω = 0` this is exactly
/// [`minimize_gp`].
pub fn minimize_gp_rotating(
    problem: &GpProblem,
    init: Option<Vec<Complex64>>,
    opts: &MinimizeOptions,
) -> Result<GpSolution, GpError> {
    // re-validates confinement for hand-built problems
    let checked = problem.clone().with_rotation(problem.omega)?;
    let functional = GpFunctional::new(&checked);
    minimize(&functional, init.unwrap_or_else(|| checked.default_init()), opts)
}
