use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{GpError, GpProblem};
use crate::grid::{Grid, Spectral};
use crate::lattice::ordered_sum;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// `∫|∇φ|²`, or `∫|(i∇ + A)φ|²` when rotating.
    pub kinetic: f64,
    /// `∫V|φ|²`, or `∫W|φ|²` when rotating.
    pub external: f64,
    pub interaction: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GpState {
    pub grid: Grid,
    #[serde(skip)]
    pub phi: Vec<Complex64>,
    pub norm: f64,
    pub energy: EnergyBreakdown,
}

impl GpState {
    /// Wraps `phi`, evaluating its norm and energy for `problem`.
    pub fn new(problem: &GpProblem, phi: Vec<Complex64>) -> Result<Self, GpError> {
        let functional = GpFunctional::new(problem);
        functional.state(phi)
    }
}

/// Precomputed operators of one [`GpProblem`].
pub struct GpFunctional<'a> {
    pub problem: &'a GpProblem,
    spectral: Spectral,
    /// `W` when rotating, `V` otherwise.
    potential: Vec<f64>,
    /// `|A|²` and the components of `A`, present only when rotating.
    magnetic: Option<(Vec<f64>, [Vec<f64>; 3])>,
}

impl<'a> GpFunctional<'a> {
    pub fn new(problem: &'a GpProblem) -> Self {
        let grid = problem.grid;
        let magnetic = problem.is_rotating().then(|| {
            let fields: Vec<[f64; 3]> = (0..grid.len()).map(|i| problem.vector_potential(grid.position(i))).collect();
            let a2 = fields.iter().map(|a| a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).collect();
            let comp = |d: usize| fields.iter().map(|a| a[d]).collect::<Vec<f64>>();
            (a2, [comp(0), comp(1), comp(2)])
        });
        let potential = if problem.is_rotating() {
            problem.effective_potential()
        } else {
            problem.v_ext.clone()
        };
        Self {
            problem,
            spectral: Spectral::new(grid),
            potential,
            magnetic,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.problem.grid
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub(crate) fn check(&self, phi: &[Complex64]) -> Result<(), GpError> {
        if phi.len() != self.grid().len() {
            return Err(GpError::GridMismatch {
                expected: self.grid().len(),
                found: phi.len(),
            });
        }
        Ok(())
    }

    fn weighted(&self, phi: &[Complex64], w: &[f64]) -> f64 {
        let s = ordered_sum(phi.len(), |i| w[i] * phi[i].norm_sqr());
        s * self.grid().cell_volume()
    }

    pub fn interaction(&self, phi: &[Complex64]) -> f64 {
        let s = ordered_sum(phi.len(), |i| phi[i].norm_sqr().powi(2));
        self.problem.coupling * s * self.grid().cell_volume()
    }

    /// `2i A·∇φ`.
    fn magnetic_term(&self, phi: &[Complex64], comps: &[Vec<f64>; 3]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); phi.len()];
        for (axis, a) in comps.iter().enumerate().take(self.grid().dim) {
            if a.iter().all(|&x| x == 0.0) {
                continue;
            }
            let d = self.spectral.derivative(phi, axis);
            out.par_iter_mut()
                .zip(d.par_iter().zip(a))
                .for_each(|(o, (dz, a))| *o += Complex64::new(0.0, 2.0 * a) * dz);
        }
        out
    }

    /// Energy terms of `phi` (not necessarily normalized).
    pub fn energy(&self, phi: &[Complex64]) -> Result<EnergyBreakdown, GpError> {
        self.check(phi)?;
        let mut kinetic = self.spectral.kinetic_energy(phi);
        if let Some((a2, comps)) = &self.magnetic {
            kinetic += self.weighted(phi, a2) + self.grid().inner(phi, &self.magnetic_term(phi, comps));
        }
        let external = self.weighted(phi, &self.potential);
        let interaction = self.interaction(phi);
        Ok(EnergyBreakdown {
            kinetic,
            external,
            interaction,
            total: kinetic + external + interaction,
        })
    }

    /// Linear part `Kφ = −Δφ + Vφ − Ω·Lφ`.
    pub fn apply_linear(&self, phi: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.spectral.neg_laplacian(phi);
        let v = self.problem.v_ext.as_slice();
        out.par_iter_mut()
            .zip(phi.par_iter().zip(v))
            .for_each(|(o, (z, v))| *o += z * v);
        if let Some((_, comps)) = &self.magnetic {
            let m = self.magnetic_term(phi, comps);
            out.par_iter_mut().zip(&m).for_each(|(o, m)| *o += m);
        }
        out
    }

    /// `Hφ = Kφ + 2·coupling·|φ|²φ`; the first variation is `dE = 2 Re⟨Hφ, δ⟩`.
    pub fn gradient(&self, phi: &[Complex64]) -> Result<Vec<Complex64>, GpError> {
        self.check(phi)?;
        let mut out = self.apply_linear(phi);
        let g2 = 2.0 * self.problem.coupling;
        out.par_iter_mut()
            .zip(phi)
            .for_each(|(o, z)| *o += z * (g2 * z.norm_sqr()));
        Ok(out)
    }

    pub fn state(&self, phi: Vec<Complex64>) -> Result<GpState, GpError> {
        let energy = self.energy(&phi)?;
        Ok(GpState {
            grid: *self.grid(),
            norm: self.grid().norm(&phi),
            phi,
            energy,
        })
    }

    /// `⟨φ, (Ω/|Ω|)·L φ⟩` for rotating problems, `⟨φ, L_z φ⟩` otherwise.
    pub fn angular_momentum(&self, phi: &[Complex64]) -> f64 {
        let omega = self.problem.omega;
        let w = omega.iter().map(|x| x * x).sum::<f64>().sqrt();
        let axis = if w > 0.0 {
            [omega[0] / w, omega[1] / w, omega[2] / w]
        } else {
            [0.0, 0.0, 1.0]
        };
        angular_momentum(&self.spectral, phi, axis)
    }
}

/// `⟨φ, n·L φ⟩` with `L = −i x∧∇`.
pub fn angular_momentum(spectral: &Spectral, phi: &[Complex64], axis: [f64; 3]) -> f64 {
    let grid = spectral.grid;
    let derivs: Vec<Vec<Complex64>> = (0..grid.dim).map(|d| spectral.derivative(phi, d)).collect();
    let zero = Complex64::new(0.0, 0.0);
    let lphi: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let g = |d: usize| if d < grid.dim { derivs[d][i] } else { zero };
            // (x∧∇)_k
            let cross = [x[1] * g(2) - x[2] * g(1), x[2] * g(0) - x[0] * g(2), x[0] * g(1) - x[1] * g(0)];
            Complex64::new(0.0, -1.0) * (axis[0] * cross[0] + axis[1] * cross[1] + axis[2] * cross[2])
        })
        .collect();
    grid.inner(phi, &lphi)
}

/// Energy breakdown of `state` under `problem`.
pub fn gp_energy(state: &GpState, problem: &GpProblem) -> Result<EnergyBreakdown, GpError> {
    if state.grid != problem.grid {
        return Err(GpError::GridMismatch {
            expected: problem.grid.len(),
            found: state.grid.len(),
        });
    }
    GpFunctional::new(problem).energy(&state.phi)
}
