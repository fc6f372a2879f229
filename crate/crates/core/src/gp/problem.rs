use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::GpError;
use crate::grid::{Geometry, Grid};

/// Required rise of `W = V − |A|²` from the grid centre to every boundary sample.
pub const CONFINEMENT_MARGIN: f64 = 10.0;

/// `E(φ) = ∫ |(i∇ + A)φ|² + W|φ|² + coupling·|φ|⁴` with `A = Ω∧x/2` and
/// `W = V − |A|²`; for `Ω = 0` this is `∫ |∇φ|² + V|φ|² + coupling·|φ|⁴`.
#[derive(Clone, Debug, Serialize)]
pub struct GpProblem {
    pub grid: Grid,
    pub v_ext: Vec<f64>,
    pub coupling: f64,
    pub omega: [f64; 3],
}

impl GpProblem {
    /// Homogeneous problem on the unit torus; `coupling = 4π𝔞`.
    pub fn torus(dim: usize, n: usize, coupling: f64) -> Result<Self, GpError> {
        let grid = Grid::torus(dim, n);
        Self::new(grid, vec![0.0; grid.len()], coupling)
    }

    /// `V = |x|²` on `[−X, X)^d`.
    pub fn harmonic(dim: usize, n: usize, half_width: f64, coupling: f64) -> Result<Self, GpError> {
        let grid = Grid::centered_box(dim, n, half_width);
        let v = grid.sample(|x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        Self::new(grid, v, coupling)
    }

    pub fn new(grid: Grid, v_ext: Vec<f64>, coupling: f64) -> Result<Self, GpError> {
        if v_ext.len() != grid.len() {
            return Err(GpError::GridMismatch {
                expected: grid.len(),
                found: v_ext.len(),
            });
        }
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(GpError::InvalidProblem(format!("coupling must be non-negative, got {coupling}")));
        }
        if v_ext.iter().any(|v| !v.is_finite()) {
            return Err(GpError::InvalidProblem("external potential must be finite".into()));
        }
        Ok(Self {
            grid,
            v_ext,
            coupling,
            omega: [0.0; 3],
        })
    }

    /// Adds rotation with angular velocity `omega`; in 2D only `omega[2]`
    /// may be nonzero. Fails unless `W` is confining on the grid.
    pub fn with_rotation(mut self, omega: [f64; 3]) -> Result<Self, GpError> {
        if self.grid.dim == 2 && (omega[0] != 0.0 || omega[1] != 0.0) {
            return Err(GpError::InvalidProblem("a 2D rotation axis must be z".into()));
        }
        self.omega = omega;
        if self.is_rotating() {
            if self.grid.geometry == Geometry::Torus {
                return Err(GpError::InvalidProblem("rotation requires a trap, not the torus".into()));
            }
            self.check_confinement()?;
        }
        Ok(self)
    }

    pub fn is_rotating(&self) -> bool {
        self.omega.iter().any(|&w| w != 0.0)
    }

    /// `A(x) = Ω∧x/2`.
    pub fn vector_potential(&self, x: [f64; 3]) -> [f64; 3] {
        let w = self.omega;
        [
            0.5 * (w[1] * x[2] - w[2] * x[1]),
            0.5 * (w[2] * x[0] - w[0] * x[2]),
            0.5 * (w[0] * x[1] - w[1] * x[0]),
        ]
    }

    /// `W = V − |A|²` on the grid.
    pub fn effective_potential(&self) -> Vec<f64> {
        self.v_ext
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let a = self.vector_potential(self.grid.position(i));
                v - (a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
            })
            .collect()
    }

    fn check_confinement(&self) -> Result<(), GpError> {
        let w = self.effective_potential();
        let centre = (0..self.grid.len())
            .min_by(|&i, &j| {
                let r2 = |k: usize| self.grid.position(k).iter().map(|x| x * x).sum::<f64>();
                r2(i).total_cmp(&r2(j))
            })
            .expect("grid is never empty");
        let edge = (0..self.grid.len())
            .filter(|&i| self.grid.on_boundary(i))
            .map(|i| w[i])
            .fold(f64::INFINITY, f64::min);
        if edge - w[centre] < CONFINEMENT_MARGIN {
            return Err(GpError::ConfinementError(format!(
                "W rises only by {:.3e} from the centre to the boundary (need {CONFINEMENT_MARGIN})",
                edge - w[centre]
            )));
        }
        Ok(())
    }

    /// Constant state on the torus, `e^{−|x|²/2}` in a box; normalized.
    pub fn default_init(&self) -> Vec<Complex64> {
        let phi: Vec<Complex64> = match self.grid.geometry {
            Geometry::Torus => vec![Complex64::new(1.0, 0.0); self.grid.len()],
            Geometry::Box { .. } => (0..self.grid.len())
                .map(|i| {
                    let x = self.grid.position(i);
                    Complex64::new((-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), 0.0)
                })
                .collect(),
        };
        normalized(&self.grid, phi)
    }

    /// Normalized field with independent uniform entries in `[−1, 1)²`.
    pub fn random_init(&self, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = (0..self.grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        normalized(&self.grid, phi)
    }
}

pub(crate) fn normalized(grid: &Grid, mut phi: Vec<Complex64>) -> Vec<Complex64> {
    let norm = grid.norm(&phi);
    phi.iter_mut().for_each(|z| *z /= norm);
    phi
}

/// `N/|ln(N a²)|`, the effective 2D coupling.
pub fn coupling_2d(n: f64, a: f64) -> Result<f64, GpError> {
    if !(n >= 2.0) || !(a > 0.0) {
        return Err(GpError::DomainError(format!("need N ≥ 2 and a > 0, got N = {n}, a = {a}")));
    }
    // ln(N a²) = ln N + 2 ln a avoids underflow for tiny a
    let log = n.ln() + 2.0 * a.ln();
    if log >= 0.0 {
        return Err(GpError::DomainError(format!("N·a² = {} must be below 1", log.exp())));
    }
    Ok(n / log.abs())
}
