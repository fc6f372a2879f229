use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use super::{RadialPotential, ScatteringError};
use crate::lattice::{nonzero_shells, pairwise_sum};

/// Default ball radius for the correlation problem.
pub const DEFAULT_ELL0: f64 = 0.25;
/// Eigenvalue residual tolerance for inverse iteration, relative to `‖A‖∞`.
pub const EIGEN_TOLERANCE: f64 = 1e-10;
const MAX_INVERSE_ITERATIONS: usize = 500;

/// Ground state of `[−Δ + (N²/2) V(N·)] f_N = λ_N f_N` on `|x| ≤ ℓ0` with
/// Neumann boundary, normalized to `f_N(ℓ0) = 1`.
#[derive(Clone, Debug, Serialize)]
pub struct NeumannSolution {
    /// Radial nodes on `[0, ℓ0]`. For a hard core the first node sits on
    /// the rescaled core radius and `f_N` vanishes inside it.
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub lambda: f64,
    /// `η̌(r) = −N(1 − f_N(r))` on the same nodes.
    pub eta_position: Vec<f64>,
    /// Coefficients of `η̌` on the unit-torus dual lattice, filled by
    /// [`eta_coefficients`].
    pub eta_fourier: Option<EtaCoefficients>,
    pub n: usize,
    pub ell0: f64,
    /// Rescaled hard-core radius (0 for integrable potentials).
    pub core: f64,
}

impl NeumannSolution {
    /// Linear interpolation of `f_N`; `f_N = 1` beyond `ℓ0`, `0` inside a core.
    pub fn f_at(&self, r: f64) -> f64 {
        if r >= self.ell0 {
            return 1.0;
        }
        if r < self.r[0] {
            return if self.core > 0.0 { 0.0 } else { self.f[0] };
        }
        let i = self.r.partition_point(|&x| x <= r).clamp(1, self.r.len() - 1);
        let t = (r - self.r[i - 1]) / (self.r[i] - self.r[i - 1]);
        self.f[i - 1] + t * (self.f[i] - self.f[i - 1])
    }

    pub fn eta_at(&self, r: f64) -> f64 {
        -(self.n as f64) * (1.0 - self.f_at(r))
    }
}

/// Radial Fourier coefficients `η_p`, stored per shell `|n|²` of `p = 2πn`.
#[derive(Clone, Debug, Serialize)]
pub struct EtaCoefficients {
    pub kappa_h: f64,
    pub p_max: f64,
    /// `|n|² → η_p`; each shell carries every `n` of that norm.
    pub shells: BTreeMap<usize, f64>,
}

impl EtaCoefficients {
    /// `η_p` for `p = 2πn`, if `p` lies in the retained momentum window.
    pub fn coefficient(&self, n: [i32; 3]) -> Option<f64> {
        let m = n.iter().map(|&c| (c as i64 * c as i64) as usize).sum::<usize>();
        self.shells.get(&m).copied()
    }

    /// `(|p|, η_p)` for every retained shell, ascending in `|p|`.
    pub fn by_momentum(&self) -> Vec<(f64, f64)> {
        self.shells
            .iter()
            .map(|(&m, &eta)| (2.0 * PI * (m as f64).sqrt(), eta))
            .collect()
    }
}

/// Solves the symmetric tridiagonal system `T x = b` (Thomas algorithm);
/// `off[i]` couples rows `i` and `i + 1`. `T` must be SPD.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { off[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - off[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Lowest Neumann eigenpair of the rescaled radial operator by inverse
/// iteration on a second-order finite-difference discretization of
/// `−u'' + W u = λ u`, `u = r f`, `u(core) = 0`, `u'(ℓ0) = u(ℓ0)/ℓ0`.
pub fn solve_neumann(
    v: &RadialPotential,
    n: usize,
    ell0: f64,
    grid_points: usize,
) -> Result<NeumannSolution, ScatteringError> {
    if n == 0 {
        return Err(ScatteringError::InvalidInput("N must be at least 1".into()));
    }
    if !(ell0.is_finite() && ell0 > 0.0) {
        return Err(ScatteringError::InvalidInput(format!("ell0 must be positive, got {ell0}")));
    }
    if grid_points < 64 {
        return Err(ScatteringError::InvalidInput(format!("grid_points must be at least 64, got {grid_points}")));
    }
    let nf = n as f64;
    if nf * ell0 <= v.range() {
        return Err(ScatteringError::GeometryError(format!(
            "N·ell0 = {} does not exceed the potential range {}",
            nf * ell0,
            v.range()
        )));
    }
    let scaled = v.rescaled(nf);
    let core = scaled.hard_core_radius().unwrap_or(0.0);

    // unknowns u_1..u_M at r_i = core + i h; u_0 = 0
    let m = grid_points;
    let h = (ell0 - core) / m as f64;
    let r: Vec<f64> = (0..=m).map(|i| core + i as f64 * h).collect();
    let w: Vec<f64> = r[1..]
        .iter()
        .map(|&x| if scaled.is_hard_core() { 0.0 } else { 0.5 * scaled.value(x) })
        .collect();
    let inv_h2 = 1.0 / (h * h);

    // symmetric form: last row halved, mass matrix B = diag(1, …, 1, ½)
    let mut a_diag: Vec<f64> = w.iter().map(|&wi| 2.0 * inv_h2 + wi).collect();
    a_diag[m - 1] = (1.0 - h / ell0) * inv_h2 + 0.5 * w[m - 1];
    let a_off = vec![-inv_h2; m - 1];
    let mass = |i: usize| if i == m - 1 { 0.5 } else { 1.0 };
    let apply_a = |x: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let mut s = a_diag[i] * x[i];
                if i > 0 {
                    s += a_off[i - 1] * x[i - 1];
                }
                if i + 1 < m {
                    s += a_off[i] * x[i + 1];
                }
                s
            })
            .collect()
    };
    let a_norm = 4.0 * inv_h2 + w.iter().fold(0.0f64, |acc, &x| acc.max(x));

    let shift = -1.0 / (ell0 * ell0);
    let shifted: Vec<f64> = (0..m).map(|i| a_diag[i] - shift * mass(i)).collect();

    let mut x: Vec<f64> = r[1..].to_vec();
    let mut lambda = f64::NAN;
    let mut converged = false;
    for _ in 0..MAX_INVERSE_ITERATIONS {
        let bx: Vec<f64> = (0..m).map(|i| mass(i) * x[i]).collect();
        let mut y = solve_tridiagonal(&shifted, &a_off, &bx);
        let norm = (0..m).map(|i| mass(i) * y[i] * y[i]).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(ScatteringError::EigensolveFailure("inverse iteration produced a degenerate vector".into()));
        }
        y.iter_mut().for_each(|yi| *yi /= norm);
        let ay = apply_a(&y);
        let rayleigh = (0..m).map(|i| y[i] * ay[i]).sum::<f64>();
        let res = (0..m)
            .map(|i| (ay[i] - rayleigh * mass(i) * y[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        x = y;
        lambda = rayleigh;
        if res <= EIGEN_TOLERANCE * a_norm {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(ScatteringError::EigensolveFailure(format!(
            "inverse iteration did not reach residual {EIGEN_TOLERANCE:e}·‖A‖"
        )));
    }

    // normalize u(ℓ0) = ℓ0, i.e. f_N(ℓ0) = 1
    let scale = ell0 / x[m - 1];
    let mut u = vec![0.0];
    u.extend(x.iter().map(|xi| xi * scale));
    let mut f: Vec<f64> = (0..=m).map(|i| if r[i] > 0.0 { u[i] / r[i] } else { 0.0 }).collect();
    if core == 0.0 {
        // u ≈ c r + d r³ near the origin
        f[0] = (4.0 * u[1] / h - u[2] / (2.0 * h)) / 3.0;
    }
    // clip rounding noise around the exact zero eigenvalue
    let lambda = if v.is_zero() { lambda.max(0.0) } else { lambda };
    let eta_position = f.iter().map(|&fi| -nf * (1.0 - fi)).collect();

    Ok(NeumannSolution {
        r,
        f,
        lambda,
        eta_position,
        eta_fourier: None,
        n,
        ell0,
        core,
    })
}

/// Fourier coefficients `η_p = ∫ η̌(x) e^{−ip·x} dx` on the unit torus for
/// `p ∈ 2πZ³` with `κ_H < |p| ≤ p_max`. `η̌` is radial and supported in
/// the ball `|x| ≤ ℓ0 < 1/2`, so
/// `η_p = (4π/|p|) ∫_0^{ℓ0} η̌(r) sin(|p| r) r dr`.
pub fn eta_coefficients(sol: &NeumannSolution, kappa_h: f64, p_max: f64) -> Result<EtaCoefficients, ScatteringError> {
    if !(kappa_h > 0.0 && kappa_h.is_finite()) {
        return Err(ScatteringError::InvalidInput(format!("kappa_H must be positive, got {kappa_h}")));
    }
    if sol.ell0 >= 0.5 {
        return Err(ScatteringError::GeometryError("ell0 must be below 1/2 to fit in the unit torus".into()));
    }
    let two_pi = 2.0 * PI;
    let max_m = (p_max / two_pi).powi(2).floor() as usize;
    let nf = sol.n as f64;
    let h = sol.r[1] - sol.r[0];
    let mut shells = BTreeMap::new();
    for (m, _) in nonzero_shells(max_m) {
        let p = two_pi * (m as f64).sqrt();
        if p <= kappa_h {
            continue;
        }
        // trapezoid on the FD grid
        let terms: Vec<f64> = sol
            .r
            .iter()
            .zip(&sol.eta_position)
            .enumerate()
            .map(|(i, (&r, &eta))| {
                let w = if i == 0 || i == sol.r.len() - 1 { 0.5 } else { 1.0 };
                w * eta * (p * r).sin() * r
            })
            .collect();
        let mut integral = h * pairwise_sum(&terms);
        if sol.core > 0.0 {
            // η̌ = −N inside the core: ∫_0^c r sin(pr) dr in closed form
            let c = sol.core;
            integral += -nf * ((p * c).sin() - p * c * (p * c).cos()) / (p * p);
        }
        shells.insert(m, 4.0 * PI / p * integral);
    }
    Ok(EtaCoefficients {
        kappa_h,
        p_max,
        shells,
    })
}
