use std::f64::consts::PI;

use serde::Serialize;

use super::{RadialPotential, ScatteringError};
use crate::lattice::{pairwise_sum, GAUSS5};

/// Minimum number of uniform grid points accepted by the solver.
pub const MIN_GRID_POINTS: usize = 512;
/// Bound on `|u(r) − (r − a)|` beyond the range, relative to `r_max`.
pub const ASYMPTOTIC_TOLERANCE: f64 = 1e-8;

/// Reduced radial wave `u(r) = r·f(r)` of the zero-energy scattering
/// problem `−u'' + ½ v u = 0`, normalized so that `u(r) = r − a` outside
/// the range of `v`.
#[derive(Clone, Debug, Serialize)]
pub struct ScatteringSolution {
    /// Grid nodes on `[0, r_max]`: uniform, plus the potential's breakpoints.
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    /// `u'(r)`, kept for Hermite interpolation between nodes.
    pub du: Vec<f64>,
    /// `f(r) = u(r)/r`; the `r = 0` entry holds the limit `u'(0)`.
    pub f: Vec<f64>,
    /// Scattering length.
    pub a: f64,
    pub r_max: f64,
    /// `max_{r > R0} |u(r) − (r − a)|`.
    pub residual: f64,
    /// Range `R0` of the potential that produced this solution.
    pub range: f64,
}

impl ScatteringSolution {
    /// Cubic Hermite interpolation of `(u, u')` at `r ∈ [0, r_max]`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if r >= self.r_max {
            return (r - self.a, 1.0);
        }
        if r <= self.r[0] {
            return (self.u[0], self.du[0]);
        }
        let i = self.r.partition_point(|&x| x <= r).clamp(1, self.r.len() - 1);
        let (r0, r1) = (self.r[i - 1], self.r[i]);
        let h = r1 - r0;
        let t = (r - r0) / h;
        let (u0, u1, d0, d1) = (self.u[i - 1], self.u[i], self.du[i - 1] * h, self.du[i] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let u = (2.0 * t3 - 3.0 * t2 + 1.0) * u0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * u1
            + (t3 - t2) * d1;
        let du = ((6.0 * t2 - 6.0 * t) * u0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * u1
            + (3.0 * t2 - 2.0 * t) * d1)
            / h;
        (u, du)
    }

    /// `f(r) = u(r)/r`, with `f = 1 − a/r` beyond the grid.
    pub fn f_at(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.f[0];
        }
        self.eval(r).0 / r
    }

    /// Rows `(r, u, f)` for CSV export.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.r.len()).map(move |i| [self.r[i], self.u[i], self.f[i]])
    }
}

/// Sorted node set: `points` uniform nodes on `[start, end]` plus every
/// breakpoint strictly inside, with near-duplicates merged.
fn build_nodes(start: f64, end: f64, points: usize, breaks: &[f64]) -> Vec<f64> {
    let h = (end - start) / (points - 1) as f64;
    let mut nodes: Vec<f64> = (0..points).map(|k| start + k as f64 * h).collect();
    *nodes.last_mut().unwrap() = end;
    nodes.extend(breaks.iter().copied().filter(|&b| b > start && b < end));
    nodes.sort_by(f64::total_cmp);
    let merge = 1e-9 * h;
    let mut out: Vec<f64> = Vec::with_capacity(nodes.len());
    for x in nodes {
        match out.last_mut() {
            Some(last) if x - *last < merge => {
                // prefer the exact breakpoint over the uniform node
                if breaks.contains(&x) {
                    *last = x;
                }
            }
            _ => out.push(x),
        }
    }
    out
}

/// One RK4 step of `u'' = w(r)·u` on a segment where `w` is smooth.
fn rk4_step<W: Fn(f64) -> f64>(w: &W, r: f64, h: f64, u: f64, du: f64) -> (f64, f64) {
    let k1u = du;
    let k1d = w(r) * u;
    let k2u = du + 0.5 * h * k1d;
    let k2d = w(r + 0.5 * h) * (u + 0.5 * h * k1u);
    let k3u = du + 0.5 * h * k2d;
    let k3d = w(r + 0.5 * h) * (u + 0.5 * h * k2u);
    let k4u = du + h * k3d;
    let k4d = w(r + h) * (u + h * k3u);
    (
        u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        du + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
    )
}

/// Solves `[−Δ + ½ v] f = 0` in the radial sector and extracts the
/// scattering length from the linear tail of `u = r f`.
pub fn solve_zero_energy(
    v: &RadialPotential,
    r_max: f64,
    grid_points: usize,
) -> Result<ScatteringSolution, ScatteringError> {
    let range = v.range();
    if grid_points < MIN_GRID_POINTS {
        return Err(ScatteringError::InvalidInput(format!(
            "grid_points must be at least {MIN_GRID_POINTS}, got {grid_points}"
        )));
    }
    if !(r_max.is_finite() && r_max > 2.0 * range) {
        return Err(ScatteringError::InvalidInput(format!(
            "r_max = {r_max} must exceed twice the range {range}"
        )));
    }

    let core = v.hard_core_radius().unwrap_or(0.0);
    let mut nodes = build_nodes(0.0, r_max, grid_points, &v.breakpoints());
    let first = if core > 0.0 {
        nodes.iter().position(|&x| x >= core).unwrap()
    } else {
        0
    };
    if core > 0.0 {
        nodes[first] = core;
    }

    let n = nodes.len();
    let mut u = vec![0.0; n];
    let mut du = vec![0.0; n];
    du[first] = 1.0;
    for i in first..n - 1 {
        let (lo, hi) = (nodes[i], nodes[i + 1]);
        let w = |r: f64| {
            if v.is_hard_core() {
                0.0
            } else {
                0.5 * v.value_on_segment(r, lo, hi)
            }
        };
        let (un, dn) = rk4_step(&w, lo, hi - lo, u[i], du[i]);
        u[i + 1] = un;
        du[i + 1] = dn;
    }

    // Least-squares line through the outer quarter of [R0, r_max].
    let fit_start = range + 0.75 * (r_max - range);
    let window: Vec<usize> = (0..n).filter(|&i| nodes[i] >= fit_start).collect();
    if window.len() < 2 {
        return Err(ScatteringError::NonConvergence("fit window holds fewer than two nodes".into()));
    }
    let m = window.len() as f64;
    let mean_r = window.iter().map(|&i| nodes[i]).sum::<f64>() / m;
    let mean_u = window.iter().map(|&i| u[i]).sum::<f64>() / m;
    let sxy: f64 = window.iter().map(|&i| (nodes[i] - mean_r) * (u[i] - mean_u)).sum();
    let sxx: f64 = window.iter().map(|&i| (nodes[i] - mean_r).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope.is_finite() && slope > 0.0) {
        return Err(ScatteringError::NonConvergence(format!("asymptotic slope {slope} is not positive")));
    }
    let slope_drift = (du[window[0]] - du[*window.last().unwrap()]).abs() / slope;
    if slope_drift > ASYMPTOTIC_TOLERANCE {
        return Err(ScatteringError::NonConvergence(format!(
            "slope of u drifts by {slope_drift:e} across the fit window"
        )));
    }
    let intercept = mean_u - slope * mean_r;
    let a = -intercept / slope;

    for i in 0..n {
        u[i] /= slope;
        du[i] /= slope;
    }
    let residual = (0..n)
        .filter(|&i| nodes[i] > range)
        .map(|i| (u[i] - (nodes[i] - a)).abs())
        .fold(0.0, f64::max);
    if residual > ASYMPTOTIC_TOLERANCE * r_max {
        return Err(ScatteringError::NonConvergence(format!(
            "u deviates from r − a by {residual:e} beyond the range"
        )));
    }

    let f = (0..n)
        .map(|i| {
            if i < first || (core > 0.0 && i == first) {
                0.0
            } else if nodes[i] == 0.0 {
                du[i]
            } else {
                u[i] / nodes[i]
            }
        })
        .collect();

    Ok(ScatteringSolution {
        r: nodes,
        u,
        du,
        f,
        a,
        r_max,
        residual,
        range,
    })
}

/// Default outer radius used when callers do not choose one.
pub fn default_r_max(v: &RadialPotential) -> f64 {
    4.0 * v.range()
}

/// Scattering length with the default outer radius and grid.
pub fn scattering_length(v: &RadialPotential) -> Result<f64, ScatteringError> {
    Ok(solve_zero_energy(v, default_r_max(v), 4096)?.a)
}

/// Second extraction route: `a = (1/8π) ∫ V f dx = ½ ∫ v(r) u(r) r dr`.
pub fn scattering_length_integral(v: &RadialPotential, sol: &ScatteringSolution) -> Result<f64, ScatteringError> {
    if v.is_hard_core() {
        return Err(ScatteringError::UnsupportedKind("hard-core potential is not integrable"));
    }
    if let super::PotentialKind::Tabulated { r, .. } = v.kind() {
        if r[0] > 0.0 {
            return Err(ScatteringError::QuadratureFailure(format!(
                "table starts at r = {}, leaving [0, r0) unsampled",
                r[0]
            )));
        }
    }
    let mut panels = Vec::new();
    for w in sol.r.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if lo >= v.range() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let s: f64 = GAUSS5
            .iter()
            .map(|&(x, wt)| {
                let r = mid + half * x;
                wt * v.value_on_segment(r, lo, hi) * sol.eval(r).0 * r
            })
            .sum();
        panels.push(half * s);
    }
    let value = 0.5 * pairwise_sum(&panels);
    if !value.is_finite() {
        return Err(ScatteringError::QuadratureFailure("non-finite integrand".into()));
    }
    Ok(value)
}

/// `8π·a` versus `V̂(0)`: returns `(8π a, V̂(0))`.
pub fn born_comparison(v: &RadialPotential) -> Result<(f64, f64), ScatteringError> {
    let a = scattering_length(v)?;
    Ok((8.0 * PI * a, v.fourier_zero()?))
}

/// Scattering length of `x ↦ n²·v(n·x)`, solved directly on the rescaled
/// problem (outer radius and grid scale with `1/n`).
pub fn scaled_scattering_length(v: &RadialPotential, n: usize) -> Result<f64, ScatteringError> {
    if n == 0 {
        return Err(ScatteringError::InvalidInput("N must be at least 1".into()));
    }
    let scaled = v.rescaled(n as f64);
    Ok(solve_zero_energy(&scaled, default_r_max(v) / n as f64, 4096)?.a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_well_exact(v0: f64, r: f64) -> f64 {
        let k = (v0 / 2.0).sqrt();
        r * (1.0 - (k * r).tanh() / (k * r))
    }

    #[test]
    fn zero_potential_gives_zero_length() {
        let sol = solve_zero_energy(&RadialPotential::zero(), 4.0, 1024).unwrap();
        assert!(sol.a.abs() < 1e-14);
        for (r, u) in sol.r.iter().zip(&sol.u) {
            assert!((u - r).abs() < 1e-13);
        }
    }

    #[test]
    fn hard_core_length_is_radius() {
        let sol = solve_zero_energy(&RadialPotential::hard_core(0.5).unwrap(), 2.0, 1024).unwrap();
        assert!((sol.a - 0.5).abs() < 1e-12);
        assert_eq!(sol.f_at(0.3), 0.0);
        assert!((sol.f_at(1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn square_well_matches_matching_formula() {
        // Repulsive well: interior solution sinh(κr), κ = sqrt(V0/2).
        for &(v0, r) in &[(1.0, 1.0), (4.0, 0.5), (20.0, 0.3)] {
            let a = scattering_length(&RadialPotential::square_well(v0, r).unwrap()).unwrap();
            let exact = square_well_exact(v0, r);
            assert!((a - exact).abs() < 1e-9 * exact, "{v0} {r}: {a} vs {exact}");
        }
    }

    #[test]
    fn rejects_short_domain_and_coarse_grid() {
        let sw = RadialPotential::square_well(1.0, 1.0).unwrap();
        assert!(matches!(solve_zero_energy(&sw, 1.5, 1024), Err(ScatteringError::InvalidInput(_))));
        assert!(matches!(solve_zero_energy(&sw, 4.0, 100), Err(ScatteringError::InvalidInput(_))));
    }

    #[test]
    fn asymptotic_law_holds_beyond_range() {
        let g = RadialPotential::gaussian(5.0, 0.4).unwrap();
        let sol = solve_zero_energy(&g, default_r_max(&g), 2048).unwrap();
        assert!(sol.residual <= ASYMPTOTIC_TOLERANCE * sol.r_max);
        assert!((sol.f.last().unwrap() - (1.0 - sol.a / sol.r_max)).abs() < 1e-10);
        assert_eq!(sol.u[0], 0.0);
    }

    #[test]
    fn integral_route_agrees_with_asymptotic_fit() {
        let sw = RadialPotential::square_well(1.0, 1.0).unwrap();
        let sol = solve_zero_energy(&sw, 4.0, 4096).unwrap();
        let ai = scattering_length_integral(&sw, &sol).unwrap();
        assert!((ai - sol.a).abs() < 1e-6 * sol.a, "{ai} vs {}", sol.a);
        assert_eq!(scattering_length_integral(&RadialPotential::zero(), &sol).unwrap(), 0.0);
    }

    #[test]
    fn integral_route_rejects_hard_core_and_gappy_tables() {
        let hc = RadialPotential::hard_core(0.5).unwrap();
        let sol = solve_zero_energy(&hc, 2.0, 1024).unwrap();
        assert!(matches!(
            scattering_length_integral(&hc, &sol),
            Err(ScatteringError::UnsupportedKind(_))
        ));
        let t = RadialPotential::tabulated(vec![0.2, 0.5, 1.0], vec![1.0, 1.0, 0.0]).unwrap();
        let sol = solve_zero_energy(&t, 4.0, 1024).unwrap();
        assert!(matches!(
            scattering_length_integral(&t, &sol),
            Err(ScatteringError::QuadratureFailure(_))
        ));
    }

    #[test]
    fn born_limit_first_order() {
        // a(λ) = λ V̂(0)/8π + O(λ²); one Richardson step removes the λ² term.
        let g = RadialPotential::gaussian(1.0, 0.5).unwrap();
        let born = g.fourier_zero().unwrap() / (8.0 * PI);
        let lam = 1e-2;
        let a1 = scattering_length(&g.scaled(lam)).unwrap() / lam;
        let a2 = scattering_length(&g.scaled(lam / 2.0)).unwrap() / (lam / 2.0);
        let richardson = 2.0 * a2 - a1;
        assert!((a1 - born).abs() / born < 1e-2);
        assert!((richardson - born).abs() / born < 1e-5, "{richardson} vs {born}");
    }

    #[test]
    fn scaling_identity_for_n_one() {
        let sw = RadialPotential::square_well(4.0, 0.5).unwrap();
        assert_eq!(scaled_scattering_length(&sw, 1).unwrap(), scattering_length(&sw).unwrap());
        let hc = RadialPotential::hard_core(0.5).unwrap();
        assert!((scaled_scattering_length(&hc, 10).unwrap() - 0.05).abs() < 1e-14);
    }

    #[test]
    fn hermite_interpolation_is_accurate_inside_well() {
        let sw = RadialPotential::square_well(4.0, 1.0).unwrap();
        let sol = solve_zero_energy(&sw, 4.0, 4096).unwrap();
        // interior: u ∝ sinh(√2 r), matched to r − a at r = 1
        let k = 2f64.sqrt();
        let c = (1.0 - sol.a) / (k * 1.0).sinh();
        let r = 0.3712;
        assert!((sol.eval(r).0 - c * (k * r).sinh()).abs() < 1e-10);
    }
}
