//! Grand-canonical ideal Bose gas on the torus `[0, L]³` with momenta
//! `(2π/L)Z³`, its infinite-volume limit, and the Gross-Pitaevskii
//! corrected free energy on the unit torus.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{pairwise_sum, shell_counts};

/// Terms summed explicitly in `ζ(3/2) = Σ n^{−3/2}`.
pub const ZETA_TERMS: usize = 1_000_000;
/// Relative density residual accepted by [`solve_mu`].
pub const DENSITY_TOLERANCE: f64 = 1e-10;
/// Relative size of the dropped momentum tail.
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum IdealGasError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("could not bracket the chemical potential: {0}")]
    BracketFailure(String),
}

/// `ζ(3/2)`: explicit sum to [`ZETA_TERMS`] plus an Euler–Maclaurin tail.
pub fn zeta_three_halves() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        let terms: Vec<f64> = (1..=ZETA_TERMS).rev().map(|n| (n as f64).powf(-1.5)).collect();
        let m = ZETA_TERMS as f64;
        // Σ_{n>M} n^{-s} = M^{1-s}/(s-1) − M^{-s}/2 + s M^{-s-1}/12 + O(M^{-s-3})
        let tail = 2.0 / m.sqrt() - 0.5 * m.powf(-1.5) + 1.5 / 12.0 * m.powf(-2.5);
        pairwise_sum(&terms) + tail
    })
}

/// `ρ_c(β) = (4πβ)^{−3/2} ζ(3/2)`.
pub fn critical_density(beta: f64) -> f64 {
    zeta_three_halves() / (4.0 * PI * beta).powf(1.5)
}

/// `β_c(ρ) = ζ(3/2)^{2/3} / (4π ρ^{2/3})`.
pub fn critical_beta(rho: f64) -> f64 {
    zeta_three_halves().powf(2.0 / 3.0) / (4.0 * PI * rho.powf(2.0 / 3.0))
}

/// Torus side length and an optional explicit momentum cutoff. Without a
/// cutoff one is chosen so the dropped Bose tail is below
/// [`TAIL_TOLERANCE`] of the retained sum.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TorusSpec {
    pub l: f64,
    pub p_max: Option<f64>,
}

impl TorusSpec {
    pub fn new(l: f64) -> Self {
        Self { l, p_max: None }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ThermoState {
    pub beta: f64,
    pub mu: f64,
    pub rho: f64,
    pub rho0: f64,
    pub rho_plus: f64,
    pub l: f64,
    /// Momentum cutoff used for the lattice sums.
    pub p_max: f64,
}

impl ThermoState {
    /// `ρ0/ρ`, clipped to `[0, 1]` against the density residual.
    pub fn condensate_fraction(&self) -> f64 {
        (self.rho0 / self.rho).min(1.0)
    }
}

/// Bound on `Σ_{|p| > P} e^{−βp²}` over `(2π/L)Z³` via the integral over
/// `|k| ≥ P − √3·2π/L`, divided by `1 − e^{−βP²}` so it also bounds the
/// Bose factors and `|log(1 − e^{−x})|`.
fn tail_bound(beta: f64, l: f64, p: f64) -> f64 {
    let q = (p - 3f64.sqrt() * 2.0 * PI / l).max(0.0);
    let gauss = (-beta * q * q).exp();
    let radial = q * gauss / (2.0 * beta) + (PI / beta).sqrt() / (4.0 * beta) * erfc_bound(beta.sqrt() * q);
    (l / (2.0 * PI)).powi(3) * 4.0 * PI * radial / (1.0 - (-beta * p * p).exp())
}

/// `erfc(x) ≤ exp(−x²)` for `x ≥ 0`.
fn erfc_bound(x: f64) -> f64 {
    (-x * x).exp()
}

/// Shells `(p², multiplicity)` of the momentum lattice, including `p = 0`.
struct BoseLattice {
    beta: f64,
    l: f64,
    p_max: f64,
    shells: Vec<(f64, f64)>,
}

impl BoseLattice {
    fn new(beta: f64, spec: &TorusSpec, scale: f64) -> Self {
        let unit = 2.0 * PI / spec.l;
        let p_max = spec.p_max.unwrap_or_else(|| {
            let target = TAIL_TOLERANCE * scale.max(1.0);
            let mut p = (8.0 / beta).sqrt().max(2.0 * unit);
            while tail_bound(beta, spec.l, p) > target {
                p *= 1.1;
            }
            p
        });
        let max_m = (p_max / unit).powi(2).floor() as usize;
        let shells = shell_counts(max_m)
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(m, c)| (unit * unit * m as f64, c as f64))
            .collect();
        Self {
            beta,
            l: spec.l,
            p_max,
            shells,
        }
    }

    fn volume(&self) -> f64 {
        self.l.powi(3)
    }

    /// `Σ_{p≠0} 1/(e^{β(p²−μ)} − 1) / L³`.
    fn excited_density(&self, mu: f64) -> f64 {
        let terms: Vec<f64> = self.shells[1..]
            .iter()
            .map(|&(p2, c)| c / (self.beta * (p2 - mu)).exp_m1())
            .collect();
        pairwise_sum(&terms) / self.volume()
    }

    fn condensate_density(&self, mu: f64) -> f64 {
        1.0 / (-self.beta * mu).exp_m1() / self.volume()
    }

    fn density(&self, mu: f64) -> f64 {
        self.condensate_density(mu) + self.excited_density(mu)
    }

    /// `(1/β) Σ_p log(1 − e^{−β(p²−μ)})`.
    fn grand_potential(&self, mu: f64) -> f64 {
        let terms: Vec<f64> = self
            .shells
            .iter()
            .map(|&(p2, c)| c * (-(-self.beta * (p2 - mu)).exp_m1()).ln())
            .collect();
        pairwise_sum(&terms) / self.beta
    }
}

fn check_positive(name: &str, x: f64) -> Result<(), IdealGasError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(IdealGasError::InvalidInput(format!("{name} must be positive and finite, got {x}")))
    }
}

fn solve_on(lattice: &BoseLattice, rho: f64) -> Result<ThermoState, IdealGasError> {
    let beta = lattice.beta;
    let residual = |mu: f64| lattice.density(mu) / rho - 1.0;

    // −μ small enough that the p = 0 term alone exceeds ρ
    let mut t_hi = (0.5 * (1.0 / (rho * lattice.volume())).ln_1p() / beta).ln();
    let mut t_lo = (1.0 / beta).ln().max(t_hi);
    let mut tries = 0;
    while residual(-t_lo.exp()) > 0.0 {
        t_lo += std::f64::consts::LN_2;
        tries += 1;
        if tries > 400 {
            return Err(IdealGasError::BracketFailure("density stays above target for all μ".into()));
        }
    }
    if residual(-t_hi.exp()) < 0.0 {
        return Err(IdealGasError::BracketFailure("density stays below target near μ = 0".into()));
    }
    // residual decreases with t = ln(−μ)
    let mut mu = -(0.5 * (t_lo + t_hi)).exp();
    for _ in 0..300 {
        let t_mid = 0.5 * (t_lo + t_hi);
        mu = -t_mid.exp();
        let r = residual(mu);
        if r.abs() <= 0.1 * DENSITY_TOLERANCE {
            break;
        }
        if r > 0.0 {
            t_hi = t_mid;
        } else {
            t_lo = t_mid;
        }
        if (t_lo - t_hi).abs() < 1e-15 {
            break;
        }
    }
    let r = residual(mu);
    if r.abs() > DENSITY_TOLERANCE {
        return Err(IdealGasError::BracketFailure(format!(
            "bisection stalled with relative density residual {r:e}; raise the momentum cutoff"
        )));
    }
    let rho0 = lattice.condensate_density(mu);
    Ok(ThermoState {
        beta,
        mu,
        rho,
        rho0,
        rho_plus: lattice.excited_density(mu),
        l: lattice.l,
        p_max: lattice.p_max,
    })
}

/// Fixes `μ < 0` so the lattice density equals `rho` to [`DENSITY_TOLERANCE`].
pub fn solve_mu(beta: f64, rho: f64, spec: &TorusSpec) -> Result<ThermoState, IdealGasError> {
    check_positive("beta", beta)?;
    check_positive("rho", rho)?;
    check_positive("L", spec.l)?;
    let lattice = BoseLattice::new(beta, spec, rho * spec.l.powi(3));
    solve_on(&lattice, rho)
}

/// `ρ0/ρ` on the finite torus.
pub fn condensate_fraction(beta: f64, rho: f64, spec: &TorusSpec) -> Result<f64, IdealGasError> {
    Ok(solve_mu(beta, rho, spec)?.condensate_fraction())
}

/// Infinite-volume condensate fraction by two-level Richardson
/// extrapolation over `L, 2L, 4L` (error model `c₁/L + c₂/L²`), clipped to `[0, 1]`.
pub fn condensate_fraction_extrapolated(beta: f64, rho: f64, l: f64) -> Result<f64, IdealGasError> {
    let f = |l: f64| condensate_fraction(beta, rho, &TorusSpec::new(l));
    let (f1, f2, f4) = (f(l)?, f(2.0 * l)?, f(4.0 * l)?);
    let r1 = 2.0 * f2 - f1;
    let r2 = 2.0 * f4 - f2;
    Ok(((4.0 * r2 - r1) / 3.0).clamp(0.0, 1.0))
}

/// Closed-form thermodynamic limit `max(0, 1 − ρ_c(β)/ρ)`.
pub fn condensate_fraction_limit(beta: f64, rho: f64) -> f64 {
    (1.0 - critical_density(beta) / rho).max(0.0)
}

/// Ideal-gas free energy on the unit torus at density `ρ = N`:
/// `F0 = μN + (1/β) Σ_p log(1 − e^{−β(p² − μ)})`.
pub fn free_energy_ideal(beta: f64, n: f64) -> Result<f64, IdealGasError> {
    Ok(ideal_free_energy_state(beta, n)?.0)
}

fn ideal_free_energy_state(beta: f64, n: f64) -> Result<(f64, ThermoState), IdealGasError> {
    check_positive("beta", beta)?;
    check_positive("N", n)?;
    let spec = TorusSpec::new(1.0);
    let lattice = BoseLattice::new(beta, &spec, n);
    let state = solve_on(&lattice, n)?;
    Ok((state.mu * n + lattice.grand_potential(state.mu), state))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FreeEnergy {
    pub beta: f64,
    pub n: f64,
    pub mu: f64,
    pub rho0: f64,
    /// Ideal-gas part `F0(β, N)`.
    pub ideal: f64,
    /// `4π (a/N) (2ρ² − ρ0²)`.
    pub interaction: f64,
    pub total: f64,
}

/// `F0(β,N) + 4π a_N (2ρ² − ρ0²)` with `a_N = a/N`, `ρ = N` on the unit
/// torus. The `O(N^{1−ε})` remainder is not modelled.
pub fn free_energy_gp(beta: f64, n: f64, a: f64) -> Result<FreeEnergy, IdealGasError> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(IdealGasError::InvalidInput(format!("scattering length must be non-negative, got {a}")));
    }
    let (ideal, state) = ideal_free_energy_state(beta, n)?;
    let rho = n;
    let rho0 = state.rho0.min(rho);
    let interaction = 4.0 * PI * (a / n) * (2.0 * rho * rho - rho0 * rho0);
    Ok(FreeEnergy {
        beta,
        n,
        mu: state.mu,
        rho0,
        ideal,
        interaction,
        total: ideal + interaction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_density_is_homogeneous() {
        let r1 = critical_density(0.7);
        assert!((critical_density(2.8) - r1 / 8.0).abs() < 1e-15 * r1);
        assert!(critical_density(3.0) < critical_density(2.0));
    }

    #[test]
    fn critical_beta_inverts_density() {
        for rho in [1e-3, 0.5, 1.0, 37.0] {
            let b = critical_beta(rho);
            assert!((critical_density(b) / rho - 1.0).abs() < 1e-10);
        }
        assert!((critical_beta(8.0) - critical_beta(1.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn single_mode_limit() {
        // β huge, ρL³ = 1: only p = 0 contributes, 1/(e^{−βμ} − 1) = 1.
        let beta = 1e4;
        let state = solve_mu(beta, 1.0, &TorusSpec::new(1.0)).unwrap();
        let expected = -(2f64.ln()) / beta;
        assert!((state.mu - expected).abs() < 1e-9 * expected.abs());
        assert!((state.rho0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn density_residual_meets_tolerance() {
        for &(beta, rho, l) in &[(1.0, 0.2, 10.0), (0.3, 0.01, 20.0), (2.0, 5.0, 4.0)] {
            let st = solve_mu(beta, rho, &TorusSpec::new(l)).unwrap();
            assert!(((st.rho0 + st.rho_plus) / rho - 1.0).abs() <= DENSITY_TOLERANCE);
            assert!(st.mu < 0.0 && st.rho0 >= 0.0 && st.rho_plus >= 0.0);
        }
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(solve_mu(-1.0, 1.0, &TorusSpec::new(1.0)).is_err());
        assert!(solve_mu(1.0, 0.0, &TorusSpec::new(1.0)).is_err());
        assert!(free_energy_gp(1.0, 10.0, -0.1).is_err());
    }

    #[test]
    fn explicit_cutoff_keeps_only_condensate() {
        // with only the p = 0 mode retained, the density is the condensate alone
        let spec = TorusSpec { l: 1.0, p_max: Some(1.0) };
        let st = solve_mu(1.0, 3.0, &spec).unwrap();
        assert_eq!(st.rho_plus, 0.0);
    }

    #[test]
    fn gp_correction_limits() {
        let fe = free_energy_gp(50.0, 100.0, 0.0).unwrap();
        assert_eq!(fe.interaction, 0.0);
        assert_eq!(fe.total, fe.ideal);
        // β → ∞: ρ0 → ρ and the correction tends to 4π a N
        let fe = free_energy_gp(50.0, 100.0, 0.3).unwrap();
        assert!((fe.interaction / (4.0 * PI * 0.3 * 100.0) - 1.0).abs() < 1e-6);
    }
}
