//! Bogoliubov theory of the homogeneous gas on the unit torus: the
//! dispersion law `ε(p) = sqrt(|p|⁴ + 16π𝔞|p|²)`, the second-order ground
//! state energy, the condensate depletion and the low-lying spectrum.
//!
//! Momenta live in `2πZ³ \ {0}`; lattice sums run over integer shells
//! `|k|² = m` with `p = 2πk`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{inverse_quartic_tail, lattice_points, nonzero_shells, pairwise_sum};

/// Energy bin width for degenerate spectrum lines, relative to `max(E, 1)`.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

pub const ENERGY_CAVEAT: &str = "formula omits the O(N^-1/4) error term; its constant is not computed";
pub const SPECTRUM_CAVEAT: &str = "eigenvalues carry an O(N^-1/4 zeta^3) error; its constant is not computed";
pub const RATE_CAVEAT: &str = "C is a configured constant, not the theorem's (which is not computed)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BogoliubovError {
    #[error("dispersion is undefined at p = 0")]
    ZeroMomentum,
    #[error("e_lambda did not converge: spreads {0:?}")]
    NoConvergence(Vec<f64>),
    #[error("threshold too large: {0}")]
    ThresholdTooLarge(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DispersionParams {
    pub a: f64,
}

impl DispersionParams {
    pub fn new(a: f64) -> Result<Self, BogoliubovError> {
        check_a(a)?;
        Ok(Self { a })
    }
}

fn check_a(a: f64) -> Result<(), BogoliubovError> {
    if a >= 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(BogoliubovError::InvalidInput(format!("scattering length must be >= 0, got {a}")))
    }
}

/// `ε` as a function of `|p|²`; also valid off the lattice.
pub fn dispersion_p2(p2: f64, a: f64) -> f64 {
    p2.sqrt() * (p2 + 16.0 * PI * a).sqrt()
}

pub fn dispersion(p: [f64; 3], params: &DispersionParams) -> Result<f64, BogoliubovError> {
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    if p2 == 0.0 {
        return Err(BogoliubovError::ZeroMomentum);
    }
    Ok(dispersion_p2(p2, params.a))
}

/// `p² + 8π𝔞 − ε(p) − (8π𝔞)²/(2p²)`, rewritten without cancellation:
/// `−c³(1 + 2p²/(p² + ε)) / (2p²(p² + c + ε))` with `c = 8π𝔞`. It is
/// never positive and its modulus is at most `c³/(2p⁴)`.
pub fn energy_bracket(p2: f64, a: f64) -> f64 {
    let c = 8.0 * PI * a;
    let eps = dispersion_p2(p2, a);
    -c.powi(3) * (1.0 + 2.0 * p2 / (p2 + eps)) / (2.0 * p2 * (p2 + c + eps))
}

/// `(p² + 8π𝔞 − ε)/(2ε) = c²/(2ε(p² + c + ε))`; at most `c²/(4p⁴)`.
pub fn depletion_summand(p2: f64, a: f64) -> f64 {
    let c = 8.0 * PI * a;
    let eps = dispersion_p2(p2, a);
    c * c / (2.0 * eps * (p2 + c + eps))
}

// --- e_Λ -------------------------------------------------------------------

fn cos_term(k: [i64; 3]) -> f64 {
    let m = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
    m.sqrt().cos() / m
}

/// `Σ cos|k|/|k|²` over `k ∈ Z³` with `max|k_i| = m`, using the 48-fold symmetry.
fn cube_shell(m: i64) -> f64 {
    let rows: Vec<f64> = (0..=m)
        .map(|a| {
            let terms: Vec<f64> = (a..=m)
                .map(|b| {
                    let signs = [a, b, m].iter().filter(|&&x| x != 0).count();
                    let perms = match (a == b, b == m) {
                        (true, true) => 1.0,
                        (false, false) => 6.0,
                        _ => 3.0,
                    };
                    perms * (1u32 << signs) as f64 * cos_term([a, b, m])
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&rows)
}

/// `2 − Σ_{k ∈ Z³\{0}, |k_i| ≤ m} cos|k|/|k|²` for every `m ≤ max_m`.
pub fn cube_partial_sums(max_m: usize) -> Vec<f64> {
    let shells: Vec<f64> = (1..=max_m as i64).into_par_iter().map(cube_shell).collect();
    let mut out = Vec::with_capacity(max_m + 1);
    let (mut acc, mut comp) = (2.0f64, 0.0f64);
    out.push(acc);
    for s in shells {
        // Neumaier summation of the running total
        let t = acc - s;
        comp += if acc.abs() >= s.abs() { (acc - t) - s } else { (-s - t) + acc };
        acc = t;
        out.push(acc + comp);
    }
    out
}

/// The same partial sum assembled as `2 − (8·octant + 12·face + 6·axis)`.
pub fn cube_partial_sum_octants(m: usize) -> f64 {
    let m = m as i64;
    let octant: Vec<f64> = (1..=m)
        .into_par_iter()
        .map(|a| {
            let row: Vec<f64> = (1..=m)
                .flat_map(|b| (1..=m).map(move |c| cos_term([a, b, c])))
                .collect();
            pairwise_sum(&row)
        })
        .collect();
    let face: Vec<f64> = (1..=m).flat_map(|b| (1..=m).map(move |c| cos_term([0, b, c]))).collect();
    let axis: Vec<f64> = (1..=m).map(|c| cos_term([0, 0, c])).collect();
    2.0 - (8.0 * pairwise_sum(&octant) + 12.0 * pairwise_sum(&face) + 6.0 * pairwise_sum(&axis))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ELambda {
    pub value: f64,
    pub uncertainty: f64,
    /// `(M, smoothed value)` from the finest level down.
    pub levels: Vec<(usize, f64)>,
}

/// The cube sums oscillate in `M` with amplitude `O(1/M)`, so each level
/// is a `cos²`-windowed mean of `S(m)` over `m ∈ [3M/4, 5M/4]`.
pub fn e_lambda(m_max: usize, levels: usize) -> Result<ELambda, BogoliubovError> {
    if m_max < 8 {
        return Err(BogoliubovError::InvalidInput(format!("M_max must be >= 8, got {m_max}")));
    }
    if levels < 2 || m_max >> (levels - 1) < 8 {
        return Err(BogoliubovError::InvalidInput(format!(
            "need at least two levels with M >= 8, got {levels} from M_max = {m_max}"
        )));
    }
    let sums = cube_partial_sums(m_max + m_max / 4);
    let smoothed = |m: usize| {
        let h = m / 4;
        let (mut num, mut den) = (0.0, 0.0);
        for j in m - h..=m + h {
            let w = (PI * (j as f64 - m as f64) / (2.0 * h as f64)).cos().powi(2);
            num += w * sums[j];
            den += w;
        }
        num / den
    };
    let values: Vec<(usize, f64)> = (0..levels).map(|k| m_max >> k).map(|m| (m, smoothed(m))).collect();
    let spreads: Vec<f64> = values.windows(2).map(|w| (w[0].1 - w[1].1).abs()).collect();
    if spreads.len() >= 2 && spreads[0] > spreads[1] {
        return Err(BogoliubovError::NoConvergence(spreads));
    }
    Ok(ELambda {
        value: values[0].1,
        uncertainty: spreads[0],
        levels: values,
    })
}

pub const E_LAMBDA_M_MAX: usize = 256;
pub const E_LAMBDA_LEVELS: usize = 3;

/// `e_lambda(E_LAMBDA_M_MAX, E_LAMBDA_LEVELS)`, computed once.
pub fn default_e_lambda() -> &'static ELambda {
    static CACHE: OnceLock<ELambda> = OnceLock::new();
    CACHE.get_or_init(|| e_lambda(E_LAMBDA_M_MAX, E_LAMBDA_LEVELS).expect("default e_lambda converges"))
}

// --- energy and depletion ---------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyFormulaResult {
    pub total: f64,
    pub term_leading: f64,
    pub term_finite_volume: f64,
    pub term_bogoliubov_sum: f64,
    pub cutoff_used: f64,
    pub tail_estimate: f64,
    pub e_lambda: f64,
    pub e_lambda_uncertainty: f64,
    pub caveat: &'static str,
}

/// Shells `(|p|², count)` of `2πZ³ \ {0}` with `|p| ≤ cutoff`.
fn shells_within(cutoff: f64) -> Vec<(f64, u64)> {
    // shells exactly on the sphere are kept despite rounding in 2π
    let kmax2 = (cutoff / (2.0 * PI)).powi(2) * (1.0 + 1e-12);
    nonzero_shells(kmax2.floor() as usize)
        .into_iter()
        .map(|(m, c)| (4.0 * PI * PI * m as f64, c))
        .collect()
}

fn shell_sum<F: Fn(f64) -> f64 + Sync>(cutoff: f64, f: F) -> f64 {
    let terms: Vec<f64> = shells_within(cutoff).par_iter().map(|&(p2, c)| c as f64 * f(p2)).collect();
    pairwise_sum(&terms)
}

/// `Σ_{p ∈ 2πZ³, |p| > cutoff} |p|^{-4}`, bounded above.
fn quartic_tail(cutoff: f64) -> f64 {
    inverse_quartic_tail(cutoff / (2.0 * PI)) / (2.0 * PI).powi(4)
}

fn check_cutoff(cutoff: f64) -> Result<(), BogoliubovError> {
    if cutoff >= 16.0 * PI && cutoff.is_finite() {
        Ok(())
    } else {
        Err(BogoliubovError::InvalidInput(format!("cutoff must be >= 16π, got {cutoff}")))
    }
}

/// `4π𝔞(N−1) + e_Λ𝔞² − ½Σ_{|p| ≤ cutoff}[p² + 8π𝔞 − ε(p) − (8π𝔞)²/(2p²)]`
/// with the default `e_Λ`.
pub fn ground_state_energy(n: u64, a: f64, cutoff: f64) -> Result<EnergyFormulaResult, BogoliubovError> {
    ground_state_energy_with(n, a, cutoff, default_e_lambda())
}

pub fn ground_state_energy_with(
    n: u64,
    a: f64,
    cutoff: f64,
    e_lambda: &ELambda,
) -> Result<EnergyFormulaResult, BogoliubovError> {
    if n < 2 {
        return Err(BogoliubovError::InvalidInput(format!("need N >= 2, got {n}")));
    }
    check_a(a)?;
    check_cutoff(cutoff)?;
    let c = 8.0 * PI * a;
    let term_leading = 4.0 * PI * a * (n - 1) as f64;
    let term_finite_volume = e_lambda.value * a * a;
    let term_bogoliubov_sum = -0.5 * shell_sum(cutoff, |p2| energy_bracket(p2, a));
    Ok(EnergyFormulaResult {
        total: term_leading + term_finite_volume + term_bogoliubov_sum,
        term_leading,
        term_finite_volume,
        term_bogoliubov_sum,
        cutoff_used: cutoff,
        tail_estimate: 0.25 * c.powi(3) * quartic_tail(cutoff),
        e_lambda: e_lambda.value,
        e_lambda_uncertainty: e_lambda.uncertainty,
        caveat: ENERGY_CAVEAT,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Depletion {
    pub value: f64,
    pub tail_estimate: f64,
}

/// `Σ_{|p| ≤ cutoff} (p² + 8π𝔞 − ε(p))/(2ε(p))`.
pub fn depletion(a: f64, cutoff: f64) -> Result<Depletion, BogoliubovError> {
    check_a(a)?;
    check_cutoff(cutoff)?;
    let c = 8.0 * PI * a;
    Ok(Depletion {
        value: shell_sum(cutoff, |p2| depletion_summand(p2, a)),
        tail_estimate: 0.25 * c * c * quartic_tail(cutoff),
    })
}

/// `C(ζ + 1)`.
pub fn condensation_rate_bound(zeta: f64, c: f64) -> Result<f64, BogoliubovError> {
    if !(zeta >= 0.0 && c >= 0.0) {
        return Err(BogoliubovError::InvalidInput(format!("need zeta >= 0 and C >= 0, got {zeta}, {c}")));
    }
    Ok(c * (zeta + 1.0))
}

// --- spectrum ---------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnumerationBudget {
    pub max_modes: usize,
    pub max_states: usize,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self {
            max_modes: 20_000,
            max_states: 5_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Occupation {
    /// Momentum in units of `2π`.
    pub k: [i32; 3],
    pub n: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumLine {
    pub energy: f64,
    /// Number of occupation maps in this energy bin.
    pub degeneracy: u64,
    /// One representative map of the bin.
    pub occupations: Vec<Occupation>,
}

impl SpectrumLine {
    pub fn excitation_count(&self) -> u32 {
        self.occupations.iter().map(|o| o.n).sum()
    }
}

/// Modes `k` with `ε(2πk) ≤ zeta`, sorted by energy.
pub fn spectrum_modes(a: f64, zeta: f64) -> Vec<([i32; 3], f64)> {
    let kmax2 = zeta / (4.0 * PI * PI);
    let mut modes: Vec<([i32; 3], f64)> = lattice_points(kmax2.floor() as i64)
        .into_iter()
        .map(|k| {
            let m = (k[0] as i64 * k[0] as i64 + k[1] as i64 * k[1] as i64 + k[2] as i64 * k[2] as i64) as f64;
            (k, dispersion_p2(4.0 * PI * PI * m, a))
        })
        .filter(|&(_, e)| e <= zeta * (1.0 + 1e-12))
        .collect();
    modes.sort_by(|x, y| x.1.total_cmp(&y.1));
    modes
}

/// All occupation maps with `Σ n_p ε(p) ≤ zeta`, grouped into energy bins.
/// Energies within `1e-12·zeta` above the threshold count as inside it.
pub fn enumerate_spectrum(a: f64, zeta: f64, budget: &EnumerationBudget) -> Result<Vec<SpectrumLine>, BogoliubovError> {
    check_a(a)?;
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(BogoliubovError::InvalidInput(format!("zeta must be positive, got {zeta}")));
    }
    let kmax2 = zeta / (4.0 * PI * PI);
    if kmax2.powf(1.5) * 4.2 > budget.max_modes as f64 * 2.0 {
        return Err(BogoliubovError::ThresholdTooLarge(format!("mode search radius {:.3e} too large", kmax2.sqrt())));
    }
    let modes = spectrum_modes(a, zeta);
    if modes.len() > budget.max_modes {
        return Err(BogoliubovError::ThresholdTooLarge(format!(
            "{} modes exceed the budget of {}",
            modes.len(),
            budget.max_modes
        )));
    }
    let limit = zeta * (1.0 + 1e-12);
    // each map is a nondecreasing list of mode indices
    let mut states: Vec<(f64, Vec<u32>)> = Vec::new();
    let mut stack: Vec<u32> = Vec::new();
    fn visit(
        modes: &[([i32; 3], f64)],
        start: usize,
        energy: f64,
        limit: f64,
        stack: &mut Vec<u32>,
        states: &mut Vec<(f64, Vec<u32>)>,
        cap: usize,
    ) -> bool {
        if states.len() >= cap {
            return false;
        }
        states.push((energy, stack.clone()));
        for j in start..modes.len() {
            let e = energy + modes[j].1;
            if e > limit {
                break;
            }
            stack.push(j as u32);
            let ok = visit(modes, j, e, limit, stack, states, cap);
            stack.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    if !visit(&modes, 0, 0.0, limit, &mut stack, &mut states, budget.max_states) {
        return Err(BogoliubovError::ThresholdTooLarge(format!(
            "more than {} occupation maps",
            budget.max_states
        )));
    }
    for s in &mut states {
        // exact energy of the map, independent of the accumulation order
        let mut terms: Vec<f64> = s.1.iter().map(|&j| modes[j as usize].1).collect();
        terms.sort_by(f64::total_cmp);
        s.0 = pairwise_sum(&terms);
    }
    states.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
    let mut lines: Vec<SpectrumLine> = Vec::new();
    for (energy, idx) in &states {
        if let Some(line) = lines.last_mut() {
            if *energy - line.energy <= DEGENERACY_TOLERANCE * line.energy.max(1.0) {
                line.degeneracy += 1;
                continue;
            }
        }
        let mut occupations: Vec<Occupation> = Vec::new();
        for &j in idx {
            let k = modes[j as usize].0;
            match occupations.last_mut() {
                Some(o) if o.k == k => o.n += 1,
                _ => occupations.push(Occupation { k, n: 1 }),
            }
        }
        lines.push(SpectrumLine {
            energy: *energy,
            degeneracy: 1,
            occupations,
        });
    }
    Ok(lines)
}
