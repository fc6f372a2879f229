//! Truncated bosonic Fock spaces over a few momentum modes, used as exact
//! references: pair Hamiltonians `D(n_p + n_{−p}) + B(a*_p a*_{−p} + a_p a_{−p})`,
//! their symplectic diagonalization, and the excitation map `U_N`.

mod space;
mod sparse;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

pub use space::{build_operators, ModeSet, Operators, ParticleConstraint, TruncatedFock, DEFAULT_BUDGET};
pub use sparse::{dense_lowest, eigen_residual, lanczos_lowest, lowest_eigenpairs, Eigen, SparseMatrix, DENSE_LIMIT, LANCZOS_TOLERANCE};

/// Largest tolerated weight on states with a mode at the occupation cap.
pub const TRUNCATION_TOLERANCE: f64 = 1e-8;
/// Entrywise tolerance of the operator identity checks.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("basis dimension exceeds the budget of {budget}")]
    BudgetExceeded { budget: usize },
    #[error("invalid mode set: {0}")]
    InvalidModes(String),
    #[error("unstable quadratic form: D = {d}, B = {b}")]
    UnstableForm { d: f64, b: f64 },
    #[error("truncation weight {boundary_weight:.3e} exceeds tolerance; raise n_max")]
    TruncationWarning { boundary_weight: f64 },
    #[error("eigensolver stopped at residual {residual:.3e} after {steps} steps")]
    NoConvergence { residual: f64, steps: usize },
    #[error("{identity} violated at ({row}, {col}): {lhs} vs {rhs}")]
    IdentityViolation {
        identity: String,
        row: usize,
        col: usize,
        lhs: f64,
        rhs: f64,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairCoefficients {
    pub d: f64,
    pub b: f64,
}

/// `shift + Σ_pairs D(n_p + n_{−p}) + B(a*_p a*_{−p} + a_p a_{−p})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticHamiltonian {
    pub pairs: Vec<PairCoefficients>,
    pub shift: f64,
}

impl QuadraticHamiltonian {
    pub fn new(pairs: Vec<PairCoefficients>, shift: f64) -> Result<Self, FockError> {
        for p in &pairs {
            if !(p.d > p.b.abs()) {
                return Err(FockError::UnstableForm { d: p.d, b: p.b });
            }
        }
        Ok(Self { pairs, shift })
    }

    /// `D = p² + 8π𝔞`, `B = 8π𝔞` for each momentum `p ∈ 2πZ³`.
    pub fn bogoliubov(momenta: &[[i32; 3]], a: f64) -> Result<Self, FockError> {
        let c = 8.0 * std::f64::consts::PI * a;
        let pairs = momenta
            .iter()
            .map(|k| {
                let p2 = 4.0 * std::f64::consts::PI.powi(2) * k.iter().map(|&x| (x * x) as f64).sum::<f64>();
                PairCoefficients { d: p2 + c, b: c }
            })
            .collect();
        Self::new(pairs, 0.0)
    }

    pub fn assemble(&self, space: &TruncatedFock) -> Result<SparseMatrix, FockError> {
        let pairs = space.mode_set.pair_indices();
        if pairs.len() != self.pairs.len() {
            return Err(FockError::InvalidInput(format!(
                "{} coefficient pairs for {} mode pairs",
                self.pairs.len(),
                pairs.len()
            )));
        }
        let shift = self.shift;
        let mut h = space.diagonal(|occ| {
            shift
                + pairs
                    .iter()
                    .zip(&self.pairs)
                    .map(|(&(p, q), c)| c.d * (occ[p] + occ[q]) as f64)
                    .sum::<f64>()
        });
        for (&(p, q), c) in pairs.iter().zip(&self.pairs) {
            if c.b != 0.0 {
                let up = space.pair_creation(p, q);
                h = h.add(&up.add(&up.transpose()).scale(c.b));
            }
        }
        Ok(h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairDiag {
    pub d: f64,
    pub b: f64,
    /// `tanh 2τ = −B/D`.
    pub tau: f64,
    pub eps: f64,
}

impl PairDiag {
    /// `⟨n_p + n_{−p}⟩ = 2 sinh²τ = (D − ε)/ε` in the ground state.
    pub fn ground_occupation(&self) -> f64 {
        (self.d - self.eps) / self.eps
    }
}

/// `ground_shift = Σ_pairs (ε − D)`, i.e. `Σ_p (ε_p − D_p)/2` with both
/// members of each pair counted; the ground energy is `shift + ground_shift`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BogoliubovDiag {
    pub pairs: Vec<PairDiag>,
    pub ground_shift: f64,
}

pub fn symplectic_diagonalize(h: &QuadraticHamiltonian) -> Result<BogoliubovDiag, FockError> {
    let mut pairs = Vec::new();
    for c in &h.pairs {
        if !(c.d > c.b.abs()) {
            return Err(FockError::UnstableForm { d: c.d, b: c.b });
        }
        let eps = ((c.d - c.b) * (c.d + c.b)).sqrt();
        pairs.push(PairDiag {
            d: c.d,
            b: c.b,
            tau: -0.5 * (c.b / c.d).atanh(),
            eps,
        });
    }
    let ground_shift = pairs.iter().map(|p| p.eps - p.d).sum();
    Ok(BogoliubovDiag { pairs, ground_shift })
}

/// Coefficients `(D', B')` after `a_p = cosh τ α_p + sinh τ α*_{−p}`.
pub fn transformed_coefficients(d: f64, b: f64, tau: f64) -> (f64, f64) {
    let (s, c) = ((2.0 * tau).sinh(), (2.0 * tau).cosh());
    (d * c + b * s, d * s + b * c)
}

/// Smallest cap with squeezed-state tail `tanh^{2n}|τ| < tol` for every pair.
pub fn required_n_max(h: &QuadraticHamiltonian, tol: f64) -> Result<u32, FockError> {
    let diag = symplectic_diagonalize(h)?;
    let mut n = 1;
    for p in &diag.pairs {
        let t2 = p.tau.tanh().powi(2);
        if t2 > 0.0 {
            n = n.max((tol.ln() / t2.ln()).floor() as u32 + 1);
        }
    }
    Ok(n)
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundState {
    pub energy: f64,
    #[serde(skip)]
    pub state: Vec<f64>,
    /// `⟨a*_p a_p⟩` per mode.
    pub occupations: Vec<f64>,
    pub n_plus: f64,
    pub boundary_weight: f64,
    pub dimension: usize,
    pub residual: f64,
}

pub fn exact_ground_state(h: &QuadraticHamiltonian, space: &TruncatedFock) -> Result<GroundState, FockError> {
    let matrix = h.assemble(space)?;
    let eig = lowest_eigenpairs(&matrix, 1)?;
    let (energy, mut state) = (eig.values[0], eig.vectors[0].clone());
    // sign convention: largest component positive
    let lead = state.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        state.iter_mut().for_each(|x| *x = -*x);
    }
    let boundary_weight = space.boundary_weight(&state);
    if boundary_weight > TRUNCATION_TOLERANCE {
        return Err(FockError::TruncationWarning { boundary_weight });
    }
    let occupations: Vec<f64> = (0..space.mode_set.len())
        .map(|p| {
            space
                .basis
                .iter()
                .zip(&state)
                .map(|(occ, c)| occ[p] as f64 * c * c)
                .sum()
        })
        .collect();
    let n_plus = space
        .mode_set
        .modes
        .iter()
        .zip(&occupations)
        .filter(|(m, _)| **m != [0; 3])
        .map(|(_, n)| n)
        .sum();
    Ok(GroundState {
        energy,
        residual: eigen_residual(&matrix, energy, &state),
        state,
        occupations,
        n_plus,
        boundary_weight,
        dimension: space.dimension(),
    })
}

/// The `k` lowest eigenvalues, solved block by block in the conserved
/// charges `n_p − n_{−p}`.
pub fn excited_levels(h: &QuadraticHamiltonian, space: &TruncatedFock, k: usize) -> Result<Vec<f64>, FockError> {
    let matrix = h.assemble(space)?;
    let mut blocks: std::collections::BTreeMap<Vec<i64>, Vec<usize>> = Default::default();
    for i in 0..space.dimension() {
        blocks.entry(space.pair_charges(i)).or_default().push(i);
    }
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for idx in blocks.values() {
        let eig = lowest_eigenpairs(&matrix.restrict(idx), k)?;
        for (value, v) in eig.values.iter().zip(&eig.vectors) {
            let weight: f64 = idx
                .iter()
                .zip(v)
                .filter(|(&i, _)| space.basis[i].contains(&space.n_max))
                .map(|(_, c)| c * c)
                .sum();
            levels.push((*value, weight));
        }
    }
    levels.sort_by(|x, y| x.0.total_cmp(&y.0));
    levels.truncate(k);
    if let Some(&(_, w)) = levels.iter().max_by(|x, y| x.1.total_cmp(&y.1)) {
        if w > TRUNCATION_TOLERANCE {
            return Err(FockError::TruncationWarning { boundary_weight: w });
        }
    }
    Ok(levels.into_iter().map(|l| l.0).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityMatrix {
    /// `⟨a*_p a_q⟩` indexed by mode.
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    pub trace: f64,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub condensate_fraction: f64,
}

pub fn one_particle_density_matrix(state: &[f64], space: &TruncatedFock) -> Result<DensityMatrix, FockError> {
    if state.len() != space.dimension() {
        return Err(FockError::InvalidInput(format!(
            "state has {} entries, space has {}",
            state.len(),
            space.dimension()
        )));
    }
    let modes = space.mode_set.len();
    let mut matrix = DMatrix::zeros(modes, modes);
    for p in 0..modes {
        for q in 0..modes {
            let hs = space.hopping(p, q).mul_vec(state);
            matrix[(p, q)] = state.iter().zip(&hs).map(|(a, b)| a * b).sum();
        }
    }
    let sym = (&matrix + matrix.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let trace = matrix.trace();
    Ok(DensityMatrix {
        condensate_fraction: if trace > 0.0 { eigenvalues[0] / trace } else { 0.0 },
        matrix,
        trace,
        eigenvalues,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcitationMapReport {
    pub n: u32,
    pub modes: Vec<[i32; 3]>,
    pub dimension: usize,
    pub identities_checked: usize,
    pub max_deviation: f64,
    /// `U_N φ₀^{⊗N}` is the excitation vacuum.
    pub vacuum_maps_to_vacuum: bool,
}

fn compare(identity: &str, lhs: &SparseMatrix, rhs: &SparseMatrix) -> Result<f64, FockError> {
    let diff = lhs.add(&rhs.scale(-1.0));
    let mut worst = 0.0f64;
    for (r, c, v) in diff.triplets() {
        if v.abs() > IDENTITY_TOLERANCE {
            return Err(FockError::IdentityViolation {
                identity: identity.to_string(),
                row: r,
                col: c,
                lhs: lhs.get(r, c),
                rhs: rhs.get(r, c),
            });
        }
        worst = worst.max(v.abs());
    }
    Ok(worst)
}

/// Checks the excitation-map rules on the `N`-particle sector of `modes`
/// (which must contain `p = 0`): `U a*_p a_q U* = a*_p a_q`,
/// `U a*_0 a_0 U* = N − 𝓝₊`, `U a*_p a_0 U* = a*_p sqrt(N − 𝓝₊)`,
/// `U a*_0 a_p U* = sqrt(N − 𝓝₊) a_p` and
/// `U a*_p a_0 a*_0 a_p U*/N = a*_p (N − 𝓝₊) a_p/N` (`= b*_p b_p`).
pub fn excitation_map_check(n: u32, modes: &ModeSet) -> Result<ExcitationMapReport, FockError> {
    if n == 0 || n > 6 {
        return Err(FockError::InvalidInput(format!("N must be in 1..=6, got {n}")));
    }
    let zero = modes
        .index([0; 3])
        .ok_or_else(|| FockError::InvalidModes("the condensate mode p = 0 is required".into()))?;
    let sector = TruncatedFock::sector(modes.clone(), n)?;
    let exc_labels: Vec<[i32; 3]> = modes.modes.iter().copied().filter(|m| *m != [0; 3]).collect();
    let excitations = TruncatedFock::at_most(ModeSet::new(exc_labels.clone())?, n)?;
    let dim = sector.dimension();
    if excitations.dimension() != dim {
        return Err(FockError::InvalidInput("sector and F_{<=N} dimensions differ".into()));
    }
    let mut t = Vec::with_capacity(dim);
    for (j, occ) in sector.basis.iter().enumerate() {
        let target: Vec<u32> = occ.iter().enumerate().filter(|&(i, _)| i != zero).map(|(_, &x)| x).collect();
        let i = excitations.index_of(&target).expect("bijection onto F_{<=N}");
        t.push((i, j, 1.0));
    }
    let u = SparseMatrix::from_triplets(dim, t);
    let ut = u.transpose();
    let conj = |m: &SparseMatrix| u.matmul(m).matmul(&ut);
    let nf = n as f64;
    let n_plus = |occ: &[u32]| occ.iter().sum::<u32>() as f64;
    let remaining = excitations.diagonal(|occ| nf - n_plus(occ));
    let sqrt_remaining = excitations.diagonal(|occ| (nf - n_plus(occ)).sqrt());
    let sector_index = |label: &[i32; 3]| modes.index(*label).expect("label from the mode set");
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (pe, p_label) in exc_labels.iter().enumerate() {
        let ps = sector_index(p_label);
        for (qe, q_label) in exc_labels.iter().enumerate() {
            let qs = sector_index(q_label);
            worst = worst.max(compare(
                &format!("U a*_{p_label:?} a_{q_label:?} U* = a*_p a_q"),
                &conj(&sector.hopping(ps, qs)),
                &excitations.hopping(pe, qe),
            )?);
            checked += 1;
        }
        let create = excitations.creation(pe);
        let annihilate = excitations.annihilation(pe);
        worst = worst.max(compare(
            &format!("U a*_{p_label:?} a_0 U* = a*_p sqrt(N - N+)"),
            &conj(&sector.hopping(ps, zero)),
            &create.matmul(&sqrt_remaining),
        )?);
        worst = worst.max(compare(
            &format!("U a*_0 a_{p_label:?} U* = sqrt(N - N+) a_p"),
            &conj(&sector.hopping(zero, ps)),
            &sqrt_remaining.matmul(&annihilate),
        )?);
        worst = worst.max(compare(
            &format!("b*_{p_label:?} b_p = a*_p (N - N+) a_p / N"),
            &conj(&sector.hopping(ps, zero).matmul(&sector.hopping(zero, ps))).scale(1.0 / nf),
            &create.matmul(&remaining).matmul(&annihilate).scale(1.0 / nf),
        )?);
        checked += 3;
    }
    worst = worst.max(compare(
        "U a*_0 a_0 U* = N - N+",
        &conj(&sector.hopping(zero, zero)),
        &remaining,
    )?);
    checked += 1;
    let mut condensate = vec![0u32; modes.len()];
    condensate[zero] = n;
    let vacuum_maps_to_vacuum = sector
        .index_of(&condensate)
        .map(|j| u.get(0, j) == 1.0 && excitations.basis[0].iter().all(|&x| x == 0))
        .unwrap_or(false);
    Ok(ExcitationMapReport {
        n,
        modes: modes.modes.clone(),
        dimension: dim,
        identities_checked: checked,
        max_deviation: worst,
        vacuum_maps_to_vacuum,
    })
}
