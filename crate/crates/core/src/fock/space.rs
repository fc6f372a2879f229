use std::collections::HashMap;

use serde::Serialize;

use super::sparse::SparseMatrix;
use super::FockError;

pub const DEFAULT_BUDGET: usize = 20_000;

/// Momentum labels (units of `2π`); nonzero labels come in `±p` pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeSet {
    pub modes: Vec<[i32; 3]>,
}

impl ModeSet {
    pub fn new(modes: Vec<[i32; 3]>) -> Result<Self, FockError> {
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(FockError::InvalidModes(format!("duplicate mode {m:?}")));
            }
            let neg = m.map(|x| -x);
            if !modes.contains(&neg) {
                return Err(FockError::InvalidModes(format!("mode {m:?} lacks its partner {neg:?}")));
            }
        }
        Ok(Self { modes })
    }

    /// `[p₁, −p₁, p₂, −p₂, …]`, optionally led by the condensate mode.
    pub fn pairs(momenta: &[[i32; 3]], condensate: bool) -> Result<Self, FockError> {
        let mut modes = Vec::new();
        if condensate {
            modes.push([0; 3]);
        }
        for p in momenta {
            if *p == [0; 3] {
                return Err(FockError::InvalidModes("pair momentum must be nonzero".into()));
            }
            modes.push(*p);
            modes.push(p.map(|x| -x));
        }
        Self::new(modes)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn index(&self, p: [i32; 3]) -> Option<usize> {
        self.modes.iter().position(|&m| m == p)
    }

    /// Index pairs `(p, −p)` with `p` listed first.
    pub fn pair_indices(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, m) in self.modes.iter().enumerate() {
            if *m == [0; 3] {
                continue;
            }
            let j = self.index(m.map(|x| -x)).expect("pairs are closed");
            if i < j {
                out.push((i, j));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ParticleConstraint {
    /// Only the per-mode cap applies.
    None,
    AtMost(u32),
    Exactly(u32),
}

/// Occupation-vector basis in lexicographic order.
#[derive(Clone, Debug)]
pub struct TruncatedFock {
    pub mode_set: ModeSet,
    pub n_max: u32,
    pub constraint: ParticleConstraint,
    pub basis: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
}

impl TruncatedFock {
    pub fn new(mode_set: ModeSet, n_max: u32, constraint: ParticleConstraint, budget: usize) -> Result<Self, FockError> {
        let modes = mode_set.len();
        let total_cap = match constraint {
            ParticleConstraint::None => u32::MAX,
            ParticleConstraint::AtMost(n) | ParticleConstraint::Exactly(n) => n,
        };
        let mut basis = Vec::new();
        let mut current = vec![0u32; modes];
        fn fill(
            pos: usize,
            used: u32,
            current: &mut Vec<u32>,
            n_max: u32,
            cap: u32,
            exact: Option<u32>,
            basis: &mut Vec<Vec<u32>>,
            budget: usize,
        ) -> bool {
            if pos == current.len() {
                if exact.is_none_or(|n| used == n) {
                    if basis.len() == budget {
                        return false;
                    }
                    basis.push(current.clone());
                }
                return true;
            }
            let top = n_max.min(cap - used);
            for n in 0..=top {
                current[pos] = n;
                if !fill(pos + 1, used + n, current, n_max, cap, exact, basis, budget) {
                    return false;
                }
            }
            current[pos] = 0;
            true
        }
        let exact = match constraint {
            ParticleConstraint::Exactly(n) => Some(n),
            _ => None,
        };
        if !fill(0, 0, &mut current, n_max, total_cap, exact, &mut basis, budget) {
            return Err(FockError::BudgetExceeded { budget });
        }
        let lookup = basis.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        Ok(Self {
            mode_set,
            n_max,
            constraint,
            basis,
            lookup,
        })
    }

    /// Every mode capped at `n_max`, no total constraint.
    pub fn product(mode_set: ModeSet, n_max: u32) -> Result<Self, FockError> {
        Self::new(mode_set, n_max, ParticleConstraint::None, DEFAULT_BUDGET)
    }

    /// Fixed total particle number `n`.
    pub fn sector(mode_set: ModeSet, n: u32) -> Result<Self, FockError> {
        Self::new(mode_set, n, ParticleConstraint::Exactly(n), DEFAULT_BUDGET)
    }

    /// Total particle number at most `n` (`F_{≤N}`).
    pub fn at_most(mode_set: ModeSet, n: u32) -> Result<Self, FockError> {
        Self::new(mode_set, n, ParticleConstraint::AtMost(n), DEFAULT_BUDGET)
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        self.lookup.get(occ).copied()
    }

    fn admissible(&self, occ: &[u32]) -> Option<usize> {
        self.index_of(occ)
    }

    /// `a_p`; zero matrix rows where the target leaves the space.
    pub fn annihilation(&self, p: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for (j, occ) in self.basis.iter().enumerate() {
            if occ[p] == 0 {
                continue;
            }
            let mut target = occ.clone();
            target[p] -= 1;
            if let Some(i) = self.admissible(&target) {
                t.push((i, j, (occ[p] as f64).sqrt()));
            }
        }
        SparseMatrix::from_triplets(self.dimension(), t)
    }

    pub fn creation(&self, p: usize) -> SparseMatrix {
        self.annihilation(p).transpose()
    }

    /// `a*_p a_q`, built directly so it also acts inside fixed-N sectors.
    pub fn hopping(&self, p: usize, q: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for (j, occ) in self.basis.iter().enumerate() {
            if p == q {
                t.push((j, j, occ[p] as f64));
                continue;
            }
            if occ[q] == 0 {
                continue;
            }
            let mut target = occ.clone();
            target[q] -= 1;
            target[p] += 1;
            if let Some(i) = self.admissible(&target) {
                t.push((i, j, (occ[q] as f64 * target[p] as f64).sqrt()));
            }
        }
        SparseMatrix::from_triplets(self.dimension(), t)
    }

    /// `a*_p a*_q` (`p ≠ q`).
    pub fn pair_creation(&self, p: usize, q: usize) -> SparseMatrix {
        assert_ne!(p, q);
        let mut t = Vec::new();
        for (j, occ) in self.basis.iter().enumerate() {
            let mut target = occ.clone();
            target[p] += 1;
            target[q] += 1;
            if let Some(i) = self.admissible(&target) {
                t.push((i, j, ((occ[p] + 1) as f64 * (occ[q] + 1) as f64).sqrt()));
            }
        }
        SparseMatrix::from_triplets(self.dimension(), t)
    }

    /// Diagonal matrix `f(occupation vector)`.
    pub fn diagonal<F: Fn(&[u32]) -> f64>(&self, f: F) -> SparseMatrix {
        let t = self.basis.iter().enumerate().map(|(i, occ)| (i, i, f(occ))).collect();
        SparseMatrix::from_triplets(self.dimension(), t)
    }

    pub fn number(&self, p: usize) -> SparseMatrix {
        self.diagonal(|occ| occ[p] as f64)
    }

    /// Weight of `state` on basis vectors with some mode at the cap.
    pub fn boundary_weight(&self, state: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(state)
            .filter(|(occ, _)| occ.contains(&self.n_max))
            .map(|(_, c)| c * c)
            .sum()
    }

    /// `n_p − n_{−p}` for every pair; conserved by quadratic pair Hamiltonians.
    pub fn pair_charges(&self, idx: usize) -> Vec<i64> {
        let occ = &self.basis[idx];
        self.mode_set
            .pair_indices()
            .iter()
            .map(|&(p, q)| occ[p] as i64 - occ[q] as i64)
            .collect()
    }
}

/// Annihilation and creation matrices for every mode.
pub struct Operators {
    pub annihilation: Vec<SparseMatrix>,
    pub creation: Vec<SparseMatrix>,
}

pub fn build_operators(space: &TruncatedFock) -> Result<Operators, FockError> {
    if space.dimension() > DEFAULT_BUDGET {
        return Err(FockError::BudgetExceeded { budget: DEFAULT_BUDGET });
    }
    let annihilation: Vec<SparseMatrix> = (0..space.mode_set.len()).map(|p| space.annihilation(p)).collect();
    let creation = annihilation.iter().map(SparseMatrix::transpose).collect();
    Ok(Operators { annihilation, creation })
}
