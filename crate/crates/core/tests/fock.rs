use std::f64::consts::PI;

use gpbose::bogoliubov::{depletion_summand, dispersion_p2};
use gpbose::fock::*;
use proptest::prelude::*;

fn one_pair(d: f64, b: f64) -> QuadraticHamiltonian {
    QuadraticHamiltonian::new(vec![PairCoefficients { d, b }], 0.0).unwrap()
}

fn pair_space(momenta: &[[i32; 3]], n_max: u32) -> TruncatedFock {
    TruncatedFock::product(ModeSet::pairs(momenta, false).unwrap(), n_max).unwrap()
}

#[test]
fn single_mode_creation_matrix() {
    // a mode set must be closed under p → −p, so take a pair and look at one mode
    let space = pair_space(&[[1, 0, 0]], 2);
    let ops = build_operators(&space).unwrap();
    let sub: Vec<usize> = (0..space.dimension()).filter(|&i| space.basis[i][1] == 0).collect();
    let c = ops.creation[0].restrict(&sub).to_dense();
    let expected = nalgebra::DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2f64.sqrt(), 0.0]);
    assert_eq!(c, expected);
}

#[test]
fn canonical_commutation_relations() {
    let space = pair_space(&[[1, 0, 0], [0, 1, 1]], 3);
    let ops = build_operators(&space).unwrap();
    let modes = space.mode_set.len();
    for p in 0..modes {
        for q in 0..modes {
            let comm = ops.annihilation[p]
                .matmul(&ops.creation[q])
                .add(&ops.creation[q].matmul(&ops.annihilation[p]).scale(-1.0))
                .to_dense();
            for (i, occ) in space.basis.iter().enumerate() {
                if occ[p] == space.n_max || occ[q] == space.n_max {
                    continue;
                }
                for j in 0..space.dimension() {
                    let want = if p == q && i == j { 1.0 } else { 0.0 };
                    assert!((comm[(i, j)] - want).abs() < 1e-12 || space.basis[j][p] == space.n_max);
                }
            }
        }
        let n = ops.creation[p].matmul(&ops.annihilation[p]);
        let diff = n.add(&space.number(p).scale(-1.0));
        assert!(diff.triplets().iter().all(|t| t.2.abs() < 1e-12));
    }
}

#[test]
fn excitation_map_identities_two_modes() {
    // {0, p} needs −p as well for closure; N = 2 on {0, ±p}
    let modes = ModeSet::pairs(&[[1, 0, 0]], true).unwrap();
    let report = excitation_map_check(2, &modes).unwrap();
    assert!(report.max_deviation <= 1e-12);
    assert!(report.vacuum_maps_to_vacuum);
    assert_eq!(report.dimension, 6);
    for n in 1..=6 {
        let modes = ModeSet::pairs(&[[1, 0, 0], [1, 1, 0]], true).unwrap();
        let r = excitation_map_check(n, &modes).unwrap();
        assert!(r.max_deviation <= 1e-12, "N = {n}");
    }
    assert!(excitation_map_check(7, &modes).is_err());
    let no_zero = ModeSet::pairs(&[[1, 0, 0]], false).unwrap();
    assert!(matches!(excitation_map_check(2, &no_zero), Err(FockError::InvalidModes(_))));
}

#[test]
fn pure_condensate_density_matrix() {
    let modes = ModeSet::pairs(&[[1, 0, 0]], true).unwrap();
    let n = 4;
    let sector = TruncatedFock::sector(modes, n).unwrap();
    let mut psi = vec![0.0; sector.dimension()];
    psi[sector.index_of(&[n, 0, 0]).unwrap()] = 1.0;
    let dm = one_particle_density_matrix(&psi, &sector).unwrap();
    assert!((dm.eigenvalues[0] - n as f64).abs() < 1e-12);
    assert!(dm.eigenvalues[1..].iter().all(|e| e.abs() < 1e-12));
    assert!((dm.condensate_fraction - 1.0).abs() < 1e-12);
}

#[test]
fn symplectic_closed_forms() {
    let diag = symplectic_diagonalize(&one_pair(3.0, 0.0)).unwrap();
    assert_eq!((diag.pairs[0].tau, diag.pairs[0].eps, diag.ground_shift), (0.0, 3.0, 0.0));
    for (k, a) in [([1, 0, 0], 0.1), ([1, 2, 0], 0.7), ([3, 1, 1], 2.0)] {
        let h = QuadraticHamiltonian::bogoliubov(&[k], a).unwrap();
        let d = symplectic_diagonalize(&h).unwrap();
        let p2 = 4.0 * PI * PI * k.iter().map(|&x| (x * x) as f64).sum::<f64>();
        assert!((d.pairs[0].eps - dispersion_p2(p2, a)).abs() < 1e-12 * d.pairs[0].eps);
        assert!(((2.0 * d.pairs[0].tau).tanh() + h.pairs[0].b / h.pairs[0].d).abs() < 1e-14);
    }
    assert!(matches!(
        QuadraticHamiltonian::new(vec![PairCoefficients { d: 1.0, b: 1.0 }], 0.0),
        Err(FockError::UnstableForm { .. })
    ));
}

proptest! {
    #[test]
    fn transformation_removes_pair_terms(d in 0.1f64..100.0, ratio in -0.99f64..0.99) {
        let b = ratio * d;
        let diag = symplectic_diagonalize(&one_pair(d, b)).unwrap();
        let (d2, b2) = transformed_coefficients(d, b, diag.pairs[0].tau);
        prop_assert!(b2.abs() <= 1e-12 * d.max(1.0) / (1.0 - ratio * ratio));
        prop_assert!((d2 - diag.pairs[0].eps).abs() <= 1e-12 * d / (1.0 - ratio * ratio));
    }
}

#[test]
fn free_pair_ground_state_is_vacuum() {
    let h = QuadraticHamiltonian::new(vec![PairCoefficients { d: 2.0, b: 0.0 }], 1.25).unwrap();
    let space = pair_space(&[[1, 0, 0]], 4);
    let g = exact_ground_state(&h, &space).unwrap();
    assert!((g.energy - 1.25).abs() < 1e-12);
    assert!((g.state[0] - 1.0).abs() < 1e-12);
    assert_eq!(g.n_plus, 0.0);
}

#[test]
fn single_pair_ground_state_matches_closed_form() {
    for (d, b) in [(1.0, 0.5), (4.0, -1.0), (10.0, 3.0)] {
        let h = one_pair(d, b);
        let space = pair_space(&[[1, 0, 0]], 60);
        assert!(space.dimension() > DENSE_LIMIT);
        let g = exact_ground_state(&h, &space).unwrap();
        let diag = symplectic_diagonalize(&h).unwrap();
        assert!((g.energy - diag.ground_shift).abs() <= 1e-6, "{} vs {}", g.energy, diag.ground_shift);
        let eps = diag.pairs[0].eps;
        assert!((g.n_plus - (d - eps) / eps).abs() <= 1e-6);
        let sinh2 = diag.pairs[0].tau.sinh().powi(2);
        assert!((g.occupations[0] - sinh2).abs() < 1e-6 && (g.occupations[1] - sinh2).abs() < 1e-6);
        assert!(g.residual < 1e-8);
    }
}

#[test]
fn dense_and_lanczos_agree() {
    let h = QuadraticHamiltonian::new(
        vec![PairCoefficients { d: 1.0, b: 0.4 }, PairCoefficients { d: 1.7, b: -0.6 }],
        0.0,
    )
    .unwrap();
    let space = pair_space(&[[1, 0, 0], [0, 1, 0]], 4);
    let m = h.assemble(&space).unwrap();
    assert!(m.is_symmetric(0.0));
    let dense = dense_lowest(&m, 1);
    let lanczos = lanczos_lowest(&m, 1, 1e-10).unwrap();
    assert!((dense.values[0] - lanczos.values[0]).abs() < 1e-9);
}

#[test]
fn pair_depletion_matches_bogoliubov_summand() {
    let a = 0.15;
    let momenta = [[1, 0, 0], [1, 1, 0], [2, 1, 0]];
    let mut oracle = 0.0;
    let mut formula = 0.0;
    for k in momenta {
        let h = QuadraticHamiltonian::bogoliubov(&[k], a).unwrap();
        let n_max = required_n_max(&h, 1e-10).unwrap().max(8);
        let g = exact_ground_state(&h, &pair_space(&[k], n_max)).unwrap();
        let p2 = 4.0 * PI * PI * k.iter().map(|&x| (x * x) as f64).sum::<f64>();
        let two_summands = 2.0 * depletion_summand(p2, a);
        assert!((g.n_plus - two_summands).abs() < 1e-8, "{} vs {}", g.n_plus, two_summands);
        oracle += g.n_plus;
        formula += two_summands;
        // condensation bound shape with C = 1
        assert!(g.n_plus <= 1.0 * (g.energy - h.shift - symplectic_diagonalize(&h).unwrap().ground_shift + 1.0));
    }
    assert!((oracle - formula).abs() < 1e-8);
}

#[test]
fn required_cap_bounds_tail() {
    let h = one_pair(1.0, 0.5);
    let n = required_n_max(&h, 1e-8).unwrap();
    let t = symplectic_diagonalize(&h).unwrap().pairs[0].tau.tanh().powi(2);
    assert!(t.powi(n as i32) < 1e-8 && t.powi(n as i32 - 1) >= 1e-8);
    let small = pair_space(&[[1, 0, 0]], 2);
    assert!(matches!(exact_ground_state(&h, &small), Err(FockError::TruncationWarning { .. })));
}

#[test]
fn free_pair_levels_form_a_ladder() {
    let d = 1.3;
    let h = QuadraticHamiltonian::new(vec![PairCoefficients { d, b: 0.0 }], 0.0).unwrap();
    let levels = excited_levels(&h, &pair_space(&[[1, 0, 0]], 10), 6).unwrap();
    let want = [0.0, d, d, 2.0 * d, 2.0 * d, 2.0 * d];
    for (l, w) in levels.iter().zip(want) {
        assert!((l - w).abs() < 1e-12);
    }
}

/// Gaps `Σ n_p ε_p` over all occupations of the given modes, sorted.
fn enumerated_gaps(eps: &[f64], max_quanta: u32, k: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    for e in eps {
        let prev = out.clone();
        out.clear();
        for g in prev {
            for n in 0..=max_quanta {
                out.push(g + n as f64 * e);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.truncate(k);
    out
}

#[test]
fn pair_gaps_match_enumeration() {
    let h = one_pair(2.0, 0.8);
    let eps = symplectic_diagonalize(&h).unwrap().pairs[0].eps;
    let levels = excited_levels(&h, &pair_space(&[[1, 0, 0]], 40), 6).unwrap();
    let want = enumerated_gaps(&[eps, eps], 3, 6);
    for (l, w) in levels.iter().zip(&want) {
        assert!((l - levels[0] - w).abs() <= 1e-6, "{levels:?} vs {want:?}");
    }
    // first gap ε twice, then 2ε three times
    assert!((levels[3] - levels[0] - 2.0 * eps).abs() < 1e-6);
}

#[test]
fn two_pair_gaps_match_enumeration() {
    let h = QuadraticHamiltonian::new(
        vec![PairCoefficients { d: 1.0, b: 0.3 }, PairCoefficients { d: 1.45, b: -0.5 }],
        0.0,
    )
    .unwrap();
    let diag = symplectic_diagonalize(&h).unwrap();
    let (e1, e2) = (diag.pairs[0].eps, diag.pairs[1].eps);
    let space = pair_space(&[[1, 0, 0], [0, 0, 1]], 9);
    let levels = excited_levels(&h, &space, 15).unwrap();
    assert!((levels[0] - diag.ground_shift).abs() < 1e-6);
    let want = enumerated_gaps(&[e1, e1, e2, e2], 4, 15);
    for (l, w) in levels.iter().zip(&want) {
        assert!((l - levels[0] - w).abs() <= 1e-6, "{levels:?} vs {want:?}");
    }
}

#[test]
fn pair_charges_are_conserved() {
    let h = QuadraticHamiltonian::new(
        vec![PairCoefficients { d: 1.0, b: 0.4 }, PairCoefficients { d: 2.0, b: 0.9 }],
        0.0,
    )
    .unwrap();
    let space = pair_space(&[[1, 0, 0], [0, 1, 0]], 5);
    let m = h.assemble(&space).unwrap();
    for (r, c, _) in m.triplets() {
        assert_eq!(space.pair_charges(r), space.pair_charges(c));
    }
    let g = exact_ground_state(&h, &pair_space(&[[1, 0, 0], [0, 1, 0]], 9)).unwrap();
    let space9 = pair_space(&[[1, 0, 0], [0, 1, 0]], 9);
    for (i, c) in g.state.iter().enumerate() {
        if space9.pair_charges(i).iter().any(|&q| q != 0) {
            assert!(c.abs() < 1e-10);
        }
    }
}

#[test]
fn quadratic_ground_state_density_matrix() {
    let h = QuadraticHamiltonian::new(
        vec![PairCoefficients { d: 1.0, b: 0.45 }, PairCoefficients { d: 2.0, b: -0.7 }],
        0.0,
    )
    .unwrap();
    let space = pair_space(&[[1, 0, 0], [0, 1, 0]], 9);
    let g = exact_ground_state(&h, &space).unwrap();
    let dm = one_particle_density_matrix(&g.state, &space).unwrap();
    let diag = symplectic_diagonalize(&h).unwrap();
    for (j, pd) in diag.pairs.iter().enumerate() {
        let s2 = pd.tau.sinh().powi(2);
        assert!((dm.matrix[(2 * j, 2 * j)] - s2).abs() < 1e-7);
        assert!((dm.matrix[(2 * j + 1, 2 * j + 1)] - s2).abs() < 1e-7);
    }
    for p in 0..4 {
        for q in 0..4 {
            if p != q {
                assert!(dm.matrix[(p, q)].abs() < 1e-12);
            }
        }
    }
    let occ: f64 = g.occupations.iter().sum();
    assert!((dm.trace - occ).abs() < 1e-12);
    assert!(*dm.eigenvalues.last().unwrap() >= -1e-12);
}

#[test]
fn budget_and_mode_validation() {
    let modes = ModeSet::pairs(&[[1, 0, 0], [0, 1, 0], [0, 0, 1]], false).unwrap();
    assert!(matches!(
        TruncatedFock::new(modes, 6, ParticleConstraint::None, 1000),
        Err(FockError::BudgetExceeded { .. })
    ));
    assert!(ModeSet::new(vec![[1, 0, 0]]).is_err());
    assert!(ModeSet::new(vec![[1, 0, 0], [-1, 0, 0], [1, 0, 0]]).is_err());
    let h = one_pair(1.0, 0.2);
    let two = pair_space(&[[1, 0, 0], [0, 1, 0]], 2);
    assert!(h.assemble(&two).is_err());
}
