use std::f64::consts::PI;

use gpbose::gp::*;
use gpbose::tdgp::*;
use num_complex::Complex64;

fn displaced_gaussian(problem: &GpProblem, shift: f64) -> GpState {
    let phi: Vec<Complex64> = (0..problem.grid.len())
        .map(|i| {
            let x = problem.grid.position(i);
            let r2 = (x[0] - shift).powi(2) + x[1] * x[1] + x[2] * x[2];
            Complex64::from_polar((-r2 / 1.5).exp(), 0.4 * x[1])
        })
        .collect();
    let n = problem.grid.norm(&phi);
    GpState::new(problem, phi.into_iter().map(|z| z / n).collect()).unwrap()
}

fn drift(problem: &GpProblem, state: &GpState, dt: f64, t: f64) -> f64 {
    let steps = (t / dt).round() as usize;
    let cfg = TdgpConfig {
        snapshot_stride: steps / 10,
        ..TdgpConfig::new(dt, steps)
    };
    evolve(state, problem, &cfg).unwrap().max_energy_drift
}

#[test]
fn constant_state_rotates_phase() {
    let a = 0.21;
    let problem = GpProblem::torus(3, 8, 4.0 * PI * a).unwrap();
    let mut state = GpState::new(&problem, problem.default_init()).unwrap();
    let dt = 0.01;
    for _ in 0..50 {
        state = step(&state, &problem, dt).unwrap();
    }
    let expected = Complex64::from_polar(1.0, -8.0 * PI * a * 0.5);
    for z in &state.phi {
        assert!((z - expected).norm() < 1e-12);
    }
}

#[test]
fn free_plane_wave_is_exact() {
    let problem = GpProblem::torus(2, 16, 0.0).unwrap();
    let p = [2.0 * PI * 2.0, -2.0 * PI];
    let phi: Vec<Complex64> = (0..problem.grid.len())
        .map(|i| {
            let x = problem.grid.position(i);
            Complex64::from_polar(1.0, p[0] * x[0] + p[1] * x[1])
        })
        .collect();
    let state = GpState::new(&problem, phi.clone()).unwrap();
    let cfg = TdgpConfig::new(0.003, 100);
    let traj = evolve(&state, &problem, &cfg).unwrap();
    let p2 = p[0] * p[0] + p[1] * p[1];
    let phase = Complex64::from_polar(1.0, -p2 * 0.3);
    for (z, z0) in traj.final_state.phi.iter().zip(&phi) {
        assert!((z - z0 * phase).norm() < 1e-10);
    }
}

#[test]
fn ground_state_is_stationary() {
    let problem = GpProblem::harmonic(2, 48, 6.0, 10.0).unwrap();
    let opts = MinimizeOptions { tol: 1e-12, ..Default::default() };
    let sol = minimize_gp(&problem, None, &opts).unwrap();
    let cfg = TdgpConfig::new(1e-3, 1000);
    let traj = evolve(&sol.state, &problem, &cfg).unwrap();
    let final_phi = &traj.final_state.phi;
    assert!(overlap(&problem.grid, &sol.state.phi, final_phi) >= 1.0 - 1e-6);
    // the phase advances by the chemical potential
    let inner: Complex64 = sol
        .state
        .phi
        .iter()
        .zip(final_phi)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        * problem.grid.cell_volume();
    let expected = Complex64::from_polar(1.0, -sol.chemical_potential);
    assert!((inner / inner.norm() - expected).norm() < 1e-4, "{inner} vs {expected}");
}

#[test]
fn norm_is_conserved_over_long_runs() {
    let problem = GpProblem::harmonic(2, 32, 6.0, 30.0).unwrap();
    let state = displaced_gaussian(&problem, 1.0);
    let cfg = TdgpConfig {
        snapshot_stride: 500,
        ..TdgpConfig::new(1e-3, 10_000)
    };
    let traj = evolve(&state, &problem, &cfg).unwrap();
    assert!(traj.max_norm_drift <= 1e-12, "drift {}", traj.max_norm_drift);
    assert_eq!(traj.diagnostics.len(), 21);
}

#[test]
fn energy_error_is_second_order() {
    let problem = GpProblem::harmonic(2, 48, 6.0, 20.0).unwrap();
    let state = displaced_gaussian(&problem, 1.0);
    let d: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&dt| drift(&problem, &state, dt, 1.0)).collect();
    for w in d.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..=2.2).contains(&order), "drifts {d:?}");
    }
}

#[test]
fn time_reversal_recovers_initial_state() {
    let problem = GpProblem::harmonic(3, 16, 5.0, 15.0).unwrap();
    let state = displaced_gaussian(&problem, 0.8);
    let forward = evolve(&state, &problem, &TdgpConfig::new(2e-3, 300)).unwrap();
    let back = evolve(&forward.final_state, &problem, &TdgpConfig::new(-2e-3, 300)).unwrap();
    let diff: Vec<Complex64> = back.final_state.phi.iter().zip(&state.phi).map(|(a, b)| a - b).collect();
    assert!(problem.grid.norm(&diff) < 1e-8);
}

#[test]
fn released_condensate_spreads() {
    let trap = GpProblem::harmonic(2, 64, 12.0, 20.0).unwrap();
    let ground = minimize_gp(&trap, None, &MinimizeOptions::default()).unwrap();
    let free = GpProblem::new(trap.grid, vec![0.0; trap.grid.len()], trap.coupling).unwrap();
    let cfg = TdgpConfig {
        snapshot_stride: 20,
        ..TdgpConfig::new(5e-3, 200)
    };
    let traj = evolve(&ground.state, &free, &cfg).unwrap();
    let widths: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| rms_width(&trap.grid, &s.field().unwrap()))
        .collect();
    for w in widths.windows(2) {
        assert!(w[1] > w[0], "{widths:?}");
    }
}

#[test]
fn snapshots_spill_to_disk() {
    let dir = tempfile::tempdir().unwrap();
    let problem = GpProblem::harmonic(2, 16, 5.0, 5.0).unwrap();
    let state = displaced_gaussian(&problem, 0.5);
    let cfg = TdgpConfig {
        snapshot_stride: 2,
        memory_cap: 3,
        spill_dir: Some(dir.path().to_path_buf()),
        ..TdgpConfig::new(1e-2, 10)
    };
    let traj = evolve(&state, &problem, &cfg).unwrap();
    assert_eq!(traj.snapshots.len(), 6);
    assert!(matches!(traj.snapshots[2].data, SnapshotData::Memory(_)));
    assert!(matches!(traj.snapshots[3].data, SnapshotData::Disk(_)));
    assert_eq!(traj.snapshots[5].field().unwrap(), traj.final_state.phi);
}

#[test]
fn invalid_inputs_are_rejected() {
    let problem = GpProblem::torus(2, 8, 1.0).unwrap();
    let other = GpProblem::torus(2, 10, 1.0).unwrap();
    let state = GpState::new(&other, other.default_init()).unwrap();
    assert!(matches!(
        step(&state, &problem, 0.1),
        Err(TdgpError::Gp(GpError::GridMismatch { .. }))
    ));
    let ok = GpState::new(&problem, problem.default_init()).unwrap();
    assert!(matches!(
        evolve(&ok, &problem, &TdgpConfig::new(0.0, 3)),
        Err(TdgpError::InvalidConfig(_))
    ));
    let rotating = GpProblem::harmonic(2, 16, 6.0, 1.0).unwrap().with_rotation([0.0, 0.0, 0.2]).unwrap();
    let s = GpState::new(&rotating, rotating.default_init()).unwrap();
    assert!(step(&s, &rotating, 0.1).is_err());
}
