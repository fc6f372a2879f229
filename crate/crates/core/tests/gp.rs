use std::f64::consts::PI;

use gpbose::gp::*;
use gpbose::scattering::{born_comparison, RadialPotential};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(problem: &GpProblem, width2: f64, shift: f64) -> Vec<Complex64> {
    (0..problem.grid.len())
        .map(|i| {
            let x = problem.grid.position(i);
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            Complex64::new((-r2 / width2 + shift * x[0]).exp(), 0.0)
        })
        .collect()
}

fn normalize(problem: &GpProblem, mut phi: Vec<Complex64>) -> Vec<Complex64> {
    let n = problem.grid.norm(&phi);
    phi.iter_mut().for_each(|z| *z /= n);
    phi
}

#[test]
fn constant_state_energy_on_torus() {
    let a = 0.37;
    let problem = GpProblem::torus(3, 8, 4.0 * PI * a).unwrap();
    let state = GpState::new(&problem, problem.default_init()).unwrap();
    assert!((state.norm - 1.0).abs() < 1e-14);
    assert!((state.energy.total - 4.0 * PI * a).abs() < 1e-13);
    assert_eq!(state.energy.kinetic, 0.0);
}

#[test]
fn torus_minimizer_is_constant_from_random_start() {
    let a = 0.3;
    let problem = GpProblem::torus(3, 16, 4.0 * PI * a).unwrap();
    let sol = minimize_gp(&problem, Some(problem.random_init(42)), &MinimizeOptions::default()).unwrap();
    assert!((sol.state.energy.total - 4.0 * PI * a).abs() <= 1e-8);
    assert!((sol.state.norm - 1.0).abs() <= 1e-12);
    for z in &sol.state.phi {
        assert!((z.re - 1.0).abs() < 1e-5 && z.im.abs() < 1e-5);
    }
}

#[test]
fn harmonic_gaussian_has_oscillator_energy() {
    let problem = GpProblem::harmonic(3, 64, 6.0, 0.0).unwrap();
    let phi = normalize(&problem, gaussian(&problem, 2.0, 0.0));
    let e = GpState::new(&problem, phi).unwrap().energy;
    assert!((e.total - 3.0).abs() < 1e-10);
    assert!((e.kinetic - 1.5).abs() < 1e-10 && (e.external - 1.5).abs() < 1e-10);
}

#[test]
fn harmonic_linear_minimizer_matches_oscillator() {
    let problem = GpProblem::harmonic(3, 64, 6.0, 0.0).unwrap();
    let init = gaussian(&problem, 3.0, 0.3);
    let sol = minimize_gp(&problem, Some(init), &MinimizeOptions::default()).unwrap();
    assert!((sol.state.energy.total - 3.0).abs() <= 1e-6);
    assert!((sol.chemical_potential - 3.0).abs() <= 1e-6);
    // real, nonnegative after the phase fix
    assert!(sol.state.phi.iter().all(|z| z.im.abs() < 1e-10 && z.re > -1e-10));
    for w in sol.energy_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-13, "energy rose from {} to {}", w[0], w[1]);
    }
}

#[test]
fn harmonic_2d_linear_energy() {
    let problem = GpProblem::harmonic(2, 48, 6.0, 0.0).unwrap();
    let sol = minimize_gp(&problem, Some(gaussian(&problem, 1.0, 0.2)), &MinimizeOptions::default()).unwrap();
    assert!((sol.state.energy.total - 2.0).abs() < 1e-8);
}

#[test]
fn gradient_matches_finite_differences() {
    let problem = GpProblem::harmonic(3, 64, 6.0, 7.5).unwrap();
    let functional = GpFunctional::new(&problem);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let envelope: Vec<f64> = gaussian(&problem, 4.0, 0.0).iter().map(|z| z.re).collect();
    let phi: Vec<Complex64> = envelope
        .iter()
        .map(|&e| Complex64::from_polar(e, 0.2 * rng.gen_range(-1.0..1.0)))
        .collect();
    let phi = normalize(&problem, phi);
    let grad = functional.gradient(&phi).unwrap();
    let eps = 1e-4;
    for _ in 0..20 {
        let dir: Vec<Complex64> = envelope
            .iter()
            .map(|&e| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * e)
            .collect();
        let dir = normalize(&problem, dir);
        let shifted = |s: f64| -> Vec<Complex64> { phi.iter().zip(&dir).map(|(p, d)| p + d * s).collect() };
        let ep = functional.energy(&shifted(eps)).unwrap().total;
        let em = functional.energy(&shifted(-eps)).unwrap().total;
        let fd = (ep - em) / (2.0 * eps);
        let analytic = 2.0 * problem.grid.inner(&grad, &dir);
        assert!((fd - analytic).abs() <= 1e-6 * analytic.abs(), "fd {fd} vs {analytic}");
    }
}

#[test]
fn small_coupling_slope_is_quartic_moment() {
    let base = GpProblem::harmonic(3, 32, 6.0, 0.0).unwrap();
    let opts = MinimizeOptions::default();
    let e0 = minimize_gp(&base, None, &opts).unwrap();
    let quartic: f64 = e0.state.phi.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * base.grid.cell_volume();
    assert!((quartic - (2.0 * PI).powf(-1.5)).abs() < 1e-10);
    let energy = |eps: f64| {
        let p = GpProblem::harmonic(3, 32, 6.0, eps).unwrap();
        minimize_gp(&p, None, &opts).unwrap().state.energy.total
    };
    let (e1, e2) = (energy(1e-3), energy(2e-3));
    let slope1 = (e1 - e0.state.energy.total) / 1e-3;
    let slope2 = (e2 - e0.state.energy.total) / 2e-3;
    // first-order slope from Richardson on the two differences
    let slope = 2.0 * slope1 - slope2;
    assert!((slope / quartic - 1.0).abs() < 1e-4, "slope {slope} vs {quartic}");
}

#[test]
fn zero_rotation_is_identical() {
    let problem = GpProblem::harmonic(2, 32, 6.0, 20.0).unwrap();
    let rotating = problem.clone().with_rotation([0.0; 3]).unwrap();
    let phi = problem.random_init(1);
    let a = gp_energy(&GpState::new(&problem, phi.clone()).unwrap(), &problem).unwrap();
    let b = gp_energy(&GpState::new(&rotating, phi).unwrap(), &rotating).unwrap();
    assert_eq!(a, b);
    let opts = MinimizeOptions::default();
    let s1 = minimize_gp(&problem, None, &opts).unwrap();
    let s2 = minimize_gp_rotating(&rotating, None, &opts).unwrap();
    assert_eq!(s1.state.energy, s2.state.energy);
    assert_eq!(s1.state.phi, s2.state.phi);
}

#[test]
fn slow_rotation_keeps_symmetric_minimizer() {
    let problem = GpProblem::harmonic(2, 64, 6.0, 20.0).unwrap();
    let opts = MinimizeOptions::default();
    let still = minimize_gp(&problem, None, &opts).unwrap();
    let rotating = problem.clone().with_rotation([0.0, 0.0, 0.3]).unwrap();
    let spun = minimize_gp_rotating(&rotating, None, &opts).unwrap();
    assert!((spun.state.energy.total - still.state.energy.total).abs() < 1e-8);
    assert!(spun.angular_momentum.abs() < 1e-8);
}

#[test]
fn fast_rotation_beats_symmetric_state() {
    let problem = GpProblem::harmonic(2, 64, 6.0, 50.0).unwrap();
    let opts = MinimizeOptions { tol: 1e-9, ..Default::default() };
    let still = minimize_gp(&problem, None, &opts).unwrap();
    let rotating = problem.clone().with_rotation([0.0, 0.0, 1.2]).unwrap();
    let symmetric = GpFunctional::new(&rotating).energy(&still.state.phi).unwrap().total;
    let spun = minimize_gp_rotating(&rotating, Some(rotating.random_init(5)), &opts).unwrap();
    assert!(spun.state.energy.total <= symmetric);
    assert!(spun.angular_momentum > 0.5);
}

#[test]
fn magnetic_term_on_real_fields() {
    let problem = GpProblem::harmonic(3, 24, 5.0, 3.0).unwrap();
    let rotating = problem.clone().with_rotation([0.2, -0.1, 0.5]).unwrap();
    let phi = normalize(&problem, gaussian(&problem, 1.5, 0.4));
    let plain = GpFunctional::new(&problem).energy(&phi).unwrap();
    let magnetic = GpFunctional::new(&rotating).energy(&phi).unwrap();
    let a2: f64 = phi
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let a = rotating.vector_potential(problem.grid.position(i));
            (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]) * z.norm_sqr()
        })
        .sum::<f64>()
        * problem.grid.cell_volume();
    assert!((magnetic.kinetic - plain.kinetic - a2).abs() < 1e-12 * magnetic.kinetic);
    assert!((magnetic.total - plain.total).abs() < 1e-12 * plain.total);
}

#[test]
fn deconfining_rotation_is_rejected() {
    let problem = GpProblem::harmonic(2, 32, 6.0, 1.0).unwrap();
    assert!(matches!(
        problem.clone().with_rotation([0.0, 0.0, 2.5]),
        Err(GpError::ConfinementError(_))
    ));
    assert!(GpProblem::torus(2, 8, 1.0).unwrap().with_rotation([0.0, 0.0, 0.1]).is_err());
}

#[test]
fn grid_mismatch_is_reported() {
    let small = GpProblem::torus(3, 8, 1.0).unwrap();
    let large = GpProblem::torus(3, 10, 1.0).unwrap();
    let state = GpState::new(&small, small.default_init()).unwrap();
    assert!(matches!(gp_energy(&state, &large), Err(GpError::GridMismatch { .. })));
    assert!(minimize_gp(&large, Some(small.default_init()), &MinimizeOptions::default()).is_err());
}

#[test]
fn non_convergence_is_reported() {
    let problem = GpProblem::harmonic(3, 16, 5.0, 1.0).unwrap();
    let opts = MinimizeOptions { max_iter: 2, ..Default::default() };
    let res = minimize_gp(&problem, Some(problem.random_init(0)), &opts);
    assert!(matches!(res, Err(GpError::NonConvergence { .. })));
}

#[test]
fn product_state_exceeds_ground_state() {
    // constant state: replacing 4π𝔞 by V̂(0)/2 raises the energy
    for v in [
        RadialPotential::square_well(3.0, 0.7).unwrap(),
        RadialPotential::gaussian(10.0, 0.2).unwrap(),
    ] {
        let (eight_pi_a, vhat) = born_comparison(&v).unwrap();
        let exact = GpProblem::torus(3, 8, eight_pi_a / 2.0).unwrap();
        let product = GpProblem::torus(3, 8, vhat / 2.0).unwrap();
        let e = |p: &GpProblem| GpState::new(p, p.default_init()).unwrap().energy.total;
        assert!(e(&product) > e(&exact));
    }
}

#[test]
fn two_dimensional_coupling() {
    let g = coupling_2d(100.0, (-50.0f64).exp() / 10.0).unwrap();
    assert!((g - 1.0).abs() < 1e-12);
    let mut last = 0.0;
    for a in [1e-6, 1e-4, 1e-3, 1e-2] {
        let g = coupling_2d(50.0, a).unwrap();
        assert!(g > last);
        last = g;
    }
    assert!(coupling_2d(50.0, 1e-300).unwrap() < 0.1);
    assert!(matches!(coupling_2d(100.0, 0.1), Err(GpError::DomainError(_))));
    assert!(coupling_2d(1.0, 1e-3).is_err());
}
