//! One function per command; each writes its result files into `out` and
//! returns a short summary for the manifest.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;

use gpbose::bogoliubov::{self, DispersionParams, EnumerationBudget};
use gpbose::fock::{
    self, excitation_map_check, excited_levels, exact_ground_state, symplectic_diagonalize, ModeSet, PairCoefficients,
    QuadraticHamiltonian, TruncatedFock,
};
use gpbose::gp::{minimize_gp, minimize_gp_rotating, GpProblem, GpState, MinimizeOptions};
use gpbose::ideal_gas::{self, TorusSpec};
use gpbose::io::Cell;
use gpbose::lattice::nonzero_shells;
use gpbose::scattering::{self, RadialPotential};
use gpbose::tdgp::{self, SnapshotData, TdgpConfig};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{write_manifest, Outputs};

/// Runs `config`, writing results and the manifest.
pub fn execute(config: &RunConfig) -> Result<Value, CliError> {
    let mut out = Outputs::new(&config.output_dir)?;
    let mode = config.mode.as_deref().unwrap_or("");
    let summary = match config.command {
        Command::Scatter => match mode {
            "dyson" => dyson(config, &mut out)?,
            "neumann" => neumann(config, &mut out)?,
            _ => scatter(config, &mut out)?,
        },
        Command::Ideal => match mode {
            "free-energy" => free_energy(config, &mut out)?,
            _ => ideal(config, &mut out)?,
        },
        Command::GpMin | Command::GpRotate => gp_min(config, &mut out)?,
        Command::Tdgp => tdgp_run(config, &mut out)?,
        Command::Bogo => match mode {
            "dispersion" => dispersion(config, &mut out)?,
            "energy" => energy(config, &mut out)?,
            "depletion" => depletion(config, &mut out)?,
            "spectrum" => spectrum(config, &mut out)?,
            "elambda" => elambda(config, &mut out)?,
            _ => rate(config, &mut out)?,
        },
        Command::Oracle => match mode {
            "excitation-map" => excitation_map(config, &mut out)?,
            _ => pair(config, &mut out)?,
        },
    };
    write_manifest(&out, config, summary.clone())?;
    Ok(summary)
}

fn potential(c: &RunConfig) -> Result<RadialPotential, CliError> {
    Ok(match c.str("potential") {
        "hard-core" => RadialPotential::hard_core(c.f64("R"))?,
        "square-well" => RadialPotential::square_well(c.f64("V0"), c.f64("R"))?,
        "gaussian" => RadialPotential::gaussian(c.f64("amplitude"), c.f64("width"))?,
        "shell" => RadialPotential::shell(c.f64("height"), c.f64("inner"), c.f64("outer"))?,
        _ => {
            let path = c.str("file");
            let file = File::open(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
            RadialPotential::from_csv(BufReader::new(file))?
        }
    })
}

fn scatter(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let v = potential(c)?;
    let n = c.usize("N");
    let scaled = if n > 1 { v.rescaled(n as f64) } else { v.clone() };
    let r_max = c.opt_f64("r_max").unwrap_or_else(|| scattering::default_r_max(&scaled));
    let sol = scattering::solve_zero_energy(&scaled, r_max, c.usize("grid"))?;
    let mut report = json!({
        "potential": v,
        "N": n,
        "scattering_length": sol.a,
        "residual": sol.residual,
        "r_max": sol.r_max,
        "nodes": sol.r.len(),
    });
    if n > 1 {
        let a1 = scattering::solve_zero_energy(&v, scattering::default_r_max(&v), c.usize("grid"))?.a;
        report["unscaled_length"] = a1.into();
        report["scaling_ratio"] = (sol.a * n as f64 / a1).into();
    }
    if !scaled.is_hard_core() {
        report["integral_length"] = scattering::scattering_length_integral(&scaled, &sol)?.into();
        let (eight_pi_a, v_hat) = (8.0 * PI * sol.a, scaled.fourier_zero()?);
        report["born"] = json!({ "eight_pi_a": eight_pi_a, "v_hat_0": v_hat, "strict": eight_pi_a < v_hat });
    }
    let rows: Vec<Vec<Cell>> = sol.rows().map(|r| r.iter().map(|&x| Cell::from(x)).collect()).collect();
    out.csv("profile.csv", &["r", "u", "f"], &rows)?;
    out.json("scatter.json", &report)?;
    Ok(json!({ "scattering_length": sol.a }))
}

fn dyson(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let sweep = scattering::dyson_random_trials(c.usize("trials"), c.seed)?;
    let rows: Vec<Vec<Cell>> = sweep
        .reports
        .iter()
        .enumerate()
        .map(|(i, r)| vec![i.into(), r.lhs.into(), r.rhs.into(), (r.satisfied as i64).into(), r.scattering_length.into()])
        .collect();
    out.csv("dyson.csv", &["trial", "lhs", "rhs", "satisfied", "scattering_length"], &rows)?;
    let summary = json!({
        "trials": sweep.trials,
        "violations": sweep.violations,
        "min_ratio": sweep.min_ratio,
        "seed": c.seed,
        "tolerance": scattering::DYSON_TOLERANCE,
    });
    out.json("dyson.json", &summary)?;
    Ok(summary)
}

fn neumann(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let v = potential(c)?;
    let sol = scattering::solve_neumann(&v, c.usize("N"), c.f64("ell0"), c.usize("grid"))?;
    let eta = scattering::eta_coefficients(&sol, c.f64("kappa_h"), c.f64("p_max"))?;
    let rows: Vec<Vec<Cell>> = (0..sol.r.len())
        .map(|i| vec![sol.r[i].into(), sol.f[i].into(), sol.eta_position[i].into()])
        .collect();
    out.csv("neumann_profile.csv", &["r", "f", "eta"], &rows)?;
    let rows: Vec<Vec<Cell>> = eta.by_momentum().into_iter().map(|(p, e)| vec![p.into(), e.into()]).collect();
    out.csv("eta.csv", &["p", "eta"], &rows)?;
    let summary = json!({
        "lambda": sol.lambda,
        "N": sol.n,
        "ell0": sol.ell0,
        "core": sol.core,
        "shells": eta.shells.len(),
    });
    out.json("neumann.json", &summary)?;
    Ok(summary)
}

/// `points` log-spaced values from `beta` to `beta_max`.
fn beta_sweep(c: &RunConfig) -> Vec<f64> {
    let (lo, points) = (c.f64("beta"), c.usize("points"));
    let hi = c.opt_f64("beta_max").unwrap_or(lo);
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect()
}

fn ideal(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let (rho, l) = (c.f64("rho"), c.f64("L"));
    let spec = TorusSpec::new(l);
    let mut rows = Vec::new();
    for beta in beta_sweep(c) {
        let st = ideal_gas::solve_mu(beta, rho, &spec)?;
        rows.push(vec![
            beta.into(),
            st.mu.into(),
            st.condensate_fraction().into(),
            st.rho0.into(),
            st.rho_plus.into(),
            ideal_gas::condensate_fraction_limit(beta, rho).into(),
        ]);
    }
    out.csv(
        "ideal.csv",
        &["beta", "mu", "condensate_fraction", "rho0", "rho_plus", "limit_fraction"],
        &rows,
    )?;
    let beta = c.f64("beta");
    let st = ideal_gas::solve_mu(beta, rho, &spec)?;
    let summary = json!({
        "beta": beta,
        "rho": rho,
        "L": l,
        "critical_density": ideal_gas::critical_density(beta),
        "critical_beta": ideal_gas::critical_beta(rho),
        "mu": st.mu,
        "condensate_fraction": st.condensate_fraction(),
        "extrapolated_fraction": ideal_gas::condensate_fraction_extrapolated(beta, rho, l)?,
        "limit_fraction": ideal_gas::condensate_fraction_limit(beta, rho),
    });
    out.json("ideal.json", &summary)?;
    Ok(summary)
}

fn free_energy(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let (n, a) = (c.f64("N"), c.f64("a"));
    let mut rows = Vec::new();
    for beta in beta_sweep(c) {
        let f = ideal_gas::free_energy_gp(beta, n, a)?;
        rows.push(vec![
            beta.into(),
            f.mu.into(),
            (f.rho0 / n).into(),
            f.ideal.into(),
            f.interaction.into(),
            f.total.into(),
        ]);
    }
    out.csv(
        "free_energy.csv",
        &["beta", "mu", "condensate_fraction", "free_energy_ideal", "interaction", "free_energy"],
        &rows,
    )?;
    Ok(json!({ "rows": rows.len(), "critical_beta": ideal_gas::critical_beta(n) }))
}

fn gp_problem(c: &RunConfig) -> Result<GpProblem, CliError> {
    let (dim, n, coupling) = (c.usize("dim"), c.usize("n"), 4.0 * PI * c.f64("a"));
    Ok(match c.str("geometry") {
        "torus" => GpProblem::torus(dim, n, coupling)?,
        _ => GpProblem::harmonic(dim, n, c.f64("half_width"), coupling)?,
    })
}

fn gp_min(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let mut problem = gp_problem(c)?;
    let opts = MinimizeOptions {
        tol: c.f64("tol"),
        residual_tol: None,
        max_iter: c.usize("max_iter"),
    };
    let init = (c.str("init") == "random").then(|| problem.random_init(c.seed));
    let sol = if c.command == Command::GpRotate {
        problem = problem.with_rotation([0.0, 0.0, c.f64("omega")])?;
        minimize_gp_rotating(&problem, init, &opts)?
    } else {
        minimize_gp(&problem, init, &opts)?
    };
    let rows: Vec<Vec<Cell>> = sol
        .energy_history
        .iter()
        .enumerate()
        .map(|(i, &e)| vec![i.into(), e.into()])
        .collect();
    out.csv("energy_history.csv", &["iteration", "energy"], &rows)?;
    out.field("ground_state", &problem.grid, &sol.state.phi, c.flag("field_csv"))?;
    let summary = json!({
        "coupling": problem.coupling,
        "omega": problem.omega,
        "energy": sol.state.energy,
        "norm": sol.state.norm,
        "chemical_potential": sol.chemical_potential,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "angular_momentum": sol.angular_momentum,
    });
    out.json("gp.json", &summary)?;
    Ok(summary)
}

fn tdgp_run(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let trap = gp_problem(c)?;
    let ground = minimize_gp(&trap, None, &MinimizeOptions::default())?.state;
    let scenario = c.str("scenario");
    let (problem, phi) = match scenario {
        "trap-release" => (GpProblem::new(trap.grid, vec![0.0; trap.grid.len()], trap.coupling)?, ground.phi),
        "phase-imprint" => {
            let k = c.f64("imprint");
            let phi = ground
                .phi
                .iter()
                .enumerate()
                .map(|(i, z)| z * Complex64::from_polar(1.0, k * trap.grid.position(i)[0]))
                .collect();
            (trap, phi)
        }
        _ => (trap, ground.phi),
    };
    let state = GpState::new(&problem, phi)?;
    let snap_dir = out.dir().join("snapshots");
    if snap_dir.exists() {
        std::fs::remove_dir_all(&snap_dir)?;
    }
    let steps = c.usize("steps");
    let config = TdgpConfig {
        dt: c.f64("dt"),
        n_steps: steps,
        snapshot_stride: c.opt_usize("stride").unwrap_or(steps),
        memory_cap: 0,
        spill_dir: Some(snap_dir),
    };
    let traj = tdgp::evolve(&state, &problem, &config)?;
    let mut rows = Vec::new();
    let mut listed = Vec::new();
    for (snap, diag) in traj.snapshots.iter().zip(&traj.diagnostics) {
        let width = tdgp::rms_width(&traj.grid, &snap.field()?);
        let SnapshotData::Disk(sidecar) = &snap.data else {
            unreachable!("memory_cap = 0 sends every snapshot to disk");
        };
        out.register(&sidecar.with_extension("bin"), "complex128-le", Some(snap.step), Some(snap.time))?;
        out.register(sidecar, "json", Some(snap.step), Some(snap.time))?;
        rows.push(vec![
            snap.step.into(),
            snap.time.into(),
            diag.norm.into(),
            diag.energy.into(),
            width.into(),
        ]);
        listed.push(json!({
            "step": snap.step,
            "time": snap.time,
            "field": out.files.last().map(|f| f.path.clone()),
        }));
    }
    out.csv("diagnostics.csv", &["step", "time", "norm", "energy", "rms_width"], &rows)?;
    let summary = json!({
        "scenario": scenario,
        "dt": config.dt,
        "steps": steps,
        "stride": config.snapshot_stride,
        "max_norm_drift": traj.max_norm_drift,
        "max_energy_drift": traj.max_energy_drift,
        "final_energy": traj.final_state.energy.total,
        "snapshots": listed,
    });
    out.json("trajectory.json", &summary)?;
    Ok(json!({
        "max_norm_drift": traj.max_norm_drift,
        "max_energy_drift": traj.max_energy_drift,
    }))
}

fn dispersion(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let a = c.f64("a");
    DispersionParams::new(a)?;
    let wanted = c.usize("shells");
    let mut max_m = 2 * wanted + 8;
    let shells = loop {
        let s = nonzero_shells(max_m);
        if s.len() >= wanted {
            break s;
        }
        max_m *= 2;
    };
    let rows: Vec<Vec<Cell>> = shells
        .iter()
        .take(wanted)
        .map(|&(m, _)| {
            let p2 = 4.0 * PI * PI * m as f64;
            vec![p2.sqrt().into(), bogoliubov::dispersion_p2(p2, a).into()]
        })
        .collect();
    out.csv("dispersion.csv", &["p", "epsilon"], &rows)?;
    Ok(json!({ "shells": rows.len() }))
}

fn energy(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let r = bogoliubov::ground_state_energy(c.usize("N") as u64, c.f64("a"), c.f64("cutoff"))?;
    out.json("energy.json", &r)?;
    Ok(json!({ "total": r.total }))
}

fn depletion(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let d = bogoliubov::depletion(c.f64("a"), c.f64("cutoff"))?;
    let report = json!({
        "a": c.f64("a"),
        "cutoff": c.f64("cutoff"),
        "depletion": d.value,
        "tail_estimate": d.tail_estimate,
    });
    out.json("depletion.json", &report)?;
    Ok(json!({ "depletion": d.value }))
}

fn spectrum(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let (a, zeta) = (c.f64("a"), c.f64("zeta"));
    let budget = EnumerationBudget {
        max_modes: c.usize("max_modes"),
        max_states: c.usize("max_states"),
    };
    let lines = bogoliubov::enumerate_spectrum(a, zeta, &budget)?;
    let rows: Vec<Vec<Cell>> = lines
        .iter()
        .map(|l| {
            let occ: Vec<String> = l
                .occupations
                .iter()
                .map(|o| format!("({} {} {})x{}", o.k[0], o.k[1], o.k[2], o.n))
                .collect();
            vec![
                l.energy.into(),
                (l.degeneracy as i64).into(),
                (l.excitation_count() as i64).into(),
                Cell::Text(occ.join(" ")),
            ]
        })
        .collect();
    out.csv("spectrum.csv", &["energy", "degeneracy", "excitations", "representative"], &rows)?;
    let summary = json!({
        "a": a,
        "zeta": zeta,
        "modes": bogoliubov::spectrum_modes(a, zeta).len(),
        "lines": lines.len(),
        "states": lines.iter().map(|l| l.degeneracy).sum::<u64>(),
        "caveat": bogoliubov::SPECTRUM_CAVEAT,
    });
    out.json("spectrum.json", &summary)?;
    Ok(summary)
}

fn elambda(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let m_max = c.usize("m_max");
    let e = bogoliubov::e_lambda(m_max, c.usize("levels"))?;
    let rows: Vec<Vec<Cell>> = bogoliubov::cube_partial_sums(m_max)
        .into_iter()
        .enumerate()
        .map(|(m, s)| vec![m.into(), s.into()])
        .collect();
    out.csv("cube_partial_sums.csv", &["M", "S"], &rows)?;
    out.json("elambda.json", &e)?;
    Ok(json!({ "value": e.value, "uncertainty": e.uncertainty }))
}

fn rate(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let bound = bogoliubov::condensation_rate_bound(c.f64("zeta"), c.f64("C"))?;
    let report = json!({
        "zeta": c.f64("zeta"),
        "C": c.f64("C"),
        "bound": bound,
        "caveat": bogoliubov::RATE_CAVEAT,
    });
    out.json("rate.json", &report)?;
    Ok(json!({ "bound": bound }))
}

fn pair(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let (d, b) = (c.f64("D"), c.f64("B"));
    let h = QuadraticHamiltonian::new(vec![PairCoefficients { d, b }], 0.0)?;
    let diag = symplectic_diagonalize(&h)?;
    let space = TruncatedFock::product(ModeSet::pairs(&[[1, 0, 0]], false)?, c.usize("nmax") as u32)?;
    let ground = exact_ground_state(&h, &space)?;
    let levels = excited_levels(&h, &space, c.usize("levels"))?;
    let eps = diag.pairs[0].eps;
    // level k of a single pair has degeneracy k + 1
    let predicted: Vec<f64> = (0..)
        .flat_map(|k: usize| std::iter::repeat_n(h.shift + diag.ground_shift + k as f64 * eps, k + 1))
        .take(levels.len())
        .collect();
    let rows: Vec<Vec<Cell>> = levels
        .iter()
        .zip(&predicted)
        .enumerate()
        .map(|(i, (&x, &p))| vec![i.into(), x.into(), p.into(), (x - p).into()])
        .collect();
    out.csv("levels.csv", &["index", "exact", "symplectic", "difference"], &rows)?;
    let gap = levels[1] - levels[0];
    let n_plus = diag.pairs[0].ground_occupation();
    let report = json!({
        "D": d,
        "B": b,
        "n_max": space.n_max,
        "dimension": ground.dimension,
        "exact_ground_energy": ground.energy,
        "symplectic_ground_energy": h.shift + diag.ground_shift,
        "exact_gap": gap,
        "symplectic_eps": eps,
        "gap_difference": gap - eps,
        "exact_n_plus": ground.n_plus,
        "symplectic_n_plus": n_plus,
        "n_plus_difference": ground.n_plus - n_plus,
        "tau": diag.pairs[0].tau,
        "boundary_weight": ground.boundary_weight,
        "residual": ground.residual,
        "truncation_tolerance": fock::TRUNCATION_TOLERANCE,
    });
    out.json("pair.json", &report)?;
    Ok(json!({ "exact_gap": gap, "symplectic_eps": eps, "gap_difference": gap - eps }))
}

fn excitation_map(c: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let momenta = [[1, 0, 0], [0, 1, 0]];
    let modes = ModeSet::pairs(&momenta[..c.usize("pairs")], true)?;
    let report = excitation_map_check(c.usize("N") as u32, &modes)?;
    out.json("excitation_map.json", &report)?;
    Ok(json!({
        "identities_checked": report.identities_checked,
        "max_deviation": report.max_deviation,
    }))
}
