//! `gpbose`: command-line driver for the gpbose numerics.
//!
//! Every subcommand takes `--key value` pairs using the same keys as a
//! config file, so `gpbose scatter --potential hard-core --R 0.5` and
//! `gpbose run scatter.conf` with
//!
//! ```text
//! command = scatter
//! potential = hard-core
//! R = 0.5
//! ```
//!
//! do the same thing. Exit codes: 0 success, 2 configuration, 3 numerical
//! non-convergence, 4 I/O.

mod config;
mod error;
mod output;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "gpbose", version, about = "Dilute Bose gases in the Gross-Pitaevskii regime")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Params {
    /// `--key value` pairs (keys as in config files; `-` and `_` are interchangeable)
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    params: Vec<String>,
}

#[derive(Args)]
struct ModeParams {
    mode: String,
    #[command(flatten)]
    params: Params,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scattering length, Dyson's lemma sweep (mode dyson), Neumann problem (mode neumann)
    Scatter(Params),
    /// Ideal Bose gas on a torus (mode fraction or free-energy)
    Ideal(Params),
    /// GP ground state
    #[command(name = "gp-min")]
    GpMin(Params),
    /// GP ground state in a rotating trap
    #[command(name = "gp-rotate")]
    GpRotate(Params),
    /// Time-dependent GP evolution
    Tdgp(Params),
    /// Bogoliubov quantities: dispersion, energy, depletion, spectrum, elambda, rate
    Bogo(ModeParams),
    /// Fock-space oracle: pair, excitation-map
    Oracle(ModeParams),
    /// Run a config file (JSON or key = value), or repeat a run from its manifest.json
    Run {
        config: PathBuf,
        /// Overrides the file's `output_dir`
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

/// `--key value` list to a raw config map.
fn params_map(command: &str, mode: Option<&str>, params: &[String]) -> Result<Map<String, Value>, CliError> {
    let mut map = Map::new();
    map.insert("command".into(), command.into());
    if let Some(m) = mode {
        map.insert("mode".into(), m.into());
    }
    let mut it = params.iter();
    while let Some(flag) = it.next() {
        let parse_err = |message: String| CliError::Parse {
            line: None,
            key: Some(flag.clone()),
            message,
        };
        let Some(raw) = flag.strip_prefix("--") else {
            return Err(parse_err("expected --key".into()));
        };
        let (key, value) = match raw.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| parse_err("missing value".into()))?;
                (raw.to_string(), v.clone())
            }
        };
        let key = key.replace('-', "_");
        if map.insert(key.clone(), config::scalar(&value)).is_some() {
            return Err(parse_err(format!("{key} given twice")));
        }
    }
    Ok(map)
}

fn load(cmd: Cmd) -> Result<RunConfig, CliError> {
    let raw = match cmd {
        Cmd::Run { config, output_dir } => {
            let mut cfg = config::load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            return Ok(cfg);
        }
        Cmd::Scatter(p) => params_map("scatter", None, &p.params)?,
        Cmd::Ideal(p) => params_map("ideal", None, &p.params)?,
        Cmd::GpMin(p) => params_map("gp-min", None, &p.params)?,
        Cmd::GpRotate(p) => params_map("gp-rotate", None, &p.params)?,
        Cmd::Tdgp(p) => params_map("tdgp", None, &p.params)?,
        Cmd::Bogo(m) => params_map("bogo", Some(&m.mode), &m.params.params)?,
        Cmd::Oracle(m) => params_map("oracle", Some(&m.mode), &m.params.params)?,
    };
    config::validate(raw)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(cli.command).map(config::apply_env).and_then(|cfg| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| CliError::Input(e.to_string()))?;
        run::execute(&cfg).map(|summary| (cfg, summary))
    });
    match result {
        Ok((cfg, summary)) => {
            let done = serde_json::json!({
                "status": "ok",
                "output_dir": cfg.output_dir.display().to_string(),
                "manifest": output::MANIFEST,
                "summary": summary,
            });
            let _ = writeln!(std::io::stdout(), "{}", gpbose::io::to_json_string(&done).unwrap_or_default().trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{}", gpbose::io::to_json_string(&e.to_json()).unwrap_or_default().trim_end());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
