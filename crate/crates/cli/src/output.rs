//! Result files of one run and the manifest that lists them.

use std::fs;
use std::path::{Path, PathBuf};

use gpbose::grid::Grid;
use gpbose::io::{self, Cell};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub format: &'static str,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
}

pub struct Outputs {
    dir: PathBuf,
    pub files: Vec<FileEntry>,
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Records a file already written under the output directory.
    pub fn register(&mut self, path: &Path, format: &'static str, step: Option<usize>, time: Option<f64>) -> Result<(), CliError> {
        let rel = path.strip_prefix(&self.dir).unwrap_or(path);
        let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        self.files.push(FileEntry {
            path: rel.join("/"),
            format,
            sha256: sha256_file(path)?,
            step,
            time,
        });
        Ok(())
    }

    /// Tables without rows are not written.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<(), CliError> {
        if rows.is_empty() {
            return Ok(());
        }
        let path = self.dir.join(name);
        io::write_csv(&path, header, rows)?;
        self.register(&path, "csv", None, None)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        io::write_json(&path, value)?;
        self.register(&path, "json", None, None)
    }

    /// Binary field plus sidecar, and optionally the CSV form.
    pub fn field(&mut self, stem: &str, grid: &Grid, phi: &[Complex64], csv: bool) -> Result<(), CliError> {
        let (bin, sidecar) = io::write_field_binary(self.dir.join(stem), grid, phi)?;
        self.register(&bin, "complex128-le", None, None)?;
        self.register(&sidecar, "json", None, None)?;
        if csv {
            let path = self.dir.join(format!("{stem}.csv"));
            io::write_field_csv(&path, grid, phi)?;
            self.register(&path, "csv", None, None)?;
        }
        Ok(())
    }
}

/// Every tolerance and budget constant that shapes the numbers.
pub fn tolerances() -> Value {
    use gpbose::{bogoliubov, fock, gp, ideal_gas, scattering};
    json!({
        "scattering.asymptotic_tolerance": scattering::ASYMPTOTIC_TOLERANCE,
        "scattering.min_grid_points": scattering::MIN_GRID_POINTS,
        "scattering.gaussian_truncation": scattering::GAUSSIAN_TRUNCATION,
        "scattering.dyson_tolerance": scattering::DYSON_TOLERANCE,
        "scattering.neumann_eigen_tolerance": scattering::EIGEN_TOLERANCE,
        "ideal_gas.density_tolerance": ideal_gas::DENSITY_TOLERANCE,
        "ideal_gas.tail_tolerance": ideal_gas::TAIL_TOLERANCE,
        "ideal_gas.zeta_terms": ideal_gas::ZETA_TERMS,
        "gp.confinement_margin": gp::CONFINEMENT_MARGIN,
        "bogoliubov.degeneracy_tolerance": bogoliubov::DEGENERACY_TOLERANCE,
        "bogoliubov.e_lambda_m_max": bogoliubov::E_LAMBDA_M_MAX,
        "bogoliubov.e_lambda_levels": bogoliubov::E_LAMBDA_LEVELS,
        "fock.truncation_tolerance": fock::TRUNCATION_TOLERANCE,
        "fock.identity_tolerance": fock::IDENTITY_TOLERANCE,
        "fock.lanczos_tolerance": fock::LANCZOS_TOLERANCE,
        "fock.dense_limit": fock::DENSE_LIMIT,
        "fock.basis_budget": fock::DEFAULT_BUDGET,
    })
}

/// SHA-256 of the compact canonical config (keys sorted).
pub fn config_hash(config: &RunConfig) -> String {
    let text = serde_json::to_string(&config.canonical()).expect("json values serialize");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `manifest.json`; `gpbose run manifest.json` repeats the run.
pub fn write_manifest(out: &Outputs, config: &RunConfig, summary: Value) -> Result<PathBuf, CliError> {
    let mut m = Map::new();
    m.insert("tool".into(), "gpbose".into());
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("config".into(), config.canonical());
    m.insert("config_sha256".into(), config_hash(config).into());
    m.insert("tolerances".into(), tolerances());
    m.insert("files".into(), serde_json::to_value(&out.files).expect("entries serialize"));
    m.insert("summary".into(), summary);
    let path = out.dir.join(MANIFEST);
    io::write_json(&path, &Value::Object(m))?;
    Ok(path)
}
