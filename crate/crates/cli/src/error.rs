use serde::Serialize;
use serde_json::{json, Value};

use gpbose::bogoliubov::BogoliubovError;
use gpbose::fock::FockError;
use gpbose::gp::GpError;
use gpbose::ideal_gas::IdealGasError;
use gpbose::scattering::ScatteringError;
use gpbose::tdgp::TdgpError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl Violation {
    pub fn new(key: &str, message: &str) -> Self {
        Self {
            key: key.to_string(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error{}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), key.as_ref().map(|k| format!(" (key {k})")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },
    #[error("invalid configuration: {}", .0.iter().map(|v| format!("{}: {}", v.key, v.message)).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
    /// Inputs the numerics refuse (unstable forms, oversized budgets, ...).
    #[error("rejected input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) | CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Validation(_) => "validation",
            CliError::Input(_) => "input",
            CliError::Numerical(_) => "non-convergence",
            CliError::Io(_) => "io",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "status": "error",
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            CliError::Validation(list) => v["violations"] = json!(list),
            CliError::Parse { line, key, .. } => {
                v["line"] = json!(line);
                v["key"] = json!(key);
            }
            _ => {}
        }
        v
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ScatteringError> for CliError {
    fn from(e: ScatteringError) -> Self {
        match e {
            ScatteringError::NonConvergence(_)
            | ScatteringError::QuadratureFailure(_)
            | ScatteringError::EigensolveFailure(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<IdealGasError> for CliError {
    fn from(e: IdealGasError) -> Self {
        match e {
            IdealGasError::BracketFailure(_) => CliError::Numerical(e.to_string()),
            IdealGasError::InvalidInput(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        match e {
            GpError::NonConvergence { .. } | GpError::DivergentEnergy(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<TdgpError> for CliError {
    fn from(e: TdgpError) -> Self {
        match e {
            TdgpError::Gp(g) => g.into(),
            TdgpError::InvalidConfig(_) => CliError::Input(e.to_string()),
            TdgpError::Io(io) => io.into(),
        }
    }
}

impl From<BogoliubovError> for CliError {
    fn from(e: BogoliubovError) -> Self {
        match e {
            BogoliubovError::NoConvergence(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::TruncationWarning { .. } | FockError::NoConvergence { .. } | FockError::IdentityViolation { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}
