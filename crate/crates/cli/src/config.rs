//! Run configurations: JSON or `key = value` text, validated against a
//! per-command schema. Every violation is collected before reporting.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{Map, Number, Value};

use crate::error::{CliError, Violation};

pub const DEFAULT_OUTPUT_DIR: &str = "gpbose-out";
pub const OUTPUT_DIR_ENV: &str = "GPBOSE_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Scatter,
    Ideal,
    GpMin,
    GpRotate,
    Tdgp,
    Bogo,
    Oracle,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Scatter,
        Command::Ideal,
        Command::GpMin,
        Command::GpRotate,
        Command::Tdgp,
        Command::Bogo,
        Command::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Scatter => "scatter",
            Command::Ideal => "ideal",
            Command::GpMin => "gp-min",
            Command::GpRotate => "gp-rotate",
            Command::Tdgp => "tdgp",
            Command::Bogo => "bogo",
            Command::Oracle => "oracle",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Allowed modes; the first is the default.
    pub fn modes(self) -> &'static [&'static str] {
        match self {
            Command::Scatter => &["length", "dyson", "neumann"],
            Command::Ideal => &["fraction", "free-energy"],
            Command::Bogo => &["dispersion", "energy", "depletion", "spectrum", "elambda", "rate"],
            Command::Oracle => &["pair", "excitation-map"],
            Command::GpMin | Command::GpRotate | Command::Tdgp => &[],
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Positive,
    NonNegative,
    Real,
    Nonzero,
    Count { min: u64, max: u64 },
    Choice(&'static [&'static str]),
    Path,
    Flag,
}

impl Kind {
    fn describe(self) -> String {
        match self {
            Kind::Positive => "a positive number".into(),
            Kind::NonNegative => "a non-negative number".into(),
            Kind::Real => "a finite number".into(),
            Kind::Nonzero => "a finite nonzero number".into(),
            Kind::Count { min, max: u64::MAX } => format!("an integer ≥ {min}"),
            Kind::Count { min, max } => format!("an integer in {min}..={max}"),
            Kind::Choice(opts) => format!("one of {}", opts.join(", ")),
            Kind::Path => "a path".into(),
            Kind::Flag => "true or false".into(),
        }
    }

    fn check(self, v: &Value) -> Option<Value> {
        let num = v.as_f64().filter(|x| x.is_finite());
        match self {
            Kind::Positive => num.filter(|&x| x > 0.0).map(Value::from),
            Kind::NonNegative => num.filter(|&x| x >= 0.0).map(Value::from),
            Kind::Real => num.map(Value::from),
            Kind::Nonzero => num.filter(|&x| x != 0.0).map(Value::from),
            Kind::Count { min, max } => {
                let n = v.as_u64().or_else(|| num.filter(|x| x.fract() == 0.0 && *x >= 0.0 && *x < 2f64.powi(53)).map(|x| x as u64));
                n.filter(|n| (min..=max).contains(n)).map(Value::from)
            }
            Kind::Choice(opts) => v.as_str().filter(|s| opts.contains(s)).map(Value::from),
            Kind::Path => v.as_str().filter(|s| !s.is_empty()).map(Value::from),
            Kind::Flag => v.as_bool().map(Value::from),
        }
    }
}

#[derive(Clone, Copy)]
struct Key {
    name: &'static str,
    kind: Kind,
    /// `None` means required.
    default: Option<Fallback>,
}

#[derive(Clone, Copy)]
enum Fallback {
    Num(f64),
    Int(u64),
    Text(&'static str),
    Bool(bool),
    /// Optional with no value.
    Absent,
}

const fn req(name: &'static str, kind: Kind) -> Key {
    Key { name, kind, default: None }
}

const fn opt(name: &'static str, kind: Kind, default: Fallback) -> Key {
    Key {
        name,
        kind,
        default: Some(default),
    }
}

const fn count(min: u64) -> Kind {
    Kind::Count { min, max: u64::MAX }
}

const POTENTIALS: &[&str] = &["hard-core", "square-well", "gaussian", "shell", "tabulated"];
const GEOMETRIES: &[&str] = &["harmonic", "torus"];

/// Keys each potential kind needs; the rest of [`POTENTIAL_KEYS`] must be absent.
fn potential_keys(kind: &str) -> &'static [&'static str] {
    match kind {
        "hard-core" => &["R"],
        "square-well" => &["V0", "R"],
        "gaussian" => &["amplitude", "width"],
        "shell" => &["height", "inner", "outer"],
        _ => &["file"],
    }
}

const POTENTIAL_KEYS: [Key; 9] = [
    req("potential", Kind::Choice(POTENTIALS)),
    opt("R", Kind::Positive, Fallback::Absent),
    opt("V0", Kind::Positive, Fallback::Absent),
    opt("amplitude", Kind::Positive, Fallback::Absent),
    opt("width", Kind::Positive, Fallback::Absent),
    opt("height", Kind::NonNegative, Fallback::Absent),
    opt("inner", Kind::NonNegative, Fallback::Absent),
    opt("outer", Kind::Positive, Fallback::Absent),
    opt("file", Kind::Path, Fallback::Absent),
];

const GRID_KEYS: [Key; 6] = [
    opt("geometry", Kind::Choice(GEOMETRIES), Fallback::Text("harmonic")),
    opt("dim", Kind::Count { min: 2, max: 3 }, Fallback::Int(2)),
    opt("n", Kind::Count { min: 4, max: 512 }, Fallback::Int(64)),
    req("a", Kind::NonNegative),
    opt("half_width", Kind::Positive, Fallback::Num(6.0)),
    opt("field_csv", Kind::Flag, Fallback::Bool(false)),
];

const MINIMIZE_KEYS: [Key; 3] = [
    opt("init", Kind::Choice(&["default", "random"]), Fallback::Text("default")),
    opt("tol", Kind::Positive, Fallback::Num(1e-10)),
    opt("max_iter", count(1), Fallback::Int(5000)),
];

fn schema(command: Command, mode: &str) -> Vec<Key> {
    let mut keys = Vec::new();
    match (command, mode) {
        (Command::Scatter, "length") => {
            keys.extend(POTENTIAL_KEYS);
            keys.extend([
                opt("N", count(1), Fallback::Int(1)),
                opt("r_max", Kind::Positive, Fallback::Absent),
                opt("grid", count(512), Fallback::Int(4096)),
            ]);
        }
        (Command::Scatter, "dyson") => keys.push(opt("trials", count(1), Fallback::Int(1000))),
        (Command::Scatter, "neumann") => {
            keys.extend(POTENTIAL_KEYS);
            keys.extend([
                opt("N", count(1), Fallback::Int(50)),
                opt("ell0", Kind::Positive, Fallback::Num(gpbose::scattering::DEFAULT_ELL0)),
                opt("grid", count(16), Fallback::Int(4000)),
                opt("kappa_h", Kind::Positive, Fallback::Num(1.0)),
                opt("p_max", Kind::Positive, Fallback::Num(2.0 * std::f64::consts::PI * 20.0)),
            ]);
        }
        (Command::Ideal, "fraction") => keys.extend([
            req("beta", Kind::Positive),
            req("rho", Kind::Positive),
            opt("L", Kind::Positive, Fallback::Num(16.0)),
            opt("beta_max", Kind::Positive, Fallback::Absent),
            opt("points", count(1), Fallback::Int(1)),
        ]),
        (Command::Ideal, "free-energy") => keys.extend([
            req("beta", Kind::Positive),
            req("N", Kind::Positive),
            opt("a", Kind::NonNegative, Fallback::Num(0.0)),
            opt("beta_max", Kind::Positive, Fallback::Absent),
            opt("points", count(1), Fallback::Int(1)),
        ]),
        (Command::GpMin, _) => {
            keys.extend(GRID_KEYS);
            keys.extend(MINIMIZE_KEYS);
        }
        (Command::GpRotate, _) => {
            keys.extend(GRID_KEYS);
            keys.extend(MINIMIZE_KEYS);
            keys.push(req("omega", Kind::Real));
        }
        (Command::Tdgp, _) => {
            keys.extend(GRID_KEYS);
            keys.extend([
                req("dt", Kind::Nonzero),
                req("steps", count(1)),
                opt("stride", count(1), Fallback::Absent),
                opt(
                    "scenario",
                    Kind::Choice(&["stationary", "trap-release", "phase-imprint"]),
                    Fallback::Text("stationary"),
                ),
                opt("imprint", Kind::Real, Fallback::Num(1.0)),
            ]);
        }
        (Command::Bogo, "dispersion") => keys.extend([req("a", Kind::NonNegative), opt("shells", count(0), Fallback::Int(10))]),
        (Command::Bogo, "energy") => keys.extend([
            req("N", count(2)),
            req("a", Kind::NonNegative),
            opt("cutoff", Kind::Positive, Fallback::Num(32.0 * std::f64::consts::PI)),
        ]),
        (Command::Bogo, "depletion") => keys.extend([
            req("a", Kind::NonNegative),
            opt("cutoff", Kind::Positive, Fallback::Num(32.0 * std::f64::consts::PI)),
        ]),
        (Command::Bogo, "spectrum") => keys.extend([
            req("a", Kind::NonNegative),
            req("zeta", Kind::Positive),
            opt("max_modes", count(1), Fallback::Int(20_000)),
            opt("max_states", count(1), Fallback::Int(5_000_000)),
        ]),
        (Command::Bogo, "elambda") => keys.extend([
            opt("m_max", count(8), Fallback::Int(gpbose::bogoliubov::E_LAMBDA_M_MAX as u64)),
            opt("levels", count(2), Fallback::Int(gpbose::bogoliubov::E_LAMBDA_LEVELS as u64)),
        ]),
        (Command::Bogo, "rate") => keys.extend([req("zeta", Kind::NonNegative), req("C", Kind::NonNegative)]),
        (Command::Oracle, "pair") => keys.extend([
            req("D", Kind::Positive),
            req("B", Kind::Real),
            opt("nmax", count(1), Fallback::Int(60)),
            opt("levels", count(2), Fallback::Int(6)),
        ]),
        (Command::Oracle, "excitation-map") => keys.extend([
            req("N", Kind::Count { min: 1, max: 6 }),
            opt("pairs", Kind::Count { min: 1, max: 2 }, Fallback::Int(1)),
        ]),
        _ => unreachable!("mode validated before schema lookup"),
    }
    keys
}

/// A validated run: command, mode and the full parameter set with defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub mode: Option<String>,
    pub params: BTreeMap<String, Value>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub threads: usize,
}

impl RunConfig {
    pub fn f64(&self, key: &str) -> f64 {
        self.params[key].as_f64().expect("validated number")
    }

    pub fn opt_f64(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(Value::as_f64)
    }

    pub fn usize(&self, key: &str) -> usize {
        self.params[key].as_u64().expect("validated integer") as usize
    }

    pub fn opt_usize(&self, key: &str) -> Option<usize> {
        self.params.get(key).and_then(Value::as_u64).map(|n| n as usize)
    }

    pub fn str(&self, key: &str) -> &str {
        self.params[key].as_str().expect("validated string")
    }

    pub fn flag(&self, key: &str) -> bool {
        self.params[key].as_bool().expect("validated flag")
    }

    /// Everything needed to reproduce the run, excluding the output location.
    pub fn canonical(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), self.command.name().into());
        if let Some(mode) = &self.mode {
            m.insert("mode".into(), mode.clone().into());
        }
        m.insert("seed".into(), self.seed.into());
        m.insert("threads".into(), self.threads.into());
        for (k, v) in &self.params {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }
}

/// Text scalar as JSON: numbers and booleans are typed, anything else is a string.
pub fn scalar(text: &str) -> Value {
    let t = text.trim();
    if let Some(s) = t.strip_prefix('"').and_then(|s| s.strip_suffix('"')) {
        return Value::from(s);
    }
    match serde_json::from_str::<Value>(t) {
        Ok(v @ (Value::Number(_) | Value::Bool(_))) => v,
        _ => Value::from(t),
    }
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Map<String, Value>, CliError> {
    let mut out = Map::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Parse {
                line: Some(i + 1),
                key: None,
                message: format!("expected key = value, got {line:?}"),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Parse {
                line: Some(i + 1),
                key: None,
                message: "empty key".into(),
            });
        }
        if out.insert(key.to_string(), scalar(value)).is_some() {
            return Err(CliError::Parse {
                line: Some(i + 1),
                key: Some(key.to_string()),
                message: "duplicate key".into(),
            });
        }
    }
    Ok(out)
}

/// JSON object, or a manifest written by a previous run (its `config` is reused).
pub fn parse_json(text: &str) -> Result<Map<String, Value>, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: Some(e.line()),
        key: None,
        message: e.to_string(),
    })?;
    let Value::Object(mut map) = value else {
        return Err(CliError::Parse {
            line: None,
            key: None,
            message: "top level must be an object".into(),
        });
    };
    if map.get("tool").and_then(Value::as_str) == Some("gpbose") {
        return match map.remove("config") {
            Some(Value::Object(c)) => Ok(c),
            _ => Err(CliError::Parse {
                line: None,
                key: Some("config".into()),
                message: "manifest has no config object".into(),
            }),
        };
    }
    if let Some(params) = map.remove("parameters") {
        let Value::Object(params) = params else {
            return Err(CliError::Parse {
                line: None,
                key: Some("parameters".into()),
                message: "must be an object".into(),
            });
        };
        for (k, v) in params {
            if map.contains_key(&k) {
                return Err(CliError::Parse {
                    line: None,
                    key: Some(k),
                    message: "given both at top level and under parameters".into(),
                });
            }
            map.insert(k, v);
        }
    }
    Ok(map)
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let map = if text.trim_start().starts_with('{') {
        parse_json(&text)?
    } else {
        parse_key_values(&text)?
    };
    validate(map)
}

fn number_value(x: f64) -> Value {
    Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// Checks `raw` against the schema of its command, reporting every problem.
pub fn validate(mut raw: Map<String, Value>) -> Result<RunConfig, CliError> {
    let mut errs: Vec<Violation> = Vec::new();
    let command = match raw.remove("command") {
        None => {
            errs.push(Violation::new("command", "missing"));
            None
        }
        Some(v) => {
            let c = v.as_str().and_then(Command::parse);
            if c.is_none() {
                let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
                errs.push(Violation::new("command", &format!("got {v}, expected one of {}", names.join(", "))));
            }
            c
        }
    };
    let mode = match (command, raw.remove("mode")) {
        (Some(c), m) if !c.modes().is_empty() => match m {
            None => Some(c.modes()[0].to_string()),
            Some(v) => match v.as_str().filter(|s| c.modes().contains(s)) {
                Some(s) => Some(s.to_string()),
                None => {
                    errs.push(Violation::new(
                        "mode",
                        &format!("got {v}, expected one of {}", c.modes().join(", ")),
                    ));
                    None
                }
            },
        },
        (Some(c), Some(_)) => {
            errs.push(Violation::new("mode", &format!("{} takes no mode", c.name())));
            None
        }
        _ => None,
    };

    let mut take = |key: &str, kind: Kind, errs: &mut Vec<Violation>| -> Option<Value> {
        let v = raw.remove(key)?;
        let checked = kind.check(&v);
        if checked.is_none() {
            errs.push(Violation::new(key, &format!("got {v}, expected {}", kind.describe())));
        }
        checked
    };
    let output_dir = take("output_dir", Kind::Path, &mut errs)
        .and_then(|v| v.as_str().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let seed = take("seed", count(0), &mut errs).and_then(|v| v.as_u64()).unwrap_or(0);
    let threads = take("threads", Kind::Count { min: 1, max: 1024 }, &mut errs)
        .and_then(|v| v.as_u64())
        .unwrap_or(1) as usize;

    let mut params = BTreeMap::new();
    let command_ok = command.is_some() && (mode.is_some() || command.is_some_and(|c| c.modes().is_empty()));
    if let (Some(c), true) = (command, command_ok) {
        for key in schema(c, mode.as_deref().unwrap_or("")) {
            match take(key.name, key.kind, &mut errs) {
                Some(v) => {
                    params.insert(key.name.to_string(), v);
                }
                None if errs.iter().any(|e| e.key == key.name) => {}
                None => match key.default {
                    None => errs.push(Violation::new(key.name, "missing")),
                    Some(Fallback::Num(x)) => {
                        params.insert(key.name.to_string(), number_value(x));
                    }
                    Some(Fallback::Int(n)) => {
                        params.insert(key.name.to_string(), n.into());
                    }
                    Some(Fallback::Text(s)) => {
                        params.insert(key.name.to_string(), s.into());
                    }
                    Some(Fallback::Bool(b)) => {
                        params.insert(key.name.to_string(), b.into());
                    }
                    Some(Fallback::Absent) => {}
                },
            }
        }
        for key in raw.keys() {
            errs.push(Violation::new(key, "unknown key"));
        }
        cross_check(c, mode.as_deref(), &params, &mut errs);
    }
    if !errs.is_empty() {
        return Err(CliError::Validation(errs));
    }
    Ok(RunConfig {
        command: command.expect("checked"),
        mode,
        params,
        output_dir,
        seed,
        threads,
    })
}

/// Constraints that involve more than one key.
fn cross_check(command: Command, mode: Option<&str>, p: &BTreeMap<String, Value>, errs: &mut Vec<Violation>) {
    let num = |k: &str| p.get(k).and_then(Value::as_f64);
    if let Some(kind) = p.get("potential").and_then(Value::as_str) {
        let needed = potential_keys(kind);
        for key in POTENTIAL_KEYS.iter().skip(1).map(|k| k.name) {
            let given = p.contains_key(key);
            if needed.contains(&key) && !given && !errs.iter().any(|e| e.key == key) {
                errs.push(Violation::new(key, &format!("required for potential {kind}")));
            }
            if !needed.contains(&key) && given {
                errs.push(Violation::new(key, &format!("does not apply to potential {kind}")));
            }
        }
        if let (Some(i), Some(o)) = (num("inner"), num("outer")) {
            if i >= o {
                errs.push(Violation::new("outer", "must exceed inner"));
            }
        }
    }
    if let (Some(lo), Some(hi)) = (num("beta"), num("beta_max")) {
        if hi < lo {
            errs.push(Violation::new("beta_max", "must be at least beta"));
        }
    }
    if num("beta_max").is_none() && p.get("points").and_then(Value::as_u64).is_some_and(|n| n > 1) {
        errs.push(Violation::new("points", "a sweep needs beta_max"));
    }
    let geometry = p.get("geometry").and_then(Value::as_str);
    if command == Command::GpRotate && geometry == Some("torus") {
        errs.push(Violation::new("geometry", "rotation needs the harmonic trap"));
    }
    if command == Command::Tdgp && geometry == Some("torus") && p.get("scenario").and_then(Value::as_str) == Some("trap-release") {
        errs.push(Violation::new("scenario", "trap-release needs the harmonic trap"));
    }
    if let (Some(n), Some(stride)) = (p.get("steps").and_then(Value::as_u64), p.get("stride").and_then(Value::as_u64)) {
        if stride > n {
            errs.push(Violation::new("stride", "must not exceed steps"));
        }
    }
    if command == Command::Bogo && matches!(mode, Some("energy" | "depletion")) {
        if let Some(c) = num("cutoff") {
            if c < 16.0 * std::f64::consts::PI {
                errs.push(Violation::new("cutoff", "must be at least 16π"));
            }
        }
    }
    if command == Command::Oracle && mode == Some("pair") {
        if let (Some(d), Some(b)) = (num("D"), num("B")) {
            if b.abs() >= d {
                errs.push(Violation::new("B", "stability needs |B| < D"));
            }
        }
    }
}

/// Applies `GPBOSE_OUTPUT_DIR` when set and non-empty.
pub fn apply_env(mut config: RunConfig) -> RunConfig {
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
        config.output_dir = PathBuf::from(dir);
    }
    config
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(text: &str) -> Result<RunConfig, CliError> {
        validate(parse_key_values(text).unwrap())
    }

    #[test]
    fn scalars_are_typed() {
        assert_eq!(scalar("0.5"), Value::from(0.5));
        assert_eq!(scalar("60"), Value::from(60));
        assert_eq!(scalar("true"), Value::from(true));
        assert_eq!(scalar("hard-core"), Value::from("hard-core"));
        assert_eq!(scalar("\"12\""), Value::from("12"));
    }

    #[test]
    fn defaults_are_filled() {
        let c = kv("command = bogo\nmode = dispersion\na = 0.1").unwrap();
        assert_eq!(c.usize("shells"), 10);
        assert_eq!(c.seed, 0);
        assert_eq!(c.threads, 1);
    }

    #[test]
    fn mode_defaults_to_first() {
        let c = kv("command = oracle\nD = 2\nB = 1").unwrap();
        assert_eq!(c.mode.as_deref(), Some("pair"));
    }

    #[test]
    fn every_problem_is_reported() {
        let Err(CliError::Validation(v)) = kv("command = scatter\npotential = square-well\nR = -1\nfoo = 3\nwidth = 2") else {
            panic!("expected validation failure");
        };
        let keys: Vec<&str> = v.iter().map(|e| e.key.as_str()).collect();
        for k in ["R", "foo", "V0", "width"] {
            assert!(keys.contains(&k), "{k} missing from {keys:?}");
        }
    }

    #[test]
    fn duplicate_lines_are_parse_errors() {
        let e = parse_key_values("a = 1\n\na = 2").unwrap_err();
        assert!(matches!(e, CliError::Parse { line: Some(3), .. }));
    }

    #[test]
    fn nested_parameters_are_merged() {
        let m = parse_json(r#"{"command": "scatter", "parameters": {"potential": "hard-core", "R": 0.5}}"#).unwrap();
        let c = validate(m).unwrap();
        assert_eq!(c.f64("R"), 0.5);
    }
}
