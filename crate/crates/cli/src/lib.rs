//! Config-driven experiment runner for the dbgibbs lab.

pub mod config;
pub mod experiments;
pub mod record;

use std::fmt;
use std::path::{Path, PathBuf};

use dbgibbs::linalg::Backend;

pub use config::{Experiment, ScenarioConfig, ValidationError};
pub use record::{PassCounts, ResultRecord};

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Validation(ValidationError),
    Core(dbgibbs::Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Validation(v) => v.fmt(f),
            RunError::Core(e) => e.fmt(f),
            RunError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for RunError {}

impl From<dbgibbs::Error> for RunError {
    fn from(e: dbgibbs::Error) -> Self {
        RunError::Core(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub backend: Option<Backend>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, c: &mut ScenarioConfig) {
        if let Some(b) = self.backend {
            c.backend = Some(b);
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
    }
}

pub fn run_scenario(c: &ScenarioConfig) -> Result<Vec<ResultRecord>, RunError> {
    c.validate().map_err(RunError::Validation)?;
    Ok(experiments::run(c)?)
}

/// Write `<prefix>.csv` and/or `<prefix>.json`; returns the paths written.
pub fn emit_results(
    c: &ScenarioConfig,
    records: &[ResultRecord],
    prefix: &Path,
    format: Format,
) -> Result<Vec<PathBuf>, RunError> {
    if records.is_empty() {
        return Err(RunError::Config(format!("scenario {} produced no records", c.id())));
    }
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io { path: dir.to_path_buf(), source: e })?;
    }
    let mut written = Vec::new();
    let mut put = |ext: &str, body: String| -> Result<(), RunError> {
        let mut p = prefix.as_os_str().to_owned();
        p.push(ext);
        let p = PathBuf::from(p);
        std::fs::write(&p, body).map_err(|e| RunError::Io { path: p.clone(), source: e })?;
        written.push(p);
        Ok(())
    };
    if matches!(format, Format::Csv | Format::Both) {
        put(".csv", record::to_csv(c.experiment, records))?;
    }
    if matches!(format, Format::Json | Format::Both) {
        put(".json", record::to_json_summary(c, records))?;
    }
    Ok(written)
}

/// Scenario files of a suite directory, sorted by name.
pub fn suite_files(dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let rd = std::fs::read_dir(dir).map_err(|e| RunError::Io { path: dir.to_path_buf(), source: e })?;
    let mut v: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    v.sort();
    Ok(v)
}

/// Scenarios run by the `verify` command.
pub fn builtin_verify() -> Vec<ScenarioConfig> {
    let base = |id: &str, model: &str| {
        let text = format!("id = \"{id}\"\nexperiment = \"verify\"\nbeta = 1.0\nregion = [0]\nseed = 1\n[model]\n{model}\n");
        ScenarioConfig::from_toml(&text).expect("builtin scenario parses")
    };
    vec![
        base("verify-random2", "kind = \"random\"\nn = 2\nseed = 1\ncouplings = { k = 2, m = 3 }"),
        base("verify-tfim3", "kind = \"tfim\"\nn = 3\ncouplings = { j = 1.0, g = 0.8 }"),
        base("verify-ising3", "kind = \"ising\"\nn = 3\ncouplings = { j = 1.0 }"),
    ]
}

/// Thread count from DBGIBBS_THREADS, if set and valid.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("DBGIBBS_THREADS").ok()?.trim().parse().ok()
}
