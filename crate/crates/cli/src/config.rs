//! Scenario files: one TOML document per scenario.

use std::fmt;
use std::path::Path;

use dbgibbs::linalg::Backend;
use dbgibbs::lindblad::Weight;
use dbgibbs::spinsys::{build_ising_chain, build_random_local, build_tfim_chain_split, Hamiltonian, Region};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Verify,
    Recovery,
    Cmi,
    Lr,
    Dirichlet,
    Patching,
    Gap,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Verify => "verify",
            Experiment::Recovery => "recovery",
            Experiment::Cmi => "cmi",
            Experiment::Lr => "lr",
            Experiment::Dirichlet => "dirichlet",
            Experiment::Patching => "patching",
            Experiment::Gap => "gap",
        }
    }

    fn needs_times(self) -> bool {
        matches!(self, Experiment::Recovery | Experiment::Lr | Experiment::Patching | Experiment::Gap)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tfim,
    Ising,
    Random,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Couplings {
    pub j: Option<f64>,
    pub g: Option<f64>,
    /// locality of random terms
    pub k: Option<usize>,
    /// number of random terms
    pub m: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub n: usize,
    #[serde(default)]
    pub couplings: Couplings,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKindConfig {
    Metropolis,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub kind: WeightKindConfig,
    pub omega_gamma: Option<f64>,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { kind: WeightKindConfig::Metropolis, omega_gamma: None }
    }
}

/// A number, or the string "1/beta".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sigma {
    Value(f64),
    Sentinel(String),
}

impl Default for Sigma {
    fn default() -> Self {
        Sigma::Sentinel("1/beta".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Times {
    List(Vec<f64>),
    /// `{ log = [start, stop, count] }`
    Log { log: (f64, f64, usize) },
}

impl Default for Times {
    fn default() -> Self {
        Times::List(Vec::new())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// defaults to the file stem
    pub id: Option<String>,
    pub experiment: Experiment,
    pub model: ModelConfig,
    pub beta: f64,
    #[serde(default)]
    pub sigma: Sigma,
    #[serde(default)]
    pub weight: WeightConfig,
    #[serde(default)]
    pub region: Vec<usize>,
    #[serde(default)]
    pub times: Times,
    pub ell: Option<usize>,
    pub backend: Option<Backend>,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<String>,
    /// patching only
    pub patch_size: Option<usize>,
    pub rounds: Option<usize>,
    pub buffer: Option<usize>,
    /// random samples drawn by verify, dirichlet and gap
    pub samples: Option<usize>,
}

/// Every offending key with its complaint.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationError {
    pub issues: Vec<(String, String)>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config:")?;
        for (k, m) in &self.issues {
            write!(f, "\n  {k}: {m}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

impl ScenarioConfig {
    pub fn from_toml(s: &str) -> Result<Self, String> {
        toml::from_str(s).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut c = Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if c.id.is_none() {
            c.id = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(c)
    }

    pub fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| format!("{}-{}", self.experiment.name(), self.model.n))
    }

    pub fn sigma_value(&self) -> Option<f64> {
        match &self.sigma {
            Sigma::Value(v) => Some(*v),
            Sigma::Sentinel(s) if s.replace(' ', "") == "1/beta" => Some(1.0 / self.beta),
            Sigma::Sentinel(_) => None,
        }
    }

    pub fn time_list(&self) -> Vec<f64> {
        match &self.times {
            Times::List(v) => v.clone(),
            Times::Log { log: (a, b, k) } => match *k {
                0 => Vec::new(),
                1 => vec![*a],
                k => (0..k).map(|i| a * (b / a).powf(i as f64 / (k - 1) as f64)).collect(),
            },
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend.unwrap_or(Backend::Spectral)
    }

    pub fn region_set(&self) -> Region {
        Region::new(self.region.iter().copied())
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut issues = Vec::new();
        let mut bad = |k: &str, m: String| issues.push((k.to_string(), m));
        let n = self.model.n;
        if n == 0 {
            bad("model.n", "must be positive".into());
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            bad("beta", format!("must be positive and finite, got {}", self.beta));
        }
        match self.sigma_value() {
            Some(s) if s > 0.0 && s.is_finite() => {}
            Some(s) => bad("sigma", format!("must be positive, got {s}")),
            None => bad("sigma", "expected a number or \"1/beta\"".into()),
        }
        if let Some(&s) = self.region.iter().find(|&&s| s >= n) {
            bad("region", format!("site {s} is not < n = {n}"));
        }
        let mut sorted = self.region.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.region.len() {
            bad("region", "repeated site".into());
        }
        if self.region.is_empty() && self.experiment != Experiment::Patching {
            bad("region", "must name at least one site".into());
        }
        let times = self.time_list();
        if self.experiment.needs_times() && times.is_empty() {
            bad("times", format!("{} needs at least one time", self.experiment.name()));
        }
        if times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            bad("times", "must be positive and finite".into());
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            bad("times", "must be strictly increasing".into());
        }
        if self.ell == Some(0) {
            bad("ell", "must be >= 1".into());
        }
        if matches!(self.experiment, Experiment::Lr | Experiment::Patching) && self.ell.is_none() {
            bad("ell", format!("{} needs ell", self.experiment.name()));
        }
        if self.experiment == Experiment::Cmi && sorted != (0..sorted.len()).collect::<Vec<_>>() {
            bad("region", "cmi takes A as the first |A| sites, e.g. [0, 1]".into());
        }
        if self.weight.kind == WeightKindConfig::Gaussian && self.weight.omega_gamma.is_none() {
            bad("weight.omega_gamma", "required for the gaussian weight".into());
        }
        let c = &self.model.couplings;
        match self.model.kind {
            ModelKind::Tfim if c.j.is_none() || c.g.is_none() => bad("model.couplings", "tfim needs j and g".into()),
            ModelKind::Ising if c.j.is_none() => bad("model.couplings", "ising needs j".into()),
            ModelKind::Random if c.k.is_none() || c.m.is_none() => bad("model.couplings", "random needs k and m".into()),
            _ => {}
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { issues })
        }
    }

    pub fn hamiltonian(&self) -> dbgibbs::Result<Hamiltonian> {
        let m = &self.model;
        let c = &m.couplings;
        match m.kind {
            ModelKind::Tfim => build_tfim_chain_split(m.n, c.j.unwrap_or(1.0), c.g.unwrap_or(1.0), m.periodic),
            ModelKind::Ising => build_ising_chain(m.n, c.j.unwrap_or(1.0), m.periodic),
            ModelKind::Random => build_random_local(m.n, c.k.unwrap_or(2), c.m.unwrap_or(m.n), m.seed),
        }
    }

    pub fn weight(&self) -> dbgibbs::Result<Weight> {
        let sigma = self.sigma_value().unwrap_or(1.0 / self.beta);
        match self.weight.kind {
            WeightKindConfig::Metropolis => Weight::metropolis(self.beta, sigma),
            WeightKindConfig::Gaussian => Weight::gaussian(self.beta, sigma, self.weight.omega_gamma.unwrap_or(1.0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
experiment = "recovery"
beta = 1.0
region = [0]
times = { log = [1.0, 100.0, 3] }

[model]
kind = "tfim"
n = 3
couplings = { j = 1.0, g = 1.05 }
"#;

    #[test]
    fn parses_defaults() {
        let c = ScenarioConfig::from_toml(BASE).unwrap();
        assert_eq!(c.sigma_value(), Some(1.0));
        assert_eq!(c.time_list().len(), 3);
        assert!((c.time_list()[1] - 10.0).abs() < 1e-12);
        assert_eq!(c.backend(), Backend::Spectral);
        c.validate().unwrap();
        assert_eq!(c.hamiltonian().unwrap().n(), 3);
    }

    #[test]
    fn collects_every_bad_key() {
        let text = BASE.replace("region = [0]", "region = [12]").replace("beta = 1.0", "beta = -1.0");
        let err = ScenarioConfig::from_toml(&text).unwrap().validate().unwrap_err();
        let keys: Vec<&str> = err.issues.iter().map(|(k, _)| k.as_str()).collect();
        assert!(keys.contains(&"region") && keys.contains(&"beta"), "{keys:?}");
        assert!(err.to_string().contains("site 12"));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ScenarioConfig::from_toml(&format!("bogus = 1\n{BASE}")).is_err());
    }

    #[test]
    fn sigma_number_and_bad_string() {
        let c = ScenarioConfig::from_toml(&BASE.replace("beta = 1.0", "beta = 1.0\nsigma = 0.25")).unwrap();
        assert_eq!(c.sigma_value(), Some(0.25));
        let d = ScenarioConfig::from_toml(&BASE.replace("beta = 1.0", "beta = 1.0\nsigma = \"2/beta\"")).unwrap();
        assert!(d.validate().is_err());
    }
}
