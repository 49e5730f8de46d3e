use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;
use switchsym_core::abstraction::SuccessorMode;
use switchsym_core::certificates::{load_certificates, CertificateSet};
use switchsym_core::model::{load_system, BoxSet, Region, SwitchedSystem};
use switchsym_core::synthesis::Spec;

/// Project file: where the system lives, how to abstract it, what to
/// synthesize, and how to validate the result.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Relative paths are resolved against the project file's directory.
    pub system: PathBuf,
    pub certificate: PathBuf,
    #[serde(default = "default_approach")]
    pub approach: String,
    pub parameters: Parameters,
    pub spec: Spec,
    #[serde(default)]
    pub validation: ValidationSettings,
    #[serde(default)]
    pub output: OutputSettings,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_approach() -> String {
    "auto".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub tau: f64,
    pub epsilon: f64,
    /// Grid quantization; solved for when absent.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Sequence length `N`; solved for when absent.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub source: Option<Vec<f64>>,
    /// Overrides the system file's dwell time.
    #[serde(default)]
    pub dwell_time: Option<f64>,
    #[serde(default)]
    pub successors: Successors,
    #[serde(default = "default_max_horizon")]
    pub max_horizon: usize,
    /// Grid points tried when searching for a source state.
    #[serde(default = "default_source_budget")]
    pub source_budget: usize,
}

fn default_max_horizon() -> usize {
    switchsym_core::quantizer::DEFAULT_N_MAX
}

fn default_source_budget() -> usize {
    4096
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Successors {
    #[default]
    Nearest,
    All,
}

impl From<Successors> for SuccessorMode {
    fn from(s: Successors) -> Self {
        match s {
            Successors::Nearest => SuccessorMode::Nearest,
            Successors::All => SuccessorMode::AllWithinEta,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSettings {
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Set whose distance is reported; defaults to the spec's target, else its safe set.
    #[serde(default)]
    pub measure: Option<BoxSet>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Simulated time; a multiple of τ.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_sample_paths")]
    pub sample_paths: usize,
    #[serde(default)]
    pub seed: u64,
    /// Coupled samples per transition for the η̂ estimate; skipped when absent.
    #[serde(default)]
    pub eta_hat_samples: Option<usize>,
    #[serde(default = "default_eta_hat_pairs")]
    pub eta_hat_pairs: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

fn default_runs() -> usize {
    1000
}

fn default_sample_paths() -> usize {
    5
}

fn default_eta_hat_pairs() -> usize {
    4
}

fn default_confidence() -> f64 {
    1.0 - 1e-5
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            x0: None,
            measure: None,
            runs: default_runs(),
            horizon: None,
            sample_paths: default_sample_paths(),
            seed: 0,
            eta_hat_samples: None,
            eta_hat_pairs: default_eta_hat_pairs(),
            confidence: default_confidence(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    /// Per-state strategy table; large for big models.
    #[serde(default)]
    pub strategy_csv: bool,
}

/// A parsed project with its system and certificates loaded.
#[derive(Debug)]
pub struct Project {
    pub path: PathBuf,
    pub config: ProjectConfig,
    pub system: SwitchedSystem,
    pub certs: CertificateSet,
}

impl Project {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: ProjectConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let sys_path = resolve(&config.system);
        let cert_path = resolve(&config.certificate);
        for p in [&sys_path, &cert_path] {
            if !p.exists() {
                bail!("referenced file {} does not exist", p.display());
            }
        }
        let mut system = load_system(&sys_path).with_context(|| format!("loading {}", sys_path.display()))?;
        if config.parameters.dwell_time.is_some() {
            system.dwell_time = config.parameters.dwell_time;
        }
        let certs = load_certificates(&cert_path, &system).with_context(|| format!("loading {}", cert_path.display()))?;
        config.spec.validate(system.n)?;
        let p = &config.parameters;
        if !(p.tau > 0.0) || !(p.epsilon > 0.0) {
            bail!("τ and ε must be positive");
        }
        if let Some(s) = &p.source {
            if s.len() != system.n {
                bail!("source state has {} entries, system has n = {}", s.len(), system.n);
            }
        }
        if let Some(m) = &config.validation.measure {
            m.check_dim(system.n)?;
        }
        if let Some(x0) = &config.validation.x0 {
            if x0.len() != system.n {
                bail!("x0 has {} entries, system has n = {}", x0.len(), system.n);
            }
        }
        Ok(Self { path: path.to_path_buf(), config, system, certs })
    }

    pub fn name(&self) -> String {
        self.config.name.clone().unwrap_or_else(|| {
            self.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "project".into())
        })
    }

    /// Set whose distance the validation reports: `validation.measure` if
    /// given, else the target, else the safe set, minus `avoid` in the last
    /// two cases. Raw sets, not the contracted labels.
    pub fn distance_region(&self) -> Region {
        if let Some(m) = &self.config.validation.measure {
            return Region::from_set(m.clone());
        }
        let spec = &self.config.spec;
        let include: BoxSet = spec.target.clone().or_else(|| spec.safe.clone()).unwrap_or_else(|| self.system.domain.clone());
        Region::new(include, spec.avoid.clone().unwrap_or_default())
    }

    pub fn x0(&self) -> anyhow::Result<&[f64]> {
        self.config.validation.x0.as_deref().context("validation.x0 is required for this command")
    }

    pub fn sim_horizon(&self) -> f64 {
        self.config.validation.horizon.unwrap_or(100.0 * self.config.parameters.tau)
    }
}
