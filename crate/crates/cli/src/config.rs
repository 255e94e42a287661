//! Run configuration: a flat JSON object with optional nested sections.

use std::path::PathBuf;

use coldstandby::invert::{InversionMethod, InversionTarget};
use coldstandby::{Complex, DistributionSpec, Engine, InversionSettings, SystemConfig, WorkingTimeModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub mu: f64,
    pub distribution: DistributionSpec,
    #[serde(default = "default_j0")]
    pub j0: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    #[serde(default)]
    pub inversion: InversionSection,
    #[serde(default)]
    pub lst: LstSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_j0() -> usize {
    1
}

fn default_samples() -> usize {
    10_000
}

fn default_engine() -> Engine {
    Engine::EmbeddedChain
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillationPolicy {
    /// Exit with a numerical error.
    #[default]
    Fail,
    /// Keep the value and mark the row `oscillating`.
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionSection {
    #[serde(default = "default_method")]
    pub method: InversionMethod,
    /// `2M + 1` for Euler, even `N` for Gaver–Stehfest; per-method default.
    #[serde(default)]
    pub terms: Option<usize>,
    #[serde(default = "default_target")]
    pub target: InversionTarget,
    /// Defaults to `{0.5, 1, 2, 5, 10} · b / ε^{n−1}`.
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub on_oscillation: OscillationPolicy,
}

fn default_method() -> InversionMethod {
    InversionMethod::EulerAbateWhitt
}

fn default_target() -> InversionTarget {
    InversionTarget::Cdf
}

impl Default for InversionSection {
    fn default() -> Self {
        Self {
            method: default_method(),
            terms: None,
            target: default_target(),
            t_grid: None,
            on_oscillation: OscillationPolicy::Fail,
        }
    }
}

impl InversionSection {
    pub fn settings(&self) -> InversionSettings {
        let base = match self.method {
            InversionMethod::EulerAbateWhitt => InversionSettings::euler(),
            InversionMethod::GaverStehfest => InversionSettings::gaver_stehfest(),
        };
        InversionSettings { terms: self.terms.unwrap_or(base.terms), ..base.with_target(self.target) }
    }
}

/// A transform argument: a real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SPoint {
    Real(f64),
    Complex([f64; 2]),
}

impl SPoint {
    pub fn value(&self) -> Complex<f64> {
        match *self {
            Self::Real(re) => Complex::new(re, 0.0),
            Self::Complex([re, im]) => Complex::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LstSection {
    /// Defaults to `{0.25, 1, 4} / b`.
    #[serde(default)]
    pub s_grid: Option<Vec<SPoint>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Required by `sweep`.
    #[serde(default)]
    pub mu_list: Option<Vec<f64>>,
    /// Real arguments of the transform gap; defaults to `{0.25, 1, 4} / b`.
    #[serde(default)]
    pub s_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            other => Err(format!("unknown format `{other}` (expected csv, json or svg)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: default_directory(), formats: default_formats() }
    }
}

impl OutputSection {
    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

/// Scalar overrides from the command line, applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub directory: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

/// Parses `text` without validating it.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

fn check(ok: bool, field: &str, message: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::validation(field, message()))
    }
}

fn increasing_positive(v: &[f64]) -> bool {
    !v.is_empty() && v[0] > 0.0 && v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(samples) = o.samples {
            self.samples = samples;
        }
        if let Some(dir) = &o.directory {
            self.output.directory = dir.clone();
        }
        if let Some(formats) = &o.formats {
            self.formats_from(formats);
        }
    }

    fn formats_from(&mut self, formats: &[Format]) {
        let mut f = formats.to_vec();
        f.sort();
        f.dedup();
        self.output.formats = f;
    }

    /// Validates every field and fills in grid and order defaults.
    pub fn resolve(&mut self) -> CliResult<SystemConfig> {
        check(self.n >= 2, "n", || format!("n ≥ 2 required, got {}", self.n))?;
        check(self.mu.is_finite() && self.mu > 0.0, "mu", || format!("mu must be finite and > 0, got {}", self.mu))?;
        let model = WorkingTimeModel::new(self.distribution.clone())
            .map_err(|e| CliError::validation("distribution", e.to_string()))?;
        let system = SystemConfig::new(self.n, self.mu, model).map_err(|e| CliError::validation("n", e.to_string()))?;
        check(self.j0 < self.n, "j0", || format!("j0 must lie in [0, {}], got {}", self.n - 1, self.j0))?;
        check(self.samples >= 1, "samples", || "samples must be ≥ 1".into())?;
        check(!self.output.formats.is_empty(), "output.formats", || "at least one format is required".into())?;
        let formats = self.output.formats.clone();
        self.formats_from(&formats);

        let settings = self.inversion.settings();
        settings.validate().map_err(|e| CliError::validation("inversion.terms", e.to_string()))?;
        self.inversion.terms = Some(settings.terms);

        let b = system.working_time().mean();
        if self.inversion.t_grid.is_none() {
            let scale = b / system.epsilon()?.powi(self.n as i32 - 1);
            self.inversion.t_grid = Some([0.5, 1.0, 2.0, 5.0, 10.0].iter().map(|f| f * scale).collect());
        }
        let t_grid = self.inversion.t_grid.as_deref().unwrap_or_default();
        check(increasing_positive(t_grid), "inversion.t_grid", || {
            "t_grid must be non-empty, positive and strictly increasing".into()
        })?;

        let default_s = [0.25 / b, 1.0 / b, 4.0 / b];
        let s_grid = self.lst.s_grid.get_or_insert_with(|| default_s.iter().map(|&s| SPoint::Real(s)).collect());
        check(
            !s_grid.is_empty() && s_grid.iter().all(|s| s.value().re >= 0.0 && s.value().is_finite()),
            "lst.s_grid",
            || "s_grid must be non-empty with finite points and Re(s) ≥ 0".into(),
        )?;

        if let Some(mu_list) = &self.sweep.mu_list {
            check(mu_list.len() >= 2 && increasing_positive(mu_list), "sweep.mu_list", || {
                "mu_list needs at least two positive, strictly increasing entries".into()
            })?;
        }
        let sweep_s = self.sweep.s_grid.get_or_insert_with(|| default_s.to_vec());
        check(
            !sweep_s.is_empty() && sweep_s.iter().all(|s| s.is_finite() && *s >= 0.0),
            "sweep.s_grid",
            || "s_grid must be non-empty, finite and nonnegative".into(),
        )?;
        Ok(system)
    }

    /// Everything except the output section, as echoed in reports.
    pub fn experiment(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output");
        }
        value
    }

    /// SHA-256 of the canonical JSON of [`RunConfig::experiment`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.experiment().to_string().as_bytes()))
    }
}
