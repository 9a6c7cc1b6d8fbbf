//! Flat `section.key = value` experiment configuration.

use crate::classifier::TrainConfig;
use crate::error::{QercError, Result};
use crate::mlayer::StandardizeMode;
use crate::reservoir::{Alpha, Model, ReservoirSpec};
use crate::rng;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// Environment variable consulted when `data.dir` is not set.
pub const DATA_DIR_ENV: &str = "QERC_DATA_DIR";
/// Subset sizes applied by the reduced (CI) mode.
pub const REDUCED_TRAIN: usize = 10_000;
pub const REDUCED_TEST: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputSource {
    Mnist,
    Uniform,
    Blobs,
}

impl fmt::Display for InputSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputSource::Mnist => "mnist",
            InputSource::Uniform => "uniform",
            InputSource::Blobs => "blobs",
        })
    }
}

impl FromStr for InputSource {
    type Err = QercError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mnist" => Ok(InputSource::Mnist),
            "uniform" => Ok(InputSource::Uniform),
            "blobs" => Ok(InputSource::Blobs),
            other => Err(QercError::Config(format!("unknown input source '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Softmax directly on pixels scaled to `[0, 1]`.
    Pixels,
    /// Softmax on the min/max-scaled leading principal components.
    Pca,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Pixels => "pixels",
            BaselineKind::Pca => "pca",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = QercError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pixels" | "linear" => Ok(BaselineKind::Pixels),
            "pca" => Ok(BaselineKind::Pca),
            other => Err(QercError::Config(format!("unknown baseline '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub reservoir: ReservoirSpec,
    pub randomize_encoder: bool,
    pub mode: StandardizeMode,
    /// `None` means exact probabilities.
    pub shots: Option<u64>,
    pub train: TrainConfig,
    pub data_dir: Option<PathBuf>,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub output_dir: PathBuf,
    pub pca_cache: Option<PathBuf>,
    pub sweep_axis: Option<String>,
    pub sweep_values: Vec<String>,
    pub shot_values: Vec<Option<u64>>,
    pub shot_qubits: Vec<usize>,
    pub shot_seeds: usize,
    pub kld_states: usize,
    pub pr_source: InputSource,
    pub pr_axis: String,
    /// Empty means the default time grid.
    pub pr_values: Vec<String>,
    pub pr_count: usize,
    pub kernel_samples: usize,
    pub rff_bandwidth: Option<f64>,
    pub baseline: BaselineKind,
    pub baseline_components: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            reservoir: ReservoirSpec::new(Model::Haar, 10),
            randomize_encoder: false,
            mode: StandardizeMode::StdDev,
            shots: None,
            train: TrainConfig::default(),
            data_dir: None,
            train_limit: None,
            test_limit: None,
            output_dir: PathBuf::from("results"),
            pca_cache: None,
            sweep_axis: None,
            sweep_values: Vec::new(),
            shot_values: vec![Some(100), Some(1_000), Some(10_000), Some(100_000), None],
            shot_qubits: vec![10],
            shot_seeds: 3,
            kld_states: 100,
            pr_source: InputSource::Mnist,
            pr_axis: "t".into(),
            pr_values: Vec::new(),
            pr_count: 10_000,
            kernel_samples: 512,
            rff_bandwidth: None,
            baseline: BaselineKind::Pixels,
            baseline_components: 20,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| QercError::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(QercError::Config(format!(
            "{key}: expected true/false, got '{value}'"
        ))),
    }
}

fn is_auto(value: &str) -> bool {
    matches!(
        value.trim().to_ascii_lowercase().as_str(),
        "auto" | "none" | ""
    )
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if is_auto(value) || value.trim().eq_ignore_ascii_case("all") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

/// `inf` (exact) or a positive shot count.
pub fn parse_shots(key: &str, value: &str) -> Result<Option<u64>> {
    let v = value.trim().to_ascii_lowercase();
    if matches!(v.as_str(), "inf" | "exact" | "none") {
        return Ok(None);
    }
    let n: u64 = parse(key, &v)?;
    if n == 0 {
        return Err(QercError::Config(format!("{key}: shot count must be >= 1")));
    }
    Ok(Some(n))
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn fmt_opt<T: ToString>(v: &Option<T>, none: &str) -> String {
    v.as_ref().map_or(none.to_string(), |x| x.to_string())
}

fn fmt_shots(v: Option<u64>) -> String {
    v.map_or("inf".into(), |n| n.to_string())
}

impl ExperimentConfig {
    /// Parses `section.key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                QercError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| {
                QercError::Config(format!("line {}: {}", lineno + 1, strip_prefix(&e)))
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key. Short reservoir names (`g`, `alpha`, ...) are accepted.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = match key {
            "model" | "num_qubits" | "j0" | "g" | "alpha" | "t" | "theta_x" | "theta_j"
            | "depth" | "gate_count" => {
                format!("reservoir.{key}")
            }
            k => k.to_string(),
        };
        let k = key.as_str();
        let r = &mut self.reservoir;
        match k {
            "seed" => self.seed = parse(k, value)?,
            "reservoir.model" => r.model = value.parse()?,
            "reservoir.num_qubits" => r.num_qubits = parse(k, value)?,
            "reservoir.j0" => r.j0 = parse(k, value)?,
            "reservoir.g" => r.g = parse(k, value)?,
            "reservoir.alpha" => r.alpha = value.parse::<Alpha>()?,
            "reservoir.t" => r.t = parse(k, value)?,
            "reservoir.theta_x" => r.theta_x = parse(k, value)?,
            "reservoir.theta_j" => r.theta_j = parse(k, value)?,
            "reservoir.depth" => r.depth = parse(k, value)?,
            "reservoir.gate_count" => r.gate_count = optional(k, value)?,
            "encoder.randomize" => self.randomize_encoder = parse_bool(k, value)?,
            "mlayer.mode" => self.mode = value.parse()?,
            "mlayer.shots" => self.shots = parse_shots(k, value)?,
            "train.learning_rate" => self.train.learning_rate = parse(k, value)?,
            "train.epsilon" => self.train.epsilon = parse(k, value)?,
            "train.batch_size" => self.train.batch_size = parse(k, value)?,
            "train.epochs" => self.train.epochs = parse(k, value)?,
            "train.window" => {
                self.train.window = if is_auto(value) {
                    None
                } else {
                    let (a, b) = value.split_once('-').ok_or_else(|| {
                        QercError::Config(format!("{k}: expected 'first-last' or 'auto'"))
                    })?;
                    Some((parse(k, a)?, parse(k, b)?))
                }
            }
            "data.dir" => {
                self.data_dir = if is_auto(value) {
                    None
                } else {
                    Some(PathBuf::from(value.trim()))
                }
            }
            "data.train_limit" => self.train_limit = optional(k, value)?,
            "data.test_limit" => self.test_limit = optional(k, value)?,
            "output.dir" => self.output_dir = PathBuf::from(value.trim()),
            "output.pca_cache" => {
                self.pca_cache = if is_auto(value) {
                    None
                } else {
                    Some(PathBuf::from(value.trim()))
                }
            }
            "sweep.axis" => {
                self.sweep_axis = if is_auto(value) {
                    None
                } else {
                    Some(value.trim().to_string())
                }
            }
            "sweep.values" => self.sweep_values = list(value),
            "shots.values" => {
                self.shot_values = list(value)
                    .iter()
                    .map(|v| parse_shots(k, v))
                    .collect::<Result<_>>()?
            }
            "shots.qubits" => {
                self.shot_qubits = list(value)
                    .iter()
                    .map(|v| parse(k, v))
                    .collect::<Result<_>>()?
            }
            "shots.seeds" => self.shot_seeds = parse(k, value)?,
            "shots.kld_states" => self.kld_states = parse(k, value)?,
            "pr.source" => self.pr_source = value.parse()?,
            "pr.axis" => self.pr_axis = value.trim().to_string(),
            "pr.values" => {
                self.pr_values = if is_auto(value) {
                    Vec::new()
                } else {
                    list(value)
                }
            }
            "pr.count" => self.pr_count = parse(k, value)?,
            "kernel.samples" => self.kernel_samples = parse(k, value)?,
            "kernel.rff_bandwidth" => self.rff_bandwidth = optional(k, value)?,
            "baseline.kind" => self.baseline = value.parse()?,
            "baseline.components" => self.baseline_components = parse(k, value)?,
            _ => return Err(QercError::Config(format!("unknown key '{k}'"))),
        }
        Ok(())
    }

    /// Restricts the data to the CI subset sizes.
    pub fn apply_reduced(&mut self) {
        self.train_limit = Some(
            self.train_limit
                .map_or(REDUCED_TRAIN, |n| n.min(REDUCED_TRAIN)),
        );
        self.test_limit = Some(
            self.test_limit
                .map_or(REDUCED_TEST, |n| n.min(REDUCED_TEST)),
        );
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: QercError| QercError::Config(strip_prefix(&e));
        self.reservoir.validate().map_err(wrap)?;
        self.train.validate().map_err(wrap)?;
        if self.shot_seeds == 0 {
            return Err(QercError::Config("shots.seeds must be >= 1".into()));
        }
        if self.kernel_samples < 2 {
            return Err(QercError::Config("kernel.samples must be >= 2".into()));
        }
        if self.baseline_components == 0 || self.baseline_components % 2 != 0 {
            return Err(QercError::Config(
                "baseline.components must be a positive even number".into(),
            ));
        }
        Ok(())
    }

    /// Every key in a fixed order; `parse(serialize())` round-trips.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let r = &self.reservoir;
        let t = &self.train;
        vec![
            ("seed", self.seed.to_string()),
            ("reservoir.model", r.model.to_string()),
            ("reservoir.num_qubits", r.num_qubits.to_string()),
            ("reservoir.j0", r.j0.to_string()),
            ("reservoir.g", r.g.to_string()),
            ("reservoir.alpha", r.alpha.to_string()),
            ("reservoir.t", r.t.to_string()),
            ("reservoir.theta_x", r.theta_x.to_string()),
            ("reservoir.theta_j", r.theta_j.to_string()),
            ("reservoir.depth", r.depth.to_string()),
            ("reservoir.gate_count", fmt_opt(&r.gate_count, "auto")),
            ("encoder.randomize", self.randomize_encoder.to_string()),
            ("mlayer.mode", self.mode.to_string()),
            ("mlayer.shots", fmt_shots(self.shots)),
            ("train.learning_rate", t.learning_rate.to_string()),
            ("train.epsilon", t.epsilon.to_string()),
            ("train.batch_size", t.batch_size.to_string()),
            ("train.epochs", t.epochs.to_string()),
            (
                "train.window",
                t.window.map_or("auto".into(), |(a, b)| format!("{a}-{b}")),
            ),
            (
                "data.dir",
                self.data_dir
                    .as_ref()
                    .map_or("auto".into(), |p| p.display().to_string()),
            ),
            ("data.train_limit", fmt_opt(&self.train_limit, "all")),
            ("data.test_limit", fmt_opt(&self.test_limit, "all")),
            ("output.dir", self.output_dir.display().to_string()),
            (
                "output.pca_cache",
                self.pca_cache
                    .as_ref()
                    .map_or("none".into(), |p| p.display().to_string()),
            ),
            ("sweep.axis", fmt_opt(&self.sweep_axis, "none")),
            ("sweep.values", self.sweep_values.join(",")),
            (
                "shots.values",
                self.shot_values
                    .iter()
                    .map(|v| fmt_shots(*v))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            (
                "shots.qubits",
                self.shot_qubits
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("shots.seeds", self.shot_seeds.to_string()),
            ("shots.kld_states", self.kld_states.to_string()),
            ("pr.source", self.pr_source.to_string()),
            ("pr.axis", self.pr_axis.clone()),
            (
                "pr.values",
                if self.pr_values.is_empty() {
                    "auto".into()
                } else {
                    self.pr_values.join(",")
                },
            ),
            ("pr.count", self.pr_count.to_string()),
            ("kernel.samples", self.kernel_samples.to_string()),
            ("kernel.rff_bandwidth", fmt_opt(&self.rff_bandwidth, "auto")),
            ("baseline.kind", self.baseline.to_string()),
            ("baseline.components", self.baseline_components.to_string()),
        ]
    }

    pub fn serialize(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Seed for a named pipeline component, derived from the master seed.
    pub fn sub_seed(&self, component: &str) -> u64 {
        rng::derive_seed(self.seed, rng::tag(component))
    }

    /// Reservoir spec with its seed derived from the master seed.
    pub fn reservoir_spec(&self) -> ReservoirSpec {
        ReservoirSpec {
            seed: self.sub_seed("reservoir"),
            ..self.reservoir.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.sub_seed("classifier"),
            ..self.train.clone()
        }
    }
}

fn strip_prefix(e: &QercError) -> String {
    match e {
        QercError::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
