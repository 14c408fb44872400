//! Experiment configuration: TOML schema, defaulting, validation, and the
//! resolved echo that makes every run reproducible.
//!
//! A raw file may omit most fields; resolution fills every default in and
//! the fully resolved config is written next to the outputs as
//! `config_resolved.toml`. Hashing that echo gives the `config_hash` carried
//! through all result files. Command-line flags (`--seed`, `--out`,
//! `--standardize`) override file values before resolution.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use kmsv::solvers::{InitMode, SolverConfig};
use kmsv::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Kmsv,
    KmsvNew,
    Ridge,
    Trace,
}

impl MethodName {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodName::Kmsv => "kmsv",
            MethodName::KmsvNew => "kmsv-new",
            MethodName::Ridge => "ridge",
            MethodName::Trace => "trace",
        }
    }

    /// Directory-safe name (no dashes swapped; dashes are fine in paths).
    pub fn dir_name(&self) -> &'static str {
        self.as_str()
    }

    fn default_gamma(&self) -> f64 {
        match self {
            MethodName::Kmsv => 1e2,
            MethodName::KmsvNew => 1e4,
            MethodName::Trace => 1e2,
            MethodName::Ridge => 1.0,
        }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Zeros,
    Ridge,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetConfig {
    Synthetic {
        tasks: usize,
        features: usize,
        samples_per_task: usize,
        rank: usize,
        noise_std: f64,
    },
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitConfig {
    pub train_fractions: Vec<f64>,
    pub per_task: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub task_fraction: f64,
    pub mean: f64,
    pub variance: f64,
    /// Read `variance` as a standard deviation instead of a variance.
    #[serde(default)]
    pub variance_is_std: bool,
}

/// One method entry after resolution: every knob concrete.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodConfig {
    pub name: MethodName,
    pub gamma: f64,
    /// Suppressed-tail size. `None` for ridge (unused) and trace (resolved
    /// to min(d, c) at fit time).
    pub k: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
    pub eps: f64,
    pub init: InitKind,
    /// Optional ridge-initialization scale override.
    pub lambda0: Option<f64>,
}

impl MethodConfig {
    /// Solver configuration for a dataset with the given min(d, c), seeded
    /// for one repetition.
    pub fn solver_config(&self, min_dim: usize, seed: u64) -> SolverConfig {
        let k = match self.name {
            MethodName::Trace => min_dim,
            _ => self.k.unwrap_or(0),
        };
        let mut config = SolverConfig::new(self.gamma, k);
        config.max_iter = self.max_iter;
        config.tol = self.tol;
        config.eps = self.eps;
        config.seed = seed;
        config.init = match self.init {
            InitKind::Zeros => InitMode::Zeros,
            InitKind::Ridge => InitMode::Ridge {
                lambda0: self.lambda0,
            },
            InitKind::Random => InitMode::Random,
        };
        config
    }
}

/// Fully resolved experiment description; serializes to the config echo.
///
/// The output directory is runtime placement, not experiment content, so it
/// is excluded from the echo and the hash: the same experiment written to
/// two locations produces byte-identical result files and one hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    pub repetitions: usize,
    pub standardize: bool,
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub noise: Option<NoiseConfig>,
    pub methods: Vec<MethodConfig>,
}

// ---------------------------------------------------------------------------
// raw (partial) schema

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    repetitions: Option<usize>,
    standardize: Option<bool>,
    dataset: RawDataset,
    split: Option<RawSplit>,
    noise: Option<NoiseConfig>,
    methods: Vec<RawMethod>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    kind: String,
    tasks: Option<usize>,
    features: Option<usize>,
    samples_per_task: Option<usize>,
    rank: Option<usize>,
    noise_std: Option<f64>,
    path: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplit {
    train_fraction: Option<f64>,
    train_fractions: Option<Vec<f64>>,
    per_task: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMethod {
    name: MethodName,
    gamma: Option<f64>,
    /// Accepted alias for `gamma` on the ridge baseline.
    lambda: Option<f64>,
    k: Option<usize>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    eps: Option<f64>,
    init: Option<InitKind>,
    lambda0: Option<f64>,
}

/// Command-line overrides applied before resolution.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub standardize: bool,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        config_err(format!("cannot read config {}: {e}", path.display()))
    })?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| config_err(format!("config parse error in {}: {e}", path.display())))?;
    resolve(raw, overrides)
}

pub fn parse_config(text: &str, overrides: &Overrides) -> Result<ExperimentConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| config_err(format!("config parse error: {e}")))?;
    resolve(raw, overrides)
}

fn resolve(raw: RawConfig, overrides: &Overrides) -> Result<ExperimentConfig> {
    let dataset = match raw.dataset.kind.as_str() {
        "synthetic" => {
            let tasks = raw.dataset.tasks.unwrap_or(25);
            let features = raw.dataset.features.unwrap_or(100);
            let samples_per_task = raw.dataset.samples_per_task.unwrap_or(400);
            let rank = raw.dataset.rank.unwrap_or(5);
            let noise_std = raw.dataset.noise_std.unwrap_or(1.0);
            if tasks == 0 || features == 0 || samples_per_task == 0 {
                return Err(config_err("dataset sizes must be positive"));
            }
            // a full-rank "low-rank" ground truth is a degenerate request
            if rank >= tasks.min(features) {
                return Err(config_err(format!(
                    "rank = {rank} must be strictly below min(features, tasks) = {}",
                    tasks.min(features)
                )));
            }
            if !noise_std.is_finite() || noise_std < 0.0 {
                return Err(config_err("noise_std must be non-negative"));
            }
            DatasetConfig::Synthetic {
                tasks,
                features,
                samples_per_task,
                rank,
                noise_std,
            }
        }
        "csv" => DatasetConfig::Csv {
            path: raw
                .dataset
                .path
                .ok_or_else(|| config_err("dataset.kind = \"csv\" requires dataset.path"))?,
        },
        other => {
            return Err(config_err(format!(
                "unknown dataset.kind `{other}` (expected synthetic or csv)"
            )))
        }
    };

    let split = match raw.split {
        Some(raw_split) => {
            let fractions = match (raw_split.train_fraction, raw_split.train_fractions) {
                (Some(_), Some(_)) => {
                    return Err(config_err(
                        "set either split.train_fraction or split.train_fractions, not both",
                    ))
                }
                (Some(f), None) => vec![f],
                (None, Some(fs)) => fs,
                (None, None) => vec![0.5],
            };
            SplitConfig {
                train_fractions: fractions,
                per_task: raw_split.per_task.unwrap_or(true),
            }
        }
        None => SplitConfig {
            train_fractions: vec![0.5],
            per_task: true,
        },
    };
    if split.train_fractions.is_empty() {
        return Err(config_err("split.train_fractions must not be empty"));
    }
    for &f in &split.train_fractions {
        if !f.is_finite() || f <= 0.0 || f >= 1.0 {
            return Err(config_err(format!(
                "train fraction {f} must lie strictly between 0 and 1"
            )));
        }
    }

    if let Some(noise) = &raw.noise {
        if !(0.0..=1.0).contains(&noise.task_fraction) {
            return Err(config_err("noise.task_fraction must lie in [0, 1]"));
        }
        if !noise.variance.is_finite() || noise.variance < 0.0 {
            return Err(config_err("noise.variance must be non-negative"));
        }
    }

    if raw.methods.is_empty() {
        return Err(config_err("at least one [[methods]] entry is required"));
    }
    let methods = raw
        .methods
        .into_iter()
        .map(|m| {
            let gamma = match (m.gamma, m.lambda) {
                (Some(_), Some(_)) => {
                    return Err(config_err(format!(
                        "method {}: set gamma or lambda, not both",
                        m.name
                    )))
                }
                (Some(g), None) => g,
                (None, Some(l)) => {
                    if m.name != MethodName::Ridge {
                        return Err(config_err(format!(
                            "method {}: `lambda` is only accepted for ridge",
                            m.name
                        )));
                    }
                    l
                }
                (None, None) => m.name.default_gamma(),
            };
            if !gamma.is_finite() || gamma < 0.0 {
                return Err(config_err(format!(
                    "method {}: penalty weight must be finite and non-negative",
                    m.name
                )));
            }
            if m.name == MethodName::Ridge && gamma == 0.0 {
                return Err(config_err("ridge requires a positive lambda"));
            }
            let k = match m.name {
                MethodName::Kmsv | MethodName::KmsvNew => Some(m.k.ok_or_else(|| {
                    config_err(format!("method {}: `k` is required", m.name))
                })?),
                MethodName::Ridge | MethodName::Trace => {
                    if m.k.is_some() {
                        return Err(config_err(format!(
                            "method {}: `k` is not a parameter here",
                            m.name
                        )));
                    }
                    None
                }
            };
            let tol = m.tol.unwrap_or(1e-7);
            let eps = m.eps.unwrap_or(1e-8);
            let max_iter = m.max_iter.unwrap_or(100);
            if max_iter == 0 || !tol.is_finite() || tol <= 0.0 || !eps.is_finite() || eps <= 0.0 {
                return Err(config_err(format!(
                    "method {}: max_iter must be ≥ 1 and tol/eps positive",
                    m.name
                )));
            }
            Ok(MethodConfig {
                name: m.name,
                gamma,
                k,
                max_iter,
                tol,
                eps,
                init: m.init.unwrap_or(InitKind::Ridge),
                lambda0: m.lambda0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    for (i, m) in methods.iter().enumerate() {
        if methods[..i].iter().any(|prev| prev.name == m.name) {
            return Err(config_err(format!(
                "method {} appears twice; output directories key on the name",
                m.name
            )));
        }
    }

    let repetitions = raw.repetitions.unwrap_or(1);
    if repetitions == 0 {
        return Err(config_err("repetitions must be at least 1"));
    }

    Ok(ExperimentConfig {
        seed: overrides.seed.or(raw.seed).unwrap_or(0),
        output_dir: overrides
            .output_dir
            .clone()
            .or(raw.output_dir)
            .unwrap_or_else(|| PathBuf::from("runs/out")),
        repetitions,
        standardize: overrides.standardize || raw.standardize.unwrap_or(false),
        dataset,
        split,
        noise: raw.noise,
        methods,
    })
}

impl ExperimentConfig {
    /// Canonical text form written as `config_resolved.toml`.
    pub fn echo(&self) -> String {
        toml::to_string_pretty(self).expect("resolved config serializes")
    }

    /// First 16 hex chars of the SHA-256 of the echo.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    /// Directory tag for a training fraction, e.g. 0.3 → `rate0p3`.
    pub fn rate_tag(fraction: f64) -> String {
        let mut text = format!("{fraction}");
        if let Some(stripped) = text.strip_prefix("0.") {
            text = format!("0p{stripped}");
        } else {
            text = text.replace('.', "p");
        }
        format!("rate{text}")
    }
}
