use std::path::{Path, PathBuf};

use opmean::means::{MeanSpec, RepresentingFunction, Weights};
use opmean::random::{PdLaw, RandomPDSource};
use opmean::tensor::{TensorShape, ToleranceConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Base mean of a deformed mean in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    Arithmetic,
    Harmonic,
}

/// Mean descriptor; the weights come from the surrounding config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanDescriptor {
    Arithmetic,
    Harmonic,
    Karcher,
    Power { q: f64 },
    /// `base` deformed by `#_q`.
    Deformed { base: BaseKind, q: f64 },
}

impl MeanDescriptor {
    pub fn to_spec(&self, weights: &Weights) -> MeanSpec {
        let w = weights.clone();
        match *self {
            Self::Arithmetic => MeanSpec::arithmetic(w),
            Self::Harmonic => MeanSpec::harmonic(w),
            Self::Karcher => MeanSpec::karcher(w),
            Self::Power { q } => MeanSpec::power(w, q),
            Self::Deformed { base, q } => {
                let base = match base {
                    BaseKind::Arithmetic => MeanSpec::arithmetic(w),
                    BaseKind::Harmonic => MeanSpec::harmonic(w),
                };
                MeanSpec::deformed(base, RepresentingFunction::power(q))
            }
        }
    }

    /// Replaces the exponent of power and deformed means; other kinds ignore `q`.
    pub fn with_q(&self, q: f64) -> Self {
        match *self {
            Self::Power { .. } => Self::Power { q },
            Self::Deformed { base, .. } => Self::Deformed { base, q },
            other => other,
        }
    }

    pub fn uses_q(&self) -> bool {
        matches!(self, Self::Power { .. } | Self::Deformed { .. })
    }
}

fn default_mean() -> MeanDescriptor {
    MeanDescriptor::Power { q: 0.5 }
}

fn default_p_values() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.0, 3.0]
}

fn default_q_values() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

fn default_r_values() -> Vec<f64> {
    vec![1.0]
}

fn default_c_values() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}

fn default_source() -> PdLaw {
    PdLaw::SpectralUniform { m: 0.5, big_m: 4.0 }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One batch experiment as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub shape: TensorShape,
    pub k: usize,
    /// Uniform when omitted.
    #[serde(default)]
    pub weights: Option<Weights>,
    #[serde(default = "default_mean")]
    pub mean: MeanDescriptor,
    #[serde(default = "default_p_values")]
    pub p_values: Vec<f64>,
    /// Positive exponents; suites that need `-q` derive it.
    #[serde(default = "default_q_values")]
    pub q_values: Vec<f64>,
    #[serde(default = "default_r_values")]
    pub r_values: Vec<f64>,
    /// Tail-bound thresholds as multiples of the mean top eigenvalue of the statistic.
    #[serde(default = "default_c_values")]
    pub c_values: Vec<f64>,
    #[serde(default = "default_source")]
    pub source: PdLaw,
    pub trials: u64,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Tensor files for `mean`, resolved against the config file's directory.
    /// When empty, the inputs of trial 0 of `source` are used.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    /// Negative-control hook: negates every verdict margin before judging.
    #[serde(default)]
    pub flip: bool,
}

impl ExperimentConfig {
    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config: Self = serde_json::from_str(&text).map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for input in &mut config.inputs {
            if input.is_relative() {
                *input = base.join(&*input);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if let Some(w) = &self.weights {
            if w.len() != self.k {
                return bad(format!("{} weights for k = {}", w.len(), self.k));
            }
        }
        if self.p_values.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return bad("p_values must be positive".into());
        }
        if self.q_values.iter().any(|q| !(*q > 0.0 && *q <= 1.0)) {
            return bad("q_values must lie in (0, 1]".into());
        }
        if self.r_values.iter().any(|r| !(r.is_finite() && *r >= 1.0)) {
            return bad("r_values must be at least 1".into());
        }
        if self.c_values.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return bad("c_values must be positive".into());
        }
        self.tolerances.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.mean
            .to_spec(&self.weights()?)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.source().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn weights(&self) -> CliResult<Weights> {
        match &self.weights {
            Some(w) => Ok(w.clone()),
            None => Weights::uniform(self.k).map_err(|e| CliError::Config(e.to_string())),
        }
    }

    pub fn source(&self) -> opmean::Result<RandomPDSource> {
        RandomPDSource::new(self.shape.clone(), self.source.clone(), self.seed)
    }

    /// Source with the same law on an independent seed, for auxiliary draws.
    pub fn aux_source(&self, salt: u64) -> opmean::Result<RandomPDSource> {
        RandomPDSource::new(self.shape.clone(), self.source.clone(), self.seed.wrapping_add(salt))
    }

    pub fn require(&self, field: &str, values: &[f64]) -> CliResult<()> {
        if values.is_empty() {
            return Err(CliError::Config(format!("{field} must not be empty for this command")));
        }
        Ok(())
    }
}
