//! Run configuration: a JSON file plus `--set dotted.path=value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use bhlr::{
    EmbeddingKind, Execution, GeneratingFunction, IndexPolicy, LinkFunction, LossSpec, Projection, SamplerConfig, Schedule, StepRule,
    TrainConfig,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Mse,
    RocAuc,
}

impl Metric {
    pub fn key(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::RocAuc => "roc_auc",
        }
    }

    pub fn higher_is_better(self) -> bool {
        self == Metric::RocAuc
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mse" => Ok(Metric::Mse),
            "roc-auc" | "roc_auc" | "auc" => Ok(Metric::RocAuc),
            _ => Err(format!("unknown metric {s:?} (mse or roc-auc)")),
        }
    }
}

/// A vectors file with an optional hyperedge file. Without edges every
/// weight is zero.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFiles {
    pub vectors: PathBuf,
    #[serde(default)]
    pub edges: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Option<NetworkFiles>,
    /// JSON tensor trained as a matrix or tensor completion problem.
    pub tensor: Option<PathBuf>,
    pub validation: Option<NetworkFiles>,
    pub arity: usize,
    pub policy: IndexPolicy,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { train: None, tensor: None, validation: None, arity: 2, policy: IndexPolicy::DistinctEntries }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embedding: EmbeddingKind,
    pub k: usize,
    pub hidden: usize,
    pub link: LinkFunction,
    pub seed: u64,
    /// Warm start from a checkpoint instead of a random draw.
    pub init: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { embedding: EmbeddingKind::Mlp1, k: 5, hidden: 32, link: LinkFunction::Sigmoid, seed: 0, init: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub divergence: String,
    pub eta_scale: f64,
    pub clamp_margin: f64,
    pub execution: Execution,
    pub force: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { divergence: "logistic".into(), eta_scale: 1.0, clamp_margin: 1e-7, execution: Execution::Sequential, force: false }
    }
}

impl LossConfig {
    pub fn spec(&self) -> CliResult<LossSpec> {
        let g: GeneratingFunction = self.divergence.parse()?;
        let mut spec = LossSpec::new(g).with_eta(self.eta_scale).with_clamp_margin(self.clamp_margin).with_execution(self.execution);
        spec.force = self.force;
        spec.validate_params()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub rule: StepRule,
    pub weight_decay: f64,
    pub iterations: usize,
    pub tau_sampling: bool,
    pub h_estimate: Option<f64>,
    pub projection: Projection,
    pub full_batch: bool,
    pub practical_scaling: bool,
    pub track_loss: bool,
    pub patience: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let s = Schedule::default();
        Self {
            rule: s.rule,
            weight_decay: s.weight_decay,
            iterations: s.iterations,
            tau_sampling: false,
            h_estimate: None,
            projection: Projection::None,
            full_batch: false,
            practical_scaling: false,
            track_loss: true,
            patience: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Zero-weight candidates drawn per anchor node for ROC-AUC.
    pub per_anchor: usize,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { per_anchor: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub checkpoint: PathBuf,
    pub best_checkpoint: PathBuf,
    pub history: PathBuf,
    /// Adam moments, written only when set and Adam is used.
    pub optimizer_state: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { checkpoint: "model.json".into(), best_checkpoint: "best.json".into(), history: "history.csv".into(), optimizer_state: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub loss: LossConfig,
    pub sampler: SamplerConfig,
    pub optimizer: OptimizerConfig,
    pub metric: Metric,
    /// Iterations between history records and validation scores.
    pub eval_cadence: usize,
    pub protocol: ProtocolConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            model: ModelConfig::default(),
            loss: LossConfig::default(),
            sampler: SamplerConfig::default(),
            optimizer: OptimizerConfig::default(),
            metric: Metric::RocAuc,
            eval_cadence: 50,
            protocol: ProtocolConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads the file (if any), applies overrides in order, then validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut root = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(root).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        match (&self.data.train, &self.data.tensor) {
            (None, None) => return Err(CliError::config("data.train or data.tensor is required")),
            (Some(_), Some(_)) => return Err(CliError::config("set only one of data.train and data.tensor")),
            _ => {}
        }
        if self.data.arity == 0 {
            return Err(CliError::config("data.arity must be at least 1"));
        }
        self.loss.spec()?;
        self.schedule().validate()?;
        if !self.optimizer.full_batch {
            self.sampler.validate(self.data.arity)?;
        }
        Ok(())
    }

    pub fn schedule(&self) -> Schedule {
        let o = &self.optimizer;
        Schedule {
            rule: o.rule,
            weight_decay: o.weight_decay,
            iterations: o.iterations,
            tau_sampling: o.tau_sampling,
            h_estimate: o.h_estimate,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let o = &self.optimizer;
        TrainConfig {
            schedule: self.schedule(),
            projection: o.projection.clone(),
            sampler: self.sampler.clone(),
            full_batch: o.full_batch,
            practical_scaling: o.practical_scaling,
            eval_every: self.eval_cadence,
            track_loss: o.track_loss,
            maximize_metric: self.metric.higher_is_better(),
            patience: o.patience,
        }
    }
}

/// `a.b.c=value`: the value is read as JSON when it parses, else as a string.
pub fn apply_override(root: &mut Value, spec: &str) -> CliResult<()> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| CliError::config(format!("override {spec:?} is not of the form key=value")))?;
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(CliError::config(format!("bad override key {path:?}")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for key in path.split('.') {
        if !node.is_object() {
            return Err(CliError::config(format!("override {path:?} descends into a non-object")));
        }
        node = node.as_object_mut().unwrap().entry(key).or_insert(Value::Object(Default::default()));
    }
    *node = value;
    Ok(())
}
