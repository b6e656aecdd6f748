//! Flat `key=value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; [`KEYS`] lists each key with its default and meaning. Unknown
//! keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::{CsvOptions, MarkerColumn, PipelineConfig};
use crate::detector::ThresholdMethod;
use crate::error::{Error, Result};
use crate::federation::{EtaSchedule, FederationConfig, PartitionScheme};
use crate::fsio::read_string;
use crate::nn::{Activation, Loss};
use crate::quantizer::DpConfig;

/// `(key, default, description)` for every accepted key.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("clients", "4", "number of zones K"),
    ("rounds", "300", "communication rounds T"),
    ("local_batches", "1", "mini-batches averaged into each local gradient"),
    ("batch_size", "100", "mini-batch size"),
    ("eta", "0.001", "learning rate (initial rate for inverse_sqrt)"),
    ("eta_schedule", "constant", "constant | inverse_sqrt"),
    ("quantization", "true", "send sign-quantized gradients (false: full precision)"),
    ("normalize", "true", "subtract the gradient mean before signing"),
    ("dp_enabled", "false", "add clipped Gaussian noise before signing"),
    ("dp_epsilon", "1", "privacy epsilon"),
    ("dp_delta", "0.00001", "privacy delta"),
    ("dp_clip", "1", "per-coordinate clipping bound"),
    ("seed", "42", "global seed for split, partition, init and client streams"),
    ("k_impute", "5", "neighbours used for missing-value imputation"),
    ("pca_p", "100", "principal components kept (clamped to the feature count); 0 disables PCA"),
    ("test_fraction", "0.3", "held-out fraction"),
    ("stratified", "true", "keep label ratios in the split"),
    ("partition", "dirichlet", "iid | dirichlet | by_file"),
    ("dirichlet_alpha", "0.5", "concentration of the per-class zone proportions"),
    ("hidden", "64,48,32,24,16", "encoder widths; the decoder mirrors them"),
    ("activation", "relu", "hidden activation: relu | identity"),
    ("output_activation", "identity", "reconstruction activation: relu | identity"),
    ("init", "he", "he | cd1 (contrastive-divergence pretraining of the encoder)"),
    ("cd1_epochs", "5", "pretraining epochs per layer"),
    ("cd1_lr", "0.05", "pretraining learning rate"),
    ("train_on", "natural", "natural | all: which zone samples train the autoencoder"),
    ("detector", "knee", "knee | percentile:<q>"),
    ("softmax_head", "false", "also fit a two-class softmax head on the encoder"),
    ("head_rounds", "100", "rounds of the head-fitting federation"),
    ("head_eta", "0.001", "learning rate of the head-fitting federation"),
    ("target_loss", "0.01", "global loss that counts as converged in comparisons"),
    ("marker_column", "marker", "label column: a header name, #<index> or last"),
    ("natural_markers", "Natural", "comma-separated marker values meaning Natural"),
    ("attack_markers", "Attack", "comma-separated marker values meaning Attack"),
    ("missing_tokens", ",NaN,nan,NA,inf,-inf,Inf,-Inf,Infinity,-Infinity", "comma-separated cell values treated as missing"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionKind {
    Iid,
    Dirichlet,
    ByFile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    He,
    Cd1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainOn {
    Natural,
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub federation: FederationConfig,
    pub pipeline: PipelineConfig,
    pub partition: PartitionKind,
    pub dirichlet_alpha: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub output_activation: Activation,
    pub init: InitKind,
    pub cd1_epochs: usize,
    pub cd1_lr: f64,
    pub train_on: TrainOn,
    pub detector: ThresholdMethod,
    pub softmax_head: bool,
    pub head_rounds: u32,
    pub head_eta: f64,
    pub target_loss: f64,
    pub csv: CsvOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut cfg = Self {
            federation: FederationConfig::default(),
            pipeline: PipelineConfig::default(),
            partition: PartitionKind::Dirichlet,
            dirichlet_alpha: 0.0,
            hidden: vec![],
            activation: Activation::Relu,
            output_activation: Activation::Identity,
            init: InitKind::He,
            cd1_epochs: 0,
            cd1_lr: 0.0,
            train_on: TrainOn::Natural,
            detector: ThresholdMethod::KneeMaxChordDistance,
            softmax_head: false,
            head_rounds: 0,
            head_eta: 0.0,
            target_loss: 0.0,
            csv: CsvOptions::default(),
        };
        for (k, v, _) in KEYS {
            cfg.set(k, v).expect("built-in defaults parse");
        }
        cfg
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).collect()
}

fn hidden_activation(key: &str, v: &str) -> Result<Activation> {
    match Activation::parse(v)? {
        Activation::Softmax => Err(Error::Config(format!("{key}: softmax is only used by the head"))),
        a => Ok(a),
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&read_string(path)?)
    }

    /// Defaults overridden by the given text.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let f = &mut self.federation;
        match key {
            "clients" => f.clients = parse(key, v)?,
            "rounds" => f.rounds = parse(key, v)?,
            "local_batches" => f.local_batches_per_round = parse(key, v)?,
            "batch_size" => f.batch_size = parse(key, v)?,
            "eta" => {
                let eta = parse(key, v)?;
                f.eta = match f.eta {
                    EtaSchedule::Constant(_) => EtaSchedule::Constant(eta),
                    EtaSchedule::InverseSqrt(_) => EtaSchedule::InverseSqrt(eta),
                }
            }
            "eta_schedule" => {
                let eta = f.eta.base();
                f.eta = match v {
                    "constant" => EtaSchedule::Constant(eta),
                    "inverse_sqrt" => EtaSchedule::InverseSqrt(eta),
                    _ => return Err(Error::Config(format!("{key}: unknown schedule '{v}'"))),
                }
            }
            "quantization" => f.quantization_enabled = parse_bool(key, v)?,
            "normalize" => f.normalize = parse_bool(key, v)?,
            "dp_enabled" => f.dp.enabled = parse_bool(key, v)?,
            "dp_epsilon" => f.dp.epsilon = parse(key, v)?,
            "dp_delta" => f.dp.delta = parse(key, v)?,
            "dp_clip" => f.dp.clip_norm = parse(key, v)?,
            "seed" => {
                let seed = parse(key, v)?;
                f.global_seed = seed;
                self.pipeline.seed = seed;
            }
            "k_impute" => self.pipeline.k_impute = parse(key, v)?,
            "pca_p" => self.pipeline.pca_p = parse(key, v)?,
            "test_fraction" => self.pipeline.test_fraction = parse(key, v)?,
            "stratified" => self.pipeline.stratified = parse_bool(key, v)?,
            "partition" => {
                self.partition = match v {
                    "iid" => PartitionKind::Iid,
                    "dirichlet" => PartitionKind::Dirichlet,
                    "by_file" => PartitionKind::ByFile,
                    _ => return Err(Error::Config(format!("{key}: unknown scheme '{v}'"))),
                }
            }
            "dirichlet_alpha" => self.dirichlet_alpha = parse(key, v)?,
            "hidden" => {
                self.hidden = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "activation" => self.activation = hidden_activation(key, v)?,
            "output_activation" => self.output_activation = hidden_activation(key, v)?,
            "init" => {
                self.init = match v {
                    "he" => InitKind::He,
                    "cd1" => InitKind::Cd1,
                    _ => return Err(Error::Config(format!("{key}: unknown init '{v}'"))),
                }
            }
            "cd1_epochs" => self.cd1_epochs = parse(key, v)?,
            "cd1_lr" => self.cd1_lr = parse(key, v)?,
            "train_on" => {
                self.train_on = match v {
                    "natural" => TrainOn::Natural,
                    "all" => TrainOn::All,
                    _ => return Err(Error::Config(format!("{key}: expected natural or all, got '{v}'"))),
                }
            }
            "detector" => self.detector = ThresholdMethod::parse(v)?,
            "softmax_head" => self.softmax_head = parse_bool(key, v)?,
            "head_rounds" => self.head_rounds = parse(key, v)?,
            "head_eta" => self.head_eta = parse(key, v)?,
            "target_loss" => self.target_loss = parse(key, v)?,
            "marker_column" => {
                self.csv.marker = if v == "last" {
                    MarkerColumn::Last
                } else if let Some(i) = v.strip_prefix('#') {
                    MarkerColumn::Index(parse(key, i)?)
                } else {
                    MarkerColumn::Name(v.to_string())
                }
            }
            "natural_markers" => self.csv.natural_markers = list(v),
            "attack_markers" => self.csv.attack_markers = list(v),
            "missing_tokens" => self.csv.missing_tokens = list(v),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Current value of `key` in the form accepted by [`set`](Self::set).
    pub fn get(&self, key: &str) -> Result<String> {
        let f = &self.federation;
        Ok(match key {
            "clients" => f.clients.to_string(),
            "rounds" => f.rounds.to_string(),
            "local_batches" => f.local_batches_per_round.to_string(),
            "batch_size" => f.batch_size.to_string(),
            "eta" => f.eta.base().to_string(),
            "eta_schedule" => match f.eta {
                EtaSchedule::Constant(_) => "constant".into(),
                EtaSchedule::InverseSqrt(_) => "inverse_sqrt".into(),
            },
            "quantization" => f.quantization_enabled.to_string(),
            "normalize" => f.normalize.to_string(),
            "dp_enabled" => f.dp.enabled.to_string(),
            "dp_epsilon" => f.dp.epsilon.to_string(),
            "dp_delta" => f.dp.delta.to_string(),
            "dp_clip" => f.dp.clip_norm.to_string(),
            "seed" => f.global_seed.to_string(),
            "k_impute" => self.pipeline.k_impute.to_string(),
            "pca_p" => self.pipeline.pca_p.to_string(),
            "test_fraction" => self.pipeline.test_fraction.to_string(),
            "stratified" => self.pipeline.stratified.to_string(),
            "partition" => match self.partition {
                PartitionKind::Iid => "iid".into(),
                PartitionKind::Dirichlet => "dirichlet".into(),
                PartitionKind::ByFile => "by_file".into(),
            },
            "dirichlet_alpha" => self.dirichlet_alpha.to_string(),
            "hidden" => self.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","),
            "activation" => self.activation.as_str().into(),
            "output_activation" => self.output_activation.as_str().into(),
            "init" => match self.init {
                InitKind::He => "he".into(),
                InitKind::Cd1 => "cd1".into(),
            },
            "cd1_epochs" => self.cd1_epochs.to_string(),
            "cd1_lr" => self.cd1_lr.to_string(),
            "train_on" => match self.train_on {
                TrainOn::Natural => "natural".into(),
                TrainOn::All => "all".into(),
            },
            "detector" => self.detector.name(),
            "softmax_head" => self.softmax_head.to_string(),
            "head_rounds" => self.head_rounds.to_string(),
            "head_eta" => self.head_eta.to_string(),
            "target_loss" => self.target_loss.to_string(),
            "marker_column" => match &self.csv.marker {
                MarkerColumn::Last => "last".into(),
                MarkerColumn::Index(i) => format!("#{i}"),
                MarkerColumn::Name(n) => n.clone(),
            },
            "natural_markers" => self.csv.natural_markers.join(","),
            "attack_markers" => self.csv.attack_markers.join(","),
            "missing_tokens" => self.csv.missing_tokens.join(","),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        })
    }

    /// Every key with its resolved value, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, _, _) in KEYS {
            let _ = writeln!(s, "{k}={}", self.get(k).expect("listed key"));
        }
        s
    }

    /// Defaults with one comment line per key.
    pub fn template() -> String {
        let mut s = String::new();
        for (k, v, doc) in KEYS {
            let _ = writeln!(s, "# {doc}\n{k}={v}");
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.federation.validate()?;
        if self.hidden.is_empty() {
            return Err(Error::Config("hidden: at least one layer width is required".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden: widths must be positive".into()));
        }
        if self.pipeline.k_impute == 0 {
            return Err(Error::Config("k_impute must be positive".into()));
        }
        let tf = self.pipeline.test_fraction;
        if !(tf > 0.0 && tf < 1.0) {
            return Err(Error::Config(format!("test_fraction {tf} is outside (0, 1)")));
        }
        let a = self.dirichlet_alpha;
        if self.partition == PartitionKind::Dirichlet && !(a > 0.0 && a.is_finite()) {
            return Err(Error::Config(format!("dirichlet_alpha {a} must be positive")));
        }
        if self.softmax_head && !(self.head_eta > 0.0 && self.head_eta < 1.0) {
            return Err(Error::Config(format!("head_eta {} is outside (0, 1)", self.head_eta)));
        }
        Ok(())
    }

    pub fn partition_scheme(&self) -> PartitionScheme {
        match self.partition {
            PartitionKind::Iid => PartitionScheme::IidUniform,
            PartitionKind::Dirichlet => PartitionScheme::Dirichlet(self.dirichlet_alpha),
            PartitionKind::ByFile => PartitionScheme::ByScenarioFile,
        }
    }

    /// Federation settings of the head-fitting phase.
    pub fn head_federation(&self) -> FederationConfig {
        FederationConfig {
            rounds: self.head_rounds,
            eta: match self.federation.eta {
                EtaSchedule::Constant(_) => EtaSchedule::Constant(self.head_eta),
                EtaSchedule::InverseSqrt(_) => EtaSchedule::InverseSqrt(self.head_eta),
            },
            loss: Loss::CrossEntropy,
            ..self.federation.clone()
        }
    }

    pub fn dp(&self) -> DpConfig {
        self.federation.dp
    }
}
