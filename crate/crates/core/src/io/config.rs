//! Run configuration file.
//!
//! Top-level keys carry the training hyperparameters; tables hold the data
//! pipeline settings. Every key is optional and unknown keys are rejected.
//!
//! ```toml
//! layers = 6
//! hidden = 64
//! heads = 4
//! activation = "tanh"
//! lr = 0.001
//! batch_size = 200
//! l2 = 1e-5
//! epochs = 1000
//! variant = "d"
//! channel = "stress"
//!
//! [data]
//! cases = 400
//!
//! [geometry]
//! plate_thickness = { lower = 0.005, upper = 0.010 }
//! n_stiffeners = [2, 7]
//!
//! [oracle]
//! residual_tol = 1e-10
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FeatureScales, Variant};
use crate::nn::{Activation, NetworkConfig};
use crate::oracle::{Channel, OracleConfig};
use crate::panel::{BcSpec, CaseSpec, GeometryRanges, LoadSpec, MaterialLaw};
use crate::training::{SearchSpace, TrainConfig};

/// Dataset size and partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Dataset archive; empty means the default location.
    pub path: String,
    pub cases: usize,
    /// Seed of the case draws.
    pub seed: u64,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub split_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: String::new(),
            cases: 400,
            seed: 0,
            split: [0.8, 0.1, 0.1],
            split_seed: 0,
        }
    }
}

/// Repeated-run protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Runs per configuration.
    pub repeats: usize,
    /// Master seed the per-run seeds derive from.
    pub master_seed: u64,
    pub variants: Vec<Variant>,
    /// Configurations drawn by the quasi-random search.
    pub budget: usize,
    /// Training-set sizes of the data-size study.
    pub sizes: Vec<usize>,
    pub search: SearchSpace,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            repeats: 5,
            master_seed: 0,
            variants: Variant::HETERO.to_vec(),
            budget: 20,
            sizes: vec![100, 200, 320],
            search: SearchSpace::default(),
        }
    }
}

/// Everything a command needs besides its flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub activation: Activation,
    pub lr: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub epochs: usize,
    pub bn_momentum: f64,
    pub variant: Variant,
    pub channel: Channel,
    pub seed: u64,
    pub data: DataConfig,
    pub geometry: GeometryRanges,
    pub material: MaterialLaw,
    pub boundary: BcSpec,
    pub loads: LoadSpec,
    pub oracle: OracleConfig,
    pub features: FeatureScales,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_parts(&TrainConfig::default(), &CaseSpec::default())
    }
}

impl RunConfig {
    pub fn from_parts(t: &TrainConfig, spec: &CaseSpec) -> Self {
        Self {
            layers: t.network.layers,
            hidden: t.network.hidden,
            heads: t.network.heads,
            activation: t.network.activation,
            lr: t.lr,
            batch_size: t.batch_size,
            l2: t.l2,
            epochs: t.epochs,
            bn_momentum: t.bn_momentum,
            variant: t.variant,
            channel: t.channel,
            seed: t.seed,
            data: DataConfig::default(),
            geometry: spec.ranges,
            material: spec.material,
            boundary: spec.boundary,
            loads: spec.loads,
            oracle: OracleConfig::default(),
            features: FeatureScales::default(),
            experiment: ExperimentConfig::default(),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            variant: self.variant,
            channel: self.channel,
            network: NetworkConfig {
                layers: self.layers,
                hidden: self.hidden,
                heads: self.heads,
                activation: self.activation,
            },
            lr: self.lr,
            l2: self.l2,
            batch_size: self.batch_size,
            epochs: self.epochs,
            bn_momentum: self.bn_momentum,
            seed: self.seed,
        }
    }

    pub fn case_spec(&self) -> CaseSpec {
        CaseSpec {
            ranges: self.geometry,
            material: self.material,
            boundary: self.boundary,
            loads: self.loads,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        self.geometry.validate()?;
        self.material.validate()?;
        self.oracle.validate()?;
        self.experiment.search.validate()?;
        let s = self.data.split;
        if s.iter().any(|f| !(0.0..=1.0).contains(f)) || (s.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("data.split {s:?} must lie in [0, 1] and sum to 1")));
        }
        for (name, v) in [
            ("seed", self.seed),
            ("data.seed", self.data.seed),
            ("data.split_seed", self.data.split_seed),
            ("experiment.master_seed", self.experiment.master_seed),
        ] {
            if i64::try_from(v).is_err() {
                return Err(Error::Config(format!("{name} = {v} exceeds {}", i64::MAX)));
            }
        }
        if self.experiment.repeats == 0 {
            return Err(Error::Config("experiment.repeats must be at least 1".into()));
        }
        Ok(())
    }

    /// TOML rendering that [`parse_config`] reads back unchanged.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot render configuration: {e}")))
    }
}

/// 1-based line of the first assignment to `key` inside `section`.
fn key_line(src: &str, section: &[String], key: &str) -> Option<usize> {
    let header = section.join(".");
    let mut current = String::new();
    let mut fallback = None;
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[') {
            current = h.trim_start_matches('[').split(']').next().unwrap_or("").trim().to_string();
            continue;
        }
        let assigns = |s: &str| {
            s.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        };
        if current == header && assigns(t) {
            return Some(i + 1);
        }
        if fallback.is_none() && t.split([',', '{']).any(|part| assigns(part.trim())) {
            fallback = Some(i + 1);
        }
    }
    fallback
}

fn check_keys(src: &str, given: &toml::Table, known: &toml::Table, path: &mut Vec<String>) -> Result<()> {
    for (k, v) in given {
        let Some(reference) = known.get(k) else {
            let best = known
                .keys()
                .map(|c| (strsim::jaro_winkler(k, c), c))
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .filter(|(score, _)| *score > 0.7)
                .map(|(_, c)| format!("; did you mean `{c}`?"))
                .unwrap_or_default();
            let at = key_line(src, path, k).map(|l| format!("line {l}: ")).unwrap_or_default();
            let full = path.iter().chain([k]).cloned().collect::<Vec<_>>().join(".");
            return Err(Error::Config(format!("{at}unknown key `{full}`{best}")));
        };
        if let (toml::Value::Table(g), toml::Value::Table(r)) = (v, reference) {
            path.push(k.clone());
            check_keys(src, g, r, path)?;
            path.pop();
        }
    }
    Ok(())
}

/// Parses and validates a configuration. Missing keys take the defaults.
pub fn parse_config(src: &str) -> Result<RunConfig> {
    let given: toml::Table = src.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let known = toml::Table::try_from(RunConfig::default())
        .map_err(|e| Error::Config(format!("cannot render defaults: {e}")))?;
    check_keys(src, &given, &known, &mut Vec::new())?;
    let cfg: RunConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&src).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
