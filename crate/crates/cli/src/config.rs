//! Run configuration: flat `key=value` text with section prefixes.
//!
//! Later sources override earlier ones: built-in defaults, the `--config` file,
//! `--set key=value` pairs, then dedicated flags. Unknown keys are rejected.
//!
//! | key | default |
//! |---|---|
//! | `seed` | `42` |
//! | `out` | `out` |
//! | `data.path` | `<out>/dataset.csv` |
//! | `data.schema` | `canonical` (or `gaitrec`, which needs `data.mapping`) |
//! | `input.layout` | `temporal_concat` (or `channel_stack`) |
//! | `input.components` | `V,AP,ML` |
//! | `model.layers` | the default CNN, e.g. `conv1d(8,9,1,4) relu maxpool(4,4) ...` |
//! | `train.epochs`, `train.batch_size`, `train.optimizer`, `train.lr`, ... | see [`TrainConfig`] |
//! | `cv.k`, `cv.parallel` | `10`, `true` |
//! | `lrp.rule` (both kinds), `lrp.dense`, `lrp.conv`, `lrp.target` | `epsilon(1e-6)`, `true` |
//! | `spm.alpha`, `spm.two_sided`, `spm.unit`, `spm.normalized` | `0.05`, `true`, `trial`, `false` |
//! | `regions.fraction`, `regions.literature` | `0.5`, none |
//! | `synth.subjects`, `synth.trials`, `synth.len`, `synth.center`, `synth.width`, `synth.amplitude`, `synth.noise` | see [`SyntheticSpec`] |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gaitxai::data::{ComponentSet, GaitRecMapping, InputLayout, InputSpec, Schema, SyntheticSpec};
use gaitxai::lrp::{LrpConfig, LrpRule, TargetPolicy};
use gaitxai::nn::{LayerGraph, LayerSpec, Shape, TrainConfig};
use gaitxai::spm::{AnalysisUnit, SpmConfig};

use crate::error::{CliError, Result};

/// Where the dataset comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSchema {
    Canonical,
    GaitRec { mapping: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data_path: Option<PathBuf>,
    pub schema: DataSchema,
    pub layout: InputLayout,
    pub components: ComponentSet,
    pub layers: Vec<LayerSpec>,
    pub train: TrainConfig,
    pub k: usize,
    pub parallel: bool,
    pub lrp: LrpConfig,
    pub target: TargetPolicy,
    pub spm: SpmConfig,
    pub unit: AnalysisUnit,
    pub normalized: bool,
    pub fraction: f64,
    pub literature: Option<PathBuf>,
    pub synth: SyntheticSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out: PathBuf::from("out"),
            data_path: None,
            schema: DataSchema::Canonical,
            layout: InputLayout::default(),
            components: ComponentSet::ALL,
            layers: LayerGraph::default_layers(),
            train: TrainConfig::default(),
            k: 10,
            parallel: true,
            lrp: LrpConfig::default(),
            target: TargetPolicy::default(),
            spm: SpmConfig::default(),
            unit: AnalysisUnit::default(),
            normalized: false,
            fraction: 0.5,
            literature: None,
            synth: SyntheticSpec::default(),
        }
    }
}

/// Parses `key=value` lines; `#` starts a comment line, blank lines are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("config line {}: expected key=value, got `{line}`", n + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::config(format!("config line {}: empty key", n + 1)));
        }
        pairs.push((k.to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| CliError::config(format!("cannot parse {key}=`{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::config(format!("{key} must be true or false, got `{value}`"))),
    }
}

impl RunConfig {
    /// Applies `pairs` in order on top of `self`.
    pub fn apply(mut self, pairs: &[(String, String)]) -> Result<Self> {
        let mut train_kv: BTreeMap<String, String> = self.train.to_kv().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let mut train_touched = false;
        for (key, value) in pairs {
            let (key, v) = (key.as_str(), value.as_str());
            match key {
                "seed" => self.seed = parse(key, v)?,
                "out" => self.out = PathBuf::from(v),
                "data.path" => self.data_path = Some(PathBuf::from(v)),
                "data.schema" => {
                    self.schema = match v {
                        "canonical" => DataSchema::Canonical,
                        "gaitrec" => match &self.schema {
                            DataSchema::GaitRec { mapping } => DataSchema::GaitRec { mapping: mapping.clone() },
                            DataSchema::Canonical => DataSchema::GaitRec { mapping: PathBuf::new() },
                        },
                        _ => return Err(CliError::config(format!("data.schema must be canonical or gaitrec, got `{v}`"))),
                    }
                }
                "data.mapping" => self.schema = DataSchema::GaitRec { mapping: PathBuf::from(v) },
                "input.layout" => self.layout = v.parse().map_err(CliError::config)?,
                "input.components" => self.components = v.parse().map_err(CliError::config)?,
                "model.layers" => {
                    self.layers = LayerGraph::parse_layers(v).map_err(|e| CliError::new("InvalidGraph", e.to_string()))?
                }
                "train.seed" => {
                    return Err(CliError::config("train.seed is derived from the global seed; set `seed` instead"))
                }
                "cv.k" => self.k = parse(key, v)?,
                "cv.parallel" => self.parallel = parse_bool(key, v)?,
                "lrp.rule" => self.lrp = LrpConfig::uniform(parse_rule(key, v)?),
                "lrp.dense" => self.lrp.dense = parse_rule(key, v)?,
                "lrp.conv" => self.lrp.conv = parse_rule(key, v)?,
                "lrp.target" => self.target = v.parse().map_err(|e: gaitxai::lrp::LrpError| CliError::config(e.to_string()))?,
                "spm.alpha" => self.spm.alpha = parse(key, v)?,
                "spm.two_sided" => self.spm.two_sided = parse_bool(key, v)?,
                "spm.unit" => self.unit = v.parse().map_err(|e: gaitxai::spm::SpmError| CliError::config(e.to_string()))?,
                "spm.normalized" => self.normalized = parse_bool(key, v)?,
                "regions.fraction" => self.fraction = parse(key, v)?,
                "regions.literature" => self.literature = Some(PathBuf::from(v)),
                "synth.subjects" => self.synth.n_subjects_per_class = parse(key, v)?,
                "synth.trials" => self.synth.trials_per_subject = parse(key, v)?,
                "synth.len" => self.synth.series_len = parse(key, v)?,
                "synth.center" => self.synth.bump_center = parse(key, v)?,
                "synth.width" => self.synth.bump_width = parse(key, v)?,
                "synth.amplitude" => self.synth.bump_amplitude = parse(key, v)?,
                "synth.noise" => self.synth.noise_sd = parse(key, v)?,
                other => match other.strip_prefix("train.") {
                    Some(sub) if train_kv.contains_key(sub) || is_train_key(sub) => {
                        if sub == "optimizer" && train_kv.get("optimizer").map(String::as_str) != Some(v) {
                            // Switching optimizers resets that optimizer's parameters.
                            train_kv.retain(|k, _| matches!(k.as_str(), "epochs" | "batch_size" | "init" | "seed"));
                        }
                        train_kv.insert(sub.to_string(), v.to_string());
                        train_touched = true;
                    }
                    _ => return Err(CliError::config(format!("unknown config key `{other}`"))),
                },
            }
        }
        if train_touched {
            self.train = TrainConfig::from_kv(&train_kv).map_err(|e| CliError::config(e.to_string()))?;
        }
        Ok(self)
    }

    /// Checks the cross-field invariants that single keys cannot.
    pub fn validate(&self) -> Result<()> {
        self.lrp.validate().map_err(|e| CliError::config(e.to_string()))?;
        if !(self.spm.alpha > 0.0 && self.spm.alpha < 1.0) {
            return Err(CliError::config(format!("spm.alpha must lie in (0, 1), got {}", self.spm.alpha)));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(CliError::config(format!("regions.fraction must lie in (0, 1], got {}", self.fraction)));
        }
        if self.k == 0 {
            return Err(CliError::config("cv.k must be positive"));
        }
        if let DataSchema::GaitRec { mapping } = &self.schema {
            if mapping.as_os_str().is_empty() {
                return Err(CliError::config("data.schema=gaitrec needs data.mapping"));
            }
        }
        Ok(())
    }

    pub fn data_path(&self) -> PathBuf {
        self.data_path.clone().unwrap_or_else(|| self.out.join("dataset.csv"))
    }

    pub fn input_spec(&self, series_len: usize) -> InputSpec {
        InputSpec::new(self.layout, self.components, series_len)
    }

    pub fn graph(&self, input: &InputSpec) -> Result<LayerGraph> {
        let (c, l) = input.shape();
        LayerGraph::new(Shape::new(c, l), self.layers.clone()).map_err(|e| CliError::new("InvalidGraph", e.to_string()))
    }

    /// Training config with the global seed (folds further derive `seed ^ fold`).
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }

    pub fn schema(&self) -> Result<Schema> {
        match &self.schema {
            DataSchema::Canonical => Ok(Schema::Canonical),
            DataSchema::GaitRec { mapping } => {
                let text = read_text(mapping, "ConfigError")?;
                Ok(Schema::GaitRec(GaitRecMapping::parse(&text).map_err(|e| CliError::config(e.to_string()))?))
            }
        }
    }

    /// The resolved configuration as `key=value` lines, sorted by key.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("seed".to_string(), self.seed.to_string()),
            ("data.schema".into(), match self.schema {
                DataSchema::Canonical => "canonical".into(),
                DataSchema::GaitRec { .. } => "gaitrec".into(),
            }),
            ("input.layout".into(), self.layout.to_string()),
            ("input.components".into(), self.components.to_string()),
            ("model.layers".into(), self.layers.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")),
            ("cv.k".into(), self.k.to_string()),
            ("lrp.dense".into(), self.lrp.dense.to_string()),
            ("lrp.conv".into(), self.lrp.conv.to_string()),
            ("lrp.target".into(), self.target.to_string()),
            ("spm.alpha".into(), self.spm.alpha.to_string()),
            ("spm.two_sided".into(), self.spm.two_sided.to_string()),
            ("spm.unit".into(), self.unit.to_string()),
            ("spm.normalized".into(), self.normalized.to_string()),
            ("regions.fraction".into(), self.fraction.to_string()),
        ];
        kv.extend(self.train.to_kv().into_iter().filter(|(k, _)| *k != "seed").map(|(k, v)| (format!("train.{k}"), v)));
        kv.sort();
        kv
    }
}

fn is_train_key(key: &str) -> bool {
    matches!(key, "epochs" | "batch_size" | "init" | "optimizer" | "lr" | "momentum" | "beta1" | "beta2" | "eps")
}

fn parse_rule(key: &str, value: &str) -> Result<LrpRule> {
    value.parse().map_err(|e: gaitxai::lrp::LrpError| CliError::config(format!("{key}: {e}")))
}

/// Reads a whole file; a missing file becomes an error of `missing_class`.
pub fn read_text(path: &Path, missing_class: &'static str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::new(missing_class, format!("{} not found", path.display())),
        _ => CliError::io(path, e),
    })
}
