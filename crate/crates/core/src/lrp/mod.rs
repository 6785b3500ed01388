//! Layer-wise relevance propagation.
//!
//! A forward [`Trace`] is walked backwards. Relevance starts as the target-class logit
//! with the other logit masked out. Weighted layers follow the configured [`LrpRule`];
//! max pooling is winner-take-all, global average pooling proportional, ReLU and
//! flatten pass relevance through unchanged. Bias relevance is absorbed, so totals are
//! conserved exactly only for bias-free networks under `Epsilon(0)`.

mod aggregate;
mod rules;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::data::{InputSample, InputSpec};
use crate::nn::{sample_tensor, LayerSpec, Model, NnError, Tensor, Trace};

pub use aggregate::{average_relevance, total_relevance, ClassRelevance};
pub use rules::{lrp_conv, lrp_dense, lrp_pool, LrpConfig, LrpRule};

#[derive(Debug, Error)]
pub enum LrpError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid LRP rule: {0}")]
    InvalidRule(String),
    #[error("no relevance maps for class {0}")]
    EmptyGroup(usize),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl LrpError {
    pub fn class(&self) -> &'static str {
        match self {
            LrpError::ShapeMismatch(_) => "ShapeMismatch",
            LrpError::InvalidRule(_) => "ConfigError",
            LrpError::EmptyGroup(_) => "EmptyGroup",
            LrpError::Nn(e) => e.class(),
            LrpError::Csv(_) | LrpError::Io(_) => "IoError",
        }
    }
}

pub type Result<T, E = LrpError> = std::result::Result<T, E>;

/// Input-node relevance for one sample and one target class.
#[derive(Clone, Debug, PartialEq)]
pub struct RelevanceMap {
    pub subject_id: String,
    pub trial_id: String,
    pub target_class: usize,
    pub channels: usize,
    pub len: usize,
    /// Row-major `channels × len`, aligned with the sample's input nodes.
    pub relevance: Vec<f64>,
    /// The explained logit.
    pub output_score: f64,
}

impl RelevanceMap {
    pub fn row(&self, c: usize) -> &[f64] {
        &self.relevance[c * self.len..(c + 1) * self.len]
    }

    pub fn total(&self) -> f64 {
        self.relevance.iter().sum()
    }

    /// `Σ R − output_score`.
    pub fn residual(&self) -> f64 {
        self.total() - self.output_score
    }
}

/// Which class each sample is explained against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TargetPolicy {
    #[default]
    TrueClass,
    Predicted,
}

impl fmt::Display for TargetPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetPolicy::TrueClass => "true",
            TargetPolicy::Predicted => "predicted",
        })
    }
}

impl FromStr for TargetPolicy {
    type Err = LrpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "true" => Ok(TargetPolicy::TrueClass),
            "predicted" => Ok(TargetPolicy::Predicted),
            other => Err(LrpError::InvalidRule(format!("target policy must be `true` or `predicted`, got `{other}`"))),
        }
    }
}

/// Propagates the `target_class` logit of `trace` back to the input.
pub fn propagate(model: &Model, trace: &Trace, target_class: usize, cfg: &LrpConfig) -> Result<Tensor> {
    if target_class > 1 {
        return Err(LrpError::ShapeMismatch(format!("target class {target_class} of a two-logit network")));
    }
    cfg.validate()?;
    let out = trace.output();
    let mut r = Tensor::zeros(out.shape);
    r.data[target_class] = out.data[target_class];
    for (i, layer) in model.graph.layers().iter().enumerate().rev() {
        let a = trace.input_of(i);
        let p = &model.params[i];
        r = match layer {
            LayerSpec::Conv1d { .. } => lrp_conv(layer, p, a, &r, cfg.conv)?,
            LayerSpec::Dense { .. } => Tensor::new(a.shape, lrp_dense(&p.weights, &p.bias, &a.data, &r.data, cfg.dense)?)?,
            LayerSpec::MaxPool1d { .. } | LayerSpec::GlobalAvgPool => lrp_pool(layer, a, &r)?,
            LayerSpec::Relu | LayerSpec::Flatten => Tensor { shape: a.shape, data: r.data },
        };
    }
    Ok(r)
}

/// Relevance map of `sample` with respect to `target_class`.
pub fn explain(model: &Model, sample: &InputSample, target_class: usize, cfg: &LrpConfig) -> Result<RelevanceMap> {
    let trace = model.forward(&sample_tensor(sample))?;
    let r = propagate(model, &trace, target_class, cfg)?;
    Ok(RelevanceMap {
        subject_id: sample.subject_id.clone(),
        trial_id: sample.trial_id.clone(),
        target_class,
        channels: sample.channels,
        len: sample.len,
        relevance: r.data,
        output_score: trace.logits()[target_class],
    })
}

/// Explains every sample (in parallel, order preserved).
pub fn explain_samples(
    model: &Model,
    samples: &[InputSample],
    policy: TargetPolicy,
    cfg: &LrpConfig,
) -> Result<Vec<RelevanceMap>> {
    samples
        .par_iter()
        .map(|s| {
            let target = match policy {
                TargetPolicy::TrueClass => s.label,
                TargetPolicy::Predicted => model.predict(&sample_tensor(s))?.class,
            };
            explain(model, s, target, cfg)
        })
        .collect()
}

/// Writes `subject_id,trial_id,target_class,channel,node_index,relevance`, one row per
/// input node. `channel` is the input-channel label of `spec`.
pub fn write_relevance_csv<W: Write>(maps: &[RelevanceMap], spec: &InputSpec, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject_id", "trial_id", "target_class", "channel", "node_index", "relevance"])?;
    let (channels, len) = spec.shape();
    for m in maps {
        if (m.channels, m.len) != (channels, len) {
            return Err(LrpError::ShapeMismatch(format!(
                "map of {}x{} for an input of {channels}x{len}",
                m.channels, m.len
            )));
        }
        let target = m.target_class.to_string();
        for c in 0..channels {
            let label = spec.channel_label(c);
            for (i, r) in m.row(c).iter().enumerate() {
                w.write_record([&m.subject_id, &m.trial_id, &target, label, &i.to_string(), &r.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
