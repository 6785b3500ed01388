//! Cross-validation, baselines, per-class signal summaries and region overlap.

mod regions;
mod signals;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{make_folds, DataError, Dataset, InputSample, InputSpec};
use crate::nn::{sample_tensor, train, Checkpoint, LayerGraph, NnError, TrainConfig};

pub use regions::{
    overlap_score, read_regions, relevance_regions, spm_regions, write_regions, Overlap, Provenance, Region, RegionSet,
};
pub use signals::{aggregate_signals, SignalSummary};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset has no trials")]
    EmptyDataset,
    #[error("no trials of class `{0}`")]
    EmptyGroup(String),
    #[error("relevance curve has no mass")]
    ZeroCurve,
    #[error("invalid region set: {0}")]
    InvalidRegion(String),
    #[error("regions file line {line}: {message}")]
    RegionParse { line: usize, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("fold {fold} evaluates subject `{subject}` that it also trained on")]
    SubjectLeak { fold: usize, subject: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl EvalError {
    pub fn class(&self) -> &'static str {
        match self {
            EvalError::EmptyDataset => "EmptyDataset",
            EvalError::EmptyGroup(_) => "EmptyGroup",
            EvalError::ZeroCurve => "ZeroCurve",
            EvalError::InvalidRegion(_) | EvalError::RegionParse { .. } => "RegionError",
            EvalError::InvalidParameter(_) => "ConfigError",
            EvalError::SubjectLeak { .. } => "SubjectLeak",
            EvalError::Data(e) => e.class(),
            EvalError::Nn(e) => e.class(),
            EvalError::Json(_) | EvalError::Io(_) => "IoError",
        }
    }
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

/// Majority-class share at trial level.
pub fn zero_rule(ds: &Dataset) -> Result<f64> {
    let [f, m] = ds.class_counts();
    if f + m == 0 {
        return Err(EvalError::EmptyDataset);
    }
    Ok(f.max(m) as f64 / (f + m) as f64)
}

/// `x` as a percentage with one decimal, e.g. `54.8%`.
pub fn percent(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Cross-validation summary. Accuracies are trial-level; the spread is the population
/// standard deviation of the per-fold accuracies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub seed: u64,
    pub n_trials: usize,
    pub n_subjects: usize,
    pub fold_accuracies: Vec<f64>,
    pub fold_sizes: Vec<usize>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub std_convention: String,
    pub zero_rule: f64,
    /// `confusion[true][predicted]`, summed over folds.
    pub confusion: [[usize; 2]; 2],
    /// Where each fold's checkpoint was written, if anywhere.
    pub checkpoints: Vec<String>,
    pub config: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "trials: {}  subjects: {}", self.n_trials, self.n_subjects);
        let _ = writeln!(s, "cross-validation: {} subject-disjoint stratified folds, seed {}", self.k, self.seed);
        let _ = writeln!(
            s,
            "accuracy: {} ± {} ({} std over folds)",
            percent(self.mean_accuracy),
            percent(self.std_accuracy),
            self.std_convention
        );
        let _ = writeln!(s, "zero-rule baseline: {}", percent(self.zero_rule));
        let folds: Vec<String> = self.fold_accuracies.iter().map(|&a| percent(a)).collect();
        let _ = writeln!(s, "per fold: {}", folds.join(" "));
        let [[ff, fm], [mf, mm]] = self.confusion;
        let _ = writeln!(s, "confusion (true \\ predicted): F→F {ff}  F→M {fm}  M→F {mf}  M→M {mm}");
        for (k, v) in &self.config {
            let _ = writeln!(s, "config {k}={v}");
        }
        s
    }
}

/// Report plus the trained fold models, in fold order.
#[derive(Clone, Debug)]
pub struct CvOutcome {
    pub report: EvalReport,
    pub checkpoints: Vec<Checkpoint>,
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

struct FoldResult {
    checkpoint: Checkpoint,
    correct: usize,
    total: usize,
    confusion: [[usize; 2]; 2],
}

/// k-fold subject-disjoint cross-validation.
///
/// Folds come from [`make_folds`] with `seed`; fold `i` trains with seed `seed ^ i`
/// (overriding `config.seed`). Folds run concurrently when `parallel` is set, with
/// identical results either way.
pub fn run_cv(
    ds: &Dataset,
    input: &InputSpec,
    graph: &LayerGraph,
    config: &TrainConfig,
    k: usize,
    seed: u64,
    parallel: bool,
) -> Result<CvOutcome> {
    let (c, l) = input.shape();
    if (graph.input_shape().channels, graph.input_shape().len) != (c, l) {
        return Err(NnError::ShapeMismatch(format!("graph input {} but samples are ({c}, {l})", graph.input_shape())).into());
    }
    let plan = make_folds(ds, k, seed)?;
    let samples: Vec<InputSample> = ds.trials().iter().map(|t| input.assemble(t)).collect();
    let run_fold = |fold: usize| -> Result<FoldResult> {
        let (test, train_set): (Vec<&InputSample>, Vec<&InputSample>) =
            samples.iter().partition(|s| plan.fold_of(&s.subject_id) == Some(fold));
        let trained: BTreeSet<&str> = train_set.iter().map(|s| s.subject_id.as_str()).collect();
        if let Some(s) = test.iter().find(|s| trained.contains(s.subject_id.as_str())) {
            return Err(EvalError::SubjectLeak { fold, subject: s.subject_id.clone() });
        }
        let train_samples: Vec<InputSample> = train_set.into_iter().cloned().collect();
        let cfg = TrainConfig { seed: seed ^ fold as u64, ..config.clone() };
        let checkpoint = train(graph, &train_samples, &cfg)?;
        let mut confusion = [[0; 2]; 2];
        for s in &test {
            let predicted = checkpoint.model.predict(&sample_tensor(s))?.class;
            confusion[s.label][predicted] += 1;
        }
        let correct = confusion[0][0] + confusion[1][1];
        Ok(FoldResult { checkpoint, correct, total: test.len(), confusion })
    };
    let folds: Vec<FoldResult> = if parallel {
        (0..k).into_par_iter().map(run_fold).collect::<Result<_>>()?
    } else {
        (0..k).map(run_fold).collect::<Result<_>>()?
    };

    let fold_accuracies: Vec<f64> = folds.iter().map(|f| f.correct as f64 / f.total as f64).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&fold_accuracies);
    let mut confusion = [[0; 2]; 2];
    for f in &folds {
        for (row, frow) in confusion.iter_mut().zip(&f.confusion) {
            row[0] += frow[0];
            row[1] += frow[1];
        }
    }
    let mut echo: BTreeMap<String, String> = config.to_kv().into_iter().map(|(k, v)| (format!("train.{k}"), v)).collect();
    echo.remove("train.seed");
    echo.insert("input.layout".into(), input.layout.to_string());
    echo.insert("input.components".into(), input.components.to_string());
    echo.insert("model.layers".into(), graph.describe());
    let report = EvalReport {
        k,
        seed,
        n_trials: samples.len(),
        n_subjects: plan.assignments.len(),
        fold_sizes: folds.iter().map(|f| f.total).collect(),
        fold_accuracies,
        mean_accuracy,
        std_accuracy,
        std_convention: "population".into(),
        zero_rule: zero_rule(ds)?,
        confusion,
        checkpoints: Vec::new(),
        config: echo,
    };
    Ok(CvOutcome { report, checkpoints: folds.into_iter().map(|f| f.checkpoint).collect() })
}
