//! One-dimensional statistical parametric mapping for two groups of registered curves.
//!
//! [`spm_two_sample`] runs the full test: pointwise t and Cohen's d, smoothness from
//! the pooled residuals, a random-field height threshold and supra-threshold clusters.
//! [`permutation_threshold`] is a nonparametric check on the random-field threshold.

mod field;
mod threshold;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

use crate::data::{min_max_normalize, ChannelId, Dataset, Sex};

pub use field::{cohens_d_curve, estimate_fwhm, supra_clusters, two_sample_t_curve, Cluster, DCurve, TCurve};
pub use threshold::{ec_density_1d, permutation_threshold, rft_threshold, t_survival, PermutationResult};

#[derive(Debug, Error)]
pub enum SpmError {
    #[error("group `{label}` has {n} curves, at least 2 are needed")]
    GroupTooSmall { label: String, n: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("non-finite value in group `{0}`")]
    NonFinite(String),
    #[error("residuals are identically zero")]
    DegenerateResiduals,
    #[error("no threshold in [0, 100] reaches alpha={alpha} (df={df}, resels={resels})")]
    NoSolution { df: f64, resels: f64, alpha: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl SpmError {
    pub fn class(&self) -> &'static str {
        match self {
            SpmError::GroupTooSmall { .. } => "GroupTooSmall",
            SpmError::LengthMismatch(_) => "LengthMismatch",
            SpmError::NonFinite(_) => "NonFiniteValue",
            SpmError::DegenerateResiduals => "DegenerateResiduals",
            SpmError::NoSolution { .. } => "NoSolution",
            SpmError::InvalidParameter(_) => "ConfigError",
            SpmError::Io(_) => "IoError",
        }
    }
}

pub type Result<T, E = SpmError> = std::result::Result<T, E>;

/// Labelled set of at least two finite curves of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveGroup {
    pub label: String,
    curves: Vec<Vec<f64>>,
}

impl CurveGroup {
    pub fn new(label: impl Into<String>, curves: Vec<Vec<f64>>) -> Result<Self> {
        let label = label.into();
        if curves.len() < 2 {
            return Err(SpmError::GroupTooSmall { label, n: curves.len() });
        }
        let q = curves[0].len();
        if q == 0 || curves.iter().any(|c| c.len() != q) {
            return Err(SpmError::LengthMismatch(format!("curves of group `{label}` differ in length or are empty")));
        }
        if curves.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SpmError::NonFinite(label));
        }
        Ok(CurveGroup { label, curves })
    }

    pub fn curves(&self) -> &[Vec<f64>] {
        &self.curves
    }

    pub(crate) fn rows(&self) -> Vec<&[f64]> {
        self.curves.iter().map(Vec::as_slice).collect()
    }

    /// Number of curves.
    pub fn n(&self) -> usize {
        self.curves.len()
    }

    /// Number of nodes per curve.
    pub fn len(&self) -> usize {
        self.curves[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.len()).map(|i| self.curves.iter().map(|c| c[i]).sum::<f64>() / n).collect()
    }

    /// Curves minus the group mean.
    pub fn residuals(&self) -> Vec<Vec<f64>> {
        let m = self.mean();
        self.curves.iter().map(|c| c.iter().zip(&m).map(|(x, mu)| x - mu).collect()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpmConfig {
    pub alpha: f64,
    /// Threshold `|t|` at `alpha / 2` per tail.
    pub two_sided: bool,
}

impl Default for SpmConfig {
    fn default() -> Self {
        SpmConfig { alpha: 0.05, two_sided: true }
    }
}

/// Full two-sample SPM for one curve type.
#[derive(Clone, Debug, PartialEq)]
pub struct SpmResult {
    pub t_curve: Vec<f64>,
    pub d_curve: Vec<f64>,
    pub df: f64,
    pub fwhm: f64,
    /// `(Q − 1) / fwhm`.
    pub resels: f64,
    pub alpha: f64,
    pub two_sided: bool,
    pub t_star: f64,
    pub clusters: Vec<Cluster>,
    /// Nodes with zero pooled variance and unequal means (`t = ±∞`, `d = 0`).
    pub degenerate: Vec<usize>,
}

impl SpmResult {
    /// Nodes inside any cluster.
    pub fn significant_nodes(&self) -> Vec<usize> {
        self.clusters.iter().flat_map(|c| c.start..=c.end).collect()
    }

    /// `nu, fwhm, resels, alpha, two_sided, t_star, clusters` as text pairs. Clusters
    /// are `start-end:peak` triples joined by commas.
    pub fn summary(&self) -> Vec<(&'static str, String)> {
        let clusters: Vec<String> = self.clusters.iter().map(|c| format!("{}-{}:{}", c.start, c.end, c.peak_t)).collect();
        vec![
            ("nu", self.df.to_string()),
            ("fwhm", self.fwhm.to_string()),
            ("resels", self.resels.to_string()),
            ("alpha", self.alpha.to_string()),
            ("two_sided", self.two_sided.to_string()),
            ("t_star", self.t_star.to_string()),
            ("clusters", clusters.join(",")),
        ]
    }
}

/// t and d curves, smoothness, the random-field threshold and clusters of A versus B.
pub fn spm_two_sample(a: &CurveGroup, b: &CurveGroup, cfg: &SpmConfig) -> Result<SpmResult> {
    let t = two_sample_t_curve(a, b)?;
    let d = cohens_d_curve(a, b)?;
    let residuals: Vec<Vec<f64>> = a.residuals().into_iter().chain(b.residuals()).collect();
    let fwhm = estimate_fwhm(&residuals)?;
    let resels = if fwhm.is_finite() { (a.len() - 1) as f64 / fwhm } else { 0.0 };
    let tail_alpha = if cfg.two_sided { cfg.alpha / 2.0 } else { cfg.alpha };
    let t_star = rft_threshold(t.df, resels, tail_alpha)?;
    let clusters = if cfg.two_sided {
        supra_clusters(&t.t, t_star)
    } else {
        let positive: Vec<f64> = t.t.iter().map(|v| v.max(0.0)).collect();
        supra_clusters(&positive, t_star).into_iter().map(|c| Cluster { peak_t: c.peak_t, ..c }).collect()
    };
    Ok(SpmResult {
        t_curve: t.t,
        d_curve: d.d,
        df: t.df,
        fwhm,
        resels,
        alpha: cfg.alpha,
        two_sided: cfg.two_sided,
        t_star,
        clusters,
        degenerate: t.degenerate,
    })
}

/// What one curve in a group stands for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AnalysisUnit {
    /// Every trial contributes a curve.
    #[default]
    Trial,
    /// Trials are averaged per subject first.
    SubjectMean,
}

impl fmt::Display for AnalysisUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnalysisUnit::Trial => "trial",
            AnalysisUnit::SubjectMean => "subject_mean",
        })
    }
}

impl FromStr for AnalysisUnit {
    type Err = SpmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "trial" => Ok(AnalysisUnit::Trial),
            "subject_mean" => Ok(AnalysisUnit::SubjectMean),
            other => Err(SpmError::InvalidParameter(format!("unit must be `trial` or `subject_mean`, got `{other}`"))),
        }
    }
}

/// Female (A) and male (B) curve groups of one GRF channel.
///
/// With `normalized` each curve is min-max scaled first, matching the network inputs.
pub fn channel_groups(
    ds: &Dataset,
    channel: ChannelId,
    unit: AnalysisUnit,
    normalized: bool,
) -> Result<(CurveGroup, CurveGroup)> {
    let curve = |v: &[f64]| {
        if normalized {
            min_max_normalize(v).map_err(|_| SpmError::NonFinite(channel.to_string()))
        } else {
            Ok(v.to_vec())
        }
    };
    let group = |sex: Sex| -> Result<CurveGroup> {
        let trials: Vec<_> = ds.trials_of(sex).collect();
        let curves = match unit {
            AnalysisUnit::Trial => trials.iter().map(|t| curve(t.curve(channel))).collect::<Result<Vec<_>>>()?,
            AnalysisUnit::SubjectMean => {
                let mut by_subject: BTreeMap<&str, Vec<Vec<f64>>> = BTreeMap::new();
                for t in &trials {
                    by_subject.entry(t.subject_id.as_str()).or_default().push(curve(t.curve(channel))?);
                }
                by_subject
                    .into_values()
                    .map(|cs| {
                        let n = cs.len() as f64;
                        (0..cs[0].len()).map(|i| cs.iter().map(|c| c[i]).sum::<f64>() / n).collect()
                    })
                    .collect()
            }
        };
        CurveGroup::new(format!("{}:{}", sex.code(), channel), curves)
    };
    Ok((group(Sex::Female)?, group(Sex::Male)?))
}

/// Writes `channel,node_index,t,d` for every channel result.
pub fn write_spm_csv<W: Write>(results: &[(ChannelId, SpmResult)], mut out: W) -> Result<()> {
    writeln!(out, "channel,node_index,t,d")?;
    for (ch, r) in results {
        for (i, (t, d)) in r.t_curve.iter().zip(&r.d_curve).enumerate() {
            writeln!(out, "{ch},{i},{t},{d}")?;
        }
    }
    Ok(())
}

/// Writes the `key=value` summary of every channel as `<channel>.<key>=<value>`.
pub fn write_spm_summary<W: Write>(results: &[(ChannelId, SpmResult)], mut out: W) -> Result<()> {
    for (ch, r) in results {
        for (k, v) in r.summary() {
            writeln!(out, "{ch}.{k}={v}")?;
        }
    }
    Ok(())
}
