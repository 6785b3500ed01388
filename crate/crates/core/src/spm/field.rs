use super::{CurveGroup, Result, SpmError};

/// Pointwise two-sample t statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct TCurve {
    pub t: Vec<f64>,
    /// Degrees of freedom `n_A + n_B − 2`.
    pub df: f64,
    /// Nodes with zero pooled variance but different means; their `t` is `±∞`.
    pub degenerate: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DCurve {
    pub d: Vec<f64>,
    /// Zero-variance nodes with different means; their `d` is reported as 0.
    pub degenerate: Vec<usize>,
}

/// Mean difference and pooled unbiased variance at every node.
pub(crate) fn node_moments(a: &[&[f64]], b: &[&[f64]]) -> Vec<(f64, f64)> {
    let q = a[0].len();
    let stats = |g: &[&[f64]], i: usize| {
        let n = g.len() as f64;
        let mean = g.iter().map(|c| c[i]).sum::<f64>() / n;
        let ss = g.iter().map(|c| (c[i] - mean) * (c[i] - mean)).sum::<f64>();
        (mean, ss)
    };
    let dof = (a.len() + b.len() - 2) as f64;
    (0..q)
        .map(|i| {
            let (ma, sa) = stats(a, i);
            let (mb, sb) = stats(b, i);
            (ma - mb, (sa + sb) / dof)
        })
        .collect()
}

pub(crate) fn t_from_moments(moments: &[(f64, f64)], na: usize, nb: usize) -> TCurve {
    let scale = 1.0 / na as f64 + 1.0 / nb as f64;
    let mut degenerate = Vec::new();
    let t = moments
        .iter()
        .enumerate()
        .map(|(i, &(diff, var))| {
            if var > 0.0 {
                diff / (var * scale).sqrt()
            } else if diff == 0.0 {
                0.0
            } else {
                degenerate.push(i);
                diff.signum() * f64::INFINITY
            }
        })
        .collect();
    TCurve { t, df: (na + nb - 2) as f64, degenerate }
}

pub(crate) fn check_pair(a: &CurveGroup, b: &CurveGroup) -> Result<()> {
    if a.len() != b.len() {
        return Err(SpmError::LengthMismatch(format!(
            "group `{}` has {} nodes, `{}` has {}",
            a.label,
            a.len(),
            b.label,
            b.len()
        )));
    }
    Ok(())
}

/// Pooled-variance two-sample t statistic `(mean_A − mean_B) / sqrt(s²_p (1/n_A + 1/n_B))`.
pub fn two_sample_t_curve(a: &CurveGroup, b: &CurveGroup) -> Result<TCurve> {
    check_pair(a, b)?;
    let moments = node_moments(&a.rows(), &b.rows());
    Ok(t_from_moments(&moments, a.n(), b.n()))
}

/// Cohen's d, `(mean_A − mean_B) / s_p`, at every node.
pub fn cohens_d_curve(a: &CurveGroup, b: &CurveGroup) -> Result<DCurve> {
    check_pair(a, b)?;
    let mut degenerate = Vec::new();
    let d = node_moments(&a.rows(), &b.rows())
        .into_iter()
        .enumerate()
        .map(|(i, (diff, var))| {
            if var > 0.0 {
                diff / var.sqrt()
            } else {
                if diff != 0.0 {
                    degenerate.push(i);
                }
                0.0
            }
        })
        .collect();
    Ok(DCurve { d, degenerate })
}

/// Smoothness of residual fields as a full width at half maximum, in nodes.
///
/// Residuals are scaled node-wise to unit variance (divisor `n`), differentiated by
/// forward differences, and `fwhm = sqrt(4 ln 2 / v)` with `v` the mean squared
/// gradient. A field with no gradient at all is infinitely smooth.
pub fn estimate_fwhm(residuals: &[Vec<f64>]) -> Result<f64> {
    let q = residuals.first().map_or(0, Vec::len);
    if q < 2 || residuals.iter().any(|r| r.len() != q) {
        return Err(SpmError::LengthMismatch("residuals need a common length of at least 2".into()));
    }
    let n = residuals.len() as f64;
    let scale: Vec<f64> = (0..q)
        .map(|i| {
            let ss = residuals.iter().map(|r| r[i] * r[i]).sum::<f64>();
            if ss > 0.0 { (n / ss).sqrt() } else { 0.0 }
        })
        .collect();
    if scale.iter().all(|&s| s == 0.0) {
        return Err(SpmError::DegenerateResiduals);
    }
    let mut v = 0.0;
    for r in residuals {
        for i in 0..q - 1 {
            let g = r[i + 1] * scale[i + 1] - r[i] * scale[i];
            v += g * g;
        }
    }
    v /= n * (q - 1) as f64;
    Ok(if v > 0.0 { (4.0 * std::f64::consts::LN_2 / v).sqrt() } else { f64::INFINITY })
}

/// Maximal run of supra-threshold nodes, `start..=end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cluster {
    pub start: usize,
    pub end: usize,
    /// Signed statistic of largest magnitude; infinite sentinels only count when the
    /// run has no finite node.
    pub peak_t: f64,
}

impl Cluster {
    pub fn contains(&self, i: usize) -> bool {
        (self.start..=self.end).contains(&i)
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Maximal runs of consecutive nodes with `|t| > t_star`.
pub fn supra_clusters(t: &[f64], t_star: f64) -> Vec<Cluster> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < t.len() {
        if t[i].abs() <= t_star {
            i += 1;
            continue;
        }
        let start = i;
        while i < t.len() && t[i].abs() > t_star {
            i += 1;
        }
        let run = &t[start..i];
        let pick = |best: Option<f64>, v: f64| match best {
            Some(b) if b.abs() >= v.abs() => Some(b),
            _ => Some(v),
        };
        let peak_t = run
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(None, pick)
            .unwrap_or(run[0]);
        out.push(Cluster { start, end: i - 1, peak_t });
    }
    out
}
