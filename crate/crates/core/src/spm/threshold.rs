use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::beta::beta_reg;

use super::field::{node_moments, t_from_moments};
use super::{CurveGroup, Result, SpmError};

/// `P(T > t)` for Student's t with `df` degrees of freedom, `t ≥ 0`.
pub fn t_survival(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    0.5 * beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

/// One-dimensional Euler-characteristic density of a t field per resel.
pub fn ec_density_1d(t: f64, df: f64) -> f64 {
    (4.0 * std::f64::consts::LN_2).sqrt() / (2.0 * std::f64::consts::PI) * (1.0 + t * t / df).powf(-(df - 1.0) / 2.0)
}

/// Height threshold `t*` with `P(T > t*) + resels · ρ₁(t*) = alpha`, by bisection on
/// `[0, 100]`. This is a one-tailed level; two-sided tests pass `alpha / 2`.
pub fn rft_threshold(df: f64, resels: f64, alpha: f64) -> Result<f64> {
    if !(df > 0.0 && df.is_finite()) || !(resels >= 0.0 && resels.is_finite()) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(SpmError::InvalidParameter(format!("rft_threshold(df={df}, resels={resels}, alpha={alpha})")));
    }
    let f = |t: f64| t_survival(t, df) + resels * ec_density_1d(t, df) - alpha;
    let (mut lo, mut hi) = (0.0f64, 100.0f64);
    if f(lo) < 0.0 || f(hi) > 0.0 {
        return Err(SpmError::NoSolution { df, resels, alpha });
    }
    while hi - lo > f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    if f(t).abs() > 1e-10 {
        return Err(SpmError::NoSolution { df, resels, alpha });
    }
    Ok(t)
}

/// Outcome of a permutation test of the maximum statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct PermutationResult {
    pub t_star: f64,
    /// `max_q |t(q)|` per permutation; entry 0 is the observed labelling.
    pub max_stats: Vec<f64>,
    /// Some relabelling hit a node with zero pooled variance.
    pub degenerate: bool,
}

/// Family-wise threshold from the distribution of `max_q |t(q)|` under relabelling.
///
/// Permutation 0 is the identity; permutation `p > 0` shuffles the pooled curves with
/// a ChaCha8 generator seeded by `seed` on stream `p`, so the sequence does not depend
/// on how the work is scheduled. `t_star` is the `⌈(1 − alpha)·n_perm⌉`-th smallest
/// maximum.
pub fn permutation_threshold(
    a: &CurveGroup,
    b: &CurveGroup,
    alpha: f64,
    n_perm: usize,
    seed: u64,
) -> Result<PermutationResult> {
    super::field::check_pair(a, b)?;
    if n_perm < 1000 {
        return Err(SpmError::InvalidParameter(format!("n_perm must be at least 1000, got {n_perm}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SpmError::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let pooled: Vec<&[f64]> = a.rows().into_iter().chain(b.rows()).collect();
    let na = a.n();
    let nb = b.n();
    let results: Vec<(f64, bool)> = (0..n_perm as u64)
        .into_par_iter()
        .map(|p| {
            let mut order: Vec<usize> = (0..pooled.len()).collect();
            if p > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(p);
                order.shuffle(&mut rng);
            }
            let ga: Vec<&[f64]> = order[..na].iter().map(|&i| pooled[i]).collect();
            let gb: Vec<&[f64]> = order[na..].iter().map(|&i| pooled[i]).collect();
            let moments = node_moments(&ga, &gb);
            let degenerate = moments.iter().any(|&(_, var)| var == 0.0);
            let t = t_from_moments(&moments, na, nb);
            (t.t.iter().fold(0.0f64, |m, v| m.max(v.abs())), degenerate)
        })
        .collect();
    let degenerate = results.iter().any(|r| r.1);
    let max_stats: Vec<f64> = results.into_iter().map(|r| r.0).collect();
    let mut sorted = max_stats.clone();
    sorted.sort_by(f64::total_cmp);
    let rank = ((1.0 - alpha) * n_perm as f64).ceil() as usize;
    let t_star = sorted[rank.clamp(1, n_perm) - 1];
    Ok(PermutationResult { t_star, max_stats, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_resels_is_the_t_quantile() {
        // Upper 5% and 2.5% points of t(60) and t(10) from published tables.
        assert!((rft_threshold(60.0, 0.0, 0.05).unwrap() - 1.6706488649046354).abs() < 1e-8);
        assert!((rft_threshold(10.0, 0.0, 0.025).unwrap() - 2.2281388519649385).abs() < 1e-8);
    }

    #[test]
    fn threshold_monotonicity() {
        let q = rft_threshold(60.0, 0.0, 0.05).unwrap();
        assert!(rft_threshold(60.0, 5.0, 0.05).unwrap() > q);
        for &resels in &[0.0, 1.0, 5.0, 10.0, 20.0] {
            let mut prev = f64::INFINITY;
            for &alpha in &[0.001, 0.01, 0.025, 0.05, 0.1] {
                let t = rft_threshold(60.0, resels, alpha).unwrap();
                assert!(t < prev);
                prev = t;
            }
        }
        for &alpha in &[0.01, 0.05] {
            let mut prev = 0.0;
            for &resels in &[0.0, 0.5, 1.0, 5.0, 10.0, 50.0] {
                let t = rft_threshold(30.0, resels, alpha).unwrap();
                assert!(t > prev);
                prev = t;
            }
        }
    }

    #[test]
    fn unreachable_levels() {
        assert!(matches!(rft_threshold(10.0, 0.0, 0.7), Err(SpmError::NoSolution { .. })));
        // With one degree of freedom the EC density does not decay.
        assert!(matches!(rft_threshold(1.0, 10.0, 0.05), Err(SpmError::NoSolution { .. })));
        assert!(rft_threshold(0.0, 1.0, 0.05).is_err());
        assert!(rft_threshold(10.0, -1.0, 0.05).is_err());
    }

    #[test]
    fn constant_groups_are_flagged() {
        let a = CurveGroup::new("A", vec![vec![1.0; 4]; 3]).unwrap();
        let b = CurveGroup::new("B", vec![vec![1.0; 4]; 3]).unwrap();
        let r = permutation_threshold(&a, &b, 0.05, 1000, 1).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.t_star, 0.0);
    }
}
