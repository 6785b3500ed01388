use std::fmt;
use std::str::FromStr;

use crate::nn::{LayerParams, LayerSpec, Tensor};

use super::{LrpError, Result};

/// Redistribution rule for a weighted (dense or convolutional) layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LrpRule {
    /// `R_j = Σ_k a_j w_jk / (z_k + ε·sign(z_k)) · R_k`, with `sign(0) = +1`.
    Epsilon(f64),
    /// Positive and negative contributions redistributed separately, weighted by α and β.
    AlphaBeta { alpha: f64, beta: f64 },
}

impl LrpRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LrpRule::Epsilon(eps) if !(eps.is_finite() && eps >= 0.0) => {
                Err(LrpError::InvalidRule(format!("epsilon must be finite and nonnegative, got {eps}")))
            }
            LrpRule::AlphaBeta { alpha, beta } if !(alpha.is_finite() && beta.is_finite()) => {
                Err(LrpError::InvalidRule("alpha and beta must be finite".into()))
            }
            LrpRule::AlphaBeta { alpha, beta } if (alpha - beta - 1.0).abs() > 1e-12 || alpha < 1.0 => {
                Err(LrpError::InvalidRule(format!("alphabeta needs alpha - beta = 1 and alpha >= 1, got ({alpha}, {beta})")))
            }
            _ => Ok(()),
        }
    }

    /// Per-output coefficients `(all, pos, neg)`: the contribution `x = a_j w_jk` of input
    /// `j` receives `all·x + pos·x⁺ + neg·x⁻` of output `k`'s relevance `r`.
    ///
    /// `zp` and `zn` are the sums of positive and negative contributions, `b` the bias.
    /// A zero denominator sends nothing back.
    fn coefficients(&self, zp: f64, zn: f64, b: f64, r: f64) -> (f64, f64, f64) {
        let ratio = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
        match *self {
            LrpRule::Epsilon(eps) => {
                let z = zp + zn + b;
                let sign = if z >= 0.0 { 1.0 } else { -1.0 };
                (ratio(r, z + eps * sign), 0.0, 0.0)
            }
            LrpRule::AlphaBeta { alpha, beta } => {
                (0.0, ratio(alpha * r, zp + b.max(0.0)), ratio(-beta * r, zn + b.min(0.0)))
            }
        }
    }
}

#[inline]
fn share((all, pos, neg): (f64, f64, f64), x: f64) -> f64 {
    all * x + pos * x.max(0.0) + neg * x.min(0.0)
}

impl fmt::Display for LrpRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LrpRule::Epsilon(eps) => write!(f, "epsilon({eps})"),
            LrpRule::AlphaBeta { alpha, beta } => write!(f, "alphabeta({alpha},{beta})"),
        }
    }
}

impl FromStr for LrpRule {
    type Err = LrpError;

    /// `epsilon(1e-6)` or `alphabeta(2,1)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || LrpError::InvalidRule(format!("cannot parse rule `{s}`"));
        let (name, rest) = s.trim().split_once('(').ok_or_else(bad)?;
        let args: Vec<f64> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let rule = match (name.trim(), args.as_slice()) {
            ("epsilon", &[eps]) => LrpRule::Epsilon(eps),
            ("alphabeta", &[alpha, beta]) => LrpRule::AlphaBeta { alpha, beta },
            _ => return Err(bad()),
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// Rule stack: one rule for dense layers, one for convolutions. Pooling, ReLU and
/// flatten layers have fixed rules (winner-take-all, proportional, passthrough).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrpConfig {
    pub dense: LrpRule,
    pub conv: LrpRule,
}

impl LrpConfig {
    pub fn uniform(rule: LrpRule) -> Self {
        LrpConfig { dense: rule, conv: rule }
    }

    pub fn validate(&self) -> Result<()> {
        self.dense.validate()?;
        self.conv.validate()
    }
}

impl Default for LrpConfig {
    fn default() -> Self {
        LrpConfig::uniform(LrpRule::Epsilon(1e-6))
    }
}

/// Relevance of a dense layer's inputs. `weights` is `[out][in]`.
pub fn lrp_dense(weights: &[f64], bias: &[f64], a: &[f64], r_out: &[f64], rule: LrpRule) -> Result<Vec<f64>> {
    let n_in = a.len();
    let n_out = r_out.len();
    if bias.len() != n_out || weights.len() != n_out * n_in {
        return Err(LrpError::ShapeMismatch(format!(
            "dense layer with {} weights, {} biases for {n_in} inputs and {n_out} outputs",
            weights.len(),
            bias.len()
        )));
    }
    rule.validate()?;
    let mut r_in = vec![0.0; n_in];
    for k in 0..n_out {
        if r_out[k] == 0.0 {
            continue;
        }
        let w = &weights[k * n_in..(k + 1) * n_in];
        let (mut zp, mut zn) = (0.0, 0.0);
        for (x, wj) in a.iter().zip(w) {
            let c = x * wj;
            if c > 0.0 { zp += c } else { zn += c }
        }
        let coef = rule.coefficients(zp, zn, bias[k], r_out[k]);
        for ((rj, x), wj) in r_in.iter_mut().zip(a).zip(w) {
            *rj += share(coef, x * wj);
        }
    }
    Ok(r_in)
}

/// Relevance of a convolution's inputs, computed directly over kernel taps.
pub fn lrp_conv(conv: &LayerSpec, params: &LayerParams, a: &Tensor, r_out: &Tensor, rule: LrpRule) -> Result<Tensor> {
    let LayerSpec::Conv1d { out_channels, kernel, stride, padding } = *conv else {
        return Err(LrpError::ShapeMismatch(format!("lrp_conv called on `{conv}`")));
    };
    let (cin, len) = (a.shape.channels, a.shape.len);
    let out_len = r_out.shape.len;
    let expected_len = (len + 2 * padding).checked_sub(kernel).map(|d| d / stride + 1);
    if r_out.shape.channels != out_channels
        || expected_len != Some(out_len)
        || params.weights.len() != out_channels * cin * kernel
        || params.bias.len() != out_channels
    {
        return Err(LrpError::ShapeMismatch(format!("{conv} on input {} with relevance {}", a.shape, r_out.shape)));
    }
    rule.validate()?;
    let mut r_in = Tensor::zeros(a.shape);
    for o in 0..out_channels {
        for i in 0..out_len {
            let r = r_out.data[o * out_len + i];
            if r == 0.0 {
                continue;
            }
            let start = (i * stride) as isize - padding as isize;
            let taps = |c: usize| {
                (0..kernel).filter_map(move |m| {
                    let pos = start + m as isize;
                    (pos >= 0 && (pos as usize) < len).then(|| (pos as usize, (o * cin + c) * kernel + m))
                })
            };
            let (mut zp, mut zn) = (0.0, 0.0);
            for c in 0..cin {
                for (pos, wi) in taps(c) {
                    let x = a.data[c * len + pos] * params.weights[wi];
                    if x > 0.0 { zp += x } else { zn += x }
                }
            }
            let coef = rule.coefficients(zp, zn, params.bias[o], r);
            for c in 0..cin {
                for (pos, wi) in taps(c) {
                    r_in.data[c * len + pos] += share(coef, a.data[c * len + pos] * params.weights[wi]);
                }
            }
        }
    }
    Ok(r_in)
}

/// Relevance through max pooling (all to the first maximum of each window) or global
/// average pooling (proportional to activation, uniform when a channel sums to zero).
pub fn lrp_pool(pool: &LayerSpec, a: &Tensor, r_out: &Tensor) -> Result<Tensor> {
    let (cin, len) = (a.shape.channels, a.shape.len);
    let mismatch = || LrpError::ShapeMismatch(format!("{pool} on input {} with relevance {}", a.shape, r_out.shape));
    let mut r_in = Tensor::zeros(a.shape);
    match *pool {
        LayerSpec::MaxPool1d { window, stride } => {
            let out_len = r_out.shape.len;
            if r_out.shape.channels != cin || window > len || (len - window) / stride + 1 != out_len {
                return Err(mismatch());
            }
            for c in 0..cin {
                let row = a.row(c);
                for i in 0..out_len {
                    let win = crate::nn::argmax_window(row, i * stride, window);
                    r_in.data[c * len + win] += r_out.data[c * out_len + i];
                }
            }
        }
        LayerSpec::GlobalAvgPool => {
            if r_out.shape.channels != cin || r_out.shape.len != 1 {
                return Err(mismatch());
            }
            for c in 0..cin {
                let row = a.row(c);
                let total: f64 = row.iter().sum();
                let r = r_out.data[c];
                for (dst, x) in r_in.row_mut(c).iter_mut().zip(row) {
                    *dst = if total == 0.0 { r / len as f64 } else { x / total * r };
                }
            }
        }
        _ => return Err(LrpError::ShapeMismatch(format!("lrp_pool called on `{pool}`"))),
    }
    Ok(r_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Shape;
    use proptest::prelude::*;

    const EXACT: LrpRule = LrpRule::Epsilon(0.0);

    #[test]
    fn hand_evaluated_dense() {
        assert_eq!(lrp_dense(&[2.0, 1.0], &[0.0], &[1.0, 1.0], &[3.0], EXACT).unwrap(), [2.0, 1.0]);
        assert_eq!(lrp_dense(&[2.0, 1.0], &[0.0], &[0.0, 0.0], &[3.0], LrpRule::Epsilon(1e-3)).unwrap(), [0.0, 0.0]);
        assert!(lrp_dense(&[2.0], &[0.0], &[1.0, 1.0], &[3.0], EXACT).is_err());
    }

    #[test]
    fn zero_denominator_sends_nothing() {
        let r = lrp_dense(&[1.0, -1.0], &[0.0], &[1.0, 1.0], &[5.0], EXACT).unwrap();
        assert_eq!(r, [0.0, 0.0]);
        // sign(0) = +1: the stabilizer keeps the denominator positive.
        let r = lrp_dense(&[1.0, -1.0], &[0.0], &[1.0, 1.0], &[5.0], LrpRule::Epsilon(0.5)).unwrap();
        assert_eq!(r, [10.0, -10.0]);
    }

    #[test]
    fn identity_kernel_passes_relevance_through() {
        let conv = LayerSpec::Conv1d { out_channels: 1, kernel: 3, stride: 1, padding: 1 };
        let params = LayerParams { weights: vec![0.0, 1.0, 0.0], bias: vec![0.0] };
        let a = Tensor::new(Shape::new(1, 4), vec![0.3, 1.0, 2.0, 0.7]).unwrap();
        let r = Tensor::new(Shape::new(1, 4), vec![1.0, -2.0, 0.5, 4.0]).unwrap();
        assert_eq!(lrp_conv(&conv, &params, &a, &r, EXACT).unwrap(), r);
    }

    #[test]
    fn pooling_rules() {
        let r = |v: Vec<f64>| Tensor::new(Shape::new(1, v.len()), v).unwrap();
        let max = LayerSpec::MaxPool1d { window: 3, stride: 3 };
        assert_eq!(lrp_pool(&max, &r(vec![1.0, 5.0, 3.0]), &r(vec![7.0])).unwrap().data, [0.0, 7.0, 0.0]);
        assert_eq!(lrp_pool(&max, &r(vec![2.0, 2.0, 1.0]), &r(vec![7.0])).unwrap().data, [7.0, 0.0, 0.0]);
        let gap = LayerSpec::GlobalAvgPool;
        assert_eq!(lrp_pool(&gap, &r(vec![2.0, 2.0]), &r(vec![4.0])).unwrap().data, [2.0, 2.0]);
        assert_eq!(lrp_pool(&gap, &r(vec![0.0, 0.0]), &r(vec![4.0])).unwrap().data, [2.0, 2.0]);
        assert_eq!(lrp_pool(&gap, &r(vec![1.0, 3.0]), &r(vec![4.0])).unwrap().data, [1.0, 3.0]);
    }

    #[test]
    fn rule_validation_and_text() {
        assert!(LrpRule::Epsilon(-1.0).validate().is_err());
        assert!(LrpRule::AlphaBeta { alpha: 2.0, beta: 0.5 }.validate().is_err());
        assert!(LrpRule::AlphaBeta { alpha: 0.5, beta: -0.5 }.validate().is_err());
        for rule in [LrpRule::Epsilon(1e-6), LrpRule::AlphaBeta { alpha: 2.0, beta: 1.0 }] {
            assert_eq!(rule.to_string().parse::<LrpRule>().unwrap(), rule);
        }
        assert!("epsilon(1,2)".parse::<LrpRule>().is_err());
        assert!("alphabeta(3,1)".parse::<LrpRule>().is_err());
    }

    fn dense_case() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..6, 1usize..6).prop_flat_map(|(n_in, n_out)| {
            (
                Just(n_in),
                proptest::collection::vec(-2.0f64..2.0, n_in * n_out),
                proptest::collection::vec(-2.0f64..2.0, n_in),
                proptest::collection::vec(-2.0f64..2.0, n_out),
            )
        })
    }

    proptest! {
        #[test]
        fn dense_conserves_without_bias((_, w, a, r) in dense_case()) {
            let bias = vec![0.0; r.len()];
            let n_in = a.len();
            let r_in = lrp_dense(&w, &bias, &a, &r, EXACT).unwrap();
            // Outputs whose linear response vanishes are not redistributed.
            let expected: f64 = r.iter().enumerate()
                .filter(|(k, _)| w[k * n_in..(k + 1) * n_in].iter().zip(&a).map(|(x, y)| x * y).sum::<f64>() != 0.0)
                .map(|(_, v)| v).sum();
            let total: f64 = r_in.iter().sum();
            let scale: f64 = r_in.iter().map(|v| v.abs()).sum::<f64>() + expected.abs();
            prop_assert!((total - expected).abs() <= 1e-12 * scale.max(1.0), "{total} vs {expected}");
        }

        #[test]
        fn dense_scale_covariance((_, w, a, r) in dense_case(), c in -8i32..8) {
            let c = 2f64.powi(c);
            let bias = vec![0.0; r.len()];
            let base = lrp_dense(&w, &bias, &a, &r, EXACT).unwrap();
            let scaled_r: Vec<f64> = r.iter().map(|v| v * c).collect();
            let scaled = lrp_dense(&w, &bias, &a, &scaled_r, EXACT).unwrap();
            for (x, y) in base.iter().zip(&scaled) {
                prop_assert_eq!(x * c, *y);
            }
        }

        #[test]
        fn alphabeta_one_zero_matches_epsilon_zero_on_positive_inputs(
            w in proptest::collection::vec(0.01f64..2.0, 12),
            a in proptest::collection::vec(0.01f64..2.0, 4),
            r in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let bias = vec![0.0; 3];
            let eps = lrp_dense(&w, &bias, &a, &r, EXACT).unwrap();
            let ab = lrp_dense(&w, &bias, &a, &r, LrpRule::AlphaBeta { alpha: 1.0, beta: 0.0 }).unwrap();
            for (x, y) in eps.iter().zip(&ab) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }
}
