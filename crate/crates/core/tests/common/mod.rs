//! Random graphs, models and inputs plus the oracle checks shared by the test targets.

#![allow(dead_code)]

use gaitxai::lrp::{self, lrp_conv, lrp_dense, LrpConfig, LrpRule};
use gaitxai::nn::{LayerGraph, LayerParams, LayerSpec, Model, Shape, Tensor, Trace};
use gaitxai_oracles::nn as reference;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_graph(rng: &mut ChaCha8Rng) -> LayerGraph {
    loop {
        let c = rng.random_range(1..=3);
        let l = rng.random_range(8..=32);
        let mut layers = Vec::new();
        let conv_layers = rng.random_range(1..=2);
        for _ in 0..conv_layers {
            layers.push(LayerSpec::Conv1d {
                out_channels: rng.random_range(1..=4),
                kernel: rng.random_range(1..=5),
                stride: rng.random_range(1..=2),
                padding: rng.random_range(0..=2),
            });
            layers.push(LayerSpec::Relu);
            if rng.random_bool(0.5) {
                layers.push(LayerSpec::MaxPool1d { window: rng.random_range(2..=3), stride: rng.random_range(1..=2) });
            }
        }
        layers.push(if rng.random_bool(0.5) { LayerSpec::GlobalAvgPool } else { LayerSpec::Flatten });
        if rng.random_bool(0.5) {
            layers.push(LayerSpec::Dense { out_units: rng.random_range(2..=5) });
            layers.push(LayerSpec::Relu);
        }
        layers.push(LayerSpec::Dense { out_units: 2 });
        if let Ok(g) = LayerGraph::new(Shape::new(c, l), layers) {
            return g;
        }
    }
}

pub fn random_model(graph: LayerGraph, rng: &mut ChaCha8Rng) -> Model {
    let mut model = Model::zeros(graph);
    for p in model.params.iter_mut() {
        p.weights.iter_mut().chain(p.bias.iter_mut()).for_each(|v| *v = rng.random_range(-1.0..1.0));
    }
    model
}

pub fn random_input(shape: Shape, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::new(shape, (0..shape.size()).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
}

/// Random weights with every bias zero.
pub fn random_zero_bias_model(graph: LayerGraph, rng: &mut ChaCha8Rng) -> Model {
    let mut model = random_model(graph, rng);
    model.params.iter_mut().for_each(|p| p.bias.iter_mut().for_each(|b| *b = 0.0));
    model
}

pub fn flatten_params(params: &[LayerParams]) -> Vec<f64> {
    params.iter().flat_map(|p| p.weights.iter().chain(&p.bias).copied()).collect()
}

pub fn with_flat_params(model: &Model, theta: &[f64]) -> Model {
    let mut m = model.clone();
    let mut it = theta.iter();
    for p in m.params.iter_mut() {
        p.weights.iter_mut().chain(p.bias.iter_mut()).for_each(|v| *v = *it.next().unwrap());
    }
    m
}

/// ReLU signs and max-pool winners: the piecewise-linear region the trace lies in.
pub fn activation_pattern(model: &Model, trace: &Trace) -> Vec<usize> {
    let mut pattern = Vec::new();
    for (i, spec) in model.graph.layers().iter().enumerate() {
        let x = trace.input_of(i);
        match *spec {
            LayerSpec::Relu => pattern.extend(x.data.iter().map(|&v| usize::from(v > 0.0))),
            LayerSpec::MaxPool1d { window, stride } => {
                let out_len = trace.input_of(i + 1).shape.len;
                for c in 0..x.shape.channels {
                    let row = x.row(c);
                    for o in 0..out_len {
                        let w = &row[o * stride..o * stride + window];
                        let best = (0..window).fold(0, |b, j| if w[j] > w[b] { j } else { b });
                        pattern.push(best);
                    }
                }
            }
            _ => {}
        }
    }
    pattern
}

/// Central-difference check of every parameter and input gradient; parameters whose
/// ±h perturbation crosses a ReLU or max-pool switch are not differentiable there and
/// are skipped (and counted).
pub fn gradient_check(model: &Model, x: &Tensor, label: usize, h: f64) -> (usize, usize, f64) {
    let trace = model.forward(x).unwrap();
    let base_pattern = activation_pattern(model, &trace);
    let grads = model.backward(&trace, label);
    let analytic = flatten_params(&grads.layers);
    let theta = flatten_params(&model.params);

    let mut checked = 0;
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    let loss_at = |m: &Model, x: &Tensor| {
        let t = m.forward(x).unwrap();
        (gaitxai::nn::loss(t.logits(), label), activation_pattern(m, &t))
    };
    for i in 0..theta.len() {
        let mut plus = theta.clone();
        plus[i] += h;
        let mut minus = theta.clone();
        minus[i] -= h;
        let (lp, pp) = loss_at(&with_flat_params(model, &plus), x);
        let (lm, pm) = loss_at(&with_flat_params(model, &minus), x);
        if pp != base_pattern || pm != base_pattern {
            skipped += 1;
            continue;
        }
        let fd = (lp - lm) / (2.0 * h);
        worst = worst.max(reference::relative_error(analytic[i], fd, 1e-3));
        checked += 1;
    }
    let fd_input = reference::central_difference(
        |v| {
            let t = Tensor::new(x.shape, v.to_vec()).unwrap();
            gaitxai::nn::loss(model.forward(&t).unwrap().logits(), label)
        },
        &x.data,
        h,
    );
    for (a, b) in grads.input.data.iter().zip(&fd_input) {
        worst = worst.max(reference::relative_error(*a, *b, 1e-3));
    }
    (checked, skipped, worst)
}

/// `(Σ R − logit, logit)` for one explanation.
pub fn lrp_residual(model: &Model, x: &Tensor, target: usize, cfg: &LrpConfig) -> (f64, f64) {
    let trace = model.forward(x).unwrap();
    let r = lrp::propagate(model, &trace, target, cfg).unwrap();
    let score = trace.logits()[target];
    (r.data.iter().sum::<f64>() - score, score)
}


pub const RULES: [LrpRule; 3] = [
    LrpRule::Epsilon(0.0),
    LrpRule::Epsilon(1e-6),
    LrpRule::AlphaBeta { alpha: 2.0, beta: 1.0 },
];

pub fn uniform(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Largest `|direct − unrolled| / max(1, |direct|)` over all rules for one random conv
/// layer: the tap-loop rule against the dense rule on the explicit matrix.
pub fn conv_equivalence_error(rng: &mut ChaCha8Rng) -> f64 {
    let cin = rng.random_range(1..=3);
    let len = rng.random_range(6..=24);
    let out_channels = rng.random_range(1..=4);
    let kernel = rng.random_range(1..=5);
    let stride = rng.random_range(1..=3);
    let padding = rng.random_range(0..=2);
    let conv = LayerSpec::Conv1d { out_channels, kernel, stride, padding };
    let params = LayerParams {
        weights: uniform(rng, out_channels * cin * kernel, -1.0, 1.0),
        bias: uniform(rng, out_channels, -0.5, 0.5),
    };
    let a = Tensor::new(Shape::new(cin, len), uniform(rng, cin * len, -1.0, 1.0)).unwrap();
    let out_len = (len + 2 * padding - kernel) / stride + 1;
    let r_out = Tensor::new(Shape::new(out_channels, out_len), uniform(rng, out_channels * out_len, -1.0, 1.0)).unwrap();

    let (rows, _, matrix) = reference::unroll_conv(cin, len, out_channels, kernel, stride, padding, &params.weights);
    let bias: Vec<f64> = (0..rows).map(|r| params.bias[r / out_len]).collect();
    let mut worst: f64 = 0.0;
    for rule in RULES {
        let direct = lrp_conv(&conv, &params, &a, &r_out, rule).unwrap();
        let unrolled = lrp_dense(&matrix, &bias, &a.data, &r_out.data, rule).unwrap();
        for (x, y) in direct.data.iter().zip(&unrolled) {
            worst = worst.max((x - y).abs() / x.abs().max(1.0));
        }
    }
    worst
}
