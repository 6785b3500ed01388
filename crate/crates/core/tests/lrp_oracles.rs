//! Relevance propagation checked against unrolled-matrix and conservation oracles.

mod common;

use common::{conv_equivalence_error, lrp_residual, random_graph, random_input, random_zero_bias_model, rng, uniform};
use gaitxai::data::InputSample;
use gaitxai::lrp::{self, average_relevance, lrp_conv, LrpConfig, LrpRule, RelevanceMap};
use gaitxai::nn::{LayerGraph, LayerParams, LayerSpec, Shape, Tensor};
use gaitxai_oracles::stats;
use rand::Rng;

#[test]
fn conv_rule_equals_dense_rule_on_the_unrolled_matrix() {
    let mut rng = rng(31);
    for case in 0..40 {
        let worst = conv_equivalence_error(&mut rng);
        assert!(worst <= 1e-12, "case {case}: worst scaled difference {worst}");
    }
}

#[test]
fn alphabeta_one_zero_is_epsilon_zero_for_positive_conv_inputs() {
    let mut rng = rng(5);
    for _ in 0..20 {
        let conv = LayerSpec::Conv1d { out_channels: 3, kernel: 5, stride: 1, padding: 2 };
        let params = LayerParams { weights: uniform(&mut rng, 3 * 2 * 5, 0.01, 1.0), bias: vec![0.0; 3] };
        let a = Tensor::new(Shape::new(2, 16), uniform(&mut rng, 32, 0.01, 1.0)).unwrap();
        let r = Tensor::new(Shape::new(3, 16), uniform(&mut rng, 48, -1.0, 1.0)).unwrap();
        let eps = lrp_conv(&conv, &params, &a, &r, LrpRule::Epsilon(0.0)).unwrap();
        let ab = lrp_conv(&conv, &params, &a, &r, LrpRule::AlphaBeta { alpha: 1.0, beta: 0.0 }).unwrap();
        for (x, y) in eps.data.iter().zip(&ab.data) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

#[test]
fn zero_bias_networks_conserve_relevance() {
    let mut rng = rng(2024);
    let exact = LrpConfig::uniform(LrpRule::Epsilon(0.0));
    let stabilized = LrpConfig::default();
    for g in 0..30 {
        let model = random_zero_bias_model(random_graph(&mut rng), &mut rng);
        let x = random_input(model.graph.input_shape(), &mut rng);
        for target in 0..2 {
            let (res, score) = lrp_residual(&model, &x, target, &exact);
            assert!(res.abs() <= 1e-9 * score.abs().max(1.0), "graph {g}: residual {res} for logit {score}");
            let (res, score) = lrp_residual(&model, &x, target, &stabilized);
            assert!(res.abs() <= 1e-4 * score.abs().max(1.0), "graph {g}, eps 1e-6: residual {res} for logit {score}");
        }
    }
}

#[test]
fn default_architecture_conserves_with_small_epsilon() {
    let mut rng = rng(77);
    let graph = LayerGraph::default_for(Shape::new(3, 202)).unwrap();
    for _ in 0..5 {
        let model = random_zero_bias_model(graph.clone(), &mut rng);
        let x = random_input(graph.input_shape(), &mut rng);
        for target in 0..2 {
            let (res, score) = lrp_residual(&model, &x, target, &LrpConfig::default());
            assert!(res.abs() <= 1e-4 * score.abs(), "residual {res} for logit {score}");
        }
    }
}

#[test]
fn leak_shrinks_with_epsilon() {
    let mut rng = rng(9);
    for _ in 0..20 {
        let model = random_zero_bias_model(random_graph(&mut rng), &mut rng);
        let x = random_input(model.graph.input_shape(), &mut rng);
        let leaks: Vec<f64> = [1e-2, 1e-4, 1e-6, 0.0]
            .iter()
            .map(|&e| lrp_residual(&model, &x, 0, &LrpConfig::uniform(LrpRule::Epsilon(e))).0.abs())
            .collect();
        let scale = lrp_residual(&model, &x, 0, &LrpConfig::default()).1.abs().max(1.0);
        assert!(leaks[3] <= 1e-9 * scale, "{leaks:?}");
        for w in leaks.windows(2) {
            assert!(w[0] + 1e-12 * scale >= w[1], "leak not monotone in epsilon: {leaks:?}");
        }
    }
}

#[test]
fn explain_is_deterministic_and_leaves_the_model_alone() {
    let mut rng = rng(3);
    let model = random_zero_bias_model(random_graph(&mut rng), &mut rng);
    let before = model.clone();
    let shape = model.graph.input_shape();
    let sample = InputSample {
        channels: shape.channels,
        len: shape.len,
        data: random_input(shape, &mut rng).data,
        label: 1,
        subject_id: "S9".into(),
        trial_id: "T2".into(),
    };
    let a = lrp::explain(&model, &sample, 1, &LrpConfig::default()).unwrap();
    let b = lrp::explain(&model, &sample, 1, &LrpConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(model, before);
}

#[test]
fn class_means_match_a_streaming_recomputation() {
    let mut rng = rng(12);
    let maps: Vec<RelevanceMap> = (0..25)
        .map(|i| RelevanceMap {
            subject_id: format!("S{i}"),
            trial_id: "T1".into(),
            target_class: usize::from(rng.random_bool(0.4)) | usize::from(i < 2) * (i % 2),
            channels: 2,
            len: 7,
            relevance: uniform(&mut rng, 14, -3.0, 3.0),
            output_score: 0.0,
        })
        .collect();
    let avg = average_relevance(&maps).unwrap();
    for class in 0..2 {
        let group: Vec<Vec<f64>> = maps.iter().filter(|m| m.target_class == class).map(|m| m.relevance.clone()).collect();
        let expect = stats::streaming_mean(&group);
        for (x, y) in avg.mean[class].iter().zip(&expect) {
            assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
        }
    }
}
