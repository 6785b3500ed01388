use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::Checkpoint;
use super::graph::LayerGraph;
use super::model::{Gradients, LayerParams, Model, Tensor};
use super::{NnError, Result};
use crate::data::InputSample;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer {
    Sgd { lr: f64, momentum: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitScheme {
    /// Weights uniform in `±sqrt(1 / fan_in)`, biases zero.
    #[default]
    UniformFanIn,
    Zeros,
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitScheme::UniformFanIn => "uniform_fan_in",
            InitScheme::Zeros => "zeros",
        })
    }
}

/// Training schedule. The loss is always softmax cross-entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub init: InitScheme,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 200, batch_size: 16, optimizer: Optimizer::default(), init: InitScheme::default(), seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        match self.optimizer {
            Optimizer::Sgd { lr, momentum } => {
                if !(lr > 0.0) || !(0.0..1.0).contains(&momentum) {
                    return bad("sgd needs lr > 0 and 0 <= momentum < 1");
                }
            }
            Optimizer::Adam { lr, beta1, beta2, eps } => {
                let open = |b: f64| b > 0.0 && b < 1.0;
                if !(lr > 0.0) || !open(beta1) || !open(beta2) || !(eps > 0.0) {
                    return bad("adam needs lr > 0, 0 < beta1, beta2 < 1 and eps > 0");
                }
            }
        }
        Ok(())
    }

    /// Flat `key=value` form, shared by checkpoints and run configs.
    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        let mut kv = vec![
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("init", self.init.to_string()),
            ("seed", self.seed.to_string()),
        ];
        match self.optimizer {
            Optimizer::Sgd { lr, momentum } => {
                kv.push(("optimizer", "sgd".into()));
                kv.push(("lr", lr.to_string()));
                kv.push(("momentum", momentum.to_string()));
            }
            Optimizer::Adam { lr, beta1, beta2, eps } => {
                kv.push(("optimizer", "adam".into()));
                kv.push(("lr", lr.to_string()));
                kv.push(("beta1", beta1.to_string()));
                kv.push(("beta2", beta2.to_string()));
                kv.push(("eps", eps.to_string()));
            }
        }
        kv
    }

    /// Reads keys produced by [`TrainConfig::to_kv`]; missing keys keep their defaults.
    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<Self> {
        fn get<T: std::str::FromStr>(kv: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
            match kv.get(key) {
                None => Ok(default),
                Some(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| NnError::InvalidConfig(format!("cannot parse {key}=`{v}`"))),
            }
        }
        let d = TrainConfig::default();
        let optimizer = match kv.get("optimizer").map(|s| s.trim()).unwrap_or("adam") {
            "adam" => Optimizer::Adam {
                lr: get(kv, "lr", 1e-3)?,
                beta1: get(kv, "beta1", 0.9)?,
                beta2: get(kv, "beta2", 0.999)?,
                eps: get(kv, "eps", 1e-8)?,
            },
            "sgd" => Optimizer::Sgd { lr: get(kv, "lr", 1e-2)?, momentum: get(kv, "momentum", 0.0)? },
            other => return Err(NnError::InvalidConfig(format!("unknown optimizer `{other}`"))),
        };
        let init = match kv.get("init").map(|s| s.trim()).unwrap_or("uniform_fan_in") {
            "uniform_fan_in" => InitScheme::UniformFanIn,
            "zeros" => InitScheme::Zeros,
            other => return Err(NnError::InvalidConfig(format!("unknown init `{other}`"))),
        };
        let cfg = TrainConfig {
            epochs: get(kv, "epochs", d.epochs)?,
            batch_size: get(kv, "batch_size", d.batch_size)?,
            optimizer,
            init,
            seed: get(kv, "seed", d.seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_model(graph: &LayerGraph, scheme: InitScheme, rng: &mut ChaCha8Rng) -> Model {
    let mut model = Model::zeros(graph.clone());
    if scheme == InitScheme::Zeros {
        return model;
    }
    for (i, p) in model.params.iter_mut().enumerate() {
        if p.weights.is_empty() {
            continue;
        }
        let bound = (1.0 / graph.fan_in(i) as f64).sqrt();
        for w in p.weights.iter_mut() {
            *w = rng.random_range(-bound..bound);
        }
    }
    model
}

/// Per-parameter update rule state.
enum OptState {
    Sgd { velocity: Vec<LayerParams> },
    Adam { m: Vec<LayerParams>, v: Vec<LayerParams>, step: i32 },
}

impl OptState {
    fn new(opt: &Optimizer, model: &Model) -> Self {
        let zeros = || Gradients::zeros_like(model).layers;
        match opt {
            Optimizer::Sgd { .. } => OptState::Sgd { velocity: zeros() },
            Optimizer::Adam { .. } => OptState::Adam { m: zeros(), v: zeros(), step: 0 },
        }
    }

    fn step(&mut self, opt: &Optimizer, model: &mut Model, grads: &[LayerParams]) {
        fn values(p: &mut LayerParams) -> impl Iterator<Item = &mut f64> {
            p.weights.iter_mut().chain(p.bias.iter_mut())
        }
        fn grad_values(g: &LayerParams) -> impl Iterator<Item = f64> + '_ {
            g.weights.iter().chain(&g.bias).copied()
        }
        match (self, *opt) {
            (OptState::Sgd { velocity }, Optimizer::Sgd { lr, momentum }) => {
                for ((p, g), v) in model.params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
                    for ((p, g), v) in values(p).zip(grad_values(g)).zip(values(v)) {
                        *v = momentum * *v + g;
                        *p -= lr * *v;
                    }
                }
            }
            (OptState::Adam { m, v, step }, Optimizer::Adam { lr, beta1, beta2, eps }) => {
                *step += 1;
                let c1 = 1.0 - beta1.powi(*step);
                let c2 = 1.0 - beta2.powi(*step);
                for (((p, g), m), v) in model.params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
                    for (((p, g), m), v) in values(p).zip(grad_values(g)).zip(values(m)).zip(values(v)) {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                    }
                }
            }
            _ => unreachable!("optimizer state matches its config"),
        }
    }
}

pub(crate) fn sample_tensor(sample: &InputSample) -> Tensor {
    Tensor { shape: super::Shape::new(sample.channels, sample.len), data: sample.data.clone() }
}

/// Summed loss gradients of `samples` under `model`.
pub fn batch_gradients(model: &Model, samples: &[&InputSample]) -> Result<Gradients> {
    let mut total = Gradients::zeros_like(model);
    for s in samples {
        let trace = model.forward(&sample_tensor(s))?;
        total.accumulate(&model.backward(&trace, s.label));
    }
    Ok(total)
}

/// Mini-batch training with per-epoch seeded shuffling. Batch gradients are averaged.
pub fn train(graph: &LayerGraph, samples: &[InputSample], config: &TrainConfig) -> Result<Checkpoint> {
    config.validate()?;
    if samples.is_empty() || !(samples.iter().any(|s| s.label == 0) && samples.iter().any(|s| s.label == 1)) {
        return Err(NnError::DegenerateSplit);
    }
    let expected = graph.input_shape();
    if let Some(s) = samples.iter().find(|s| (s.channels, s.len) != (expected.channels, expected.len)) {
        return Err(NnError::ShapeMismatch(format!(
            "sample ({}, {}) but graph expects {expected}",
            s.channels, s.len
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = init_model(graph, config.init, &mut rng);
    let mut state = OptState::new(&config.optimizer, &model);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let tensors: Vec<Tensor> = samples.iter().map(sample_tensor).collect();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grads = Gradients::zeros_like(&model);
            for &i in batch {
                let trace = model.forward(&tensors[i])?;
                grads.accumulate(&model.backward(&trace, samples[i].label));
            }
            let scale = 1.0 / batch.len() as f64;
            for layer in grads.layers.iter_mut() {
                layer.weights.iter_mut().chain(layer.bias.iter_mut()).for_each(|g| *g *= scale);
            }
            state.step(&config.optimizer, &mut model, &grads.layers);
        }
    }

    let mut total_loss = 0.0;
    for (t, s) in tensors.iter().zip(samples) {
        total_loss += super::model::loss(model.forward(t)?.logits(), s.label);
    }
    Ok(Checkpoint { model, config: config.clone(), final_loss: total_loss / samples.len() as f64 })
}
