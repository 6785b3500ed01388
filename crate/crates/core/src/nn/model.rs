use super::graph::{LayerGraph, LayerSpec, Shape};
use super::{NnError, Result};

/// Row-major `(channels, len)` activation.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Shape,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.size() {
            return Err(NnError::ShapeMismatch(format!("{} values for shape {shape}", data.len())));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        Tensor { shape, data: vec![0.0; shape.size()] }
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.shape.len..(c + 1) * self.shape.len]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.shape.len;
        &mut self.data[c * len..(c + 1) * len]
    }
}

/// Weights and biases of one layer. Conv weights are `[out][in][kernel]`, dense weights
/// `[out][in]`. Both are empty for parameterless layers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Every layer's input, plus the final output as the last entry.
#[derive(Clone, Debug)]
pub struct Trace {
    pub activations: Vec<Tensor>,
}

impl Trace {
    pub fn input_of(&self, layer: usize) -> &Tensor {
        &self.activations[layer]
    }

    pub fn output(&self) -> &Tensor {
        self.activations.last().expect("trace has the input at least")
    }

    pub fn logits(&self) -> [f64; 2] {
        let out = &self.output().data;
        [out[0], out[1]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
    pub input: Tensor,
    pub loss: f64,
}

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        Gradients {
            layers: model
                .params
                .iter()
                .map(|p| LayerParams { weights: vec![0.0; p.weights.len()], bias: vec![0.0; p.bias.len()] })
                .collect(),
            input: Tensor::zeros(model.graph.input_shape()),
            loss: 0.0,
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
        self.input.data.iter_mut().zip(&other.input.data).for_each(|(x, y)| *x += y);
        self.loss += other.loss;
    }
}

/// Numerically stable softmax over two logits.
pub fn softmax(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

/// Softmax cross-entropy `-log softmax(logits)[label]` via log-sum-exp.
pub fn loss(logits: [f64; 2], label: usize) -> f64 {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    (lse - logits[label]).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub probabilities: [f64; 2],
    pub logits: [f64; 2],
}

impl Prediction {
    /// Argmax with ties going to class 0.
    pub fn from_logits(logits: [f64; 2]) -> Self {
        Prediction { class: usize::from(logits[1] > logits[0]), probabilities: softmax(logits), logits }
    }
}

/// A layer graph together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub graph: LayerGraph,
    pub params: Vec<LayerParams>,
}

impl Model {
    pub fn zeros(graph: LayerGraph) -> Self {
        let params = (0..graph.layers().len())
            .map(|i| {
                let (w, b) = graph.param_len(i);
                LayerParams { weights: vec![0.0; w], bias: vec![0.0; b] }
            })
            .collect();
        Model { graph, params }
    }

    pub fn with_params(graph: LayerGraph, params: Vec<LayerParams>) -> Result<Self> {
        if params.len() != graph.layers().len() {
            return Err(NnError::ShapeMismatch(format!(
                "{} parameter blocks for {} layers",
                params.len(),
                graph.layers().len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            let (w, b) = graph.param_len(i);
            if p.weights.len() != w || p.bias.len() != b {
                return Err(NnError::ShapeMismatch(format!("layer {i} expects {w} weights and {b} biases")));
            }
        }
        Ok(Model { graph, params })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Trace> {
        if x.shape != self.graph.input_shape() {
            return Err(NnError::ShapeMismatch(format!(
                "input {} but graph expects {}",
                x.shape,
                self.graph.input_shape()
            )));
        }
        let mut activations = Vec::with_capacity(self.graph.layers().len() + 1);
        activations.push(x.clone());
        for (i, layer) in self.graph.layers().iter().enumerate() {
            let out_shape = self.graph.shapes()[i + 1];
            let next = forward_layer(layer, &self.params[i], &activations[i], out_shape);
            activations.push(next);
        }
        Ok(Trace { activations })
    }

    pub fn forward_input(&self, channels: usize, len: usize, data: &[f64]) -> Result<Trace> {
        self.forward(&Tensor::new(Shape::new(channels, len), data.to_vec())?)
    }

    pub fn predict(&self, x: &Tensor) -> Result<Prediction> {
        Ok(Prediction::from_logits(self.forward(x)?.logits()))
    }

    /// Exact gradients of the cross-entropy loss for `label`.
    pub fn backward(&self, trace: &Trace, label: usize) -> Gradients {
        let logits = trace.logits();
        let p = softmax(logits);
        let mut g = [p[0], p[1]];
        g[label] -= 1.0;
        let mut grads = self.backward_from(trace, &g);
        grads.loss = loss(logits, label);
        grads
    }

    /// Backpropagates an arbitrary gradient on the output logits.
    pub fn backward_from(&self, trace: &Trace, output_grad: &[f64]) -> Gradients {
        let mut grads = Gradients::zeros_like(self);
        let mut upstream = Tensor { shape: trace.output().shape, data: output_grad.to_vec() };
        for (i, layer) in self.graph.layers().iter().enumerate().rev() {
            upstream = backward_layer(layer, &self.params[i], trace.input_of(i), &upstream, &mut grads.layers[i]);
        }
        grads.input = upstream;
        grads
    }
}

/// Valid kernel tap range `[lo, hi)` for an output whose window starts at `start`.
#[inline]
fn tap_range(start: isize, kernel: usize, len: usize) -> (usize, usize) {
    let lo = (-start).max(0) as usize;
    let hi = ((len as isize - start).max(0) as usize).min(kernel);
    (lo.min(hi), hi)
}

fn forward_layer(layer: &LayerSpec, p: &LayerParams, x: &Tensor, out_shape: Shape) -> Tensor {
    let mut out = Tensor::zeros(out_shape);
    match *layer {
        LayerSpec::Conv1d { kernel, stride, padding, .. } => {
            let cin = x.shape.channels;
            for o in 0..out_shape.channels {
                for i in 0..out_shape.len {
                    let start = (i * stride) as isize - padding as isize;
                    let (lo, hi) = tap_range(start, kernel, x.shape.len);
                    let mut acc = p.bias[o];
                    for c in 0..cin {
                        let w = &p.weights[(o * cin + c) * kernel..(o * cin + c + 1) * kernel];
                        let row = x.row(c);
                        for m in lo..hi {
                            acc += w[m] * row[(start + m as isize) as usize];
                        }
                    }
                    out.data[o * out_shape.len + i] = acc;
                }
            }
        }
        LayerSpec::Relu => {
            for (o, &v) in out.data.iter_mut().zip(&x.data) {
                *o = v.max(0.0);
            }
        }
        LayerSpec::MaxPool1d { window, stride } => {
            for c in 0..x.shape.channels {
                let row = x.row(c);
                for i in 0..out_shape.len {
                    out.data[c * out_shape.len + i] = row[argmax_window(row, i * stride, window)];
                }
            }
        }
        LayerSpec::GlobalAvgPool => {
            for c in 0..x.shape.channels {
                out.data[c] = x.row(c).iter().sum::<f64>() / x.shape.len as f64;
            }
        }
        LayerSpec::Flatten => out.data.copy_from_slice(&x.data),
        LayerSpec::Dense { out_units } => {
            let n_in = x.shape.channels;
            for u in 0..out_units {
                let w = &p.weights[u * n_in..(u + 1) * n_in];
                out.data[u] = p.bias[u] + w.iter().zip(&x.data).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
    out
}

/// Index of the first maximum in `row[start..start + window]`.
pub(crate) fn argmax_window(row: &[f64], start: usize, window: usize) -> usize {
    let mut best = start;
    for j in start + 1..start + window {
        if row[j] > row[best] {
            best = j;
        }
    }
    best
}

fn backward_layer(layer: &LayerSpec, p: &LayerParams, x: &Tensor, g: &Tensor, grad: &mut LayerParams) -> Tensor {
    let mut gx = Tensor::zeros(x.shape);
    match *layer {
        LayerSpec::Conv1d { kernel, stride, padding, .. } => {
            let cin = x.shape.channels;
            let out_len = g.shape.len;
            for o in 0..g.shape.channels {
                for i in 0..out_len {
                    let go = g.data[o * out_len + i];
                    if go == 0.0 {
                        continue;
                    }
                    grad.bias[o] += go;
                    let start = (i * stride) as isize - padding as isize;
                    let (lo, hi) = tap_range(start, kernel, x.shape.len);
                    for c in 0..cin {
                        let base = (o * cin + c) * kernel;
                        for m in lo..hi {
                            let pos = (start + m as isize) as usize;
                            grad.weights[base + m] += go * x.data[c * x.shape.len + pos];
                            gx.data[c * x.shape.len + pos] += go * p.weights[base + m];
                        }
                    }
                }
            }
        }
        LayerSpec::Relu => {
            for ((d, &v), &u) in gx.data.iter_mut().zip(&x.data).zip(&g.data) {
                *d = if v > 0.0 { u } else { 0.0 };
            }
        }
        LayerSpec::MaxPool1d { window, stride } => {
            for c in 0..x.shape.channels {
                let row = x.row(c);
                for i in 0..g.shape.len {
                    let j = argmax_window(row, i * stride, window);
                    gx.data[c * x.shape.len + j] += g.data[c * g.shape.len + i];
                }
            }
        }
        LayerSpec::GlobalAvgPool => {
            let inv = 1.0 / x.shape.len as f64;
            for c in 0..x.shape.channels {
                let gc = g.data[c] * inv;
                gx.row_mut(c).iter_mut().for_each(|d| *d = gc);
            }
        }
        LayerSpec::Flatten => gx.data.copy_from_slice(&g.data),
        LayerSpec::Dense { out_units } => {
            let n_in = x.shape.channels;
            for u in 0..out_units {
                let gu = g.data[u];
                grad.bias[u] += gu;
                for j in 0..n_in {
                    grad.weights[u * n_in + j] += gu * x.data[j];
                    gx.data[j] += gu * p.weights[u * n_in + j];
                }
            }
        }
    }
    gx
}
