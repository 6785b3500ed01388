use std::fmt;
use std::str::FromStr;

use super::{NnError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    pub channels: usize,
    pub len: usize,
}

impl Shape {
    pub const fn new(channels: usize, len: usize) -> Self {
        Shape { channels, len }
    }

    pub fn size(&self) -> usize {
        self.channels * self.len
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.channels, self.len)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerSpec {
    Conv1d {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    MaxPool1d {
        window: usize,
        stride: usize,
    },
    GlobalAvgPool,
    Dense {
        out_units: usize,
    },
    Flatten,
}

impl LayerSpec {
    fn output_shape(&self, input: Shape) -> Result<Shape> {
        let invalid = |m: String| Err(NnError::InvalidGraph(m));
        match *self {
            LayerSpec::Conv1d { out_channels, kernel, stride, padding } => {
                let padded = input.len + 2 * padding;
                if out_channels == 0 || kernel == 0 || stride == 0 {
                    return invalid(format!("{self}: sizes and stride must be positive"));
                }
                if kernel > padded {
                    return invalid(format!("{self}: kernel longer than padded input {input}"));
                }
                Ok(Shape::new(out_channels, (padded - kernel) / stride + 1))
            }
            LayerSpec::Relu => Ok(input),
            LayerSpec::MaxPool1d { window, stride } => {
                if window == 0 || stride == 0 {
                    return invalid(format!("{self}: window and stride must be positive"));
                }
                if window > input.len {
                    return invalid(format!("{self}: window longer than input {input}"));
                }
                Ok(Shape::new(input.channels, (input.len - window) / stride + 1))
            }
            LayerSpec::GlobalAvgPool => Ok(Shape::new(input.channels, 1)),
            LayerSpec::Flatten => Ok(Shape::new(input.size(), 1)),
            LayerSpec::Dense { out_units } => {
                if input.len != 1 {
                    return invalid(format!("{self}: needs a (units, 1) input, got {input}; add flatten or gap"));
                }
                if out_units == 0 {
                    return invalid(format!("{self}: out_units must be positive"));
                }
                Ok(Shape::new(out_units, 1))
            }
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv1d { out_channels, kernel, stride, padding } => {
                write!(f, "conv1d({out_channels},{kernel},{stride},{padding})")
            }
            LayerSpec::Relu => f.write_str("relu"),
            LayerSpec::MaxPool1d { window, stride } => write!(f, "maxpool({window},{stride})"),
            LayerSpec::GlobalAvgPool => f.write_str("gap"),
            LayerSpec::Dense { out_units } => write!(f, "dense({out_units})"),
            LayerSpec::Flatten => f.write_str("flatten"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = NnError;

    /// Accepts the [`Display`](fmt::Display) form, e.g. `conv1d(8,9,1,4)` or `maxpool(4,4)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || NnError::InvalidGraph(format!("cannot parse layer `{s}`"));
        let (name, args) = match s.split_once('(') {
            Some((name, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(bad)?;
                let args = inner
                    .split(',')
                    .map(|a| a.trim().parse::<usize>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                (name.trim(), args)
            }
            None => (s, Vec::new()),
        };
        match (name, args.as_slice()) {
            ("conv1d", &[out_channels, kernel, stride, padding]) => {
                Ok(LayerSpec::Conv1d { out_channels, kernel, stride, padding })
            }
            ("conv1d", &[out_channels, kernel]) => Ok(LayerSpec::Conv1d { out_channels, kernel, stride: 1, padding: 0 }),
            ("relu", []) => Ok(LayerSpec::Relu),
            ("maxpool", &[window, stride]) => Ok(LayerSpec::MaxPool1d { window, stride }),
            ("gap", []) => Ok(LayerSpec::GlobalAvgPool),
            ("flatten", []) => Ok(LayerSpec::Flatten),
            ("dense", &[out_units]) => Ok(LayerSpec::Dense { out_units }),
            _ => Err(bad()),
        }
    }
}

/// Validated layer chain with the shape of every intermediate activation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerGraph {
    layers: Vec<LayerSpec>,
    /// `shapes[i]` is the input of layer `i`; the last entry is the output.
    shapes: Vec<Shape>,
}

impl LayerGraph {
    pub fn new(input: Shape, layers: Vec<LayerSpec>) -> Result<Self> {
        if input.size() == 0 {
            return Err(NnError::InvalidGraph("input shape must be non-empty".into()));
        }
        let mut shapes = vec![input];
        for layer in &layers {
            let next = layer.output_shape(*shapes.last().unwrap())?;
            shapes.push(next);
        }
        let out = *shapes.last().unwrap();
        if out != Shape::new(2, 1) {
            return Err(NnError::InvalidGraph(format!("graph must end in 2 logits, ends in {out}")));
        }
        Ok(LayerGraph { layers, shapes })
    }

    /// Conv(8,k9,p4) → ReLU → MaxPool(4,4) → Conv(16,k9,p4) → ReLU → Flatten → Dense(2).
    ///
    /// A global-average-pooling head (`gap` instead of `flatten`) is available in the
    /// layer vocabulary but dilutes short localized features and trains far slower.
    pub fn default_layers() -> Vec<LayerSpec> {
        vec![
            LayerSpec::Conv1d { out_channels: 8, kernel: 9, stride: 1, padding: 4 },
            LayerSpec::Relu,
            LayerSpec::MaxPool1d { window: 4, stride: 4 },
            LayerSpec::Conv1d { out_channels: 16, kernel: 9, stride: 1, padding: 4 },
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::Dense { out_units: 2 },
        ]
    }

    pub fn default_for(input: Shape) -> Result<Self> {
        LayerGraph::new(input, LayerGraph::default_layers())
    }

    /// Parses a whitespace- or `;`-separated layer list.
    pub fn parse_layers(text: &str) -> Result<Vec<LayerSpec>> {
        text.split(|c: char| c == ';' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_shape(&self) -> Shape {
        self.shapes[0]
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    /// `(weights, biases)` counts of layer `i`; `(0, 0)` for parameterless layers.
    pub fn param_len(&self, i: usize) -> (usize, usize) {
        let input = self.shapes[i];
        match self.layers[i] {
            LayerSpec::Conv1d { out_channels, kernel, .. } => (out_channels * input.channels * kernel, out_channels),
            LayerSpec::Dense { out_units } => (out_units * input.channels, out_units),
            _ => (0, 0),
        }
    }

    /// Fan-in of each output unit of layer `i`.
    pub fn fan_in(&self, i: usize) -> usize {
        let input = self.shapes[i];
        match self.layers[i] {
            LayerSpec::Conv1d { kernel, .. } => input.channels * kernel,
            LayerSpec::Dense { .. } => input.channels,
            _ => 0,
        }
    }

    pub fn describe(&self) -> String {
        self.layers.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
    }
}
