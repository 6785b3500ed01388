//! Min-max normalization and assembly of network inputs from trials.

use std::fmt;
use std::str::FromStr;

use super::{ChannelId, Component, DataError, GaitTrial, Result, Side};

/// Maps `x` affinely onto `[0, 1]`. A constant series maps to all `0.5`.
pub fn min_max_normalize(series: &[f64]) -> Result<Vec<f64>> {
    if series.iter().any(|v| !v.is_finite()) {
        return Err(DataError::NonFiniteValue("series passed to min_max_normalize".into()));
    }
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if series.is_empty() {
        return Ok(Vec::new());
    }
    let range = hi - lo;
    if range == 0.0 {
        return Ok(vec![0.5; series.len()]);
    }
    Ok(series.iter().map(|&v| ((v - lo) / range).clamp(0.0, 1.0)).collect())
}

/// How the left and right curves of one component are arranged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InputLayout {
    /// One channel per component with left then right concatenated in time (`L = 2T`).
    #[default]
    TemporalConcat,
    /// One channel per side and component (`L = T`).
    ChannelStack,
}

impl fmt::Display for InputLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputLayout::TemporalConcat => "temporal_concat",
            InputLayout::ChannelStack => "channel_stack",
        })
    }
}

impl FromStr for InputLayout {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "temporal_concat" => Ok(InputLayout::TemporalConcat),
            "channel_stack" => Ok(InputLayout::ChannelStack),
            other => Err(format!("unknown input layout `{other}`")),
        }
    }
}

/// Non-empty subset of force components, always iterated as V, AP, ML.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComponentSet([bool; 3]);

impl ComponentSet {
    pub const ALL: ComponentSet = ComponentSet([true; 3]);

    pub fn new(components: &[Component]) -> Option<Self> {
        let mut set = [false; 3];
        for c in components {
            set[c.index()] = true;
        }
        set.iter().any(|&b| b).then_some(ComponentSet(set))
    }

    pub fn contains(&self, c: Component) -> bool {
        self.0[c.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = Component> + '_ {
        Component::ALL.into_iter().filter(|c| self.contains(*c))
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// GRF channels covered by this subset, in canonical order.
    pub fn channels(&self) -> Vec<ChannelId> {
        ChannelId::ALL.into_iter().filter(|ch| self.contains(ch.component)).collect()
    }
}

impl Default for ComponentSet {
    fn default() -> Self {
        ComponentSet::ALL
    }
}

impl fmt::Display for ComponentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Component::code).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for ComponentSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let comps = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| Component::parse(p).ok_or_else(|| format!("unknown component `{}`", p.trim())))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        ComponentSet::new(&comps).ok_or_else(|| "component subset must be non-empty".to_string())
    }
}

/// Network input sample: `channels × len` values, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSample {
    pub channels: usize,
    pub len: usize,
    pub data: Vec<f64>,
    pub label: usize,
    pub subject_id: String,
    pub trial_id: String,
}

impl InputSample {
    pub fn row(&self, channel: usize) -> &[f64] {
        &self.data[channel * self.len..(channel + 1) * self.len]
    }
}

/// Layout, component subset and series length: everything needed to map between trials
/// and input nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InputSpec {
    pub layout: InputLayout,
    pub components: ComponentSet,
    pub series_len: usize,
}

impl InputSpec {
    pub fn new(layout: InputLayout, components: ComponentSet, series_len: usize) -> Self {
        InputSpec { layout, components, series_len }
    }

    /// `(C, L)` of the assembled input.
    pub fn shape(&self) -> (usize, usize) {
        let k = self.components.len();
        match self.layout {
            InputLayout::TemporalConcat => (k, 2 * self.series_len),
            InputLayout::ChannelStack => (2 * k, self.series_len),
        }
    }

    /// Label of input channel `c` as used in exports: the component code for
    /// temporal concatenation, the GRF channel code for stacking.
    pub fn channel_label(&self, c: usize) -> &'static str {
        match self.layout {
            InputLayout::TemporalConcat => self.components.iter().nth(c).map(Component::code).unwrap_or("?"),
            InputLayout::ChannelStack => self.stacked_channels().get(c).map(|ch| ch.code()).unwrap_or("?"),
        }
    }

    fn stacked_channels(&self) -> Vec<ChannelId> {
        self.components
            .iter()
            .flat_map(|comp| [ChannelId::new(Side::Left, comp), ChannelId::new(Side::Right, comp)])
            .collect()
    }

    /// GRF channel and time index of input node `(c, i)`.
    pub fn locate(&self, c: usize, i: usize) -> (ChannelId, usize) {
        let t = self.series_len;
        match self.layout {
            InputLayout::TemporalConcat => {
                let comp = self.components.iter().nth(c).expect("channel index in range");
                let side = if i < t { Side::Left } else { Side::Right };
                (ChannelId::new(side, comp), i % t)
            }
            InputLayout::ChannelStack => (self.stacked_channels()[c], i),
        }
    }

    /// Splits a flat `C × L` node vector into per-GRF-channel curves of length `T`.
    pub fn split(&self, flat: &[f64]) -> Vec<(ChannelId, Vec<f64>)> {
        let (c_n, l_n) = self.shape();
        assert_eq!(flat.len(), c_n * l_n, "flat node vector has wrong size");
        let mut out: Vec<(ChannelId, Vec<f64>)> = self
            .components
            .channels()
            .into_iter()
            .map(|ch| (ch, vec![0.0; self.series_len]))
            .collect();
        for c in 0..c_n {
            for i in 0..l_n {
                let (ch, t) = self.locate(c, i);
                let slot = out.iter_mut().find(|(id, _)| *id == ch).expect("channel in subset");
                slot.1[t] = flat[c * l_n + i];
            }
        }
        out
    }

    pub fn assemble(&self, trial: &GaitTrial) -> InputSample {
        assemble_input(trial, self.layout, &self.components)
    }
}

/// Builds the normalized network input for one trial. Each side's curve is min-max
/// normalized on its own before concatenation.
pub fn assemble_input(trial: &GaitTrial, layout: InputLayout, subset: &ComponentSet) -> InputSample {
    let t = trial.len();
    let norm = |side, comp| {
        min_max_normalize(trial.curve(ChannelId::new(side, comp))).expect("trial curves are finite")
    };
    let mut data = Vec::with_capacity(2 * t * subset.len());
    for comp in subset.iter() {
        data.extend(norm(Side::Left, comp));
        data.extend(norm(Side::Right, comp));
    }
    let (channels, len) = match layout {
        InputLayout::TemporalConcat => (subset.len(), 2 * t),
        InputLayout::ChannelStack => (2 * subset.len(), t),
    };
    InputSample {
        channels,
        len,
        data,
        label: trial.label(),
        subject_id: trial.subject_id.clone(),
        trial_id: trial.trial_id.clone(),
    }
}
