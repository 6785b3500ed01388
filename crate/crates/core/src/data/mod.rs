//! Gait trial data: types, CSV ingestion, normalization, input assembly, folds and
//! synthetic datasets.

mod csv_io;
mod folds;
mod input;
mod synthetic;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use csv_io::{parse_trials, write_trials, GaitRecMapping, Schema};
pub use folds::{make_folds, FoldPlan};
pub use input::{assemble_input, min_max_normalize, ComponentSet, InputLayout, InputSample, InputSpec};
pub use synthetic::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("length mismatch for {subject}/{trial} {channel}: expected {expected} values, found {found}")]
    LengthMismatch {
        subject: String,
        trial: String,
        channel: String,
        expected: usize,
        found: usize,
    },
    #[error("subject {0} carries both sex labels")]
    LabelConflict(String),
    #[error("non-finite value in {0}")]
    NonFiniteValue(String),
    #[error("dataset is empty")]
    Empty,
    #[error("{k} folds requested but the minority class has only {minority} subjects")]
    TooFewSubjects { k: usize, minority: usize },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl DataError {
    /// Machine-readable error class.
    pub fn class(&self) -> &'static str {
        match self {
            DataError::Schema(_) => "SchemaError",
            DataError::LengthMismatch { .. } => "LengthMismatch",
            DataError::LabelConflict(_) => "LabelConflict",
            DataError::NonFiniteValue(_) => "NonFiniteValue",
            DataError::Empty => "EmptyDataset",
            DataError::TooFewSubjects { .. } => "TooFewSubjects",
            DataError::InvalidSpec(_) => "BadFlag",
            DataError::Csv(_) => "SchemaError",
            DataError::Io(_) => "IoError",
        }
    }
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

/// Force component: vertical, anterior-posterior, medio-lateral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    V,
    AP,
    ML,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::V, Component::AP, Component::ML];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Component::V => "V",
            Component::AP => "AP",
            Component::ML => "ML",
        }
    }

    pub fn parse(s: &str) -> Option<Component> {
        match s.trim().to_ascii_uppercase().as_str() {
            "V" => Some(Component::V),
            "AP" => Some(Component::AP),
            "ML" => Some(Component::ML),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelId {
    pub side: Side,
    pub component: Component,
}

impl ChannelId {
    /// Canonical channel order: left V, AP, ML then right V, AP, ML.
    pub const ALL: [ChannelId; 6] = [
        ChannelId::new(Side::Left, Component::V),
        ChannelId::new(Side::Left, Component::AP),
        ChannelId::new(Side::Left, Component::ML),
        ChannelId::new(Side::Right, Component::V),
        ChannelId::new(Side::Right, Component::AP),
        ChannelId::new(Side::Right, Component::ML),
    ];

    pub const fn new(side: Side, component: Component) -> Self {
        ChannelId { side, component }
    }

    pub fn index(self) -> usize {
        let side = match self.side {
            Side::Left => 0,
            Side::Right => 3,
        };
        side + self.component.index()
    }

    pub fn code(self) -> &'static str {
        const CODES: [&str; 6] = ["L_V", "L_AP", "L_ML", "R_V", "R_AP", "R_ML"];
        CODES[self.index()]
    }

    pub fn parse(s: &str) -> Option<ChannelId> {
        let s = s.trim();
        ChannelId::ALL.iter().copied().find(|c| c.code().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Binary class label. Class index 0 is female, 1 is male.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sex {
    Female,
    Male,
}

impl Sex {
    pub fn class_index(self) -> usize {
        match self {
            Sex::Female => 0,
            Sex::Male => 1,
        }
    }

    pub fn from_class(class: usize) -> Sex {
        if class == 0 {
            Sex::Female
        } else {
            Sex::Male
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Sex::Female => "F",
            Sex::Male => "M",
        }
    }
}

/// One walking trial: six time-normalized GRF curves of a common length.
#[derive(Clone, Debug, PartialEq)]
pub struct GaitTrial {
    pub subject_id: String,
    pub trial_id: String,
    pub sex: Sex,
    pub body_mass_kg: f64,
    curves: [Vec<f64>; 6],
}

impl GaitTrial {
    /// `curves` is indexed by [`ChannelId::index`].
    pub fn new(
        subject_id: impl Into<String>,
        trial_id: impl Into<String>,
        sex: Sex,
        body_mass_kg: f64,
        curves: [Vec<f64>; 6],
    ) -> Result<Self> {
        let subject_id = subject_id.into();
        let trial_id = trial_id.into();
        let len = curves[0].len();
        if len < 2 {
            return Err(DataError::Schema(format!(
                "{subject_id}/{trial_id}: curves need at least 2 samples"
            )));
        }
        for ch in ChannelId::ALL {
            let curve = &curves[ch.index()];
            if curve.len() != len {
                return Err(DataError::LengthMismatch {
                    subject: subject_id,
                    trial: trial_id,
                    channel: ch.code().to_string(),
                    expected: len,
                    found: curve.len(),
                });
            }
            if curve.iter().any(|v| !v.is_finite()) {
                return Err(DataError::NonFiniteValue(format!("{subject_id}/{trial_id} {ch}")));
            }
        }
        if !body_mass_kg.is_finite() {
            return Err(DataError::NonFiniteValue(format!("{subject_id}/{trial_id} body_mass_kg")));
        }
        Ok(GaitTrial { subject_id, trial_id, sex, body_mass_kg, curves })
    }

    pub fn curve(&self, channel: ChannelId) -> &[f64] {
        &self.curves[channel.index()]
    }

    pub fn len(&self) -> usize {
        self.curves[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self) -> usize {
        self.sex.class_index()
    }
}

/// Ordered, validated trial collection.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    trials: Vec<GaitTrial>,
    len: usize,
}

impl Dataset {
    /// Validates shared length and label consistency and sorts by `(subject_id, trial_id)`.
    pub fn new(mut trials: Vec<GaitTrial>) -> Result<Self> {
        let first = trials.first().ok_or(DataError::Empty)?;
        let len = first.len();
        let mut sexes: BTreeMap<&str, Sex> = BTreeMap::new();
        for t in &trials {
            if t.len() != len {
                return Err(DataError::LengthMismatch {
                    subject: t.subject_id.clone(),
                    trial: t.trial_id.clone(),
                    channel: "*".into(),
                    expected: len,
                    found: t.len(),
                });
            }
            match sexes.get(t.subject_id.as_str()) {
                Some(&s) if s != t.sex => return Err(DataError::LabelConflict(t.subject_id.clone())),
                _ => {
                    sexes.insert(&t.subject_id, t.sex);
                }
            }
        }
        trials.sort_by(|a, b| (&a.subject_id, &a.trial_id).cmp(&(&b.subject_id, &b.trial_id)));
        for w in trials.windows(2) {
            if w[0].subject_id == w[1].subject_id && w[0].trial_id == w[1].trial_id {
                return Err(DataError::Schema(format!(
                    "duplicate trial {}/{}",
                    w[0].subject_id, w[0].trial_id
                )));
            }
        }
        Ok(Dataset { trials, len })
    }

    pub fn trials(&self) -> &[GaitTrial] {
        &self.trials
    }

    /// Shared series length `T`.
    pub fn series_len(&self) -> usize {
        self.len
    }

    /// Distinct subjects with their label, sorted by id.
    pub fn subjects(&self) -> Vec<(&str, Sex)> {
        let mut out: Vec<(&str, Sex)> = Vec::new();
        for t in &self.trials {
            if out.last().map(|(s, _)| *s) != Some(t.subject_id.as_str()) {
                out.push((&t.subject_id, t.sex));
            }
        }
        out
    }

    /// Trial counts per class index.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for t in &self.trials {
            counts[t.label()] += 1;
        }
        counts
    }

    pub fn trials_of(&self, sex: Sex) -> impl Iterator<Item = &GaitTrial> {
        self.trials.iter().filter(move |t| t.sex == sex)
    }

    /// Keeps the trials for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(&GaitTrial) -> bool) -> Result<Dataset> {
        Dataset::new(self.trials.iter().filter(|t| keep(t)).cloned().collect())
    }
}
