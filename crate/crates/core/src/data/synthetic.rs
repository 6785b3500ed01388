//! Planted-feature synthetic datasets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{ChannelId, Component, DataError, Dataset, GaitTrial, Result, Sex, Side};

/// Class 1 (male) trials get an additive bump on the left vertical curve; everything
/// else is a fixed template plus iid Gaussian noise.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n_subjects_per_class: usize,
    pub trials_per_subject: usize,
    pub series_len: usize,
    pub bump_center: usize,
    pub bump_width: usize,
    pub bump_amplitude: f64,
    pub noise_sd: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_subjects_per_class: 20,
            trials_per_subject: 5,
            series_len: 101,
            bump_center: 50,
            bump_width: 8,
            bump_amplitude: 0.3,
            noise_sd: 0.05,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DataError::InvalidSpec(m.to_string()));
        if self.n_subjects_per_class == 0 || self.trials_per_subject == 0 {
            return bad("subject and trial counts must be positive");
        }
        if self.series_len < 2 {
            return bad("series length must be at least 2");
        }
        if self.bump_width == 0 {
            return bad("bump width must be positive");
        }
        if self.bump_center < self.bump_width || self.bump_center + self.bump_width >= self.series_len {
            return bad("bump window must lie inside the series");
        }
        if !self.bump_amplitude.is_finite() || !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad("amplitude must be finite and noise_sd nonnegative");
        }
        Ok(())
    }

    /// Inclusive node window `[center - width, center + width]` of the planted bump.
    pub fn window(&self) -> (usize, usize) {
        (self.bump_center - self.bump_width, self.bump_center + self.bump_width)
    }

    /// Bump added to class-1 left-V curves. Zero outside the window.
    pub fn bump(&self) -> Vec<f64> {
        let (lo, hi) = self.window();
        let sigma = self.bump_width as f64 / 2.0;
        (0..self.series_len)
            .map(|i| {
                if i < lo || i > hi {
                    0.0
                } else {
                    let z = (i as f64 - self.bump_center as f64) / sigma;
                    self.bump_amplitude * (-0.5 * z * z).exp()
                }
            })
            .collect()
    }
}

fn gauss(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp()
}

/// Base template, body-weight-normalized force over the stance phase.
pub(crate) fn template(component: Component, len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let x = i as f64 / (len - 1) as f64;
            match component {
                Component::V => {
                    1.05 * gauss(x, 0.24, 0.1) + gauss(x, 0.76, 0.1) + 0.45 * (std::f64::consts::PI * x).sin().powi(2)
                }
                Component::AP => -0.2 * gauss(x, 0.2, 0.08) + 0.22 * gauss(x, 0.82, 0.07),
                Component::ML => 0.07 * gauss(x, 0.12, 0.05) + 0.05 * gauss(x, 0.6, 0.18),
            }
        })
        .collect()
}

/// Generates `2 · n_subjects_per_class` subjects; the first half are class 0.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| DataError::InvalidSpec(e.to_string()))?;
    let templates: Vec<Vec<f64>> = Component::ALL.iter().map(|&c| template(c, spec.series_len)).collect();
    let bump = spec.bump();
    let left_v = ChannelId::new(Side::Left, Component::V);
    let width = (2 * spec.n_subjects_per_class).to_string().len().max(3);

    let mut trials = Vec::with_capacity(2 * spec.n_subjects_per_class * spec.trials_per_subject);
    for s in 0..2 * spec.n_subjects_per_class {
        let sex = if s < spec.n_subjects_per_class { Sex::Female } else { Sex::Male };
        let mass = if sex == Sex::Female { 65.0 } else { 80.0 };
        for k in 0..spec.trials_per_subject {
            let curves: [Vec<f64>; 6] = std::array::from_fn(|c| {
                let ch = ChannelId::ALL[c];
                let base = &templates[ch.component.index()];
                (0..spec.series_len)
                    .map(|i| {
                        let planted = if sex == Sex::Male && ch == left_v { bump[i] } else { 0.0 };
                        let eps = if spec.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                        base[i] + planted + eps
                    })
                    .collect()
            });
            trials.push(GaitTrial::new(format!("S{:0width$}", s + 1), format!("T{}", k + 1), sex, mass, curves)?);
        }
    }
    Dataset::new(trials)
}
