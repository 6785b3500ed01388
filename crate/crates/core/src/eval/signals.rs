use crate::data::{ChannelId, Dataset, Sex};

use super::{EvalError, Result};

/// Node-wise mean and population standard deviation of one channel over one class.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalSummary {
    pub channel: ChannelId,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Per-channel mean ± std curves over all trials of `sex`, on the raw curves.
pub fn aggregate_signals(ds: &Dataset, sex: Sex) -> Result<Vec<SignalSummary>> {
    let trials: Vec<_> = ds.trials_of(sex).collect();
    if trials.is_empty() {
        return Err(EvalError::EmptyGroup(sex.code().into()));
    }
    let n = trials.len() as f64;
    let q = ds.series_len();
    Ok(ChannelId::ALL
        .iter()
        .map(|&channel| {
            let mut mean = vec![0.0; q];
            for t in &trials {
                mean.iter_mut().zip(t.curve(channel)).for_each(|(m, v)| *m += v);
            }
            mean.iter_mut().for_each(|m| *m /= n);
            let mut var = vec![0.0; q];
            for t in &trials {
                for ((s, v), m) in var.iter_mut().zip(t.curve(channel)).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
            SignalSummary { channel, mean, std }
        })
        .collect())
}
