use super::{LrpError, RelevanceMap, Result};

/// Element-wise mean relevance per target class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassRelevance {
    pub channels: usize,
    pub len: usize,
    pub mean: [Vec<f64>; 2],
    pub counts: [usize; 2],
}

/// Groups maps by their target class and averages each group node by node.
pub fn average_relevance(maps: &[RelevanceMap]) -> Result<ClassRelevance> {
    let first = maps.first().ok_or(LrpError::EmptyGroup(0))?;
    let (channels, len) = (first.channels, first.len);
    let n = channels * len;
    let mut sums = [vec![0.0; n], vec![0.0; n]];
    let mut counts = [0usize; 2];
    for m in maps {
        if (m.channels, m.len) != (channels, len) || m.relevance.len() != n {
            return Err(LrpError::ShapeMismatch(format!(
                "map {}/{} is {}x{}, expected {channels}x{len}",
                m.subject_id, m.trial_id, m.channels, m.len
            )));
        }
        let k = m.target_class.min(1);
        counts[k] += 1;
        sums[k].iter_mut().zip(&m.relevance).for_each(|(s, r)| *s += r);
    }
    for k in 0..2 {
        if counts[k] == 0 {
            return Err(LrpError::EmptyGroup(k));
        }
        let c = counts[k] as f64;
        sums[k].iter_mut().for_each(|s| *s /= c);
    }
    Ok(ClassRelevance { channels, len, mean: sums, counts })
}

/// `|mean₀| + |mean₁|` at every node.
pub fn total_relevance(class0: &[f64], class1: &[f64]) -> Result<Vec<f64>> {
    if class0.len() != class1.len() {
        return Err(LrpError::ShapeMismatch(format!("{} vs {} nodes", class0.len(), class1.len())));
    }
    Ok(class0.iter().zip(class1).map(|(a, b)| a.abs() + b.abs()).collect())
}
