use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use gaitxai::data::{ChannelId, InputSample};
use gaitxai::eval::{relevance_regions, write_regions};
use gaitxai::lrp::{average_relevance, explain_samples, total_relevance, write_relevance_csv, RelevanceMap};
use gaitxai::nn::Checkpoint;

use super::{csv_error, fold_file, load_dataset, write_file, CHECKPOINT_DIR, FOLDS_FILE, RELEVANCE_DIR};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

fn read_folds(path: &Path) -> Result<BTreeMap<String, usize>> {
    if !path.is_file() {
        return Err(CliError::checkpoint(format!("{} not found; run `train` first", path.display())));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut folds = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let fold = record
            .get(1)
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| CliError::checkpoint(format!("{}: malformed fold row", path.display())))?;
        folds.insert(record.get(0).unwrap_or_default().to_string(), fold);
    }
    if folds.is_empty() {
        return Err(CliError::checkpoint(format!("{} lists no subjects", path.display())));
    }
    Ok(folds)
}

/// Per-class means and their total, split back onto GRF channels.
pub(crate) struct ChannelRelevance {
    pub channel: ChannelId,
    pub female: Vec<f64>,
    pub male: Vec<f64>,
    pub total: Vec<f64>,
}

pub(crate) fn write_mean_csv(rows: &[ChannelRelevance]) -> String {
    let mut s = String::from("channel,node_index,female,male,total\n");
    for r in rows {
        for (i, ((f, m), t)) in r.female.iter().zip(&r.male).zip(&r.total).enumerate() {
            let _ = writeln!(s, "{},{i},{f},{m},{t}", r.channel);
        }
    }
    s
}

pub fn explain(cfg: &RunConfig, checkpoints: Option<&Path>) -> Result<String> {
    let ds = load_dataset(cfg)?;
    let input = cfg.input_spec(ds.series_len());
    let graph = cfg.graph(&input)?;
    let dir = checkpoints.map(Path::to_path_buf).unwrap_or_else(|| cfg.out.join(CHECKPOINT_DIR));
    let folds = read_folds(&dir.join(FOLDS_FILE))?;
    let k = folds.values().max().map_or(0, |m| m + 1);

    let mut models = Vec::with_capacity(k);
    for fold in 0..k {
        let path = dir.join(fold_file(fold));
        let ck = Checkpoint::load(&path).map_err(|e| CliError::checkpoint(format!("{}: {e}", path.display())))?;
        if ck.model.graph != graph {
            return Err(CliError::checkpoint(format!(
                "{} holds `{}` but the config describes `{}`",
                path.display(),
                ck.model.graph.describe(),
                graph.describe()
            )));
        }
        models.push(ck.model);
    }

    let mut by_fold: Vec<Vec<(usize, InputSample)>> = vec![Vec::new(); k];
    for (i, trial) in ds.trials().iter().enumerate() {
        let fold = *folds
            .get(&trial.subject_id)
            .ok_or_else(|| CliError::checkpoint(format!("subject `{}` is not in any fold", trial.subject_id)))?;
        by_fold[fold].push((i, input.assemble(trial)));
    }
    let mut maps: Vec<Option<RelevanceMap>> = vec![None; ds.trials().len()];
    for (fold, entries) in by_fold.into_iter().enumerate() {
        let (index, samples): (Vec<usize>, Vec<InputSample>) = entries.into_iter().unzip();
        for (i, m) in index.into_iter().zip(explain_samples(&models[fold], &samples, cfg.target, &cfg.lrp)?) {
            maps[i] = Some(m);
        }
    }
    let maps: Vec<RelevanceMap> = maps.into_iter().map(|m| m.expect("every trial has a fold")).collect();

    let means = average_relevance(&maps)?;
    let total = total_relevance(&means.mean[0], &means.mean[1])?;
    let rows: Vec<ChannelRelevance> = input
        .split(&means.mean[0])
        .into_iter()
        .zip(input.split(&means.mean[1]))
        .zip(input.split(&total))
        .map(|(((channel, female), (_, male)), (_, total))| ChannelRelevance { channel, female, male, total })
        .collect();
    let curves: Vec<(ChannelId, Vec<f64>)> = rows.iter().map(|r| (r.channel, r.total.clone())).collect();
    let regions = relevance_regions(&curves, cfg.fraction)?;

    let out = cfg.out.join(RELEVANCE_DIR);
    let mut csv = Vec::new();
    write_relevance_csv(&maps, &input, &mut csv)?;
    write_file(&out.join("relevance.csv"), csv)?;
    write_file(&out.join("mean.csv"), write_mean_csv(&rows))?;
    let mut region_bytes = Vec::new();
    write_regions(&regions, &mut region_bytes)?;
    write_file(&out.join("lrp_regions.csv"), region_bytes)?;

    let worst = maps.iter().map(|m| m.residual().abs() / m.output_score.abs().max(1.0)).fold(0.0, f64::max);
    let (peak_ch, peak_i, _) = rows
        .iter()
        .flat_map(|r| r.total.iter().enumerate().map(move |(i, &v)| (r.channel, i, v)))
        .fold((rows[0].channel, 0, f64::NEG_INFINITY), |best, cur| if cur.2 > best.2 { cur } else { best });
    let mut text = String::new();
    let _ = writeln!(text, "explained {} trials with {k} fold models ({} female, {} male targets)", maps.len(), means.counts[0], means.counts[1]);
    let _ = writeln!(text, "largest share of the logit not reaching the input (biases, stabilizer): {worst:.3e}");
    let _ = writeln!(text, "total relevance peak: {peak_ch} node {peak_i}");
    for r in regions.regions() {
        let _ = writeln!(text, "relevant region {}: {} {}-{}", r.name, r.channel, r.start, r.end);
    }
    Ok(text)
}
