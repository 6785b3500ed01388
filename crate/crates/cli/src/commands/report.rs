use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use gaitxai::data::{ChannelId, Sex};
use gaitxai::eval::{aggregate_signals, overlap_score, percent, EvalReport, Overlap};
use gaitxai::plot;
use gaitxai::spm::{Cluster, SpmResult};

use super::explain::ChannelRelevance;
use super::{csv_error, load_dataset, load_regions, open_input, write_file, RELEVANCE_DIR, REPORT_DIR, SPM_DIR};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

fn bad(path: &Path, what: impl std::fmt::Display) -> CliError {
    CliError::new("SchemaError", format!("{}: {what}", path.display()))
}

fn num(path: &Path, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| bad(path, format!("cannot parse number `{s}`")))
}

fn read_spm(dir: &Path, ch: ChannelId) -> Result<SpmResult> {
    let csv_path = dir.join(format!("{ch}.csv"));
    let mut reader = csv::Reader::from_reader(open_input(&csv_path)?);
    let (mut t_curve, mut d_curve) = (Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&csv_path, e))?;
        t_curve.push(num(&csv_path, record.get(2).unwrap_or_default())?);
        d_curve.push(num(&csv_path, record.get(3).unwrap_or_default())?);
    }

    let summary_path = dir.join(format!("{ch}.summary.txt"));
    let mut text = String::new();
    open_input(&summary_path)?.read_to_string(&mut text).map_err(|e| CliError::io(&summary_path, e))?;
    let kv: BTreeMap<&str, &str> = text.lines().filter_map(|l| l.split_once('=')).collect();
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(&summary_path, format!("missing key `{k}`")));
    let clusters = get("clusters")?
        .split(',')
        .filter(|c| !c.is_empty())
        .map(|c| {
            let parsed = c.split_once(':').and_then(|(range, peak)| {
                let (s, e) = range.split_once('-')?;
                Some((s.parse().ok()?, e.parse().ok()?, peak.parse().ok()?))
            });
            let (start, end, peak_t) = parsed.ok_or_else(|| bad(&summary_path, format!("malformed cluster `{c}`")))?;
            Ok(Cluster { start, end, peak_t })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpmResult {
        degenerate: (0..t_curve.len()).filter(|&i| t_curve[i].is_infinite()).collect(),
        t_curve,
        d_curve,
        df: num(&summary_path, get("nu")?)?,
        fwhm: num(&summary_path, get("fwhm")?)?,
        resels: num(&summary_path, get("resels")?)?,
        alpha: num(&summary_path, get("alpha")?)?,
        two_sided: get("two_sided")? == "true",
        t_star: num(&summary_path, get("t_star")?)?,
        clusters,
    })
}

fn read_mean_relevance(path: &Path) -> Result<Vec<ChannelRelevance>> {
    let mut reader = csv::Reader::from_reader(open_input(path)?);
    let mut rows: Vec<ChannelRelevance> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let ch = ChannelId::parse(record.get(0).unwrap_or_default())
            .ok_or_else(|| bad(path, format!("unknown channel `{}`", record.get(0).unwrap_or_default())))?;
        if rows.last().map(|r| r.channel) != Some(ch) {
            rows.push(ChannelRelevance { channel: ch, female: Vec::new(), male: Vec::new(), total: Vec::new() });
        }
        let row = rows.last_mut().expect("just pushed");
        row.female.push(num(path, record.get(2).unwrap_or_default())?);
        row.male.push(num(path, record.get(3).unwrap_or_default())?);
        row.total.push(num(path, record.get(4).unwrap_or_default())?);
    }
    Ok(rows)
}

fn overlap_lines(comparisons: &[(&str, Overlap)]) -> String {
    let mut s = plot::overlap_table(comparisons);
    s.push_str("\nJaccard index of covered nodes; '-' marks channels covered by neither set.\n");
    s
}

pub fn report(cfg: &RunConfig) -> Result<String> {
    let ds = load_dataset(cfg)?;
    let spm_dir = cfg.out.join(SPM_DIR);
    let rel_dir = cfg.out.join(RELEVANCE_DIR);
    let spm = ChannelId::ALL.iter().map(|&ch| Ok((ch, read_spm(&spm_dir, ch)?))).collect::<Result<Vec<_>>>()?;
    let relevance = read_mean_relevance(&rel_dir.join("mean.csv"))?;
    let lrp_regions = load_regions(&rel_dir.join("lrp_regions.csv"))?;
    let spm_regions = load_regions(&spm_dir.join("clusters.csv"))?;
    let literature = cfg.literature.as_deref().map(load_regions).transpose()?;
    let q = ds.series_len();
    for set in [Some(&lrp_regions), Some(&spm_regions), literature.as_ref()].into_iter().flatten() {
        set.check_len(q)?;
    }
    if let Some((ch, r)) = spm.iter().find(|(_, r)| r.t_curve.len() != q) {
        return Err(CliError::new("LengthMismatch", format!("SPM curve {ch} has {} nodes, the dataset {q}", r.t_curve.len())));
    }

    let female = aggregate_signals(&ds, Sex::Female)?;
    let male = aggregate_signals(&ds, Sex::Male)?;
    let pick = |f: fn(&ChannelRelevance) -> &Vec<f64>| -> Vec<(ChannelId, Vec<f64>)> {
        relevance.iter().map(|r| (r.channel, f(r).clone())).collect()
    };
    let dir = cfg.out.join(REPORT_DIR);
    write_file(&dir.join("panel_a.svg"), plot::panel_means(&female, &male, &spm))?;
    write_file(
        &dir.join("panel_b.svg"),
        plot::panel_class("B  female: mean, one SD band, colored by mean relevance", &female, &pick(|r| &r.female)),
    )?;
    write_file(
        &dir.join("panel_c.svg"),
        plot::panel_class("C  male: mean, one SD band, colored by mean relevance", &male, &pick(|r| &r.male)),
    )?;
    write_file(&dir.join("panel_d.svg"), plot::panel_effect(&ChannelId::ALL, &spm, &pick(|r| &r.total)))?;

    let mut comparisons = vec![("lrp vs spm", overlap_score(&lrp_regions, &spm_regions))];
    if let Some(lit) = &literature {
        comparisons.push(("lrp vs lit", overlap_score(&lrp_regions, lit)));
        comparisons.push(("spm vs lit", overlap_score(&spm_regions, lit)));
    }
    let mut text = String::from("E  region overlap\n\n");
    text.push_str(&overlap_lines(&comparisons));
    let report_json = cfg.out.join("report.json");
    if let Ok(json) = std::fs::read_to_string(&report_json) {
        let r: EvalReport = serde_json::from_str(&json).map_err(|e| bad(&report_json, e))?;
        let _ = writeln!(
            text,
            "\naccuracy {} ± {} over {} folds; zero-rule baseline {}",
            percent(r.mean_accuracy),
            percent(r.std_accuracy),
            r.k,
            percent(r.zero_rule)
        );
    }
    let _ = writeln!(text, "\nregions: {} lrp, {} spm, {} literature", lrp_regions.regions().len(), spm_regions.regions().len(), literature.as_ref().map_or(0, |l| l.regions().len()));
    write_file(&dir.join("overlap.txt"), &text)?;
    Ok(text)
}
