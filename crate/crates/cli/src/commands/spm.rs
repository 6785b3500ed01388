use std::fmt::Write as _;

use gaitxai::data::ChannelId;
use gaitxai::eval::{spm_regions, write_regions};
use gaitxai::spm::{channel_groups, spm_two_sample, write_spm_csv, write_spm_summary, SpmResult};

use super::{load_dataset, write_file, SPM_DIR};
use crate::config::RunConfig;
use crate::error::Result;

pub fn spm(cfg: &RunConfig) -> Result<String> {
    let ds = load_dataset(cfg)?;
    let results = ChannelId::ALL
        .iter()
        .map(|&ch| {
            let (a, b) = channel_groups(&ds, ch, cfg.unit, cfg.normalized)?;
            Ok((ch, spm_two_sample(&a, &b, &cfg.spm)?))
        })
        .collect::<Result<Vec<(ChannelId, SpmResult)>>>()?;

    let dir = cfg.out.join(SPM_DIR);
    for (ch, r) in &results {
        let mut csv = Vec::new();
        write_spm_csv(std::slice::from_ref(&(*ch, r.clone())), &mut csv)?;
        write_file(&dir.join(format!("{ch}.csv")), csv)?;
        let sidecar: String = r.summary().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        write_file(&dir.join(format!("{ch}.summary.txt")), sidecar)?;
    }
    let mut summary = Vec::new();
    write_spm_summary(&results, &mut summary)?;
    write_file(&dir.join("summary.txt"), summary)?;
    let mut clusters = Vec::new();
    write_regions(&spm_regions(&results), &mut clusters)?;
    write_file(&dir.join("clusters.csv"), clusters)?;

    let mut text = format!("SPM unit={} sided={} normalized={}\n", cfg.unit, if cfg.spm.two_sided { "two" } else { "one" }, cfg.normalized);
    for (ch, r) in &results {
        let clusters: Vec<String> = r.clusters.iter().map(|c| format!("{}-{} (peak {:.3})", c.start, c.end, c.peak_t)).collect();
        let _ = writeln!(
            text,
            "{ch}: df={} fwhm={:.3} t*={:.4} clusters: {}",
            r.df,
            r.fwhm,
            r.t_star,
            if clusters.is_empty() { "none".to_string() } else { clusters.join(", ") }
        );
    }
    Ok(text)
}
