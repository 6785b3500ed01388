use gaitxai::data::{generate_synthetic, write_trials};

use super::write_file;
use crate::config::RunConfig;
use crate::error::Result;

pub fn synth(cfg: &RunConfig) -> Result<String> {
    let ds = generate_synthetic(&cfg.synth, cfg.seed)?;
    let mut bytes = Vec::new();
    write_trials(&ds, &mut bytes)?;
    let path = cfg.out.join("dataset.csv");
    write_file(&path, bytes)?;
    let (lo, hi) = cfg.synth.window();
    Ok(format!(
        "seed={}\nwrote {}: {} trials of length {}, planted window L_V {lo}-{hi}\n",
        cfg.seed,
        path.display(),
        ds.trials().len(),
        ds.series_len()
    ))
}
