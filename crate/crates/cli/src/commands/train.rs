use gaitxai::data::make_folds;
use gaitxai::eval::run_cv;

use super::{create_dir, csv_error, fold_file, load_dataset, write_file, CHECKPOINT_DIR, FOLDS_FILE};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub fn train(cfg: &RunConfig) -> Result<String> {
    let ds = load_dataset(cfg)?;
    let input = cfg.input_spec(ds.series_len());
    let graph = cfg.graph(&input)?;
    let outcome = run_cv(&ds, &input, &graph, &cfg.train_config(), cfg.k, cfg.seed, cfg.parallel)?;
    let plan = make_folds(&ds, cfg.k, cfg.seed)?;

    let dir = create_dir(&cfg.out.join(CHECKPOINT_DIR))?;
    remove_stale_checkpoints(&dir)?;
    let mut report = outcome.report;
    for (fold, ck) in outcome.checkpoints.iter().enumerate() {
        write_file(&dir.join(fold_file(fold)), ck.to_bytes())?;
        report.checkpoints.push(format!("{CHECKPOINT_DIR}/{}", fold_file(fold)));
    }
    let folds_path = dir.join(FOLDS_FILE);
    let mut folds = csv::Writer::from_writer(Vec::new());
    let write_err = |e| csv_error(&folds_path, e);
    folds.write_record(["subject_id", "fold"]).map_err(write_err)?;
    for (subject, fold) in &plan.assignments {
        folds.write_record([subject.as_str(), &fold.to_string()]).map_err(write_err)?;
    }
    let bytes = folds.into_inner().map_err(|e| CliError::new("IoError", e.to_string()))?;
    write_file(&folds_path, bytes)?;
    for (k, v) in cfg.to_kv() {
        report.config.entry(k).or_insert(v);
    }

    let text = report.to_text();
    write_file(&cfg.out.join("report.json"), report.to_json()?)?;
    write_file(&cfg.out.join("report.txt"), &text)?;
    Ok(text)
}

/// Deletes `fold_NN.gxai` files left by an earlier run with more folds.
fn remove_stale_checkpoints(dir: &std::path::Path) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let stale = name.strip_prefix("fold_").and_then(|n| n.strip_suffix(".gxai")).is_some_and(|n| n.chars().all(|c| c.is_ascii_digit()));
        if stale {
            std::fs::remove_file(&path).map_err(|e| CliError::io(&path, e))?;
        }
    }
    Ok(())
}
