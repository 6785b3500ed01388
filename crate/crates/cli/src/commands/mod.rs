//! Subcommand implementations and the output-directory layout they share.

mod explain;
mod report;
mod spm;
mod synth;
mod train;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use gaitxai::data::{parse_trials, Dataset};
use gaitxai::eval::{read_regions, RegionSet};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub use explain::explain;
pub use report::report;
pub use spm::spm;
pub use synth::synth;
pub use train::train;

pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FOLDS_FILE: &str = "folds.csv";
pub const RELEVANCE_DIR: &str = "relevance";
pub const SPM_DIR: &str = "spm";
pub const REPORT_DIR: &str = "report";

pub fn fold_file(fold: usize) -> String {
    format!("fold_{fold:02}.gxai")
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let path = cfg.data_path();
    let file = File::open(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::new("DataNotFound", format!("dataset {} not found", path.display())),
        _ => CliError::io(&path, e),
    })?;
    Ok(parse_trials(BufReader::new(file), &cfg.schema()?)?)
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::missing_input(path),
        _ => CliError::io(path, e),
    })
}

fn create_dir(path: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Writes `bytes` to `path`, creating parent directories.
fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn load_regions(path: &Path) -> Result<RegionSet> {
    Ok(read_regions(open_input(path)?)?)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::new("SchemaError", format!("{}: {e}", path.display()))
}
