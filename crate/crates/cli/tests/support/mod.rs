//! Runs the `gaitxai` binary and inspects its output directory.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_gaitxai");

/// Exit code, stdout and stderr of one invocation.
pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    /// The single `error[Class]: ...` line, if that is all stderr holds.
    pub fn error_class(&self) -> Option<&str> {
        let mut lines = self.stderr.lines();
        let line = lines.next()?;
        if lines.next().is_some() {
            return None;
        }
        line.strip_prefix("error[")?.split_once("]: ").map(|(c, _)| c)
    }
}

pub fn gaitxai(args: &[&str]) -> Run {
    let Output { status, stdout, stderr } = Command::new(BIN).args(args).output().expect("binary runs");
    Run {
        code: status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
    }
}

/// Runs one subcommand against `out` with extra arguments; panics on failure.
pub fn step(cmd: &str, out: &Path, extra: &[&str]) -> String {
    let out = out.to_str().unwrap();
    let mut args = vec![cmd, "--out", out];
    args.extend_from_slice(extra);
    let r = gaitxai(&args);
    assert_eq!(r.code, 0, "{cmd} failed: {}", r.stderr);
    r.stdout
}

/// Every file under `root` keyed by its relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub const PANELS: [&str; 4] = ["panel_a.svg", "panel_b.svg", "panel_c.svg", "panel_d.svg"];

/// Checks the four panels parse as XML with a 1200×300 root and the table exists.
pub fn check_report(out: &Path) -> Result<(), String> {
    for name in PANELS {
        let path = out.join("report").join(name);
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{name}: {e}"))?;
        let doc = roxmltree::Document::parse(&text).map_err(|e| format!("{name}: {e}"))?;
        let root = doc.root_element();
        if root.tag_name().name() != "svg" || root.attribute("width") != Some("1200") || root.attribute("height") != Some("300") {
            return Err(format!("{name}: root is not a 1200x300 svg"));
        }
    }
    let table = std::fs::read_to_string(out.join("report").join("overlap.txt")).map_err(|e| format!("overlap.txt: {e}"))?;
    if !table.contains("overall") {
        return Err("overlap.txt has no overlap table".into());
    }
    Ok(())
}

/// Small, fast pipeline settings.
pub const QUICK: [&str; 6] = ["--set", "train.epochs=4", "--set", "cv.k=3", "--set", "synth.subjects=6"];
