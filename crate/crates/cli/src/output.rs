use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliError;

pub const CONFIG_FILE: &str = "config.json";

/// `--out` if given, else a fresh `<command>-<unix seconds>` directory.
pub fn run_dir(out: Option<&Path>, command: &str) -> Result<PathBuf, CliError> {
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            let base = format!("{command}-{secs}");
            let mut dir = PathBuf::from(&base);
            let mut k = 1;
            while dir.exists() {
                dir = PathBuf::from(format!("{base}-{k}"));
                k += 1;
            }
            dir
        }
    };
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("cannot serialise {}: {e}", path.display())))?;
    write(path, &(text + "\n"))
}
