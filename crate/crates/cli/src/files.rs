use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| CliError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Creates `path` (and missing parent directories) for writing.
pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    let wrap = |source| CliError::File {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(wrap)?;
    }
    File::create(path).map(BufWriter::new).map_err(wrap)
}

/// `data.csv` + `.meta.json` -> `data.csv.meta.json`.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Parses a TOML file into `T`, or returns `T::default()` without a path.
pub fn load_toml<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|source| CliError::File {
        path: path.display().to_string(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

pub fn require_path(p: &Option<PathBuf>, flag: &str) -> CliResult<PathBuf> {
    p.clone()
        .ok_or_else(|| CliError::usage(format!("missing required {flag}")))
}

/// Moves `path` into `dir`, keeping its file name.
pub fn rebase(path: &mut PathBuf, dir: &Path) {
    if let Some(name) = path.file_name() {
        *path = dir.join(name);
    }
}
