//! CSV/JSON emission. Every file gets a `<name>.meta.json` sidecar holding
//! the command, resolved configuration and code version.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::error::CliError;

pub struct Output {
    dir: PathBuf,
    command: &'static str,
    config: serde_json::Value,
    pub written: Vec<PathBuf>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl Output {
    pub fn new(dir: &Path, command: &'static str, config: &impl Serialize) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            config: serde_json::to_value(config).expect("configs serialize"),
            written: Vec::new(),
        })
    }

    fn sidecar(&self, path: &Path, columns: Option<&[&str]>) -> Result<(), CliError> {
        let meta = json!({
            "command": self.command,
            "file": path.file_name().map(|f| f.to_string_lossy().into_owned()),
            "columns": columns,
            "config": self.config,
            "version": env!("CARGO_PKG_VERSION"),
        });
        let mut name = path.as_os_str().to_owned();
        name.push(".meta.json");
        let meta_path = PathBuf::from(name);
        let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        std::fs::write(&meta_path, text + "\n").map_err(io(&meta_path))
    }

    /// Writes rows under an explicit header; each row must match it in length.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        w.write_record(header).map_err(|e| csv_err(&path, e))?;
        for r in rows {
            debug_assert_eq!(r.len(), header.len());
            w.write_record(r).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(io(&path))?;
        self.sidecar(&path, Some(header))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).expect("results serialize");
        std::fs::write(&path, text + "\n").map_err(io(&path))?;
        self.sidecar(&path, None)?;
        self.written.push(path);
        Ok(())
    }
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    }
}

/// Shortest round-trip formatting; empty for missing values.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
