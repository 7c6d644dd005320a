use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliError;

/// Header carried by every emitted file.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub core_version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
}

impl Metadata {
    pub fn new(cfg: &RunConfig) -> Self {
        Metadata {
            tool: "ilw",
            tool_version: env!("CARGO_PKG_VERSION"),
            core_version: ilw_core::VERSION,
            command: cfg.command.name(),
            config_hash: cfg.hash(),
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# tool: {} {}\n# core: ilw-core {}\n# command: {}\n# config_hash: {}\n",
            self.tool, self.tool_version, self.core_version, self.command, self.config_hash
        )
    }
}

/// Writes files into one directory and remembers their names.
pub struct Sink {
    dir: PathBuf,
    meta: Metadata,
    pub files: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path, meta: Metadata) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            meta,
            files: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    /// CSV with `#` metadata lines, a header row and one row per record.
    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = self.create(name)?;
        w.write_all(self.meta.comment_lines().as_bytes())?;
        let mut c = csv::Writer::from_writer(w);
        c.write_record(header)?;
        for r in rows {
            c.write_record(&r)?;
        }
        c.flush()?;
        Ok(())
    }

    /// JSON object `{ "metadata": ..., <body fields> }`.
    pub fn json(&mut self, name: &str, body: Value) -> Result<(), CliError> {
        let mut obj = serde_json::Map::new();
        obj.insert("metadata".into(), serde_json::to_value(&self.meta).expect("metadata serializes"));
        match body {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("data".into(), other);
            }
        }
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &Value::Object(obj)).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// Plain text prefixed by the metadata as `#` lines.
    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        w.write_all(self.meta.comment_lines().as_bytes())?;
        w.write_all(body.as_bytes())?;
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip float text; empty for missing values.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `t0.3000`-style file-name fragment.
pub fn tag(prefix: &str, v: f64) -> String {
    format!("{prefix}{v:.4}")
}
