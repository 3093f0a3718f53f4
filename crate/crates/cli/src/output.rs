//! CSV and JSON writers. Every file starts with the config hash; the
//! timestamp line is optional so that reruns can be compared byte for byte.

use crate::error::{CliError, Result};
use nonlocal_fredholm::grid::format_f64;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Provenance written at the top of every output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub config_hash: String,
    pub timestamp: Option<u64>,
}

impl Header {
    pub fn new(config_hash: String, with_timestamp: bool) -> Self {
        let timestamp =
            with_timestamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        Self { config_hash, timestamp }
    }
}

/// Output directory with serialized writes.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
    header: Header,
}

/// Float cell with 17 significant digits.
pub fn num(v: f64) -> String {
    format_f64(v)
}

impl OutDir {
    pub fn create(root: &Path, header: Header) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root.display().to_string(), e))?;
        Ok(Self { root: root.to_path_buf(), header })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_csv(&self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.path(name);
        let mut buf = Vec::new();
        write!(buf, "# config_hash={}\r\n", self.header.config_hash).expect("vec write");
        if let Some(t) = self.header.timestamp {
            write!(buf, "# timestamp={t}\r\n").expect("vec write");
        }
        {
            let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(&mut buf);
            wr.write_record(columns)?;
            for r in rows {
                wr.write_record(r)?;
            }
            wr.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
        }
        fs::write(&path, buf).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, report: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Envelope<'a, T> {
            config_hash: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            timestamp: Option<u64>,
            report: &'a T,
        }
        let path = self.path(name);
        let env = Envelope { config_hash: &self.header.config_hash, timestamp: self.header.timestamp, report };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Ok(path)
    }
}
