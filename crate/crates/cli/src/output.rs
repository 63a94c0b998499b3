//! Output directory handling and the per-run manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use muhankel::Result;
use serde::Serialize;
use serde_json::Value;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: u64,
    pub config: Value,
    pub tool_version: String,
}

/// Writes files into one directory and records their names for the manifest.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// CSV from a header and rows of already-formatted cells.
    pub fn csv<R, I>(&mut self, name: &str, header: &[&str], rows: R) -> Result<()>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(self.open(name)?);
        w.write_record(header).map_err(std::io::Error::from)?;
        for row in rows {
            w.write_record(row).map_err(std::io::Error::from)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Raw writer for formats the helpers above do not cover.
    pub fn raw(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.open(name)
    }

    pub fn finish(mut self, command: &str, inputs: Vec<String>, seed: u64, config: Value) -> Result<()> {
        let manifest = RunManifest {
            command: command.to_string(),
            inputs,
            outputs: self.written.clone(),
            seed,
            config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        self.json(MANIFEST_NAME, &manifest)
    }
}

/// Shortest round-trip decimal form, so CSV and JSON agree bit for bit.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
