use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const OUTPUT_SCHEMA: &str = "ngflex-output-1";

/// Reads a TOML or JSON document, chosen by extension.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(anyhow::Error::from)
    } else {
        serde_json::from_str(&text).map_err(anyhow::Error::from)
    };
    parsed.with_context(|| format!("invalid config {}", path.display()))
}

/// Output directory plus the metadata every sidecar carries.
pub struct Outputs {
    dir: PathBuf,
    command: &'static str,
    seed: u64,
    config: serde_json::Value,
}

impl Outputs {
    pub fn new(dir: &Path, command: &'static str, seed: u64, config: &impl Serialize) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            seed,
            config: serde_json::to_value(config)?,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn sidecar(&self, name: &str, extra: serde_json::Value) -> Result<()> {
        let doc = serde_json::json!({
            "schema": OUTPUT_SCHEMA,
            "command": self.command,
            "file": name,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": self.config,
            "details": extra,
        });
        self.write_json(&format!("{name}.json"), &doc)
    }

    /// Writes a CSV through `fill` and a `<name>.json` sidecar with the
    /// resolved configuration.
    pub fn csv(&self, name: &str, fill: impl FnOnce(&mut csv::Writer<BufWriter<File>>) -> Result<()>) -> Result<PathBuf> {
        self.csv_with(name, serde_json::Value::Null, fill)
    }

    pub fn csv_with(
        &self,
        name: &str,
        extra: serde_json::Value,
        fill: impl FnOnce(&mut csv::Writer<BufWriter<File>>) -> Result<()>,
    ) -> Result<PathBuf> {
        let path = self.path(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        fill(&mut w)?;
        w.flush()?;
        self.sidecar(name, extra)?;
        Ok(path)
    }

    /// Writes a CSV produced by a library writer.
    pub fn csv_raw(&self, name: &str, fill: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<PathBuf> {
        let path = self.path(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        fill(&mut w)?;
        w.flush()?;
        self.sidecar(name, serde_json::Value::Null)?;
        Ok(path)
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.path(name);
        let mut f = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        serde_json::to_writer_pretty(&mut f, value)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }
}
