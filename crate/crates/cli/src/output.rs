//! Output directory handling and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use reviewnet_sim::SimConfig;
use sha2::{Digest, Sha256};

pub const MANIFEST_TABLE: &str = "manifest";

/// Files written under one output directory, in creation order.
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Opens `name` for writing and records it for the manifest.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        if !self.files.iter().any(|n| n == name) {
            self.files.push(name.to_string());
        }
        Ok(BufWriter::new(f))
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let mut f = self.file(name)?;
        f.write_all(contents)?;
        f.flush()?;
        Ok(())
    }

    /// Writes `manifest.toml`: the resolved configuration followed by a
    /// `[manifest]` table with the command, a timestamp and a SHA-256 of
    /// every other file. The timestamp is the only nondeterministic byte
    /// range in the directory.
    pub fn finish(self, command: &str, cfg: &SimConfig) -> Result<()> {
        let mut sums = toml::Table::new();
        let mut names = self.files.clone();
        names.sort();
        for name in names {
            let bytes = std::fs::read(self.path(&name)).with_context(|| format!("reading {name}"))?;
            sums.insert(name, toml::Value::String(hex(&Sha256::digest(&bytes))));
        }
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut table = toml::Table::new();
        table.insert("command".into(), command.into());
        table.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        table.insert("created_unix".into(), toml::Value::Integer(created as i64));
        table.insert("sha256".into(), toml::Value::Table(sums));
        let mut outer = toml::Table::new();
        outer.insert(MANIFEST_TABLE.into(), toml::Value::Table(table));
        let text = format!("{}\n{}", cfg.to_toml_string(), toml::to_string(&outer)?);
        let path = self.path("manifest.toml");
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
