//! Output directory bookkeeping and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mippdpg::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything needed to trace an output back to its inputs. Holds no
/// timestamps or thread counts so that reruns are byte-identical.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub model_sha256: Option<String>,
    pub seeds: Vec<u64>,
    pub details: BTreeMap<String, serde_json::Value>,
    pub outputs: Vec<OutputRecord>,
}

pub struct OutDir {
    root: PathBuf,
    outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `name` through `f` and records its hash.
    pub fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let path = self.path(name);
        let mut w = BufWriter::new(fs::File::create(&path)?);
        w.write_all(&buf)?;
        w.flush()?;
        self.outputs.push(OutputRecord {
            path: name.to_owned(),
            bytes: buf.len() as u64,
            sha256: sha256_hex(&buf),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Data(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn finish(self, mut manifest: Manifest) -> Result<()> {
        manifest.outputs = self.outputs;
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Data(e.to_string()))?;
        fs::write(self.root.join(MANIFEST), text + "\n")?;
        Ok(())
    }
}
