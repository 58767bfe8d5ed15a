use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Record of one invocation: what ran, with which parameters, over which bytes.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: serde_json::Value,
    /// Input path -> sha256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub version: String,
    pub timestamp: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn new(subcommand: &str, params: &impl Serialize, inputs: &[&Path]) -> Result<Self> {
        let mut digests = BTreeMap::new();
        for path in inputs {
            digests.insert(path.display().to_string(), sha256_file(path)?);
        }
        Ok(Self {
            subcommand: subcommand.to_string(),
            params: serde_json::to_value(params)?,
            inputs: digests,
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        })
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes next to `primary` as `<primary>.manifest.json`, or to stderr
    /// when the command has no output file.
    pub fn emit(&self, primary: Option<&Path>) -> Result<Option<PathBuf>> {
        let json = serde_json::to_string_pretty(self)?;
        match primary {
            Some(p) => {
                let mut name = p.as_os_str().to_owned();
                name.push(".manifest.json");
                let path = PathBuf::from(name);
                fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
                Ok(Some(path))
            }
            None => {
                eprintln!("{json}");
                Ok(None)
            }
        }
    }
}
