//! Run manifest written once per successful invocation.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::exit::{CliResult, io_err};

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

impl FileRecord {
    pub fn of(path: &Path) -> CliResult<Self> {
        let mut file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        let mut hasher = Sha256::new();
        let mut buf = [0u8; 1 << 16];
        let mut bytes = 0u64;
        loop {
            let n = file.read(&mut buf).map_err(|e| io_err(path, e))?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
            bytes += n as u64;
        }
        let digest = hasher.finalize();
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(FileRecord {
            path: path.to_path_buf(),
            sha256,
            bytes,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub config: C,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub started_at: String,
    pub finished_at: String,
    /// Command-specific facts needed to interpret the outputs.
    pub details: serde_json::Value,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: &str, seed: u64, config: C, started_at: String) -> Self {
        RunManifest {
            tool: "cardiosep",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            args: std::env::args().collect(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_at,
            finished_at: String::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn hash_inputs(&mut self, paths: &[PathBuf]) -> CliResult<()> {
        for p in paths {
            self.inputs.push(FileRecord::of(p)?);
        }
        Ok(())
    }

    /// Hashes `outputs`, stamps the finish time and writes `manifest.json`
    /// into `dir`.
    pub fn finish(mut self, dir: &Path, outputs: &[PathBuf]) -> CliResult<PathBuf> {
        for p in outputs {
            self.outputs.push(FileRecord::of(p)?);
        }
        self.finished_at = now();
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self).map_err(|e| io_err(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// `./out-<timestamp>`, with a numeric suffix if that directory exists.
pub fn default_output_dir() -> PathBuf {
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S").to_string();
    let base = PathBuf::from(format!("out-{stamp}"));
    if !base.exists() {
        return base;
    }
    (1..)
        .map(|k| PathBuf::from(format!("out-{stamp}-{k}")))
        .find(|p| !p.exists())
        .expect("unbounded suffix search")
}

pub fn prepare_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}
