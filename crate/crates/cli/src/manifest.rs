use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A file and the SHA-256 of its contents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let mut h = Sha256::new();
        let mut buf = vec![0u8; 1 << 16];
        let mut bytes = 0u64;
        loop {
            let n = f.read(&mut buf).with_context(|| format!("cannot read {}", path.display()))?;
            if n == 0 {
                break;
            }
            h.update(&buf[..n]);
            bytes += n as u64;
        }
        Ok(Self {
            path: path.display().to_string(),
            sha256: hex::encode(h.finalize()),
            bytes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Record of one command run: what it read, what it wrote, how long it took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// Effective configuration as TOML.
    pub config: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub timings: Vec<StageTiming>,
}

/// Collects a manifest while a command runs.
pub struct ManifestBuilder {
    manifest: RunManifest,
    outputs: Vec<PathBuf>,
    clock: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64, config: String) -> Self {
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                config,
                inputs: Vec::new(),
                outputs: Vec::new(),
                timings: Vec::new(),
            },
            outputs: Vec::new(),
            clock: Instant::now(),
        }
    }

    /// Digest an input right before it is read.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    /// Close the current stage and start timing the next one.
    pub fn lap(&mut self, stage: &str) {
        let seconds = self.clock.elapsed().as_secs_f64();
        log::info!("{stage}: {seconds:.2}s");
        self.manifest.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds,
        });
        self.clock = Instant::now();
    }

    /// Digest the outputs and write `manifest.json` into `dir`.
    pub fn finish(self, dir: &Path) -> Result<RunManifest> {
        self.finish_as(&dir.join("manifest.json"))
    }

    /// Digest the outputs and write the manifest to `path`.
    pub fn finish_as(mut self, path: &Path) -> Result<RunManifest> {
        for p in &self.outputs {
            self.manifest.outputs.push(FileDigest::of(p)?);
        }
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(self.manifest)
    }
}
