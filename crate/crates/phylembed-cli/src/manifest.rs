//! Run manifests and the output-directory lock.
//!
//! Every command writes a manifest at run end: the config snapshot, input
//! content hashes, per-stage wall-clock and the seed substreams used —
//! enough to replay the run. The write is atomic (temp file + rename).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub artifact_version: String,
    pub config: PipelineConfig,
    pub input_hashes: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<String>,
    pub summary: Option<String>,
}

/// Collects manifest material while a command runs.
pub struct RunContext {
    pub cfg: PipelineConfig,
    input_hashes: BTreeMap<String, String>,
    seeds: BTreeMap<String, u64>,
    stages: Vec<StageTiming>,
    outputs: Vec<PathBuf>,
    summary: Option<String>,
}

impl RunContext {
    pub fn new(cfg: PipelineConfig) -> RunContext {
        RunContext {
            cfg,
            input_hashes: BTreeMap::new(),
            seeds: BTreeMap::new(),
            stages: Vec::new(),
            outputs: Vec::new(),
            summary: None,
        }
    }

    /// Read an input file, recording its content hash.
    pub fn read_input(&mut self, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.input_hashes.insert(
            path.display().to_string(),
            format!("{:016x}", phylembed::rng::fnv1a64(text.as_bytes())),
        );
        Ok(text)
    }

    /// Derive and record a named seed substream of the root seed.
    pub fn seed(&mut self, name: &str) -> u64 {
        let seed = phylembed::rng::derive_seed(self.cfg.seed, name, 0);
        self.seeds.insert(name.to_string(), seed);
        seed
    }

    pub fn time_stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self)?;
        self.stages.push(StageTiming { name: name.to_string(), seconds: start.elapsed().as_secs_f64() });
        Ok(out)
    }

    /// Write an output file under out_dir and record it.
    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.cfg.out_dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    pub fn set_summary(&mut self, summary: String) {
        self.summary = Some(summary);
    }

    /// Atomically write manifest.json; call once, at run end.
    pub fn finish(mut self, command: &str) -> Result<()> {
        let manifest = RunManifest {
            command: command.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.cfg.clone(),
            input_hashes: std::mem::take(&mut self.input_hashes),
            seeds: std::mem::take(&mut self.seeds),
            stages: std::mem::take(&mut self.stages),
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            summary: self.summary.take(),
        };
        let final_path = self.cfg.out_dir.join("manifest.json");
        let tmp_path = self.cfg.out_dir.join(".manifest.json.tmp");
        let json = serde_json::to_string_pretty(&manifest)?;
        fs::write(&tmp_path, json).with_context(|| format!("writing {}", tmp_path.display()))?;
        fs::rename(&tmp_path, &final_path).context("renaming manifest into place")?;
        Ok(())
    }
}

/// Exclusive ownership of an output directory for one CLI invocation.
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(out_dir: &Path) -> Result<OutputLock> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        let path = out_dir.join(".phylembed.lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(OutputLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                bail!(
                    "output directory {} is locked by another run (remove {} if that run is dead)",
                    out_dir.display(),
                    path.display()
                )
            }
            Err(e) => Err(e).with_context(|| format!("creating lock {}", path.display())),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
