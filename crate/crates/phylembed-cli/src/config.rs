//! Pipeline configuration: one JSON file plus flag overrides (flags win).

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use phylembed::embed::{EmbedMethod, N2vConfig};
use phylembed::eval::{SearchSpace, SplitSpec};
use phylembed::ingest::{OmicLevel, SynthConfig};
use phylembed::represent::AggregationConfig;
use phylembed::svm::SvmConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmicPath {
    pub path: PathBuf,
    pub omic: OmicLevel,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct InputsConfig {
    pub abundances: Vec<OmicPath>,
    pub taxonomies: Vec<OmicPath>,
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedSection {
    pub method: EmbedMethod,
    pub dim: usize,
    pub n2v: N2vConfig,
}

impl Default for EmbedSection {
    fn default() -> Self {
        EmbedSection { method: EmbedMethod::Lpe, dim: 16, n2v: N2vConfig::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    pub split: SplitSpec,
    pub trials: usize,
    pub n_runs: usize,
    /// Top-k grid for the sweep command.
    pub ks: Vec<usize>,
    /// Optional full search space; when absent, train-eval uses the single
    /// configuration pinned by the embed/aggregation/svm sections.
    pub search: Option<SearchSpace>,
    /// Methods for the compare-omics command; defaults to the embed method.
    pub compare_methods: Vec<EmbedMethod>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            split: SplitSpec::default(),
            trials: 20,
            n_runs: 10,
            ks: vec![10, 50, 200],
            search: None,
            compare_methods: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub inputs: InputsConfig,
    /// Synthetic-data section for the synth command; its seed field is
    /// ignored and replaced by the root seed's synth substream.
    pub synth: SynthConfig,
    pub embed: EmbedSection,
    pub aggregation: AggregationConfig,
    pub svm: SvmConfig,
    pub eval: EvalSection,
    /// Root seed; every stage draws from a named substream of it.
    pub seed: u64,
    pub deterministic: bool,
    /// Rayon worker threads; 0 picks the default.
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            inputs: InputsConfig::default(),
            synth: SynthConfig::default(),
            embed: EmbedSection::default(),
            aggregation: AggregationConfig::default(),
            svm: SvmConfig::default(),
            eval: EvalSection::default(),
            seed: 42,
            deterministic: true,
            workers: 0,
            out_dir: PathBuf::from("phylembed-out"),
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct Overrides {
    /// Pipeline config JSON; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for all stages.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Embedding method: lpe, rwpe or n2v.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Embedding dimension.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Number of most-expressed genes aggregated per patient.
    #[arg(long = "top-k", global = true)]
    pub top_k: Option<usize>,
    /// Omic levels to aggregate, comma separated: mgx or mgx,mtx.
    #[arg(long, global = true)]
    pub omic: Option<String>,
    /// Hyperparameter search trials.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Repeated evaluation runs.
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Bit-reproducible mode (true) or hogwild Node2Vec updates (false).
    #[arg(long, global = true)]
    pub deterministic: Option<bool>,
    /// Worker threads (0 = automatic).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

impl PipelineConfig {
    pub fn load(overrides: &Overrides) -> Result<PipelineConfig> {
        let mut cfg = match &overrides.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => PipelineConfig::default(),
        };
        cfg.apply(overrides)?;
        Ok(cfg)
    }

    fn apply(&mut self, ov: &Overrides) -> Result<()> {
        if let Some(seed) = ov.seed {
            self.seed = seed;
        }
        if let Some(method) = &ov.method {
            self.embed.method = EmbedMethod::parse(method)
                .with_context(|| format!("unknown method `{method}` (expected lpe, rwpe or n2v)"))?;
        }
        if let Some(dim) = ov.dim {
            self.embed.dim = dim;
        }
        if let Some(top_k) = ov.top_k {
            self.aggregation.top_k_genes = top_k;
        }
        if let Some(omic) = &ov.omic {
            let levels: Option<Vec<OmicLevel>> = omic.split(',').map(|s| OmicLevel::parse(s.trim())).collect();
            self.aggregation.omic_levels =
                levels.with_context(|| format!("bad omic list `{omic}` (expected mgx and/or mtx)"))?;
        }
        if let Some(trials) = ov.trials {
            self.eval.trials = trials;
        }
        if let Some(runs) = ov.runs {
            self.eval.n_runs = runs;
        }
        if let Some(out) = &ov.out {
            self.out_dir = out.clone();
        }
        if let Some(det) = ov.deterministic {
            self.deterministic = det;
        }
        if let Some(workers) = ov.workers {
            self.workers = workers;
        }
        Ok(())
    }
}
