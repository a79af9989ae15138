//! Experimental harness: wires graph, embeddings, aggregation and the SVM
//! into the evaluation protocol (fixed-split hyperparameter search,
//! repeated randomized-split evaluation, top-k sweeps and omic-level
//! comparison).

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{compute_lpe, compute_rwpe, train_node2vec, EmbedMethod, EmbeddingMatrix, N2vConfig, TrainMode};
use crate::graph::{GraphError, HeteroGraph};
use crate::ingest::{AbundanceTable, LabelTable, OmicLevel, SynthDataset};
use crate::matrix::Dense;
use crate::represent::{build_design_matrix, AggregationConfig, DesignMatrix, Weighting, ZeroProfilePolicy};
use crate::rng::derive_seed;
use crate::svm::{train_svm, ClassWeight, SvmConfig};

use super::metrics::{f1_score, roc_auc};
use super::search::{random_search, SearchSpace, TrialConfig, TrialRecord};
use super::split::{stratified_split, SplitSpec};
use super::EvalError;

/// Everything a trial needs: the shared graph plus per-omic abundance
/// tables and the labels.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub graph: HeteroGraph,
    pub tables: Vec<AbundanceTable>,
    pub labels: LabelTable,
}

impl ExperimentData {
    pub fn from_synthetic(ds: SynthDataset) -> Result<Self, GraphError> {
        let graph = HeteroGraph::build(&ds.taxonomies)?;
        Ok(ExperimentData { graph, tables: ds.abundances, labels: ds.labels })
    }

    fn table_refs(&self) -> Vec<&AbundanceTable> {
        self.tables.iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunnerSettings {
    pub split: SplitSpec,
    pub weighting: Weighting,
    pub omic_levels: Vec<OmicLevel>,
    pub zero_profile_policy: ZeroProfilePolicy,
    pub class_weight: ClassWeight,
    pub svm_tolerance: f64,
    pub svm_max_passes: usize,
    /// Base Node2Vec parameters; dim and seed are set per trial/run.
    pub n2v: N2vConfig,
    /// Deterministic Node2Vec updates (bit-reproducible) vs hogwild.
    pub deterministic: bool,
}

impl Default for RunnerSettings {
    fn default() -> Self {
        RunnerSettings {
            split: SplitSpec::default(),
            weighting: Weighting::CpmWeighted,
            omic_levels: vec![OmicLevel::Mgx],
            zero_profile_policy: ZeroProfilePolicy::Drop,
            class_weight: ClassWeight::Balanced,
            svm_tolerance: 1e-3,
            svm_max_passes: 100,
            n2v: N2vConfig::default(),
            deterministic: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub f1: f64,
    pub roc_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: TrialConfig,
    pub settings: RunnerSettings,
    pub n_runs: usize,
    pub base_seed: u64,
    pub runs: Vec<RunMetrics>,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub mean_roc_auc: f64,
    pub std_roc_auc: f64,
    pub split_sizes: (usize, usize, usize),
    pub dropped_samples: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Compute one embedding. The seed only matters for stochastic methods.
pub fn embedding_for(
    data: &ExperimentData,
    settings: &RunnerSettings,
    method: EmbedMethod,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingMatrix, EvalError> {
    let topo = data.graph.topology();
    let emb = match method {
        EmbedMethod::Lpe => compute_lpe(topo, dim)?,
        EmbedMethod::Rwpe => compute_rwpe(topo, dim),
        EmbedMethod::N2v => {
            let cfg = N2vConfig { dim, seed, ..settings.n2v.clone() };
            let mode = if settings.deterministic { TrainMode::Deterministic } else { TrainMode::Parallel };
            train_node2vec(topo, &cfg, mode)?
        }
    };
    Ok(emb)
}

fn design_for(
    data: &ExperimentData,
    settings: &RunnerSettings,
    trial: &TrialConfig,
    emb: &EmbeddingMatrix,
) -> Result<DesignMatrix, EvalError> {
    let cfg = AggregationConfig {
        top_k_genes: trial.top_k,
        weighting: settings.weighting,
        omic_levels: settings.omic_levels.clone(),
        zero_profile_policy: settings.zero_profile_policy,
    };
    Ok(build_design_matrix(&data.graph, emb, &data.table_refs(), &data.labels, &cfg)?)
}

fn subset(design: &DesignMatrix, idx: &[usize]) -> (Dense, Vec<i8>, Vec<bool>) {
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| design.x.row(i).to_vec()).collect();
    let y_signed: Vec<i8> = idx.iter().map(|&i| if design.y[i] == 1 { 1 } else { -1 }).collect();
    let y_bool: Vec<bool> = idx.iter().map(|&i| design.y[i] == 1).collect();
    (Dense::from_rows(&rows), y_signed, y_bool)
}

/// Train on the train split and score the validation and test splits.
#[allow(clippy::type_complexity)]
fn run_split(
    design: &DesignMatrix,
    settings: &RunnerSettings,
    trial: &TrialConfig,
    split_seed: u64,
) -> Result<(RunMetrics, RunMetrics, (usize, usize, usize)), EvalError> {
    let spec = SplitSpec { seed: split_seed, ..settings.split.clone() };
    let idx = stratified_split(&design.y, &spec)?;
    let (x_train, y_train, _) = subset(design, &idx.train);
    let svm_cfg = SvmConfig {
        c: trial.c,
        gamma: trial.gamma,
        class_weight: settings.class_weight,
        tolerance: settings.svm_tolerance,
        max_passes: settings.svm_max_passes,
        ..Default::default()
    };
    let model = train_svm(&x_train, &y_train, &svm_cfg)?;

    let score_part = |part: &[usize]| -> Result<RunMetrics, EvalError> {
        let (x, _, y_bool) = subset(design, part);
        let mut scores = Vec::with_capacity(x.n_rows);
        let mut preds = Vec::with_capacity(x.n_rows);
        for i in 0..x.n_rows {
            let s = model.decision_function(x.row(i))?;
            scores.push(s);
            preds.push(s >= 0.0);
        }
        Ok(RunMetrics { f1: f1_score(&preds, &y_bool)?, roc_auc: roc_auc(&scores, &y_bool)? })
    };

    let val = score_part(&idx.val)?;
    let test = score_part(&idx.test)?;
    Ok((val, test, (idx.train.len(), idx.val.len(), idx.test.len())))
}

/// Evaluate one configuration over `n_runs` randomized splits (seeds
/// base_seed + r) and report test-split metrics. Stochastic embeddings are
/// retrained per run with a run-derived seed; deterministic ones are
/// computed once and shared.
pub fn repeated_eval(
    data: &ExperimentData,
    settings: &RunnerSettings,
    trial: &TrialConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<EvalReport, EvalError> {
    if n_runs == 0 {
        return Err(EvalError::InvalidSpec("n_runs must be at least 1".into()));
    }
    let shared: Option<DesignMatrix> = if trial.method.is_stochastic() {
        None
    } else {
        let emb = embedding_for(data, settings, trial.method, trial.dim, 0)?;
        Some(design_for(data, settings, trial, &emb)?)
    };

    let outcomes: Vec<(RunMetrics, (usize, usize, usize), usize)> = (0..n_runs)
        .into_par_iter()
        .map(|r| -> Result<_, EvalError> {
            let split_seed = base_seed + r as u64;
            let (_, test, sizes, dropped) = match &shared {
                Some(design) => {
                    let (val, test, sizes) = run_split(design, settings, trial, split_seed)?;
                    (val, test, sizes, design.dropped.len())
                }
                None => {
                    let emb_seed = derive_seed(base_seed, "embed-run", r as u64);
                    let emb = embedding_for(data, settings, trial.method, trial.dim, emb_seed)?;
                    let design = design_for(data, settings, trial, &emb)?;
                    let (val, test, sizes) = run_split(&design, settings, trial, split_seed)?;
                    (val, test, sizes, design.dropped.len())
                }
            };
            Ok((test, sizes, dropped))
        })
        .collect::<Result<_, _>>()?;

    let f1s: Vec<f64> = outcomes.iter().map(|(m, _, _)| m.f1).collect();
    let aucs: Vec<f64> = outcomes.iter().map(|(m, _, _)| m.roc_auc).collect();
    let (mean_f1, std_f1) = mean_std(&f1s);
    let (mean_roc_auc, std_roc_auc) = mean_std(&aucs);

    Ok(EvalReport {
        config: trial.clone(),
        settings: settings.clone(),
        n_runs,
        base_seed,
        runs: outcomes.iter().map(|(m, _, _)| *m).collect(),
        mean_f1,
        std_f1,
        mean_roc_auc,
        std_roc_auc,
        split_sizes: outcomes[0].1,
        dropped_samples: outcomes[0].2,
    })
}

/// Random search over `space` with a single fixed validation split. Trials
/// run in parallel; deterministic embeddings are shared across trials.
pub fn search_hyperparameters(
    data: &ExperimentData,
    settings: &RunnerSettings,
    space: &SearchSpace,
) -> Result<(TrialConfig, Vec<TrialRecord>), EvalError> {
    let split_seed = derive_seed(space.seed, "search-split", 0);
    let cache: Mutex<BTreeMap<(EmbedMethod, usize), Arc<EmbeddingMatrix>>> = Mutex::new(BTreeMap::new());

    let objective = |trial_id: usize, trial: &TrialConfig| -> Result<f64, String> {
        let emb: Arc<EmbeddingMatrix> = if trial.method.is_stochastic() {
            let seed = derive_seed(space.seed, "embed-trial", trial_id as u64);
            Arc::new(embedding_for(data, settings, trial.method, trial.dim, seed).map_err(|e| e.to_string())?)
        } else {
            let mut cache = cache.lock().unwrap();
            match cache.get(&(trial.method, trial.dim)) {
                Some(emb) => Arc::clone(emb),
                None => {
                    let emb = Arc::new(
                        embedding_for(data, settings, trial.method, trial.dim, 0).map_err(|e| e.to_string())?,
                    );
                    cache.insert((trial.method, trial.dim), Arc::clone(&emb));
                    emb
                }
            }
        };
        let design = design_for(data, settings, trial, &emb).map_err(|e| e.to_string())?;
        let (val, _, _) = run_split(&design, settings, trial, split_seed).map_err(|e| e.to_string())?;
        Ok(val.roc_auc)
    };

    random_search(space, objective)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub mean_auc: f64,
    pub std_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    /// Plot-ready TSV: `k<TAB>mean_auc<TAB>std_auc`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("k\tmean_auc\tstd_auc\n");
        for p in &self.points {
            out.push_str(&format!("{}\t{}\t{}\n", p.k, p.mean_auc, p.std_auc));
        }
        out
    }

    /// The k with the highest mean AUC (earliest on ties).
    pub fn argmax(&self) -> Option<&SweepPoint> {
        self.points.iter().fold(None, |best: Option<&SweepPoint>, p| match best {
            Some(b) if b.mean_auc >= p.mean_auc => Some(b),
            _ => Some(p),
        })
    }
}

/// One repeated evaluation per k, everything else held fixed (same seeds,
/// so every k sees the same split schedule).
pub fn topk_sweep(
    data: &ExperimentData,
    settings: &RunnerSettings,
    trial: &TrialConfig,
    ks: &[usize],
    n_runs: usize,
    base_seed: u64,
) -> Result<SweepCurve, EvalError> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(EvalError::InvalidSpec("ks must be non-empty and positive".into()));
    }
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        let t = TrialConfig { top_k: k, ..trial.clone() };
        let report = repeated_eval(data, settings, &t, n_runs, base_seed)?;
        points.push(SweepPoint { k, mean_auc: report.mean_roc_auc, std_auc: report.std_roc_auc });
    }
    Ok(SweepCurve { points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmicComparison {
    pub methods: Vec<EmbedMethod>,
    pub mgx_only: Vec<EvalReport>,
    pub combined: Vec<EvalReport>,
}

impl OmicComparison {
    /// Side-by-side table: one row per dataset arm, F1 then ROC AUC cells
    /// per method.
    pub fn render_table(&self) -> String {
        let mut header = String::from("dataset");
        for m in &self.methods {
            header.push_str(&format!("\tF1 {m}"));
        }
        for m in &self.methods {
            header.push_str(&format!("\tROC AUC {m}"));
        }
        let row = |name: &str, reports: &[EvalReport]| {
            let mut line = String::from(name);
            for r in reports {
                line.push_str(&format!("\t{:.3}", r.mean_f1));
            }
            for r in reports {
                line.push_str(&format!("\t{:.3}", r.mean_roc_auc));
            }
            line
        };
        format!("{header}\n{}\n{}\n", row("MGX only", &self.mgx_only), row("MGX+MTX", &self.combined))
    }
}

/// Evaluate each method config on MGX-only and on MGX+MTX with the same
/// seed schedule.
pub fn compare_omic_levels(
    data: &ExperimentData,
    settings: &RunnerSettings,
    method_configs: &[TrialConfig],
    n_runs: usize,
    base_seed: u64,
) -> Result<OmicComparison, EvalError> {
    if method_configs.is_empty() {
        return Err(EvalError::InvalidSpec("need at least one method config".into()));
    }
    let mgx_settings = RunnerSettings { omic_levels: vec![OmicLevel::Mgx], ..settings.clone() };
    let both_settings = RunnerSettings { omic_levels: vec![OmicLevel::Mgx, OmicLevel::Mtx], ..settings.clone() };
    let mut mgx_only = Vec::new();
    let mut combined = Vec::new();
    for cfg in method_configs {
        mgx_only.push(repeated_eval(data, &mgx_settings, cfg, n_runs, base_seed)?);
        combined.push(repeated_eval(data, &both_settings, cfg, n_runs, base_seed)?);
    }
    Ok(OmicComparison {
        methods: method_configs.iter().map(|c| c.method).collect(),
        mgx_only,
        combined,
    })
}
