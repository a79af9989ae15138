//! Seeded random hyperparameter search.
//!
//! Configurations are sampled i.i.d. from the space with one stream, so the
//! trial sequence is reproducible and a longer run extends a shorter one
//! (best-of-N is monotone in N for the same seed). Trials evaluate in
//! parallel; the winner is the highest validation ROC AUC, ties broken by
//! earliest trial.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbedMethod;
use crate::rng::substream;
use crate::svm::GammaSpec;

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    /// Log-uniform range for the SVM box constraint.
    pub c_log_range: (f64, f64),
    /// Log-uniform range for explicit gamma values.
    pub gamma_log_range: (f64, f64),
    /// Probability that a gamma draw uses the Scale rule instead of an
    /// explicit value (0 never, 1 always).
    pub scale_gamma_probability: f64,
    pub methods: Vec<EmbedMethod>,
    pub dims: Vec<usize>,
    pub top_ks: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            c_log_range: (1e-2, 1e3),
            gamma_log_range: (1e-4, 1e1),
            scale_gamma_probability: 0.25,
            methods: vec![EmbedMethod::Lpe, EmbedMethod::Rwpe, EmbedMethod::N2v],
            dims: vec![8, 16, 32],
            top_ks: vec![50, 200, 1000],
            trials: 30,
            seed: 42,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<(), EvalError> {
        let log_range_ok = |(lo, hi): (f64, f64)| lo > 0.0 && lo <= hi;
        if !log_range_ok(self.c_log_range) || !log_range_ok(self.gamma_log_range) {
            return Err(EvalError::InvalidSpec("log ranges need 0 < lo <= hi".into()));
        }
        if self.methods.is_empty() || self.dims.is_empty() || self.top_ks.is_empty() {
            return Err(EvalError::InvalidSpec("method, dim and top-k grids must be non-empty".into()));
        }
        if self.trials == 0 {
            return Err(EvalError::InvalidSpec("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.scale_gamma_probability) {
            return Err(EvalError::InvalidSpec("scale_gamma_probability must be in [0,1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub method: EmbedMethod,
    pub dim: usize,
    pub top_k: usize,
    pub c: f64,
    pub gamma: GammaSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub config: TrialConfig,
    pub val_auc: Option<f64>,
    pub status: String,
}

/// The seeded i.i.d. trial sequence for a space. Trial i is a prefix
/// function of the stream, independent of how many trials follow it.
pub fn sample_configs(space: &SearchSpace) -> Vec<TrialConfig> {
    let mut rng = substream(space.seed, "search");
    let log_uniform = |rng: &mut crate::rng::Stream, (lo, hi): (f64, f64)| -> f64 {
        if lo == hi {
            return lo;
        }
        (rng.random_range(lo.ln()..hi.ln())).exp()
    };
    (0..space.trials)
        .map(|_| {
            let method = space.methods[rng.random_range(0..space.methods.len())];
            let dim = space.dims[rng.random_range(0..space.dims.len())];
            let top_k = space.top_ks[rng.random_range(0..space.top_ks.len())];
            let c = log_uniform(&mut rng, space.c_log_range);
            // Both draws happen regardless of the outcome so every trial
            // consumes the same number of stream values.
            let use_scale = rng.random::<f64>() < space.scale_gamma_probability;
            let gamma_value = log_uniform(&mut rng, space.gamma_log_range);
            let gamma = if use_scale { GammaSpec::Scale } else { GammaSpec::Value(gamma_value) };
            TrialConfig { method, dim, top_k, c, gamma }
        })
        .collect()
}

/// Evaluate `trials` sampled configs and return the argmax of validation
/// ROC AUC plus the full trial log. Objective failures are logged and
/// skipped; it is an error only if every trial fails.
pub fn random_search<F>(space: &SearchSpace, objective: F) -> Result<(TrialConfig, Vec<TrialRecord>), EvalError>
where
    F: Fn(usize, &TrialConfig) -> Result<f64, String> + Sync,
{
    space.validate()?;
    let configs = sample_configs(space);
    let records: Vec<TrialRecord> = configs
        .into_par_iter()
        .enumerate()
        .map(|(trial_id, config)| match objective(trial_id, &config) {
            Ok(val_auc) => TrialRecord { trial_id, config, val_auc: Some(val_auc), status: "ok".into() },
            Err(message) => TrialRecord { trial_id, config, val_auc: None, status: message },
        })
        .collect();

    let mut best: Option<&TrialRecord> = None;
    for rec in &records {
        if let Some(auc) = rec.val_auc {
            if best.is_none_or(|b| auc > b.val_auc.unwrap()) {
                best = Some(rec);
            }
        }
    }
    match best {
        Some(rec) => Ok((rec.config.clone(), records.clone())),
        None => Err(EvalError::AllTrialsFailed),
    }
}

/// JSON-lines trial log, one record per line.
pub fn write_trial_log<W: Write>(records: &[TrialRecord], mut w: W) -> std::io::Result<()> {
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        writeln!(w)?;
    }
    Ok(())
}
