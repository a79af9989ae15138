//! Soft-margin RBF-kernel SVM trained by sequential minimal optimization.
//!
//! The solver minimizes f(a) = a'Qa/2 - e'a with Q_ij = y_i y_j K(x_i, x_j)
//! subject to 0 <= a_i <= C_i and y'a = 0, selecting working pairs by
//! maximal-violation / second-order decrease (the LIBSVM rule) and stopping
//! when the maximal KKT violation m(a) - M(a) drops below the tolerance.
//! Class weighting scales the per-class box C_i for skewed labels.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{squared_distance, Dense};

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("non-finite feature at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid SVM config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    /// gamma = 1 / (dim * var(X)), resolved at training time.
    Scale,
    Value(f64),
}

// Serialized as the string "scale" or a bare number.
impl Serialize for GammaSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            GammaSpec::Scale => serializer.serialize_str("scale"),
            GammaSpec::Value(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for GammaSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = GammaSpec;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "\"scale\" or a positive number")
            }

            fn visit_str<E: serde::de::Error>(self, s: &str) -> Result<GammaSpec, E> {
                if s.eq_ignore_ascii_case("scale") {
                    Ok(GammaSpec::Scale)
                } else {
                    s.parse().map(GammaSpec::Value).map_err(|_| E::custom(format!("bad gamma `{s}`")))
                }
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<GammaSpec, E> {
                Ok(GammaSpec::Value(v))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<GammaSpec, E> {
                Ok(GammaSpec::Value(v as f64))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<GammaSpec, E> {
                Ok(GammaSpec::Value(v as f64))
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    None,
    /// w_c = n / (2 * n_c), the inverse-frequency rule.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: GammaSpec,
    pub class_weight: ClassWeight,
    /// KKT tolerance for termination.
    pub tolerance: f64,
    /// Iteration budget in sweeps: the solver stops after
    /// max_passes * n pair updates even if unconverged.
    pub max_passes: usize,
    /// Kernel row cache budget in bytes.
    pub cache_bytes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            gamma: GammaSpec::Scale,
            class_weight: ClassWeight::Balanced,
            tolerance: 1e-3,
            max_passes: 100,
            cache_bytes: 256 << 20,
        }
    }
}

impl SvmConfig {
    fn validate(&self) -> Result<(), SvmError> {
        if !self.c.is_finite() || self.c <= 0.0 {
            return Err(SvmError::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if let GammaSpec::Value(g) = self.gamma {
            if !g.is_finite() || g <= 0.0 {
                return Err(SvmError::InvalidConfig(format!("gamma must be positive, got {g}")));
            }
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(SvmError::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_passes == 0 {
            return Err(SvmError::InvalidConfig("max_passes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub iterations: usize,
    /// m(a) - M(a) at termination.
    pub final_violation: f64,
    pub converged: bool,
    pub dual_objective: f64,
    /// Pair updates that decreased the dual objective beyond float slack;
    /// zero for a correct solver.
    pub objective_decreases: usize,
    pub n_support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    support_vectors: Dense,
    /// alpha_i * y_i per support vector, nonzero.
    dual_coefs: Vec<f64>,
    bias: f64,
    gamma: f64,
    pub config: SvmConfig,
    pub meta: TrainMeta,
}

/// exp(-gamma * ||x - z||^2).
pub fn rbf_kernel(x: &[f64], z: &[f64], gamma: f64) -> Result<f64, SvmError> {
    if x.len() != z.len() {
        return Err(SvmError::DimensionMismatch { expected: x.len(), got: z.len() });
    }
    Ok((-gamma * squared_distance(x, z)).exp())
}

/// Map {0,1} labels to the solver's {-1,+1}.
pub fn labels_to_signed(labels: &[u8]) -> Vec<i8> {
    labels.iter().map(|&l| if l == 1 { 1 } else { -1 }).collect()
}

/// LRU cache of kernel rows keyed by training index.
struct KernelCache<'a> {
    x: &'a Dense,
    gamma: f64,
    rows: HashMap<usize, (u64, Arc<Vec<f64>>)>,
    clock: u64,
    max_rows: usize,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a Dense, gamma: f64, budget_bytes: usize) -> Self {
        let row_bytes = (x.n_rows * 8).max(1);
        let max_rows = (budget_bytes / row_bytes).max(2);
        KernelCache { x, gamma, rows: HashMap::new(), clock: 0, max_rows }
    }

    fn row(&mut self, i: usize) -> Arc<Vec<f64>> {
        self.clock += 1;
        if let Some((stamp, row)) = self.rows.get_mut(&i) {
            *stamp = self.clock;
            return Arc::clone(row);
        }
        if self.rows.len() >= self.max_rows {
            if let Some((&evict, _)) = self.rows.iter().min_by_key(|(_, (stamp, _))| *stamp) {
                self.rows.remove(&evict);
            }
        }
        let xi = self.x.row(i);
        let row: Vec<f64> = (0..self.x.n_rows)
            .map(|t| (-self.gamma * squared_distance(xi, self.x.row(t))).exp())
            .collect();
        let row = Arc::new(row);
        self.rows.insert(i, (self.clock, Arc::clone(&row)));
        row
    }
}

/// Train on features `x` and labels in {-1,+1}.
pub fn train_svm(x: &Dense, y: &[i8], cfg: &SvmConfig) -> Result<SvmModel, SvmError> {
    cfg.validate()?;
    let n = x.n_rows;
    if n < 2 {
        return Err(SvmError::TooFewSamples(n));
    }
    if y.len() != n {
        return Err(SvmError::DimensionMismatch { expected: n, got: y.len() });
    }
    for i in 0..n {
        if let Some(col) = x.row(i).iter().position(|v| !v.is_finite()) {
            return Err(SvmError::NonFiniteFeature { row: i, col });
        }
    }
    let n_pos = y.iter().filter(|&&l| l > 0).count();
    if n_pos == 0 || n_pos == n {
        return Err(SvmError::SingleClass);
    }

    let gamma = match cfg.gamma {
        GammaSpec::Value(g) => g,
        GammaSpec::Scale => {
            let var = x.variance();
            if var > 0.0 {
                1.0 / (x.n_cols as f64 * var)
            } else {
                1.0 / x.n_cols.max(1) as f64
            }
        }
    };

    let (w_pos, w_neg) = match cfg.class_weight {
        ClassWeight::None => (1.0, 1.0),
        ClassWeight::Balanced => {
            let n_neg = n - n_pos;
            (n as f64 / (2.0 * n_pos as f64), n as f64 / (2.0 * n_neg as f64))
        }
    };
    let box_of: Vec<f64> = y.iter().map(|&l| if l > 0 { cfg.c * w_pos } else { cfg.c * w_neg }).collect();
    let y: Vec<f64> = y.iter().map(|&l| l as f64).collect();

    let mut cache = KernelCache::new(x, gamma, cfg.cache_bytes);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];

    let max_iterations = cfg.max_passes.saturating_mul(n).max(1);
    let tau = 1e-12;
    let mut iterations = 0;
    let mut converged = false;
    let mut final_violation = f64::INFINITY;
    let mut objective_decreases = 0usize;
    let mut prev_objective = 0.0_f64;

    while iterations < max_iterations {
        // i: the maximal violator in I_up.
        let mut m_val = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < box_of[t]) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] < 0.0 && alpha[t] < box_of[t]) || (y[t] > 0.0 && alpha[t] > 0.0);
            if in_up && v > m_val {
                m_val = v;
                i_sel = t;
            }
            if in_low && v < m_low {
                m_low = v;
            }
        }
        final_violation = m_val - m_low;
        if final_violation <= cfg.tolerance {
            converged = true;
            break;
        }

        let i = i_sel;
        let k_i = cache.row(i);
        let k_ii = k_i[i];

        // j: in I_low with positive violation against i, maximizing the
        // second-order objective decrease b^2 / a.
        let mut j_sel = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for t in 0..n {
            let in_low = (y[t] < 0.0 && alpha[t] < box_of[t]) || (y[t] > 0.0 && alpha[t] > 0.0);
            if !in_low {
                continue;
            }
            let v = -y[t] * grad[t];
            let b = m_val - v;
            if b <= 0.0 {
                continue;
            }
            let k_tt = 1.0; // RBF diagonal
            let mut a = k_ii + k_tt - 2.0 * k_i[t];
            if a <= 0.0 {
                a = tau;
            }
            let gain = b * b / a;
            if gain > best {
                best = gain;
                j_sel = t;
            }
        }
        if j_sel == usize::MAX {
            converged = true;
            break;
        }
        let j = j_sel;
        let k_j = cache.row(j);

        // Analytic two-variable update with box clipping.
        let mut a_quad = k_ii + k_j[j] - 2.0 * k_i[j];
        if a_quad <= 0.0 {
            a_quad = tau;
        }
        let old_ai = alpha[i];
        let old_aj = alpha[j];
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / a_quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > box_of[i] - box_of[j] {
                if alpha[i] > box_of[i] {
                    alpha[i] = box_of[i];
                    alpha[j] = box_of[i] - diff;
                }
            } else if alpha[j] > box_of[j] {
                alpha[j] = box_of[j];
                alpha[i] = box_of[j] + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / a_quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > box_of[i] {
                if alpha[i] > box_of[i] {
                    alpha[i] = box_of[i];
                    alpha[j] = sum - box_of[i];
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > box_of[j] {
                if alpha[j] > box_of[j] {
                    alpha[j] = box_of[j];
                    alpha[i] = sum - box_of[j];
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let d_ai = alpha[i] - old_ai;
        let d_aj = alpha[j] - old_aj;
        for t in 0..n {
            grad[t] += y[t] * y[i] * k_i[t] * d_ai + y[t] * y[j] * k_j[t] * d_aj;
        }
        iterations += 1;

        // Dual objective sum(a) - a'Qa/2 = (sum(a) - a'grad)/2; must never
        // decrease across pair updates.
        let sum_alpha: f64 = alpha.iter().sum();
        let alpha_grad: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * g).sum();
        let objective = 0.5 * (sum_alpha - alpha_grad);
        if objective < prev_objective - 1e-8 * prev_objective.abs().max(1.0) {
            objective_decreases += 1;
        }
        prev_objective = objective;
    }

    // Bias: mean of -y_t * grad_t over free support vectors, else the
    // midpoint of the feasible interval.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        if alpha[t] > 0.0 && alpha[t] < box_of[t] {
            free_sum += -y[t] * grad[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        let mut m_val = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < box_of[t]) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] < 0.0 && alpha[t] < box_of[t]) || (y[t] > 0.0 && alpha[t] > 0.0);
            if in_up {
                m_val = m_val.max(v);
            }
            if in_low {
                m_low = m_low.min(v);
            }
        }
        (m_val + m_low) / 2.0
    };

    let mut sv_rows = Vec::new();
    let mut dual_coefs = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            sv_rows.push(x.row(t).to_vec());
            dual_coefs.push(alpha[t] * y[t]);
        }
    }
    let n_support = dual_coefs.len();

    Ok(SvmModel {
        support_vectors: if sv_rows.is_empty() { Dense::zeros(0, x.n_cols) } else { Dense::from_rows(&sv_rows) },
        dual_coefs,
        bias,
        gamma,
        config: cfg.clone(),
        meta: TrainMeta {
            iterations,
            final_violation,
            converged,
            dual_objective: prev_objective,
            objective_decreases,
            n_support,
        },
    })
}

impl SvmModel {
    pub fn decision_function(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.support_vectors.n_cols {
            return Err(SvmError::DimensionMismatch { expected: self.support_vectors.n_cols, got: x.len() });
        }
        let mut acc = self.bias;
        for (s, coef) in self.dual_coefs.iter().enumerate() {
            acc += coef * (-self.gamma * squared_distance(self.support_vectors.row(s), x)).exp();
        }
        Ok(acc)
    }

    /// Sign of the decision function; exact zero maps to +1.
    pub fn predict(&self, x: &[f64]) -> Result<i8, SvmError> {
        Ok(if self.decision_function(x)? >= 0.0 { 1 } else { -1 })
    }

    pub fn n_support(&self) -> usize {
        self.dual_coefs.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn dual_coefs(&self) -> &[f64] {
        &self.dual_coefs
    }

    pub fn support_vectors(&self) -> &Dense {
        &self.support_vectors
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<SvmModel> {
        serde_json::from_str(text)
    }
}
