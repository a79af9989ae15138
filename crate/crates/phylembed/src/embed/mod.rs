//! Node embeddings of the phylogenetic graph.
//!
//! Three interchangeable backends produce an [`EmbeddingMatrix`] with one
//! row per graph node, in graph node order:
//!
//! * [`compute_lpe`] — eigenvectors of the symmetric normalized Laplacian
//!   for the k smallest non-trivial eigenvalues;
//! * [`compute_rwpe`] — diagonal return probabilities of the random-walk
//!   matrix for walk lengths 1..=k;
//! * [`train_node2vec`] — skip-gram with negative sampling over
//!   second-order biased random walks.

mod eigen;
mod lpe;
mod node2vec;
mod rwpe;

pub use eigen::{jacobi_eigh, lanczos_largest, IterativeOptions};
pub use lpe::{compute_lpe, compute_lpe_with, LpeOptions};
pub use node2vec::{biased_random_walk, train_node2vec, train_node2vec_detailed, N2vConfig, Node2VecStats, TrainMode};
pub use rwpe::compute_rwpe;

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Dense;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("k={k} exceeds the {available} non-trivial eigenvectors available")]
    KTooLarge { k: usize, available: usize },
    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("invalid embedding config: {0}")]
    InvalidConfig(String),
    #[error("non-finite SGNS loss at epoch {epoch} (learning rate {learning_rate})")]
    NonFiniteLoss { epoch: usize, learning_rate: f64 },
    #[error("embedding file malformed: {0}")]
    MalformedFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMethod {
    Lpe,
    Rwpe,
    N2v,
}

impl EmbedMethod {
    pub fn parse(s: &str) -> Option<EmbedMethod> {
        match s.to_ascii_lowercase().as_str() {
            "lpe" => Some(EmbedMethod::Lpe),
            "rwpe" => Some(EmbedMethod::Rwpe),
            "n2v" | "node2vec" => Some(EmbedMethod::N2v),
            _ => None,
        }
    }

    /// True when training draws random numbers, so per-run reseeding is
    /// meaningful.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, EmbedMethod::N2v)
    }
}

impl fmt::Display for EmbedMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedMethod::Lpe => write!(f, "LPE"),
            EmbedMethod::Rwpe => write!(f, "RWPE"),
            EmbedMethod::N2v => write!(f, "N2V"),
        }
    }
}

/// Method-specific metadata carried alongside the vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EmbedMeta {
    Plain,
    Lpe {
        /// Ascending eigenvalues, one per column.
        eigenvalues: Vec<f64>,
        /// Column ranges (start, end exclusive) whose eigenvalues coincide
        /// within 1e-8; downstream comparisons should treat them as
        /// subspaces rather than individual vectors.
        degenerate_groups: Vec<(usize, usize)>,
    },
    N2v {
        /// Mean SGNS loss per epoch.
        epoch_mean_loss: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    pub method: EmbedMethod,
    pub dim: usize,
    /// |U| x dim, rows in graph node order.
    vectors: Dense,
    pub meta: EmbedMeta,
}

impl EmbeddingMatrix {
    pub fn new(method: EmbedMethod, dim: usize, vectors: Dense, meta: EmbedMeta) -> Self {
        debug_assert_eq!(vectors.n_cols, dim);
        EmbeddingMatrix { method, dim, vectors, meta }
    }

    pub fn n_nodes(&self) -> usize {
        self.vectors.n_rows
    }

    #[inline]
    pub fn row(&self, node: usize) -> &[f64] {
        self.vectors.row(node)
    }

    pub fn vectors(&self) -> &Dense {
        &self.vectors
    }

    pub fn is_finite(&self) -> bool {
        self.vectors.is_finite()
    }
}

/// JSON sidecar written next to an embedding TSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingSidecar {
    pub method: String,
    pub dim: usize,
    pub seed: Option<u64>,
    pub config: Option<serde_json::Value>,
    pub graph_hash: String,
}

/// Embedding TSV: `node_name<TAB>v1...<TAB>vk`, rows in node order.
pub fn write_embedding_tsv<W: Write>(emb: &EmbeddingMatrix, node_names: &[String], mut w: W) -> Result<(), EmbedError> {
    debug_assert_eq!(node_names.len(), emb.n_nodes());
    write!(w, "node_name")?;
    for j in 1..=emb.dim {
        write!(w, "\tv{j}")?;
    }
    writeln!(w)?;
    for (i, name) in node_names.iter().enumerate() {
        write!(w, "{name}")?;
        for v in emb.row(i) {
            write!(w, "\t{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Parse an embedding TSV back into node names and vectors.
pub fn parse_embedding_tsv(text: &str) -> Result<(Vec<String>, Dense), EmbedError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| EmbedError::MalformedFile("empty file".into()))?;
    let dim = header.split('\t').count().saturating_sub(1);
    let mut names = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        names.push(fields.next().unwrap().to_string());
        let mut count = 0;
        for tok in fields {
            let v: f64 = tok
                .parse()
                .map_err(|_| EmbedError::MalformedFile(format!("bad float `{tok}` at line {}", lineno + 2)))?;
            values.push(v);
            count += 1;
        }
        if count != dim {
            return Err(EmbedError::MalformedFile(format!(
                "line {} has {} values, expected {dim}",
                lineno + 2,
                count
            )));
        }
    }
    Ok((names.clone(), Dense::from_vec(names.len(), dim, values)))
}
