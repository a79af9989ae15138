//! Patient-level representations of gut-microbiome multi-omic data via a
//! gene–species–genus phylogenetic graph.
//!
//! The pipeline has five stages, one module each:
//!
//! 1. [`ingest`] — parse abundance / taxonomy / label TSVs, or generate
//!    planted-signal synthetic datasets.
//! 2. [`graph`] — build the heterogeneous phylogenetic graph and derive its
//!    Laplacian and random-walk operators.
//! 3. [`embed`] — node embeddings: Laplacian-eigenvector positional encoding,
//!    random-walk positional encoding, or Node2Vec skip-gram training.
//! 4. [`represent`] — aggregate node embeddings plus a patient's CPM profile
//!    into one vector per patient.
//! 5. [`svm`] + [`eval`] — RBF-kernel SVM trained by SMO, with stratified
//!    splits, F1 / ROC-AUC metrics, random hyperparameter search, repeated
//!    runs, omic-level comparison and top-k gene sweeps.

pub mod embed;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod matrix;
pub mod represent;
pub mod rng;
pub mod sparse;
pub mod svm;

pub use ingest::OmicLevel;
