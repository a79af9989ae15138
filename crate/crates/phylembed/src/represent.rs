//! Two-level aggregation from node embeddings to patient vectors.
//!
//! Level one: a gene's embedding is the mean over its phylogenetic subgraph,
//! i.e. the gene node itself plus its species and genus ancestors. Level
//! two: a patient is the weighted sum of the embeddings of their top-k most
//! highly expressed genes, pooled across the selected omic levels.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbeddingMatrix;
use crate::graph::{GraphError, HeteroGraph};
use crate::ingest::{AbundanceTable, LabelTable, OmicLevel};
use crate::matrix::Dense;

#[derive(Debug, Error)]
pub enum RepresentError {
    #[error("node {0} is not a gene node")]
    NotAGene(u32),
    #[error("embedding has {emb} rows but the graph has {graph} nodes")]
    EmbeddingMismatch { emb: usize, graph: usize },
    #[error("sample `{0}` is absent from every selected abundance table")]
    SampleAbsent(String),
    #[error("sample `{0}` has an all-zero profile")]
    ZeroProfile(String),
    #[error("no labeled sample has a representable profile")]
    NoRepresentableSamples,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Weights proportional to CPM, normalized over the selected genes.
    CpmWeighted,
    /// Plain mean over the selected genes.
    UniformMean,
}

/// What to do with samples whose selected-level profile is entirely zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroProfilePolicy {
    /// Exclude the sample and record it.
    Drop,
    /// Emit a zero vector flagged as an empty profile.
    ZeroVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregationConfig {
    pub top_k_genes: usize,
    pub weighting: Weighting,
    pub omic_levels: Vec<OmicLevel>,
    pub zero_profile_policy: ZeroProfilePolicy,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            top_k_genes: 200,
            weighting: Weighting::CpmWeighted,
            omic_levels: vec![OmicLevel::Mgx],
            zero_profile_policy: ZeroProfilePolicy::Drop,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientRepresentation {
    pub sample_id: String,
    pub vector: Vec<f64>,
    /// Gene node indices actually aggregated, in rank order.
    pub genes_used: Vec<u32>,
    /// True when the profile was all-zero and the zero-vector policy applied.
    pub empty_profile: bool,
}

/// Mean of the embeddings of the gene, its species and its genus.
pub fn gene_embedding(graph: &HeteroGraph, emb: &EmbeddingMatrix, gene: u32) -> Result<Vec<f64>, RepresentError> {
    if emb.n_nodes() != graph.n_nodes() {
        return Err(RepresentError::EmbeddingMismatch { emb: emb.n_nodes(), graph: graph.n_nodes() });
    }
    if gene as usize >= graph.n_genes() {
        return Err(RepresentError::NotAGene(gene));
    }
    let (species, genus) = graph.ancestors(gene).expect("gene index checked");
    let mut out = emb.row(gene as usize).to_vec();
    for (o, v) in out.iter_mut().zip(emb.row(species as usize)) {
        *o += v;
    }
    for (o, v) in out.iter_mut().zip(emb.row(genus as usize)) {
        *o += v;
    }
    for o in &mut out {
        *o /= 3.0;
    }
    Ok(out)
}

/// Candidate pool for one sample: the union over selected omic levels of
/// genes with CPM > 0. A level missing the sample contributes nothing. At
/// most one table per omic level is consulted (the first that contains the
/// sample).
fn candidate_pool(
    graph: &HeteroGraph,
    tables: &[&AbundanceTable],
    sample_id: &str,
    levels: &[OmicLevel],
) -> Result<Option<Vec<(u32, f64)>>, RepresentError> {
    let mut pool: Vec<(u32, f64)> = Vec::new();
    let mut seen_anywhere = false;
    for &level in levels {
        let Some((table, row)) = tables
            .iter()
            .filter(|t| t.omic_level == level)
            .find_map(|t| t.sample_position(sample_id).map(|r| (*t, r)))
        else {
            continue;
        };
        seen_anywhere = true;
        // Reuse the subset lookup for its unmatched-feature reporting.
        let subset = graph.patient_node_subset(table, sample_id)?;
        debug_assert_eq!(subset.len(), table.sample_row(row).len());
        for &(col, cpm) in table.sample_row(row) {
            let gene = graph
                .gene_node(level, &table.feature_ids()[col as usize])
                .expect("validated by patient_node_subset");
            pool.push((gene, cpm));
        }
    }
    Ok(seen_anywhere.then_some(pool))
}

pub fn patient_representation(
    graph: &HeteroGraph,
    emb: &EmbeddingMatrix,
    tables: &[&AbundanceTable],
    sample_id: &str,
    cfg: &AggregationConfig,
) -> Result<PatientRepresentation, RepresentError> {
    if emb.n_nodes() != graph.n_nodes() {
        return Err(RepresentError::EmbeddingMismatch { emb: emb.n_nodes(), graph: graph.n_nodes() });
    }
    let mut pool = candidate_pool(graph, tables, sample_id, &cfg.omic_levels)?
        .ok_or_else(|| RepresentError::SampleAbsent(sample_id.to_string()))?;

    if pool.is_empty() {
        return match cfg.zero_profile_policy {
            ZeroProfilePolicy::Drop => Err(RepresentError::ZeroProfile(sample_id.to_string())),
            ZeroProfilePolicy::ZeroVector => Ok(PatientRepresentation {
                sample_id: sample_id.to_string(),
                vector: vec![0.0; emb.dim],
                genes_used: Vec::new(),
                empty_profile: true,
            }),
        };
    }

    // Rank by CPM descending, ties by node index ascending.
    pool.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    pool.truncate(cfg.top_k_genes);

    let weights: Vec<f64> = match cfg.weighting {
        Weighting::CpmWeighted => {
            let total: f64 = pool.iter().map(|&(_, c)| c).sum();
            pool.iter().map(|&(_, c)| c / total).collect()
        }
        Weighting::UniformMean => vec![1.0 / pool.len() as f64; pool.len()],
    };

    let mut vector = vec![0.0; emb.dim];
    for (&(gene, _), &w) in pool.iter().zip(&weights) {
        let ge = gene_embedding(graph, emb, gene)?;
        for (o, v) in vector.iter_mut().zip(&ge) {
            *o += w * v;
        }
    }

    Ok(PatientRepresentation {
        sample_id: sample_id.to_string(),
        vector,
        genes_used: pool.into_iter().map(|(g, _)| g).collect(),
        empty_profile: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DropReason {
    AbsentFromTables,
    ZeroProfile,
}

/// Representations of labeled samples, rows in label-table order.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: Dense,
    /// Labels in {0, 1}, aligned with rows of `x`.
    pub y: Vec<u8>,
    pub sample_ids: Vec<String>,
    pub dropped: Vec<(String, DropReason)>,
}

pub fn build_design_matrix(
    graph: &HeteroGraph,
    emb: &EmbeddingMatrix,
    tables: &[&AbundanceTable],
    labels: &LabelTable,
    cfg: &AggregationConfig,
) -> Result<DesignMatrix, RepresentError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    let mut sample_ids = Vec::new();
    let mut dropped = Vec::new();
    for (sample, label) in labels.entries() {
        match patient_representation(graph, emb, tables, sample, cfg) {
            Ok(rep) => {
                rows.push(rep.vector);
                y.push(*label);
                sample_ids.push(sample.clone());
            }
            Err(RepresentError::SampleAbsent(_)) => dropped.push((sample.clone(), DropReason::AbsentFromTables)),
            Err(RepresentError::ZeroProfile(_)) => dropped.push((sample.clone(), DropReason::ZeroProfile)),
            Err(other) => return Err(other),
        }
    }
    if rows.is_empty() {
        return Err(RepresentError::NoRepresentableSamples);
    }
    let x = if rows.is_empty() { Dense::zeros(0, emb.dim) } else { Dense::from_rows(&rows) };
    Ok(DesignMatrix { x, y, sample_ids, dropped })
}

/// Representation TSV: `sample_id<TAB>v1...<TAB>vdim`.
pub fn write_representations_tsv<W: Write>(reps: &[PatientRepresentation], dim: usize, mut w: W) -> Result<(), RepresentError> {
    write!(w, "sample_id")?;
    for j in 1..=dim {
        write!(w, "\tv{j}")?;
    }
    writeln!(w)?;
    for rep in reps {
        write!(w, "{}", rep.sample_id)?;
        for v in &rep.vector {
            write!(w, "\t{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
