//! Graph and embedding cache under PHYLEMBED_CACHE_DIR.
//!
//! Keys are content hashes of the inputs that produced an artifact, so a
//! rerun with unchanged inputs loads instead of recomputing (logged as a
//! cache hit).

use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use phylembed::embed::{parse_embedding_tsv, write_embedding_tsv, EmbedMeta, EmbedMethod, EmbeddingMatrix};
use phylembed::graph::{Edge, HeteroGraph, Node};

pub const CACHE_ENV: &str = "PHYLEMBED_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct GraphCacheFile {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

pub struct ArtifactCache {
    dir: Option<PathBuf>,
}

impl ArtifactCache {
    pub fn from_env() -> ArtifactCache {
        let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from);
        if let Some(d) = &dir {
            let _ = fs::create_dir_all(d);
        }
        ArtifactCache { dir }
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    pub fn load_graph(&self, key: u64) -> Option<HeteroGraph> {
        let path = self.path(&format!("graph_{key:016x}.json"))?;
        let text = fs::read_to_string(path).ok()?;
        let file: GraphCacheFile = serde_json::from_str(&text).ok()?;
        HeteroGraph::from_parts(file.nodes, file.edges).ok()
    }

    pub fn store_graph(&self, key: u64, graph: &HeteroGraph) -> Result<()> {
        let Some(path) = self.path(&format!("graph_{key:016x}.json")) else {
            return Ok(());
        };
        let file = GraphCacheFile { nodes: graph.nodes().to_vec(), edges: graph.edges().to_vec() };
        fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    /// Embeddings are cached as their TSV export and revalidated against
    /// the graph's node names on load.
    pub fn load_embedding(&self, key: &str, graph: &HeteroGraph, method: EmbedMethod) -> Option<EmbeddingMatrix> {
        let path = self.path(&format!("embed_{key}.tsv"))?;
        let text = fs::read_to_string(path).ok()?;
        let (names, vectors) = parse_embedding_tsv(&text).ok()?;
        if names.len() != graph.n_nodes() {
            return None;
        }
        if names.iter().zip(graph.nodes()).any(|(a, b)| a != &b.name) {
            return None;
        }
        let dim = vectors.n_cols;
        Some(EmbeddingMatrix::new(method, dim, vectors, EmbedMeta::Plain))
    }

    pub fn store_embedding(&self, key: &str, graph: &HeteroGraph, emb: &EmbeddingMatrix) -> Result<()> {
        let Some(path) = self.path(&format!("embed_{key}.tsv")) else {
            return Ok(());
        };
        let names: Vec<String> = graph.nodes().iter().map(|n| n.name.clone()).collect();
        let mut bytes = Vec::new();
        write_embedding_tsv(emb, &names, &mut bytes)?;
        fs::write(path, bytes)?;
        Ok(())
    }
}
