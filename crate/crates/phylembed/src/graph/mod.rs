//! The heterogeneous phylogenetic graph: gene, species and genus nodes with
//! (gene, species) and (species, genus) edges.
//!
//! Gene nodes are namespaced `"<omic>:<feature_id>"` so the same feature id
//! observed at two omic levels yields two distinct nodes sharing taxonomy
//! parents. Node order is all genes (input order), then species (first-seen),
//! then genera (first-seen).

mod topology;

pub use topology::{LaplacianKind, RandomWalk, Topology};

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{AbundanceTable, OmicLevel, TaxonomyMap};
use crate::rng::fnv1a64;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("taxonomy list is empty")]
    EmptyTaxonomyList,
    #[error("duplicate gene node `{0}`")]
    DuplicateGeneNode(String),
    #[error("species {species} has conflicting genera across taxonomies: `{first}` vs `{second}`")]
    ConflictingGenus { species: String, first: String, second: String },
    #[error("unknown sample id `{0}`")]
    UnknownSample(String),
    #[error("{count} feature(s) of sample `{sample}` have no {omic} gene node (first: `{first}`)")]
    UnknownFeatures { sample: String, omic: OmicLevel, count: usize, first: String },
    #[error("malformed graph: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Gene,
    Species,
    Genus,
}

impl NodeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeKind::Gene => "gene",
            NodeKind::Species => "species",
            NodeKind::Genus => "genus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    /// Present for gene nodes only.
    pub omic: Option<OmicLevel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    GeneSpecies,
    SpeciesGenus,
}

impl EdgeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeKind::GeneSpecies => "gene-species",
            EdgeKind::SpeciesGenus => "species-genus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub kind: EdgeKind,
}

/// Sorted set of node indices; a patient's expressed-gene view of the graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeSet {
    members: Vec<u32>,
}

impl NodeSet {
    pub fn from_sorted(members: Vec<u32>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        NodeSet { members }
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, idx: u32) -> bool {
        self.members.binary_search(&idx).is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct HeteroGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    topology: Topology,
    n_genes: usize,
    n_species: usize,
    n_genera: usize,
    /// Species node index per gene node.
    species_of_gene: Vec<u32>,
    /// Genus node index per species node (indexed by species offset).
    genus_of_species: Vec<u32>,
    gene_lookup: HashMap<(OmicLevel, String), u32>,
}

impl HeteroGraph {
    /// Build from one taxonomy per omic level. Species and genus nodes are
    /// shared across levels by name; species→genus consistency is enforced
    /// across the whole list.
    pub fn build(taxonomies: &[(TaxonomyMap, OmicLevel)]) -> Result<HeteroGraph, GraphError> {
        if taxonomies.is_empty() {
            return Err(GraphError::EmptyTaxonomyList);
        }
        let n_genes: usize = taxonomies.iter().map(|(t, _)| t.len()).sum();

        let mut gene_lookup: HashMap<(OmicLevel, String), u32> = HashMap::with_capacity(n_genes);
        let mut species_ids: HashMap<String, u32> = HashMap::new();
        let mut genus_ids: HashMap<String, u32> = HashMap::new();
        let mut species_names: Vec<String> = Vec::new();
        let mut genus_names: Vec<String> = Vec::new();
        let mut species_of_gene: Vec<u32> = Vec::with_capacity(n_genes);
        let mut genus_of_species: Vec<u32> = Vec::new();
        let mut gene_nodes: Vec<Node> = Vec::with_capacity(n_genes);

        for (taxonomy, omic) in taxonomies {
            for rec in taxonomy.records() {
                let gene_idx = gene_nodes.len() as u32;
                let name = format!("{omic}:{}", rec.feature_id);
                if gene_lookup.insert((*omic, rec.feature_id.clone()), gene_idx).is_some() {
                    return Err(GraphError::DuplicateGeneNode(name));
                }
                gene_nodes.push(Node { name, kind: NodeKind::Gene, omic: Some(*omic) });

                let species_offset = *species_ids.entry(rec.species.clone()).or_insert_with(|| {
                    species_names.push(rec.species.clone());
                    genus_of_species.push(u32::MAX);
                    (species_names.len() - 1) as u32
                });
                species_of_gene.push(species_offset);

                let genus_offset = *genus_ids.entry(rec.genus.clone()).or_insert_with(|| {
                    genus_names.push(rec.genus.clone());
                    (genus_names.len() - 1) as u32
                });
                let slot = &mut genus_of_species[species_offset as usize];
                if *slot == u32::MAX {
                    *slot = genus_offset;
                } else if *slot != genus_offset {
                    return Err(GraphError::ConflictingGenus {
                        species: rec.species.clone(),
                        first: genus_names[*slot as usize].clone(),
                        second: rec.genus.clone(),
                    });
                }
            }
        }

        let n_species = species_names.len();
        let n_genera = genus_names.len();
        let species_base = n_genes as u32;
        let genus_base = (n_genes + n_species) as u32;

        let mut nodes = gene_nodes;
        nodes.extend(species_names.into_iter().map(|name| Node { name, kind: NodeKind::Species, omic: None }));
        nodes.extend(genus_names.into_iter().map(|name| Node { name, kind: NodeKind::Genus, omic: None }));

        let species_of_gene: Vec<u32> = species_of_gene.into_iter().map(|s| species_base + s).collect();
        let genus_of_species: Vec<u32> = genus_of_species.into_iter().map(|g| genus_base + g).collect();

        let mut edges = Vec::with_capacity(n_genes + n_species);
        for (gene, &species) in species_of_gene.iter().enumerate() {
            edges.push(Edge { src: gene as u32, dst: species, kind: EdgeKind::GeneSpecies });
        }
        for (offset, &genus) in genus_of_species.iter().enumerate() {
            edges.push(Edge { src: species_base + offset as u32, dst: genus, kind: EdgeKind::SpeciesGenus });
        }

        let pairs: Vec<(u32, u32)> = edges.iter().map(|e| (e.src, e.dst)).collect();
        let topology = Topology::from_undirected_edges(nodes.len(), &pairs);

        Ok(HeteroGraph {
            nodes,
            edges,
            topology,
            n_genes,
            n_species,
            n_genera,
            species_of_gene,
            genus_of_species,
            gene_lookup,
        })
    }

    /// Rebuild a graph from exported nodes and edges, re-deriving the
    /// lookup structures and re-checking the structural invariants. Node
    /// order must be genes, then species, then genera.
    pub fn from_parts(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<HeteroGraph, GraphError> {
        let malformed = |m: String| Err(GraphError::Malformed(m));
        let n_genes = nodes.iter().take_while(|n| n.kind == NodeKind::Gene).count();
        let n_species = nodes[n_genes..].iter().take_while(|n| n.kind == NodeKind::Species).count();
        let n_genera = nodes.len() - n_genes - n_species;
        if nodes[n_genes + n_species..].iter().any(|n| n.kind != NodeKind::Genus) {
            return malformed("nodes are not ordered gene, species, genus".into());
        }

        let mut species_of_gene = vec![u32::MAX; n_genes];
        let mut genus_of_species = vec![u32::MAX; n_species];
        for edge in &edges {
            let (src, dst) = (edge.src as usize, edge.dst as usize);
            if src >= nodes.len() || dst >= nodes.len() {
                return malformed(format!("edge ({src},{dst}) out of range"));
            }
            match (nodes[src].kind, nodes[dst].kind, edge.kind) {
                (NodeKind::Gene, NodeKind::Species, EdgeKind::GeneSpecies) => {
                    if species_of_gene[src] != u32::MAX {
                        return malformed(format!("gene {src} has two species parents"));
                    }
                    species_of_gene[src] = edge.dst;
                }
                (NodeKind::Species, NodeKind::Genus, EdgeKind::SpeciesGenus) => {
                    if genus_of_species[src - n_genes] != u32::MAX {
                        return malformed(format!("species {src} has two genus parents"));
                    }
                    genus_of_species[src - n_genes] = edge.dst;
                }
                _ => return malformed(format!("edge ({src},{dst}) joins incompatible node kinds")),
            }
        }
        if let Some(gene) = species_of_gene.iter().position(|&s| s == u32::MAX) {
            return malformed(format!("gene {gene} has no species edge"));
        }
        if let Some(species) = genus_of_species.iter().position(|&g| g == u32::MAX) {
            return malformed(format!("species {} has no genus edge", n_genes + species));
        }

        let mut gene_lookup = HashMap::with_capacity(n_genes);
        for (idx, node) in nodes[..n_genes].iter().enumerate() {
            let Some(omic) = node.omic else {
                return malformed(format!("gene node {idx} lacks an omic level"));
            };
            let feature = node.name.strip_prefix(&format!("{omic}:")).unwrap_or(&node.name);
            if gene_lookup.insert((omic, feature.to_string()), idx as u32).is_some() {
                return Err(GraphError::DuplicateGeneNode(node.name.clone()));
            }
        }

        let pairs: Vec<(u32, u32)> = edges.iter().map(|e| (e.src, e.dst)).collect();
        let topology = Topology::from_undirected_edges(nodes.len(), &pairs);
        Ok(HeteroGraph {
            nodes,
            edges,
            topology,
            n_genes,
            n_species,
            n_genera,
            species_of_gene,
            genus_of_species,
            gene_lookup,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_genes(&self) -> usize {
        self.n_genes
    }

    pub fn n_species(&self) -> usize {
        self.n_species
    }

    pub fn n_genera(&self) -> usize {
        self.n_genera
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn gene_node(&self, omic: OmicLevel, feature_id: &str) -> Option<u32> {
        self.gene_lookup.get(&(omic, feature_id.to_string())).copied()
    }

    /// Species and genus ancestors of a gene node.
    pub fn ancestors(&self, gene: u32) -> Option<(u32, u32)> {
        let species = *self.species_of_gene.get(gene as usize)?;
        let genus = self.genus_of_species[(species as usize) - self.n_genes];
        Some((species, genus))
    }

    pub fn laplacian(&self, kind: LaplacianKind) -> crate::sparse::CsrMatrix {
        self.topology.laplacian(kind)
    }

    pub fn random_walk_matrix(&self) -> RandomWalk {
        self.topology.random_walk_matrix()
    }

    /// Gene nodes with CPM strictly greater than zero for one sample.
    /// Features without a matching gene node are an error, not silently
    /// dropped.
    pub fn patient_node_subset(&self, table: &AbundanceTable, sample_id: &str) -> Result<NodeSet, GraphError> {
        let row = table
            .sample_position(sample_id)
            .ok_or_else(|| GraphError::UnknownSample(sample_id.to_string()))?;
        let mut members = Vec::new();
        let mut missing: Vec<&str> = Vec::new();
        for &(col, _) in table.sample_row(row) {
            let feature = &table.feature_ids()[col as usize];
            match self.gene_lookup.get(&(table.omic_level, feature.clone())) {
                Some(&idx) => members.push(idx),
                None => missing.push(feature),
            }
        }
        if !missing.is_empty() {
            return Err(GraphError::UnknownFeatures {
                sample: sample_id.to_string(),
                omic: table.omic_level,
                count: missing.len(),
                first: missing[0].to_string(),
            });
        }
        members.sort_unstable();
        Ok(NodeSet::from_sorted(members))
    }

    /// Stable content hash over node names, kinds and edges; used for
    /// cache keys and embedding sidecars.
    pub fn content_hash(&self) -> u64 {
        let mut buf = Vec::new();
        for node in &self.nodes {
            buf.extend_from_slice(node.name.as_bytes());
            buf.push(0);
            buf.push(match node.kind {
                NodeKind::Gene => 1,
                NodeKind::Species => 2,
                NodeKind::Genus => 3,
            });
        }
        for edge in &self.edges {
            buf.extend_from_slice(&edge.src.to_le_bytes());
            buf.extend_from_slice(&edge.dst.to_le_bytes());
        }
        fnv1a64(&buf)
    }

    /// Node table TSV: `name<TAB>kind<TAB>index`, in node order.
    pub fn write_nodes_tsv<W: Write>(&self, mut w: W) -> Result<(), GraphError> {
        writeln!(w, "name\tkind\tindex")?;
        for (idx, node) in self.nodes.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}", node.name, node.kind.as_str(), idx)?;
        }
        Ok(())
    }

    /// Edge list TSV: `src_name<TAB>dst_name<TAB>edge_kind`, in edge order.
    pub fn write_edges_tsv<W: Write>(&self, mut w: W) -> Result<(), GraphError> {
        writeln!(w, "src_name\tdst_name\tedge_kind")?;
        for edge in &self.edges {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.nodes[edge.src as usize].name,
                self.nodes[edge.dst as usize].name,
                edge.kind.as_str()
            )?;
        }
        Ok(())
    }
}
