//! Parsing and validation of abundance, taxonomy and label tables.
//!
//! All interchange files are UTF-8 TSV with a header row:
//!
//! * abundance — `sample_id<TAB>f1<TAB>f2...`, one row per sample, decimal
//!   floats, zeros written explicitly;
//! * taxonomy — `feature_id<TAB>species<TAB>genus`;
//! * labels — `sample_id<TAB>label` with label in {0, 1}.

mod synth;

pub use synth::{generate_synthetic_dataset, MtxSynthConfig, SynthConfig, SynthDataset};

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty input: no header row")]
    EmptyInput,
    #[error("bad header: expected first column `{expected}`, found `{found}`")]
    BadHeader { expected: &'static str, found: String },
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    RaggedRow { line: usize, expected: usize, found: usize },
    #[error("duplicate sample id `{0}`")]
    DuplicateSampleId(String),
    #[error("duplicate feature id `{0}`")]
    DuplicateFeatureId(String),
    #[error("non-numeric CPM at ({sample},{feature}): `{token}`")]
    NonNumericValue { sample: String, feature: String, token: String },
    #[error("negative CPM at ({sample},{feature})")]
    NegativeValue { sample: String, feature: String },
    #[error("non-finite CPM at ({sample},{feature})")]
    NonFiniteValue { sample: String, feature: String },
    #[error("species {species} has conflicting genera: `{first}` vs `{second}`")]
    ConflictingGenus { species: String, first: String, second: String },
    #[error("label out of range for sample `{sample}`: `{token}` (expected 0 or 1)")]
    LabelOutOfRange { sample: String, token: String },
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Omic level a table or gene node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmicLevel {
    /// Metagenomics: which genes are present.
    Mgx,
    /// Metatranscriptomics: which genes are expressed.
    Mtx,
}

impl OmicLevel {
    pub fn parse(s: &str) -> Option<OmicLevel> {
        match s.to_ascii_lowercase().as_str() {
            "mgx" => Some(OmicLevel::Mgx),
            "mtx" => Some(OmicLevel::Mtx),
            _ => None,
        }
    }
}

impl fmt::Display for OmicLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmicLevel::Mgx => write!(f, "MGX"),
            OmicLevel::Mtx => write!(f, "MTX"),
        }
    }
}

/// Samples × features CPM matrix for one omic level. Zero entries are not
/// stored; row and column order are preserved from the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceTable {
    pub omic_level: OmicLevel,
    sample_ids: Vec<String>,
    feature_ids: Vec<String>,
    /// Per sample: (feature index, CPM) pairs sorted by feature index,
    /// strictly positive values only.
    rows: Vec<Vec<(u32, f64)>>,
    sample_index: HashMap<String, usize>,
}

impl AbundanceTable {
    pub fn new(
        omic_level: OmicLevel,
        sample_ids: Vec<String>,
        feature_ids: Vec<String>,
        rows: Vec<Vec<(u32, f64)>>,
    ) -> Self {
        debug_assert_eq!(sample_ids.len(), rows.len());
        debug_assert!(rows
            .iter()
            .all(|r| r.windows(2).all(|w| w[0].0 < w[1].0) && r.iter().all(|&(c, v)| (c as usize) < feature_ids.len() && v > 0.0 && v.is_finite())));
        let sample_index = sample_ids.iter().cloned().zip(0..).collect();
        AbundanceTable { omic_level, sample_ids, feature_ids, rows, sample_index }
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn sample_position(&self, sample_id: &str) -> Option<usize> {
        self.sample_index.get(sample_id).copied()
    }

    /// Nonzero (feature index, CPM) pairs of one sample row.
    pub fn sample_row(&self, row: usize) -> &[(u32, f64)] {
        &self.rows[row]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        match self.rows[row].binary_search_by_key(&(feature as u32), |&(c, _)| c) {
            Ok(p) => self.rows[row][p].1,
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// feature_id → (species, genus) records, insertion-ordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyMap {
    records: Vec<TaxonomyRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyRecord {
    pub feature_id: String,
    pub species: String,
    pub genus: String,
}

impl TaxonomyMap {
    /// Validates uniqueness of feature ids and species→genus consistency.
    pub fn new(records: Vec<TaxonomyRecord>) -> Result<Self, IngestError> {
        let mut seen_features: HashMap<&str, ()> = HashMap::with_capacity(records.len());
        let mut genus_of: HashMap<&str, &str> = HashMap::new();
        for rec in &records {
            if seen_features.insert(&rec.feature_id, ()).is_some() {
                return Err(IngestError::DuplicateFeatureId(rec.feature_id.clone()));
            }
            match genus_of.get(rec.species.as_str()) {
                Some(&g) if g != rec.genus => {
                    return Err(IngestError::ConflictingGenus {
                        species: rec.species.clone(),
                        first: g.to_string(),
                        second: rec.genus.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    genus_of.insert(&rec.species, &rec.genus);
                }
            }
        }
        Ok(TaxonomyMap { records })
    }

    pub fn records(&self) -> &[TaxonomyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// sample_id → binary phenotype label, insertion-ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    entries: Vec<(String, u8)>,
    index: HashMap<String, usize>,
}

impl LabelTable {
    pub fn new(entries: Vec<(String, u8)>) -> Result<Self, IngestError> {
        let mut index = HashMap::with_capacity(entries.len());
        for (pos, (sample, label)) in entries.iter().enumerate() {
            if *label > 1 {
                return Err(IngestError::LabelOutOfRange { sample: sample.clone(), token: label.to_string() });
            }
            if index.insert(sample.clone(), pos).is_some() {
                return Err(IngestError::DuplicateSampleId(sample.clone()));
            }
        }
        Ok(LabelTable { entries, index })
    }

    pub fn entries(&self) -> &[(String, u8)] {
        &self.entries
    }

    pub fn label_of(&self, sample_id: &str) -> Option<u8> {
        self.index.get(sample_id).map(|&p| self.entries[p].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.entries.iter().filter(|(_, l)| *l == 1).count()
    }
}

fn split_line(line: &str) -> Vec<&str> {
    line.split('\t').collect()
}

/// Parse an abundance TSV. Row and column order are preserved; values must
/// be finite, nonnegative decimal floats.
pub fn parse_abundance_table(text: &str, omic_level: OmicLevel) -> Result<AbundanceTable, IngestError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IngestError::EmptyInput)?;
    let fields = split_line(header);
    if fields.first() != Some(&"sample_id") {
        return Err(IngestError::BadHeader { expected: "sample_id", found: fields.first().unwrap_or(&"").to_string() });
    }
    let feature_ids: Vec<String> = fields[1..].iter().map(|s| s.to_string()).collect();
    {
        let mut seen = HashMap::with_capacity(feature_ids.len());
        for f in &feature_ids {
            if seen.insert(f.as_str(), ()).is_some() {
                return Err(IngestError::DuplicateFeatureId(f.clone()));
            }
        }
    }

    let mut sample_ids = Vec::new();
    let mut rows = Vec::new();
    let mut seen_samples: HashMap<String, ()> = HashMap::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != feature_ids.len() + 1 {
            return Err(IngestError::RaggedRow { line: lineno + 1, expected: feature_ids.len() + 1, found: fields.len() });
        }
        let sample = fields[0].to_string();
        if seen_samples.insert(sample.clone(), ()).is_some() {
            return Err(IngestError::DuplicateSampleId(sample));
        }
        let mut row = Vec::new();
        for (j, token) in fields[1..].iter().enumerate() {
            let value: f64 = token.parse().map_err(|_| IngestError::NonNumericValue {
                sample: sample.clone(),
                feature: feature_ids[j].clone(),
                token: token.to_string(),
            })?;
            if value.is_nan() || value.is_infinite() {
                return Err(IngestError::NonFiniteValue { sample: sample.clone(), feature: feature_ids[j].clone() });
            }
            if value < 0.0 {
                return Err(IngestError::NegativeValue { sample: sample.clone(), feature: feature_ids[j].clone() });
            }
            if value > 0.0 {
                row.push((j as u32, value));
            }
        }
        sample_ids.push(sample);
        rows.push(row);
    }
    Ok(AbundanceTable::new(omic_level, sample_ids, feature_ids, rows))
}

/// Serialize an abundance table; zeros are written explicitly so the file
/// re-parses to the identical table.
pub fn write_abundance_tsv<W: Write>(table: &AbundanceTable, mut w: W) -> Result<(), IngestError> {
    write!(w, "sample_id")?;
    for f in table.feature_ids() {
        write!(w, "\t{f}")?;
    }
    writeln!(w)?;
    for (i, sample) in table.sample_ids().iter().enumerate() {
        write!(w, "{sample}")?;
        let row = table.sample_row(i);
        let mut next = row.iter().peekable();
        for j in 0..table.n_features() {
            match next.peek() {
                Some(&&(c, v)) if c as usize == j => {
                    write!(w, "\t{v}")?;
                    next.next();
                }
                _ => write!(w, "\t0")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Parse a taxonomy TSV with columns feature_id, species, genus.
pub fn parse_taxonomy_map(text: &str) -> Result<TaxonomyMap, IngestError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IngestError::EmptyInput)?;
    let fields = split_line(header);
    for (pos, expected) in ["feature_id", "species", "genus"].iter().enumerate() {
        if fields.get(pos) != Some(expected) {
            return Err(IngestError::MissingColumn(expected));
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != 3 {
            return Err(IngestError::RaggedRow { line: lineno + 1, expected: 3, found: fields.len() });
        }
        records.push(TaxonomyRecord {
            feature_id: fields[0].to_string(),
            species: fields[1].to_string(),
            genus: fields[2].to_string(),
        });
    }
    TaxonomyMap::new(records)
}

pub fn write_taxonomy_tsv<W: Write>(map: &TaxonomyMap, mut w: W) -> Result<(), IngestError> {
    writeln!(w, "feature_id\tspecies\tgenus")?;
    for rec in map.records() {
        writeln!(w, "{}\t{}\t{}", rec.feature_id, rec.species, rec.genus)?;
    }
    Ok(())
}

/// Parse a labels TSV with columns sample_id, label.
pub fn parse_labels(text: &str) -> Result<LabelTable, IngestError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IngestError::EmptyInput)?;
    let fields = split_line(header);
    for (pos, expected) in ["sample_id", "label"].iter().enumerate() {
        if fields.get(pos) != Some(expected) {
            return Err(IngestError::MissingColumn(expected));
        }
    }
    let mut entries = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != 2 {
            return Err(IngestError::RaggedRow { line: lineno + 1, expected: 2, found: fields.len() });
        }
        let label = match fields[1] {
            "0" => 0u8,
            "1" => 1u8,
            token => return Err(IngestError::LabelOutOfRange { sample: fields[0].to_string(), token: token.to_string() }),
        };
        entries.push((fields[0].to_string(), label));
    }
    LabelTable::new(entries)
}

pub fn write_labels_tsv<W: Write>(labels: &LabelTable, mut w: W) -> Result<(), IngestError> {
    writeln!(w, "sample_id\tlabel")?;
    for (sample, label) in labels.entries() {
        writeln!(w, "{sample}\t{label}")?;
    }
    Ok(())
}
