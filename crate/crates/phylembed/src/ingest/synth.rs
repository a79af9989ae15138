//! Planted-signal synthetic datasets for desk-scale testing.
//!
//! Genes are partitioned over species and species over genera (every part
//! nonempty, so node counts are exact). Baseline CPMs are log-normal with
//! entries zeroed at the configured sparsity; in positive-labeled samples,
//! genes belonging to the designated signal genera have their CPM multiplied
//! by `effect_size`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::{AbundanceTable, IngestError, LabelTable, OmicLevel, TaxonomyMap, TaxonomyRecord};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub n_genes: usize,
    pub n_species: usize,
    pub n_genera: usize,
    pub positive_fraction: f64,
    /// Number of genera carrying the planted signal (the first
    /// `signal_genera` genus ids are designated).
    pub signal_genera: usize,
    /// Multiplicative CPM shift applied to signal-genus genes in
    /// positive-labeled samples.
    pub effect_size: f64,
    /// Fraction of entries zeroed.
    pub sparsity: f64,
    /// Mean of ln(CPM) for the baseline log-normal.
    pub log_mean: f64,
    /// Std dev of ln(CPM) for the baseline log-normal.
    pub log_sigma: f64,
    pub seed: u64,
    /// When set, a second table at the MTX level is generated over a subset
    /// of samples and genes, with its own planted effect size.
    pub mtx: Option<MtxSynthConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtxSynthConfig {
    /// Fraction of samples also observed at the MTX level.
    pub sample_fraction: f64,
    /// Fraction of genes also observed at the MTX level.
    pub gene_fraction: f64,
    pub effect_size: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_samples: 100,
            n_genes: 200,
            n_species: 40,
            n_genera: 8,
            positive_fraction: 0.17,
            signal_genera: 2,
            effect_size: 3.0,
            sparsity: 0.8,
            log_mean: 3.0,
            log_sigma: 1.0,
            seed: 42,
            mtx: None,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        let fail = |msg: String| Err(IngestError::InvalidConfig(msg));
        if self.n_samples == 0 || self.n_genes == 0 || self.n_species == 0 || self.n_genera == 0 {
            return fail("all counts must be positive".into());
        }
        if !(self.n_genera <= self.n_species && self.n_species <= self.n_genes) {
            return fail(format!(
                "need n_genera <= n_species <= n_genes, got {} / {} / {}",
                self.n_genera, self.n_species, self.n_genes
            ));
        }
        if !self.positive_fraction.is_finite() || self.positive_fraction <= 0.0 || self.positive_fraction >= 1.0 {
            return fail(format!("positive_fraction must be in (0,1), got {}", self.positive_fraction));
        }
        if self.signal_genera == 0 || self.signal_genera > self.n_genera {
            return fail(format!("signal_genera must be in 1..=n_genera, got {}", self.signal_genera));
        }
        if !self.effect_size.is_finite() || self.effect_size <= 0.0 {
            return fail("effect_size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.sparsity) {
            return fail(format!("sparsity must be in [0,1), got {}", self.sparsity));
        }
        if !self.log_sigma.is_finite() || self.log_sigma <= 0.0 {
            return fail("log_sigma must be positive".into());
        }
        if let Some(mtx) = &self.mtx {
            if !(0.0..=1.0).contains(&mtx.sample_fraction)
                || mtx.sample_fraction == 0.0
                || !(0.0..=1.0).contains(&mtx.gene_fraction)
                || mtx.gene_fraction == 0.0
                || !mtx.effect_size.is_finite()
                || mtx.effect_size <= 0.0
            {
                return fail("mtx fractions must be in (0,1] and effect_size positive".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    /// MGX table first, then MTX when configured.
    pub abundances: Vec<AbundanceTable>,
    /// One taxonomy per generated omic level, restricted to its genes.
    pub taxonomies: Vec<(TaxonomyMap, OmicLevel)>,
    pub labels: LabelTable,
    pub signal_genera: Vec<String>,
}

fn pad_width(n: usize) -> usize {
    n.to_string().len()
}

/// Partition `n_items` over `n_parts` uniformly at random with every part
/// nonempty: after a shuffle, the first `n_parts` items seed parts 0..n_parts
/// and the rest are assigned uniformly.
fn random_partition(n_items: usize, n_parts: usize, rng: &mut crate::rng::Stream) -> Vec<u32> {
    let mut order: Vec<usize> = (0..n_items).collect();
    order.shuffle(rng);
    let mut part = vec![0u32; n_items];
    for (rank, &item) in order.iter().enumerate() {
        part[item] = if rank < n_parts { rank as u32 } else { rng.random_range(0..n_parts) as u32 };
    }
    part
}

pub fn generate_synthetic_dataset(cfg: &SynthConfig) -> Result<SynthDataset, IngestError> {
    cfg.validate()?;

    let gene_w = pad_width(cfg.n_genes);
    let species_w = pad_width(cfg.n_species);
    let genus_w = pad_width(cfg.n_genera);
    let sample_w = pad_width(cfg.n_samples);
    let gene_names: Vec<String> = (0..cfg.n_genes).map(|i| format!("g{:0gene_w$}", i)).collect();
    let species_names: Vec<String> = (0..cfg.n_species).map(|i| format!("sp{:0species_w$}", i)).collect();
    let genus_names: Vec<String> = (0..cfg.n_genera).map(|i| format!("gen{:0genus_w$}", i)).collect();
    let sample_names: Vec<String> = (0..cfg.n_samples).map(|i| format!("s{:0sample_w$}", i)).collect();

    let mut assign_rng = substream(cfg.seed, "synth-assign");
    let species_of_gene = random_partition(cfg.n_genes, cfg.n_species, &mut assign_rng);
    let genus_of_species = random_partition(cfg.n_species, cfg.n_genera, &mut assign_rng);

    let taxonomy = TaxonomyMap::new(
        (0..cfg.n_genes)
            .map(|g| TaxonomyRecord {
                feature_id: gene_names[g].clone(),
                species: species_names[species_of_gene[g] as usize].clone(),
                genus: genus_names[genus_of_species[species_of_gene[g] as usize] as usize].clone(),
            })
            .collect(),
    )?;

    // Exactly round(n * positive_fraction) positives, placement seeded.
    let mut label_rng = substream(cfg.seed, "synth-labels");
    let mut order: Vec<usize> = (0..cfg.n_samples).collect();
    order.shuffle(&mut label_rng);
    let n_positive = (cfg.n_samples as f64 * cfg.positive_fraction).round() as usize;
    let mut is_positive = vec![false; cfg.n_samples];
    for &s in order.iter().take(n_positive) {
        is_positive[s] = true;
    }
    let labels = LabelTable::new(
        sample_names.iter().cloned().zip(is_positive.iter().map(|&p| p as u8)).collect(),
    )?;

    let gene_is_signal: Vec<bool> = (0..cfg.n_genes)
        .map(|g| (genus_of_species[species_of_gene[g] as usize] as usize) < cfg.signal_genera)
        .collect();

    let value_table = |omic: OmicLevel,
                       stream: &str,
                       samples: &[usize],
                       genes: &[usize],
                       effect: f64|
     -> AbundanceTable {
        let base = LogNormal::new(cfg.log_mean, cfg.log_sigma).expect("validated sigma");
        let mut rng = substream(cfg.seed, stream);
        let mut rows = Vec::with_capacity(samples.len());
        for &s in samples {
            let mut row = Vec::new();
            for (col, &g) in genes.iter().enumerate() {
                // Both draws happen unconditionally to keep the stream
                // position independent of outcomes.
                let value = base.sample(&mut rng);
                let zeroed = rng.random_bool(cfg.sparsity);
                if !zeroed {
                    let value = if is_positive[s] && gene_is_signal[g] { value * effect } else { value };
                    row.push((col as u32, value));
                }
            }
            rows.push(row);
        }
        AbundanceTable::new(
            omic,
            samples.iter().map(|&s| sample_names[s].clone()).collect(),
            genes.iter().map(|&g| gene_names[g].clone()).collect(),
            rows,
        )
    };

    let all_samples: Vec<usize> = (0..cfg.n_samples).collect();
    let all_genes: Vec<usize> = (0..cfg.n_genes).collect();
    let mut abundances = vec![value_table(OmicLevel::Mgx, "synth-values-mgx", &all_samples, &all_genes, cfg.effect_size)];
    let mut taxonomies = vec![(taxonomy.clone(), OmicLevel::Mgx)];

    if let Some(mtx) = &cfg.mtx {
        let mut subset_rng = substream(cfg.seed, "synth-mtx-subset");
        let pick = |n: usize, fraction: f64, rng: &mut crate::rng::Stream| -> Vec<usize> {
            let count = ((n as f64 * fraction).round() as usize).clamp(1, n);
            let mut ids: Vec<usize> = (0..n).collect();
            ids.shuffle(rng);
            let mut chosen: Vec<usize> = ids.into_iter().take(count).collect();
            chosen.sort_unstable();
            chosen
        };
        let mtx_samples = pick(cfg.n_samples, mtx.sample_fraction, &mut subset_rng);
        let mtx_genes = pick(cfg.n_genes, mtx.gene_fraction, &mut subset_rng);
        let mtx_taxonomy = TaxonomyMap::new(
            mtx_genes.iter().map(|&g| taxonomy.records()[g].clone()).collect(),
        )?;
        abundances.push(value_table(OmicLevel::Mtx, "synth-values-mtx", &mtx_samples, &mtx_genes, mtx.effect_size));
        taxonomies.push((mtx_taxonomy, OmicLevel::Mtx));
    }

    Ok(SynthDataset {
        abundances,
        taxonomies,
        labels,
        signal_genera: genus_names[..cfg.signal_genera].to_vec(),
    })
}
