//! One function per subcommand; each builds its outputs in memory, writes
//! them under the locked output directory and leaves a manifest behind.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};

use phylembed::embed::{write_embedding_tsv, EmbedMethod, EmbeddingMatrix, EmbeddingSidecar};
use phylembed::eval::{
    compare_omic_levels, repeated_eval, search_hyperparameters, topk_sweep, write_trial_log, EvalReport,
    ExperimentData, RunnerSettings, SearchSpace, SplitSpec, TrialConfig,
};
use phylembed::graph::HeteroGraph;
use phylembed::ingest::{
    generate_synthetic_dataset, parse_abundance_table, parse_labels, parse_taxonomy_map, write_abundance_tsv,
    write_labels_tsv, write_taxonomy_tsv, AbundanceTable, LabelTable, OmicLevel, TaxonomyMap,
};
use phylembed::represent::{patient_representation, PatientRepresentation, RepresentError};
use phylembed::rng::fnv1a64;

use crate::cache::ArtifactCache;
use crate::manifest::RunContext;

fn omic_file_suffix(omic: OmicLevel) -> &'static str {
    match omic {
        OmicLevel::Mgx => "mgx",
        OmicLevel::Mtx => "mtx",
    }
}

/// Parse the configured taxonomies and build (or cache-load) the graph.
fn load_graph(ctx: &mut RunContext, cache: &ArtifactCache) -> Result<HeteroGraph> {
    if ctx.cfg.inputs.taxonomies.is_empty() {
        bail!("no taxonomy inputs configured");
    }
    let mut key_material = Vec::new();
    let mut taxonomies: Vec<(TaxonomyMap, OmicLevel)> = Vec::new();
    for entry in ctx.cfg.inputs.taxonomies.clone() {
        let text = ctx.read_input(&entry.path)?;
        key_material.extend_from_slice(omic_file_suffix(entry.omic).as_bytes());
        key_material.extend_from_slice(text.as_bytes());
        let map = parse_taxonomy_map(&text).with_context(|| format!("parsing {}", entry.path.display()))?;
        taxonomies.push((map, entry.omic));
    }
    let key = fnv1a64(&key_material);
    if let Some(graph) = cache.load_graph(key) {
        println!("cache hit: graph {key:016x}");
        return Ok(graph);
    }
    if cache.enabled() {
        println!("cache miss: graph {key:016x}");
    }
    let graph = ctx.time_stage("build-graph", |_| Ok(HeteroGraph::build(&taxonomies)?))?;
    cache.store_graph(key, &graph)?;
    Ok(graph)
}

fn load_tables(ctx: &mut RunContext) -> Result<Vec<AbundanceTable>> {
    if ctx.cfg.inputs.abundances.is_empty() {
        bail!("no abundance inputs configured");
    }
    let mut tables = Vec::new();
    for entry in ctx.cfg.inputs.abundances.clone() {
        let text = ctx.read_input(&entry.path)?;
        tables.push(
            parse_abundance_table(&text, entry.omic)
                .with_context(|| format!("parsing {}", entry.path.display()))?,
        );
    }
    Ok(tables)
}

fn load_labels(ctx: &mut RunContext) -> Result<LabelTable> {
    let Some(path) = ctx.cfg.inputs.labels.clone() else {
        bail!("no labels file configured");
    };
    let text = ctx.read_input(&path)?;
    parse_labels(&text).with_context(|| format!("parsing {}", path.display()))
}

fn runner_settings(ctx: &mut RunContext) -> RunnerSettings {
    let split_seed = ctx.seed("split");
    RunnerSettings {
        split: SplitSpec { seed: split_seed, ..ctx.cfg.eval.split.clone() },
        weighting: ctx.cfg.aggregation.weighting,
        omic_levels: ctx.cfg.aggregation.omic_levels.clone(),
        zero_profile_policy: ctx.cfg.aggregation.zero_profile_policy,
        class_weight: ctx.cfg.svm.class_weight,
        svm_tolerance: ctx.cfg.svm.tolerance,
        svm_max_passes: ctx.cfg.svm.max_passes,
        n2v: ctx.cfg.embed.n2v.clone(),
        deterministic: ctx.cfg.deterministic,
    }
}

fn trial_from_config(ctx: &RunContext) -> TrialConfig {
    TrialConfig {
        method: ctx.cfg.embed.method,
        dim: ctx.cfg.embed.dim,
        top_k: ctx.cfg.aggregation.top_k_genes,
        c: ctx.cfg.svm.c,
        gamma: ctx.cfg.svm.gamma,
    }
}

/// The search space: the configured one, or the single pinned config.
fn search_space(ctx: &mut RunContext) -> SearchSpace {
    let seed = ctx.seed("search");
    match ctx.cfg.eval.search.clone() {
        Some(space) => SearchSpace { seed, ..space },
        None => {
            let gamma_range = match ctx.cfg.svm.gamma {
                phylembed::svm::GammaSpec::Value(g) => (g, g),
                phylembed::svm::GammaSpec::Scale => (1.0, 1.0),
            };
            SearchSpace {
                c_log_range: (ctx.cfg.svm.c, ctx.cfg.svm.c),
                gamma_log_range: gamma_range,
                scale_gamma_probability: match ctx.cfg.svm.gamma {
                    phylembed::svm::GammaSpec::Scale => 1.0,
                    _ => 0.0,
                },
                methods: vec![ctx.cfg.embed.method],
                dims: vec![ctx.cfg.embed.dim],
                top_ks: vec![ctx.cfg.aggregation.top_k_genes],
                trials: 1,
                seed,
            }
        }
    }
}

fn embedding_with_cache(
    ctx: &mut RunContext,
    cache: &ArtifactCache,
    data: &ExperimentData,
    settings: &RunnerSettings,
) -> Result<(EmbeddingMatrix, u64, String)> {
    let method = ctx.cfg.embed.method;
    let dim = ctx.cfg.embed.dim;
    let seed = ctx.seed("embed");
    let n2v_hash = fnv1a64(serde_json::to_string(&settings.n2v)?.as_bytes());
    let key = match method {
        EmbedMethod::N2v => {
            format!("{:016x}_{method}_{dim}_{seed:016x}_{n2v_hash:016x}", data.graph.content_hash())
        }
        _ => format!("{:016x}_{method}_{dim}", data.graph.content_hash()),
    };
    if let Some(emb) = cache.load_embedding(&key, &data.graph, method) {
        println!("cache hit: embedding {key}");
        return Ok((emb, seed, key));
    }
    if cache.enabled() {
        println!("cache miss: embedding {key}");
    }
    let emb = ctx.time_stage("embed", |_| {
        Ok(phylembed::eval::embedding_for(data, settings, method, dim, seed)?)
    })?;
    cache.store_embedding(&key, &data.graph, &emb)?;
    Ok((emb, seed, key))
}

fn experiment_data(ctx: &mut RunContext, cache: &ArtifactCache, need_labels: bool) -> Result<ExperimentData> {
    let graph = load_graph(ctx, cache)?;
    let tables = load_tables(ctx)?;
    let labels = if need_labels {
        load_labels(ctx)?
    } else {
        ctx.cfg
            .inputs
            .labels
            .clone()
            .map(|_| load_labels(ctx))
            .transpose()?
            .unwrap_or_else(|| LabelTable::new(Vec::new()).expect("empty labels"))
    };
    Ok(ExperimentData { graph, tables, labels })
}

pub fn cmd_synth(mut ctx: RunContext) -> Result<()> {
    let mut synth = ctx.cfg.synth.clone();
    synth.seed = ctx.seed("synth");
    let ds = ctx.time_stage("generate", |_| Ok(generate_synthetic_dataset(&synth)?))?;

    for table in &ds.abundances {
        let mut bytes = Vec::new();
        write_abundance_tsv(table, &mut bytes)?;
        ctx.write_output(&format!("abundance_{}.tsv", omic_file_suffix(table.omic_level)), &bytes)?;
    }
    for (taxonomy, omic) in &ds.taxonomies {
        let mut bytes = Vec::new();
        write_taxonomy_tsv(taxonomy, &mut bytes)?;
        ctx.write_output(&format!("taxonomy_{}.tsv", omic_file_suffix(*omic)), &bytes)?;
    }
    let mut bytes = Vec::new();
    write_labels_tsv(&ds.labels, &mut bytes)?;
    ctx.write_output("labels.tsv", &bytes)?;

    ctx.set_summary(format!(
        "generated {} samples x {} genes ({} positive), signal genera: {}",
        synth.n_samples,
        synth.n_genes,
        ds.labels.positive_count(),
        ds.signal_genera.join(",")
    ));
    ctx.finish("synth")
}

pub fn cmd_build_graph(mut ctx: RunContext) -> Result<()> {
    let cache = ArtifactCache::from_env();
    let graph = load_graph(&mut ctx, &cache)?;
    let mut nodes = Vec::new();
    graph.write_nodes_tsv(&mut nodes)?;
    ctx.write_output("nodes.tsv", &nodes)?;
    let mut edges = Vec::new();
    graph.write_edges_tsv(&mut edges)?;
    ctx.write_output("edges.tsv", &edges)?;
    ctx.set_summary(format!(
        "graph {:016x}: {} nodes ({} genes, {} species, {} genera), {} edges",
        graph.content_hash(),
        graph.n_nodes(),
        graph.n_genes(),
        graph.n_species(),
        graph.n_genera(),
        graph.topology().n_edges()
    ));
    ctx.finish("build-graph")
}

pub fn cmd_embed(mut ctx: RunContext) -> Result<()> {
    let cache = ArtifactCache::from_env();
    let graph = load_graph(&mut ctx, &cache)?;
    let settings = runner_settings(&mut ctx);
    let data = ExperimentData { graph, tables: Vec::new(), labels: LabelTable::new(Vec::new()).unwrap() };
    let (emb, seed, key) = embedding_with_cache(&mut ctx, &cache, &data, &settings)?;

    let names: Vec<String> = data.graph.nodes().iter().map(|n| n.name.clone()).collect();
    let mut tsv = Vec::new();
    write_embedding_tsv(&emb, &names, &mut tsv)?;
    ctx.write_output("embedding.tsv", &tsv)?;

    let sidecar = EmbeddingSidecar {
        method: emb.method.to_string(),
        dim: emb.dim,
        seed: matches!(emb.method, EmbedMethod::N2v).then_some(seed),
        config: matches!(emb.method, EmbedMethod::N2v)
            .then(|| serde_json::to_value(&settings.n2v))
            .transpose()?,
        graph_hash: format!("{:016x}", data.graph.content_hash()),
    };
    ctx.write_output("embedding.json", serde_json::to_string_pretty(&sidecar)?.as_bytes())?;
    ctx.set_summary(format!("embedding {key}: {} nodes x {} dims", emb.n_nodes(), emb.dim));
    ctx.finish("embed")
}

pub fn cmd_represent(mut ctx: RunContext) -> Result<()> {
    let cache = ArtifactCache::from_env();
    let data = experiment_data(&mut ctx, &cache, false)?;
    let settings = runner_settings(&mut ctx);
    let (emb, _, _) = embedding_with_cache(&mut ctx, &cache, &data, &settings)?;

    // Union of samples over the selected omic levels, first-seen order.
    let mut samples: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for table in &data.tables {
        if !ctx.cfg.aggregation.omic_levels.contains(&table.omic_level) {
            continue;
        }
        for s in table.sample_ids() {
            if seen.insert(s.clone()) {
                samples.push(s.clone());
            }
        }
    }
    if samples.is_empty() {
        bail!("no samples found at the selected omic levels");
    }

    let tables: Vec<&AbundanceTable> = data.tables.iter().collect();
    let mut reps: Vec<PatientRepresentation> = Vec::new();
    let mut dropped_zero = 0usize;
    let mut dropped_absent = 0usize;
    ctx.time_stage("represent", |ctx| {
        for sample in &samples {
            match patient_representation(&data.graph, &emb, &tables, sample, &ctx.cfg.aggregation) {
                Ok(rep) => reps.push(rep),
                Err(RepresentError::ZeroProfile(_)) => dropped_zero += 1,
                Err(RepresentError::SampleAbsent(_)) => dropped_absent += 1,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    })?;

    let mut tsv = Vec::new();
    phylembed::represent::write_representations_tsv(&reps, emb.dim, &mut tsv)?;
    ctx.write_output("representations.tsv", &tsv)?;
    let sidecar = serde_json::json!({
        "aggregation": ctx.cfg.aggregation,
        "n_samples": reps.len(),
        "dropped": { "zero_profile": dropped_zero, "absent": dropped_absent },
    });
    ctx.write_output("representations.json", serde_json::to_string_pretty(&sidecar)?.as_bytes())?;
    ctx.set_summary(format!(
        "{} representations written ({dropped_zero} zero-profile, {dropped_absent} absent dropped)",
        reps.len()
    ));
    ctx.finish("represent")
}

fn render_gamma(gamma: phylembed::svm::GammaSpec) -> String {
    match gamma {
        phylembed::svm::GammaSpec::Scale => "scale".to_string(),
        phylembed::svm::GammaSpec::Value(v) => format!("{v:.6}"),
    }
}

fn render_report(report: &EvalReport) -> String {
    format!(
        "method {} dim {} top_k {} C {:.6} gamma {}\n\
         runs {} base_seed {}\n\
         F1      {:.4} ± {:.4}\n\
         ROC AUC {:.4} ± {:.4}\n\
         split sizes {}/{}/{}, dropped {}\n",
        report.config.method,
        report.config.dim,
        report.config.top_k,
        report.config.c,
        render_gamma(report.config.gamma),
        report.n_runs,
        report.base_seed,
        report.mean_f1,
        report.std_f1,
        report.mean_roc_auc,
        report.std_roc_auc,
        report.split_sizes.0,
        report.split_sizes.1,
        report.split_sizes.2,
        report.dropped_samples,
    )
}

pub fn cmd_train_eval(mut ctx: RunContext) -> Result<()> {
    let cache = ArtifactCache::from_env();
    let data = experiment_data(&mut ctx, &cache, true)?;
    let settings = runner_settings(&mut ctx);
    let space = search_space(&mut ctx);

    let (best, log) =
        ctx.time_stage("search", |_| Ok(search_hyperparameters(&data, &settings, &space)?))?;
    let mut log_bytes = Vec::new();
    write_trial_log(&log, &mut log_bytes)?;
    ctx.write_output("trials.jsonl", &log_bytes)?;

    let base_seed = ctx.seed("runs");
    let n_runs = ctx.cfg.eval.n_runs;
    let report =
        ctx.time_stage("repeated-eval", |_| Ok(repeated_eval(&data, &settings, &best, n_runs, base_seed)?))?;

    ctx.write_output("report.json", serde_json::to_string_pretty(&report)?.as_bytes())?;
    ctx.write_output("report.txt", render_report(&report).as_bytes())?;
    ctx.set_summary(format!(
        "best {} dim {} top_k {}: mean F1 {:.3}, mean ROC AUC {:.3} over {} runs",
        best.method, best.dim, best.top_k, report.mean_f1, report.mean_roc_auc, report.n_runs
    ));
    ctx.finish("train-eval")
}

pub fn cmd_sweep(mut ctx: RunContext) -> Result<()> {
    let cache = ArtifactCache::from_env();
    let data = experiment_data(&mut ctx, &cache, true)?;
    let settings = runner_settings(&mut ctx);
    let trial = trial_from_config(&ctx);
    let ks = ctx.cfg.eval.ks.clone();
    let base_seed = ctx.seed("runs");
    let n_runs = ctx.cfg.eval.n_runs;

    let curve = ctx.time_stage("sweep", |_| Ok(topk_sweep(&data, &settings, &trial, &ks, n_runs, base_seed)?))?;
    ctx.write_output("sweep.tsv", curve.to_tsv().as_bytes())?;
    let best = curve.argmax().expect("non-empty ks");
    let summary = format!("sweep max at k={} (mean ROC AUC {:.3})", best.k, best.mean_auc);
    println!("{summary}");
    ctx.set_summary(summary);
    ctx.finish("sweep")
}

pub fn cmd_compare_omics(mut ctx: RunContext) -> Result<()> {
    let cache = ArtifactCache::from_env();
    let data = experiment_data(&mut ctx, &cache, true)?;
    let settings = runner_settings(&mut ctx);
    let methods = if ctx.cfg.eval.compare_methods.is_empty() {
        vec![ctx.cfg.embed.method]
    } else {
        ctx.cfg.eval.compare_methods.clone()
    };
    let configs: Vec<TrialConfig> = methods
        .iter()
        .map(|&method| TrialConfig { method, ..trial_from_config(&ctx) })
        .collect();
    let base_seed = ctx.seed("runs");
    let n_runs = ctx.cfg.eval.n_runs;

    let comparison = ctx.time_stage("compare", |_| {
        Ok(compare_omic_levels(&data, &settings, &configs, n_runs, base_seed)?)
    })?;
    ctx.write_output("comparison.json", serde_json::to_string_pretty(&comparison)?.as_bytes())?;
    let table = comparison.render_table();
    ctx.write_output("comparison.txt", table.as_bytes())?;
    print!("{table}");

    let mut pairs = BTreeMap::new();
    for (m, (a, b)) in methods.iter().zip(comparison.mgx_only.iter().zip(&comparison.combined)) {
        pairs.insert(m.to_string(), format!("{:.3} -> {:.3}", a.mean_roc_auc, b.mean_roc_auc));
    }
    ctx.set_summary(format!("mean ROC AUC MGX-only -> MGX+MTX: {pairs:?}"));
    ctx.finish("compare-omics")
}
