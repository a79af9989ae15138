//! Node2Vec: skip-gram with negative sampling (SGNS) trained on
//! second-order biased random walks.
//!
//! Walk transitions from (prev, cur) to a candidate x are weighted
//! 1/return_param if x = prev, 1 if x neighbors prev, 1/inout_param
//! otherwise; the first step is uniform. Per-context alias tables are
//! memoized lazily, bounded by the directed edge count.
//!
//! Two training modes share walk generation (each walk draws from its own
//! seed-derived stream, so the walk set is identical in both): the
//! deterministic mode applies updates sequentially and is bit-reproducible;
//! the parallel mode applies them hogwild-style without locking.

use std::cell::UnsafeCell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::Topology;
use crate::matrix::Dense;
use crate::rng::{substream, substream_indexed, Stream};

use super::{EmbedError, EmbedMeta, EmbedMethod, EmbeddingMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct N2vConfig {
    pub dim: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Bias toward revisiting the previous node (the method's p).
    pub return_param: f64,
    /// Bias toward outward exploration (the method's q).
    pub inout_param: f64,
    pub window: usize,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for N2vConfig {
    fn default() -> Self {
        N2vConfig {
            dim: 64,
            walks_per_node: 10,
            walk_length: 80,
            return_param: 1.0,
            inout_param: 1.0,
            window: 10,
            negatives_per_positive: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 42,
        }
    }
}

impl N2vConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let fail = |m: &str| Err(EmbedError::InvalidConfig(m.to_string()));
        if self.dim == 0 {
            return fail("dim must be positive");
        }
        if self.walks_per_node == 0 {
            return fail("walks_per_node must be positive");
        }
        if self.walk_length < 2 {
            return fail("walk_length must be at least 2");
        }
        if self.window == 0 || self.window >= self.walk_length {
            return fail("window must satisfy 1 <= window < walk_length");
        }
        if self.negatives_per_positive == 0 {
            return fail("negatives_per_positive must be positive");
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return fail("learning_rate must be positive");
        }
        let bad_bias = |x: f64| !x.is_finite() || x <= 0.0;
        if bad_bias(self.return_param) || bad_bias(self.inout_param) {
            return fail("return_param and inout_param must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// Sequential updates, bit-reproducible given the seed.
    Deterministic,
    /// Hogwild updates on rayon's thread pool; walks are the same as in
    /// deterministic mode but update interleaving is not reproducible.
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node2VecStats {
    pub epoch_mean_loss: Vec<f64>,
    pub total_pairs: u64,
}

/// Vose alias table for O(1) weighted sampling.
struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    fn new(weights: &[f64]) -> AliasTable {
        let n = weights.len();
        debug_assert!(n > 0);
        let total: f64 = weights.iter().sum();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut prob = vec![0.0; n];
        let mut alias = vec![0u32; n];
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while !small.is_empty() && !large.is_empty() {
            let s = small.pop().unwrap();
            let l = *large.last().unwrap();
            prob[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
        }
        AliasTable { prob, alias }
    }

    #[inline]
    fn sample(&self, rng: &mut Stream) -> usize {
        let i = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

/// Walk generator with lazily memoized per-(prev, cur) alias tables.
struct WalkSampler<'a> {
    topo: &'a Topology,
    return_param: f64,
    inout_param: f64,
    cache: HashMap<(u32, u32), AliasTable>,
}

impl<'a> WalkSampler<'a> {
    fn new(topo: &'a Topology, return_param: f64, inout_param: f64) -> Self {
        WalkSampler { topo, return_param, inout_param, cache: HashMap::new() }
    }

    fn table(&mut self, prev: u32, cur: u32) -> &AliasTable {
        let topo = self.topo;
        let (rp, iq) = (self.return_param, self.inout_param);
        self.cache.entry((prev, cur)).or_insert_with(|| {
            let weights: Vec<f64> = topo
                .neighbors(cur as usize)
                .iter()
                .map(|&x| {
                    if x == prev {
                        1.0 / rp
                    } else if topo.has_edge(x as usize, prev as usize) {
                        1.0
                    } else {
                        1.0 / iq
                    }
                })
                .collect();
            AliasTable::new(&weights)
        })
    }

    fn walk(&mut self, start: u32, length: usize, rng: &mut Stream) -> Vec<u32> {
        let mut walk = Vec::with_capacity(length);
        walk.push(start);
        let nbrs = self.topo.neighbors(start as usize);
        if nbrs.is_empty() {
            return walk;
        }
        let mut cur = nbrs[rng.random_range(0..nbrs.len())];
        walk.push(cur);
        let mut prev = start;
        while walk.len() < length {
            let choice = self.table(prev, cur).sample(rng);
            let next = self.topo.neighbors(cur as usize)[choice];
            walk.push(next);
            prev = cur;
            cur = next;
        }
        walk
    }
}

/// One second-order biased walk of exactly `walk_length` nodes (shorter
/// only if the start node has no neighbors).
pub fn biased_random_walk(topo: &Topology, start: u32, cfg: &N2vConfig, rng: &mut Stream) -> Vec<u32> {
    WalkSampler::new(topo, cfg.return_param, cfg.inout_param).walk(start, cfg.walk_length, rng)
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x), stable at both tails. -ln sigma(x) = softplus(-x).
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Wrapper making the embedding tables shareable for hogwild updates.
/// Concurrent unsynchronized writes are racy on purpose; each write is a
/// plain f64 store and stale reads only perturb SGD noise.
struct HogwildTable {
    data: UnsafeCell<Vec<f64>>,
}

unsafe impl Sync for HogwildTable {}

impl HogwildTable {
    fn new(data: Vec<f64>) -> Self {
        HogwildTable { data: UnsafeCell::new(data) }
    }

    fn ptr(&self) -> *mut f64 {
        unsafe { (*self.data.get()).as_mut_ptr() }
    }

    fn into_inner(self) -> Vec<f64> {
        self.data.into_inner()
    }
}

struct RawParams {
    centers: *mut f64,
    contexts: *mut f64,
    dim: usize,
}

unsafe impl Send for RawParams {}
unsafe impl Sync for RawParams {}

/// SGNS update of one (center, context) pair plus its negatives; returns
/// the pair's loss. `grad` is a dim-sized scratch buffer.
///
/// Safety: callers must guarantee `center`, `context` and negatives are in
/// range; rows may be written concurrently in parallel mode.
unsafe fn sgns_update(
    params: &RawParams,
    center: usize,
    context: usize,
    negatives: &[u32],
    lr: f64,
    grad: &mut [f64],
) -> f64 {
    let dim = params.dim;
    let u = std::slice::from_raw_parts_mut(params.centers.add(center * dim), dim);
    grad.fill(0.0);
    let mut loss = 0.0;

    {
        let v = std::slice::from_raw_parts_mut(params.contexts.add(context * dim), dim);
        let s = sigmoid(crate::matrix::dot(u, v));
        let g = lr * (1.0 - s);
        loss += softplus(-crate::matrix::dot(u, v));
        for d in 0..dim {
            grad[d] += g * v[d];
            v[d] += g * u[d];
        }
    }
    for &neg in negatives {
        // Drawing the positive context as its own negative would cancel
        // the update; skip it like word2vec does.
        if neg as usize == context {
            continue;
        }
        let v = std::slice::from_raw_parts_mut(params.contexts.add(neg as usize * dim), dim);
        let dot_uv = crate::matrix::dot(u, v);
        let s = sigmoid(dot_uv);
        let g = -lr * s;
        loss += softplus(dot_uv);
        for d in 0..dim {
            grad[d] += g * v[d];
            v[d] += g * u[d];
        }
    }
    for d in 0..dim {
        u[d] += grad[d];
    }
    loss
}

/// Context positions of `center` inside a walk of length `len`.
#[inline]
fn window_bounds(center: usize, len: usize, window: usize) -> (usize, usize) {
    (center.saturating_sub(window), (center + window).min(len - 1))
}

fn pairs_in_walk(len: usize, window: usize) -> u64 {
    let mut pairs = 0u64;
    for c in 0..len {
        let (lo, hi) = window_bounds(c, len, window);
        pairs += (hi - lo) as u64;
    }
    pairs
}

pub fn train_node2vec(topo: &Topology, cfg: &N2vConfig, mode: TrainMode) -> Result<EmbeddingMatrix, EmbedError> {
    train_node2vec_detailed(topo, cfg, mode).map(|(emb, _)| emb)
}

pub fn train_node2vec_detailed(
    topo: &Topology,
    cfg: &N2vConfig,
    mode: TrainMode,
) -> Result<(EmbeddingMatrix, Node2VecStats), EmbedError> {
    cfg.validate()?;
    let n = topo.n_nodes();
    let dim = cfg.dim;

    // Center vectors uniform in [-0.5/dim, 0.5/dim], context vectors zero.
    let mut init_rng = substream(cfg.seed, "n2v-init");
    let bound = 0.5 / dim as f64;
    let centers_vec: Vec<f64> = (0..n * dim).map(|_| init_rng.random_range(-bound..bound)).collect();

    if cfg.epochs == 0 {
        let emb = EmbeddingMatrix::new(
            EmbedMethod::N2v,
            dim,
            Dense::from_vec(n, dim, centers_vec),
            EmbedMeta::N2v { epoch_mean_loss: Vec::new() },
        );
        return Ok((emb, Node2VecStats { epoch_mean_loss: Vec::new(), total_pairs: 0 }));
    }

    let centers = HogwildTable::new(centers_vec);
    let contexts = HogwildTable::new(vec![0.0; n * dim]);
    let params = RawParams { centers: centers.ptr(), contexts: contexts.ptr(), dim };

    let walks_per_epoch = n * cfg.walks_per_node;
    let pairs_per_walk = pairs_in_walk(cfg.walk_length, cfg.window);
    let total_updates = cfg.epochs as u64 * walks_per_epoch as u64 * pairs_per_walk;
    let lr0 = cfg.learning_rate;
    let lr_floor = 1e-4 * lr0;
    let lr_at = |update: u64| -> f64 {
        let progress = update as f64 / total_updates.max(1) as f64;
        (lr0 * (1.0 - progress)).max(lr_floor)
    };

    let mut epoch_mean_loss = Vec::with_capacity(cfg.epochs);
    let mut total_pairs = 0u64;
    let update_counter = AtomicU64::new(0);

    for epoch in 0..cfg.epochs {
        // Walk generation: one stream per walk keyed by its global index,
        // identical in both modes.
        let walk_index = |idx: usize| (epoch * walks_per_epoch + idx) as u64;
        let walks: Vec<Vec<u32>> = (0..walks_per_epoch)
            .into_par_iter()
            .map_init(
                || WalkSampler::new(topo, cfg.return_param, cfg.inout_param),
                |sampler, idx| {
                    let node = (idx / cfg.walks_per_node) as u32;
                    let mut rng = substream_indexed(cfg.seed, "n2v-walk", walk_index(idx));
                    sampler.walk(node, cfg.walk_length, &mut rng)
                },
            )
            .collect();

        // Negative-sampling distribution: unigram^(3/4) over this epoch's
        // visit counts.
        let mut counts = vec![0u64; n];
        for walk in &walks {
            for &node in walk {
                counts[node as usize] += 1;
            }
        }
        let visited: Vec<u32> = (0..n as u32).filter(|&i| counts[i as usize] > 0).collect();
        let weights: Vec<f64> = visited.iter().map(|&i| (counts[i as usize] as f64).powf(0.75)).collect();
        let neg_table = AliasTable::new(&weights);

        let train_walk = |rng: &mut Stream, grad: &mut Vec<f64>, walk: &[u32]| -> (f64, u64) {
            let mut loss = 0.0;
            let mut pairs = 0u64;
            for c in 0..walk.len() {
                let (lo, hi) = window_bounds(c, walk.len(), cfg.window);
                for t in lo..=hi {
                    if t == c {
                        continue;
                    }
                    let update = update_counter.fetch_add(1, Ordering::Relaxed);
                    let lr = lr_at(update);
                    let negatives: Vec<u32> = (0..cfg.negatives_per_positive)
                        .map(|_| visited[neg_table.sample(rng)])
                        .collect();
                    loss += unsafe {
                        sgns_update(&params, walk[c] as usize, walk[t] as usize, &negatives, lr, grad)
                    };
                    pairs += 1;
                }
            }
            (loss, pairs)
        };

        let (epoch_loss, epoch_pairs) = match mode {
            TrainMode::Deterministic => {
                let mut rng = substream_indexed(cfg.seed, "n2v-train", epoch as u64);
                let mut grad = vec![0.0; dim];
                let mut acc = (0.0, 0u64);
                for walk in &walks {
                    let (l, p) = train_walk(&mut rng, &mut grad, walk);
                    acc.0 += l;
                    acc.1 += p;
                }
                acc
            }
            TrainMode::Parallel => walks
                .par_iter()
                .enumerate()
                .map_init(
                    || vec![0.0; dim],
                    |grad, (idx, walk)| {
                        let mut rng = substream_indexed(cfg.seed, "n2v-train-walk", walk_index(idx));
                        train_walk(&mut rng, grad, walk)
                    },
                )
                .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1)),
        };

        let mean = if epoch_pairs > 0 { epoch_loss / epoch_pairs as f64 } else { 0.0 };
        if !mean.is_finite() {
            return Err(EmbedError::NonFiniteLoss {
                epoch,
                learning_rate: lr_at(update_counter.load(Ordering::Relaxed)),
            });
        }
        epoch_mean_loss.push(mean);
        total_pairs += epoch_pairs;
    }

    let emb = EmbeddingMatrix::new(
        EmbedMethod::N2v,
        dim,
        Dense::from_vec(n, dim, centers.into_inner()),
        EmbedMeta::N2v { epoch_mean_loss: epoch_mean_loss.clone() },
    );
    Ok((emb, Node2VecStats { epoch_mean_loss, total_pairs }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn single_edge() -> Topology {
        Topology::from_undirected_edges(2, &[(0, 1)])
    }

    /// Two 5-cliques joined by a 3-node path: 0..5 and 5..10 are the
    /// cliques, 10..13 the bridge.
    pub(crate) fn barbell() -> Topology {
        let mut edges = Vec::new();
        for i in 0..5u32 {
            for j in (i + 1)..5 {
                edges.push((i, j));
                edges.push((i + 5, j + 5));
            }
        }
        edges.extend_from_slice(&[(0, 10), (10, 11), (11, 12), (12, 5)]);
        Topology::from_undirected_edges(13, &edges)
    }

    #[test]
    fn walk_on_single_edge_alternates() {
        let topo = single_edge();
        let cfg = N2vConfig { walk_length: 9, ..Default::default() };
        let walk = biased_random_walk(&topo, 0, &cfg, &mut substream(1, "walk"));
        assert_eq!(walk, vec![0, 1, 0, 1, 0, 1, 0, 1, 0]);
    }

    #[test]
    fn path_bias_prefers_return_when_p_small() {
        // Path a(0) - b(1) - c(2): from (prev=0, cur=1) with p=0.25, q=4
        // the return probability is (1/0.25)/(1/0.25 + 1/4) = 16/17.
        let topo = Topology::from_undirected_edges(3, &[(0, 1), (1, 2)]);
        let mut sampler = WalkSampler::new(&topo, 0.25, 4.0);
        let mut rng = substream(2, "bias");
        let trials = 40_000;
        let mut returns = 0usize;
        for _ in 0..trials {
            let choice = sampler.table(0, 1).sample(&mut rng);
            if topo.neighbors(1)[choice] == 0 {
                returns += 1;
            }
        }
        let expected = 16.0 / 17.0;
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        let observed = returns as f64 / trials as f64;
        assert!((observed - expected).abs() < 3.0 * sigma, "observed {observed}, expected {expected}");
    }

    #[test]
    fn unit_bias_matches_uniform_walk() {
        // p = q = 1: next-step frequencies from a fixed context are uniform
        // over neighbors (within 3 sigma).
        let topo = barbell();
        let mut sampler = WalkSampler::new(&topo, 1.0, 1.0);
        let mut rng = substream(3, "uniform");
        let deg = topo.degree(1);
        let trials = 50_000;
        let mut hist = vec![0usize; deg];
        for _ in 0..trials {
            hist[sampler.table(0, 1).sample(&mut rng)] += 1;
        }
        let expected = trials as f64 / deg as f64;
        let sigma = (trials as f64 * (1.0 / deg as f64) * (1.0 - 1.0 / deg as f64)).sqrt();
        for (i, &h) in hist.iter().enumerate() {
            assert!((h as f64 - expected).abs() < 3.0 * sigma, "neighbor {i}: {h} vs {expected}");
        }
    }

    #[test]
    fn training_is_deterministic_given_seed() {
        let topo = barbell();
        let cfg = N2vConfig {
            dim: 8,
            walks_per_node: 4,
            walk_length: 10,
            window: 3,
            epochs: 2,
            seed: 3,
            ..Default::default()
        };
        let a = train_node2vec(&topo, &cfg, TrainMode::Deterministic).unwrap();
        let b = train_node2vec(&topo, &cfg, TrainMode::Deterministic).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let topo = single_edge();
        let cfg = N2vConfig { dim: 4, epochs: 0, seed: 9, ..Default::default() };
        let emb = train_node2vec(&topo, &cfg, TrainMode::Deterministic).unwrap();
        let bound = 0.5 / 4.0;
        for i in 0..2 {
            for &v in emb.row(i) {
                assert!(v >= -bound && v < bound);
            }
        }
        let again = train_node2vec(&topo, &cfg, TrainMode::Deterministic).unwrap();
        assert_eq!(emb, again);
    }

    #[test]
    fn barbell_separates_cliques_and_loss_descends() {
        let topo = barbell();
        let cfg = N2vConfig {
            dim: 16,
            walks_per_node: 10,
            walk_length: 20,
            window: 5,
            epochs: 5,
            learning_rate: 0.05,
            seed: 11,
            ..Default::default()
        };
        let (emb, stats) = train_node2vec_detailed(&topo, &cfg, TrainMode::Deterministic).unwrap();
        let cosine = |a: &[f64], b: &[f64]| {
            crate::matrix::dot(a, b) / (crate::matrix::norm(a) * crate::matrix::norm(b))
        };
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        for i in 0..5usize {
            for j in (i + 1)..5 {
                intra.push(cosine(emb.row(i), emb.row(j)));
                intra.push(cosine(emb.row(i + 5), emb.row(j + 5)));
            }
            for j in 5..10 {
                inter.push(cosine(emb.row(i), emb.row(j)));
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&intra) > mean(&inter),
            "intra {} should exceed inter {}",
            mean(&intra),
            mean(&inter)
        );
        let losses = &stats.epoch_mean_loss;
        assert_eq!(losses.len(), 5);
        assert!(losses[4] < losses[0], "final loss {} not below first {}", losses[4], losses[0]);
    }

    #[test]
    fn parallel_mode_trains_to_similar_quality() {
        let topo = barbell();
        let cfg = N2vConfig {
            dim: 16,
            walks_per_node: 10,
            walk_length: 20,
            window: 5,
            epochs: 5,
            learning_rate: 0.05,
            seed: 11,
            ..Default::default()
        };
        let (emb, stats) = train_node2vec_detailed(&topo, &cfg, TrainMode::Parallel).unwrap();
        assert!(emb.is_finite());
        assert!(stats.epoch_mean_loss.iter().all(|l| l.is_finite()));
        assert!(stats.epoch_mean_loss[4] < stats.epoch_mean_loss[0]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let topo = single_edge();
        let bad = N2vConfig { window: 10, walk_length: 5, ..Default::default() };
        assert!(matches!(
            train_node2vec(&topo, &bad, TrainMode::Deterministic),
            Err(EmbedError::InvalidConfig(_))
        ));
        let bad = N2vConfig { walk_length: 1, ..Default::default() };
        assert!(train_node2vec(&topo, &bad, TrainMode::Deterministic).is_err());
    }
}
