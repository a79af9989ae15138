//! Random-walk positional encoding: row i holds the probabilities that a
//! walk of length 1..=k starting at i returns to i, i.e. the diagonals of
//! RW, RW^2, ..., RW^k.
//!
//! Powers are never materialized; each node runs k sparse mat-vec passes
//! against its indicator vector, batched over nodes in parallel.

use rayon::prelude::*;

use crate::graph::Topology;
use crate::matrix::Dense;

use super::{EmbedMeta, EmbedMethod, EmbeddingMatrix};

pub fn compute_rwpe(topo: &Topology, k: usize) -> EmbeddingMatrix {
    let n = topo.n_nodes();
    let rw = topo.random_walk_matrix().matrix;

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|node| {
            let mut probs = vec![0.0; n];
            probs[node] = 1.0;
            let mut next = vec![0.0; n];
            let mut out = Vec::with_capacity(k);
            for _ in 0..k {
                rw.matvec_into(&probs, &mut next);
                std::mem::swap(&mut probs, &mut next);
                out.push(probs[node]);
            }
            out
        })
        .collect();

    let mut vectors = Dense::zeros(n, k);
    for (i, row) in rows.into_iter().enumerate() {
        vectors.row_mut(i).copy_from_slice(&row);
    }
    EmbeddingMatrix::new(EmbedMethod::Rwpe, k, vectors, EmbedMeta::Plain)
}
