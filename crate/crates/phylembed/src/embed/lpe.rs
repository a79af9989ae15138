//! Laplacian-eigenvector positional encoding.
//!
//! Node features are the eigenvectors of the symmetric normalized Laplacian
//! for the k smallest eigenvalues strictly above the zero tolerance. The
//! Laplacian is block-diagonal over connected components, so the solver runs
//! per component: dense Jacobi below the size threshold, Lanczos (on the
//! spectrally flipped operator 2I - L) above it.

use crate::graph::{LaplacianKind, Topology};
use crate::matrix::Dense;
use crate::rng::substream_indexed;

use super::eigen::{jacobi_eigh, lanczos_largest, IterativeOptions};
use super::{EmbedError, EmbedMeta, EmbedMethod, EmbeddingMatrix};

#[derive(Debug, Clone)]
pub struct LpeOptions {
    /// Components up to this many nodes use the dense solver.
    pub dense_threshold: usize,
    /// Residual tolerance of the iterative solver.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Eigenvalues at or below this are the trivial kernel and excluded.
    pub trivial_tolerance: f64,
}

impl Default for LpeOptions {
    fn default() -> Self {
        LpeOptions { dense_threshold: 2000, tolerance: 1e-10, max_iterations: 5000, trivial_tolerance: 1e-8 }
    }
}

pub fn compute_lpe(topo: &Topology, k: usize) -> Result<EmbeddingMatrix, EmbedError> {
    compute_lpe_with(topo, k, &LpeOptions::default())
}

pub fn compute_lpe_with(topo: &Topology, k: usize, opts: &LpeOptions) -> Result<EmbeddingMatrix, EmbedError> {
    let n = topo.n_nodes();
    let (n_comps, comp_of) = topo.connected_components();
    let available = n - n_comps;
    if k > available {
        return Err(EmbedError::KTooLarge { k, available });
    }
    if k == 0 {
        return Ok(EmbeddingMatrix::new(
            EmbedMethod::Lpe,
            0,
            Dense::zeros(n, 0),
            EmbedMeta::Lpe { eigenvalues: Vec::new(), degenerate_groups: Vec::new() },
        ));
    }

    let mut comp_nodes: Vec<Vec<u32>> = vec![Vec::new(); n_comps];
    for (node, &c) in comp_of.iter().enumerate() {
        comp_nodes[c as usize].push(node as u32);
    }

    // (eigenvalue, component, global eigenvector), k smallest per component.
    let mut candidates: Vec<(f64, usize, Vec<f64>)> = Vec::new();
    let lap = topo.laplacian(LaplacianKind::SymmetricNormalized);

    for (comp_id, nodes) in comp_nodes.iter().enumerate() {
        let m = nodes.len();
        if m == 1 {
            // Isolated node: only the trivial eigenvalue.
            continue;
        }
        let global_of = nodes;
        let mut local_of = vec![0u32; n];
        for (local, &g) in nodes.iter().enumerate() {
            local_of[g as usize] = local as u32;
        }

        let mut pairs: Vec<(f64, Vec<f64>)> = if m <= opts.dense_threshold {
            let mut a = vec![0.0; m * m];
            for (local, &g) in nodes.iter().enumerate() {
                let (cols, vals) = lap.row(g as usize);
                for (&c, &v) in cols.iter().zip(vals) {
                    a[local * m + local_of[c as usize] as usize] = v;
                }
            }
            let (vals, vecs) = jacobi_eigh(m, &mut a);
            vals.into_iter()
                .enumerate()
                .map(|(col, lambda)| (lambda, (0..m).map(|i| vecs.get(i, col)).collect()))
                .collect()
        } else {
            // Largest of B = 2I - L are the smallest of L. k + 1 pairs
            // cover the worst case of every selected column plus the
            // trivial one coming from this component.
            let apply = |x: &[f64], y: &mut [f64]| {
                for (local, &g) in global_of.iter().enumerate() {
                    let (cols, vals) = lap.row(g as usize);
                    let mut acc = 2.0 * x[local];
                    for (&c, &v) in cols.iter().zip(vals) {
                        acc -= v * x[local_of[c as usize] as usize];
                    }
                    y[local] = acc;
                }
            };
            let iter_opts = IterativeOptions { tolerance: opts.tolerance, max_iterations: opts.max_iterations };
            // Fixed internal seed: LPE takes no seed parameter and must be
            // reproducible across runs.
            let mut rng = substream_indexed(0x5eed_1a9e, "lpe-lanczos", comp_id as u64);
            let (bvals, bvecs) = lanczos_largest(m, apply, (k + 1).min(m), &iter_opts, &mut rng)?;
            bvals.into_iter().map(|b| 2.0 - b).zip(bvecs).collect()
        };

        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut kept = 0;
        for (lambda, local_vec) in pairs {
            if lambda <= opts.trivial_tolerance {
                continue;
            }
            if kept == k {
                break;
            }
            kept += 1;
            let mut global = vec![0.0; n];
            for (local, &g) in nodes.iter().enumerate() {
                global[g as usize] = local_vec[local];
            }
            candidates.push((lambda, comp_id, global));
        }
    }

    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    if candidates.len() < k {
        return Err(EmbedError::KTooLarge { k, available: candidates.len() });
    }
    candidates.truncate(k);

    let mut vectors = Dense::zeros(n, k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (col, (lambda, _, mut vec)) in candidates.into_iter().enumerate() {
        fix_sign(&mut vec);
        for (i, v) in vec.iter().enumerate() {
            vectors.set(i, col, *v);
        }
        eigenvalues.push(lambda);
    }

    let mut degenerate_groups = Vec::new();
    let mut start = 0;
    for j in 1..=k {
        if j == k || eigenvalues[j] - eigenvalues[j - 1] >= 1e-8 {
            if j - start > 1 {
                degenerate_groups.push((start, j));
            }
            start = j;
        }
    }

    Ok(EmbeddingMatrix::new(EmbedMethod::Lpe, k, vectors, EmbedMeta::Lpe { eigenvalues, degenerate_groups }))
}

/// Flip so the entry of largest absolute value (first index on ties) is
/// positive; resolves the eigenvector sign ambiguity reproducibly.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}
