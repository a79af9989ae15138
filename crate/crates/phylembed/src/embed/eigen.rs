//! Symmetric eigensolvers: cyclic Jacobi for dense matrices and a Lanczos
//! iteration with full reorthogonalization and deflation restarts for large
//! sparse operators.
#![allow(clippy::needless_range_loop)]

use crate::matrix::{dot, norm, Dense};
use crate::rng::Stream;
use rand::Rng;

use super::EmbedError;

/// Eigendecomposition of a dense symmetric matrix (row-major, n x n) by
/// cyclic Jacobi rotations. Returns eigenvalues ascending and the matching
/// eigenvectors as columns of a Dense matrix.
pub fn jacobi_eigh(n: usize, a: &mut [f64]) -> (Vec<f64>, Dense) {
    debug_assert_eq!(a.len(), n * n);
    let mut v = Dense::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    if n == 0 {
        return (Vec::new(), v);
    }
    let fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = (1e-14 * fro.max(1.0)).powi(2);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum();
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let app = a[p * n + p];
                let aqq = a[q * n + q];
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[p * n + i] = a[i * n + p];
                    a[i * n + q] = s * aip + c * aiq;
                    a[q * n + i] = a[i * n + q];
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Dense::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, col, v.get(i, src));
        }
    }
    (eigenvalues, vectors)
}

#[derive(Debug, Clone)]
pub struct IterativeOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        IterativeOptions { tolerance: 1e-10, max_iterations: 5000 }
    }
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(w, b);
        for (wi, bi) in w.iter_mut().zip(b) {
            *wi -= c * bi;
        }
    }
}

fn random_unit(n: usize, rng: &mut Stream) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nv = norm(&v);
    for x in &mut v {
        *x /= nv;
    }
    v
}

/// Largest `n_pairs` eigenpairs of a symmetric operator, by Lanczos with
/// full reorthogonalization and deflation.
///
/// One Krylov space resolves at most one vector per eigenspace, so exactly
/// one Ritz pair is accepted per restart: the top of the spectrum deflated
/// by everything accepted so far. A fresh random start follows each
/// acceptance (it re-seeds any remaining multiplicity copies); a stalled
/// run restarts warm from its best Ritz vector. Returns eigenvalues
/// descending.
pub fn lanczos_largest<F>(
    n: usize,
    apply: F,
    n_pairs: usize,
    opts: &IterativeOptions,
    rng: &mut Stream,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), EmbedError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n_pairs = n_pairs.min(n);
    let mut converged_vals: Vec<f64> = Vec::new();
    let mut converged_vecs: Vec<Vec<f64>> = Vec::new();
    let mut total_iters = 0usize;
    let mut warm_start: Option<Vec<f64>> = None;

    'restarts: while converged_vals.len() < n_pairs {
        if total_iters >= opts.max_iterations {
            return Err(EmbedError::NoConvergence { iterations: total_iters });
        }
        let room = n - converged_vals.len();
        let subspace_cap = room.min(100);

        let mut q = warm_start.take().unwrap_or_else(|| random_unit(n, rng));
        orthogonalize(&mut q, &converged_vecs);
        let nq = norm(&q);
        if nq < 1e-12 {
            // Deflation basis spans nearly everything reachable.
            return Err(EmbedError::NoConvergence { iterations: total_iters });
        }
        for x in &mut q {
            *x /= nq;
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(subspace_cap);
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![0.0; n];

        for j in 0..subspace_cap {
            total_iters += 1;
            apply(&q, &mut w);
            let alpha = dot(&w, &q);
            alphas.push(alpha);
            basis.push(q.clone());
            // Full reorthogonalization against the Krylov basis and the
            // deflated eigenvectors, twice for stability.
            for _ in 0..2 {
                orthogonalize(&mut w, &basis);
                orthogonalize(&mut w, &converged_vecs);
            }
            let beta = norm(&w);

            let last_step = j + 1 == subspace_cap || beta < 1e-13 || total_iters >= opts.max_iterations;
            let check = last_step || (j + 1).is_multiple_of(10);
            if check {
                let m = alphas.len();
                let mut t = vec![0.0; m * m];
                for i in 0..m {
                    t[i * m + i] = alphas[i];
                    if i + 1 < m {
                        t[i * m + i + 1] = betas[i];
                        t[(i + 1) * m + i] = betas[i];
                    }
                }
                let (tvals, tvecs) = jacobi_eigh(m, &mut t);
                let idx = m - 1;
                let theta = tvals[idx];
                let resid = if beta < 1e-13 { 0.0 } else { (beta * tvecs.get(m - 1, idx)).abs() };
                let ritz = |col: usize| -> Vec<f64> {
                    let mut y = vec![0.0; n];
                    for (i, b) in basis.iter().enumerate() {
                        let c = tvecs.get(i, col);
                        for (yi, bi) in y.iter_mut().zip(b) {
                            *yi += c * bi;
                        }
                    }
                    let ny = norm(&y);
                    if ny > 1e-12 {
                        for x in &mut y {
                            *x /= ny;
                        }
                    }
                    y
                };
                if resid <= opts.tolerance * theta.abs().max(1.0) {
                    converged_vals.push(theta);
                    converged_vecs.push(ritz(idx));
                    continue 'restarts;
                }
                if last_step {
                    warm_start = Some(ritz(idx));
                    continue 'restarts;
                }
            }

            betas.push(beta);
            let q_next: Vec<f64> = w.iter().map(|x| x / beta).collect();
            q = q_next;
        }
    }

    let mut order: Vec<usize> = (0..converged_vals.len()).collect();
    order.sort_by(|&i, &j| converged_vals[j].partial_cmp(&converged_vals[i]).unwrap());
    order.truncate(n_pairs);
    let vals = order.iter().map(|&i| converged_vals[i]).collect();
    let vecs = order.iter().map(|&i| converged_vecs[i].clone()).collect();
    Ok((vals, vecs))
}
