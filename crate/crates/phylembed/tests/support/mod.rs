//! Test-only oracles, independent of the library code paths they check.
#![allow(dead_code, clippy::needless_range_loop)]

use phylembed::graph::Topology;
use phylembed::ingest::{generate_synthetic_dataset, SynthConfig, SynthDataset};

/// Dense symmetric eigendecomposition by Householder tridiagonalization
/// followed by implicit-shift QL — a different algorithm family from the
/// library's Jacobi/Lanczos solvers. Returns eigenvalues ascending and
/// eigenvectors as rows of the second result (vecs[j] pairs with vals[j]).
pub fn dense_eig_oracle(n: usize, matrix: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(matrix.len(), n * n);
    let mut z = matrix.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut z, &mut d, &mut e);
    tqli(n, &mut z, &mut d, &mut e);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vecs: Vec<Vec<f64>> = order.iter().map(|&col| (0..n).map(|row| z[row * n + col]).collect()).collect();
    (vals, vecs)
}

/// Householder reduction to tridiagonal form with accumulated transforms.
fn tred2(n: usize, z: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| z[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = z[i * n + l];
            } else {
                for k in 0..=l {
                    z[i * n + k] /= scale;
                    h += z[i * n + k] * z[i * n + k];
                }
                let f = z[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[i * n + l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    z[j * n + i] = z[i * n + j] / h;
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += z[j * n + k] * z[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g_acc += z[k * n + j] * z[i * n + k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * z[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = z[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[j * n + k] -= f * e[k] + g * z[i * n + k];
                    }
                }
            }
        } else {
            e[i] = z[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[i * n + k] * z[k * n + j];
                }
                for k in 0..i {
                    z[k * n + j] -= g * z[k * n + i];
                }
            }
        }
        d[i] = z[i * n + i];
        z[i * n + i] = 1.0;
        for j in 0..i {
            z[j * n + i] = 0.0;
            z[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL on a tridiagonal (d, e) with eigenvector rotation.
fn tqli(n: usize, z: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tqli failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// AUC by explicit pairwise comparison; exact rational arithmetic in the
/// numerator, ties counted one half.
pub fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut twice_wins: u64 = 0;
    let mut pairs: u64 = 0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                twice_wins += 2;
            } else if scores[i] == scores[j] {
                twice_wins += 1;
            }
        }
    }
    twice_wins as f64 / (2 * pairs) as f64
}

/// Exact Euclidean projection onto {0 <= x_i <= box_i} intersected with
/// {sum_i y_i x_i = 0}: clip(v - lambda * y) with lambda found by bisection
/// on the monotone constraint function.
fn project_feasible(v: &[f64], y: &[f64], boxes: &[f64]) -> Vec<f64> {
    let clip = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .zip(boxes)
            .map(|((&vi, &yi), &bi)| (vi - lambda * yi).clamp(0.0, bi))
            .collect()
    };
    let constraint = |lambda: f64| -> f64 { clip(lambda).iter().zip(y).map(|(&xi, &yi)| xi * yi).sum() };
    let bound = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + boxes.iter().fold(0.0_f64, |a, &b| a.max(b)) + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if constraint(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clip(0.5 * (lo + hi))
}

/// Maximize the SVM dual  sum(a) - a'Qa/2  over the feasible set by
/// projected gradient ascent with exact projections. Returns the objective
/// at the best iterate.
pub fn projected_gradient_dual_objective(
    kernel: &[Vec<f64>],
    y: &[f64],
    boxes: &[f64],
    iterations: usize,
) -> f64 {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i][j];
    let objective = |a: &[f64]| -> f64 {
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += a[i] * a[j] * q(i, j);
            }
        }
        a.iter().sum::<f64>() - 0.5 * quad
    };
    // Step 1/L with L bounded by the trace of Q (RBF diagonal is 1).
    let step = 1.0 / n as f64;
    let mut a = vec![0.0; n];
    let mut best = 0.0_f64;
    let mut stalled = 0usize;
    for _ in 0..iterations {
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let mut qa = 0.0;
            for j in 0..n {
                qa += q(i, j) * a[j];
            }
            grad[i] = 1.0 - qa;
        }
        let moved: Vec<f64> = a.iter().zip(&grad).map(|(ai, gi)| ai + step * gi).collect();
        a = project_feasible(&moved, y, boxes);
        let obj = objective(&a);
        if obj > best + 1e-13 * best.abs().max(1.0) {
            best = obj;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 500 {
                break;
            }
        }
    }
    best
}

/// A random phylogenetic graph of bounded size with matching data, seeded.
pub fn random_phylo_dataset(seed: u64, max_nodes: usize) -> SynthDataset {
    // Sizes derived from the seed keep the corpus varied across trials.
    let genes = 20 + (seed as usize * 13) % (max_nodes.saturating_sub(40).max(20));
    let species = (genes / 4).max(2);
    let genera = (species / 3).max(1);
    let cfg = SynthConfig {
        n_samples: 30,
        n_genes: genes,
        n_species: species,
        n_genera: genera,
        signal_genera: 1,
        seed,
        ..SynthConfig::default()
    };
    generate_synthetic_dataset(&cfg).unwrap()
}

pub fn topology_of(ds: &SynthDataset) -> Topology {
    phylembed::graph::HeteroGraph::build(&ds.taxonomies).unwrap().topology().clone()
}

/// Two 5-cliques joined by a 3-node path; nodes 0..5 and 5..10 are the
/// cliques.
pub fn barbell() -> Topology {
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

/// Dense row-stochastic random-walk matrix of a topology.
pub fn dense_rw_matrix(topo: &Topology) -> Vec<Vec<f64>> {
    let n = topo.n_nodes();
    let mut rw = vec![vec![0.0; n]; n];
    for i in 0..n {
        let deg = topo.degree(i);
        for &j in topo.neighbors(i) {
            rw[i][j as usize] = 1.0 / deg as f64;
        }
    }
    rw
}

pub fn dense_matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// Dense symmetric normalized Laplacian of a topology, row-major.
pub fn dense_sym_laplacian(topo: &Topology) -> Vec<f64> {
    let n = topo.n_nodes();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        let di = topo.degree(i);
        if di == 0 {
            continue;
        }
        l[i * n + i] = 1.0;
        for &j in topo.neighbors(i) {
            let dj = topo.degree(j as usize);
            l[i * n + j as usize] = -1.0 / ((di as f64).sqrt() * (dj as f64).sqrt());
        }
    }
    l
}
