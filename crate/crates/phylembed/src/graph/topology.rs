//! Undirected graph topology in CSR adjacency form, with the matrix
//! operators derived from it.

use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    /// L = D - A.
    Unnormalized,
    /// L_sym = I - D^{-1/2} A D^{-1/2}; isolated nodes get a zero diagonal.
    SymmetricNormalized,
}

/// Row-stochastic random-walk matrix plus the nodes whose rows are
/// all-zero because they have no neighbors.
#[derive(Debug, Clone)]
pub struct RandomWalk {
    pub matrix: CsrMatrix,
    pub isolated: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Topology {
    /// Build from undirected edges; self loops and duplicate edges are
    /// rejected by debug assertion (the callers construct clean lists).
    pub fn from_undirected_edges(n: usize, edges: &[(u32, u32)]) -> Topology {
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            debug_assert!(u != v, "self loop");
            debug_assert!((u as usize) < n && (v as usize) < n);
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut neighbors = vec![0u32; offsets[n]];
        let mut fill = offsets.clone();
        for &(u, v) in edges {
            neighbors[fill[u as usize]] = v;
            fill[u as usize] += 1;
            neighbors[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
            debug_assert!(
                neighbors[offsets[i]..offsets[i + 1]].windows(2).all(|w| w[0] < w[1]),
                "duplicate edge at node {i}"
            );
        }
        Topology { n, offsets, neighbors }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Component id per node, ids numbered by first-seen node order.
    pub fn connected_components(&self) -> (usize, Vec<u32>) {
        let mut comp = vec![u32::MAX; self.n];
        let mut n_comps = 0usize;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if comp[start] != u32::MAX {
                continue;
            }
            let id = n_comps as u32;
            n_comps += 1;
            comp[start] = id;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if comp[v as usize] == u32::MAX {
                        comp[v as usize] = id;
                        stack.push(v as usize);
                    }
                }
            }
        }
        (n_comps, comp)
    }

    pub fn laplacian(&self, kind: LaplacianKind) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.neighbors.len() + self.n);
        match kind {
            LaplacianKind::Unnormalized => {
                for i in 0..self.n {
                    triplets.push((i as u32, i as u32, self.degree(i) as f64));
                    for &j in self.neighbors(i) {
                        triplets.push((i as u32, j, -1.0));
                    }
                }
            }
            LaplacianKind::SymmetricNormalized => {
                for i in 0..self.n {
                    if self.degree(i) == 0 {
                        continue;
                    }
                    triplets.push((i as u32, i as u32, 1.0));
                    let di = (self.degree(i) as f64).sqrt();
                    for &j in self.neighbors(i) {
                        let dj = (self.degree(j as usize) as f64).sqrt();
                        triplets.push((i as u32, j, -1.0 / (di * dj)));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.n, self.n, triplets)
    }

    /// RW = D^{-1} A; every non-isolated row sums to 1.
    pub fn random_walk_matrix(&self) -> RandomWalk {
        let mut triplets = Vec::with_capacity(self.neighbors.len());
        let mut isolated = Vec::new();
        for i in 0..self.n {
            let d = self.degree(i);
            if d == 0 {
                isolated.push(i as u32);
                continue;
            }
            let w = 1.0 / d as f64;
            for &j in self.neighbors(i) {
                triplets.push((i as u32, j, w));
            }
        }
        RandomWalk { matrix: CsrMatrix::from_triplets(self.n, self.n, triplets), isolated }
    }
}
