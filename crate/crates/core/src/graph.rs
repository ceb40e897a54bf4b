//! Normalised graph Laplacian and spectral-domain filtering.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::chebyshev::ArmaChebFilter;
use crate::error::{DesignError, Result};

/// Dense eigendecomposition limit.
pub const MAX_NODES: usize = 2000;

/// Undirected weighted graph without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    /// Parallel edges are merged by summing their weights.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n > MAX_NODES {
            return Err(DesignError::InvalidGraph(format!("{n} nodes exceeds the limit of {MAX_NODES}")));
        }
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(DesignError::InvalidGraph(format!("edge ({i}, {j}) out of range for {n} nodes")));
            }
            if i == j {
                return Err(DesignError::InvalidGraph(format!("self-loop at node {i}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(DesignError::InvalidGraph(format!("edge ({i}, {j}) has weight {w}")));
            }
            *merged.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        }
        Ok(Self {
            n,
            edges: merged.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
        })
    }

    /// Parses `i j weight` lines (0-indexed). Blank lines and `#` comments are
    /// skipped. Without `n`, the node count is one past the largest index.
    pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || DesignError::InvalidGraph(format!("line {}: expected `i j weight`, got {line:?}", lineno + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let i: usize = fields[0].parse().map_err(|_| bad())?;
            let j: usize = fields[1].parse().map_err(|_| bad())?;
            let w: f64 = fields[2].parse().map_err(|_| bad())?;
            edges.push((i, j, w));
        }
        let inferred = edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
        Self::new(n.unwrap_or(inferred), edges)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }
}

/// `L = I - D^{-1/2} A D^{-1/2}`; isolated nodes get a zero diagonal.
pub fn normalized_laplacian(graph: &Graph) -> DMatrix<f64> {
    let n = graph.n;
    let mut degree = vec![0.0; n];
    for &(i, j, w) in &graph.edges {
        degree[i] += w;
        degree[j] += w;
    }
    let mut l = DMatrix::zeros(n, n);
    for (i, &d) in degree.iter().enumerate() {
        if d > 0.0 {
            l[(i, i)] = 1.0;
        }
    }
    for &(i, j, w) in &graph.edges {
        let v = -w / (degree[i] * degree[j]).sqrt();
        l[(i, j)] = v;
        l[(j, i)] = v;
    }
    l
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending, clamped to `[0, 2]`.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal columns matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn of_graph(graph: &Graph) -> Self {
        Self::of_laplacian(&normalized_laplacian(graph))
    }

    pub fn of_laplacian(l: &DMatrix<f64>) -> Self {
        let n = l.nrows();
        let eig = SymmetricEigen::new(l.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i].clamp(0.0, 2.0)));
        let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    /// `U diag(response(λ_i)) Uᵀ x`.
    pub fn filter_with(&self, signal: &[f64], response: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
        let n = self.eigenvalues.len();
        if signal.len() != n {
            return Err(DesignError::DimensionMismatch {
                expected: n,
                actual: signal.len(),
            });
        }
        let x = DVector::from_column_slice(signal);
        let mut coeffs = self.eigenvectors.tr_mul(&x);
        for i in 0..n {
            coeffs[i] *= response(self.eigenvalues[i])?;
        }
        Ok((&self.eigenvectors * coeffs).iter().copied().collect())
    }
}

/// Filters `signal` on `graph` with the ARMA response evaluated per
/// Laplacian eigenvalue.
pub fn apply_filter(filter: &ArmaChebFilter, graph: &Graph, signal: &[f64]) -> Result<Vec<f64>> {
    if signal.len() != graph.node_count() {
        return Err(DesignError::DimensionMismatch {
            expected: graph.node_count(),
            actual: signal.len(),
        });
    }
    SpectralDecomposition::of_graph(graph).filter_with(signal, |l| filter.freq_response(l))
}
