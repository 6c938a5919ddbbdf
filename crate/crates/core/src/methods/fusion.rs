//! Spectral clustering of aggregated matrices: the mean adjacency matrix
//! (early fusion), and the spectral kernel and module allegiance matrices
//! (late fusion of per-layer results).

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::graph::{check_stack, mean_layer, AdjacencyTensor, SymMatrix};
use crate::spectral::{kmeans_rows, spectral_clustering, top_k_eigen, top_k_eigvectors, Mode, Partition};
use crate::{seed, Matrix};

/// Result of clustering the mean adjacency matrix.
#[derive(Debug, Clone)]
pub struct MeanAdjacencyFit {
    pub partition: Partition,
    /// The `k` selected eigenvalues of the mean adjacency matrix.
    pub eigenvalues: Vec<f64>,
    /// Set when the `k`-th selected eigenvalue is numerically zero
    /// (below `1e-8 n` in magnitude), so the mean matrix carries fewer than
    /// `k` directions of community signal.
    pub rank_deficient: bool,
}

fn check_k<T: AdjacencyTensor + ?Sized>(g: &T, k: usize) -> Result<usize> {
    let n = check_stack(g)?;
    if k == 0 || k > n {
        return Err(invalid(format!("k = {k} must be in 1..={n}")));
    }
    Ok(n)
}

pub fn mean_adjacency_sc<T: AdjacencyTensor + ?Sized>(
    g: &T,
    k: usize,
    mode: Mode,
    kmeans_restarts: usize,
    seed: u64,
) -> Result<MeanAdjacencyFit> {
    let n = check_k(g, k)?;
    let top = top_k_eigen(&mean_layer(g), k, mode)?;
    let smallest = top.values.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    let partition = kmeans_rows(&top.embedding, k, kmeans_restarts, seed)?;
    Ok(MeanAdjacencyFit {
        partition,
        rank_deficient: smallest < 1e-8 * n as f64,
        eigenvalues: top.values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    SpectralKernel,
    ModuleAllegiance,
}

/// An `n x n` similarity matrix fused from per-layer results.
#[derive(Debug, Clone)]
pub struct FusionKernel {
    pub kernel: SymMatrix,
    pub kind: KernelKind,
}

/// `(1/M) sum_m U^(m) U^(m)T` for the given per-layer embeddings.
pub fn spectral_kernel<T: AdjacencyTensor + Sync + ?Sized>(g: &T, k: usize, mode: Mode) -> Result<FusionKernel> {
    let n = check_k(g, k)?;
    let projectors = g
        .layers()
        .par_iter()
        .map(|a| Ok(top_k_eigvectors(a, k, mode)?.projector()))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = Matrix::zeros(n, n);
    for p in &projectors {
        acc += p;
    }
    acc /= projectors.len() as f64;
    Ok(FusionKernel {
        kernel: SymMatrix::symmetrize(acc),
        kind: KernelKind::SpectralKernel,
    })
}

/// Fraction of layers in which each pair of nodes shares a label.
pub fn allegiance_matrix(partitions: &[Partition]) -> Result<SymMatrix> {
    let Some(first) = partitions.first() else {
        return Err(invalid("at least one partition is required"));
    };
    let n = first.n();
    if partitions.iter().any(|p| p.n() != n) {
        return Err(crate::error::mismatch("partitions cover different node counts"));
    }
    let mut acc = Matrix::zeros(n, n);
    for p in partitions {
        let labels = p.labels();
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    acc[(i, j)] += 1.0;
                }
            }
        }
    }
    acc /= partitions.len() as f64;
    Ok(SymMatrix::symmetrize(acc))
}

/// Module allegiance kernel built from spectral clustering of every layer.
pub fn module_allegiance<T: AdjacencyTensor + Sync + ?Sized>(
    g: &T,
    k: usize,
    mode: Mode,
    kmeans_restarts: usize,
    seed: u64,
) -> Result<FusionKernel> {
    check_k(g, k)?;
    let partitions = g
        .layers()
        .par_iter()
        .enumerate()
        .map(|(m, a)| spectral_clustering(a, k, mode, kmeans_restarts, seed::derive(seed, m as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FusionKernel {
        kernel: allegiance_matrix(&partitions)?,
        kind: KernelKind::ModuleAllegiance,
    })
}

/// Spectral clustering of the aggregate spectral kernel.
pub fn spectral_kernel_sc<T: AdjacencyTensor + Sync + ?Sized>(
    g: &T,
    k: usize,
    mode: Mode,
    kmeans_restarts: usize,
    seed: u64,
) -> Result<(FusionKernel, Partition)> {
    let kernel = spectral_kernel(g, k, mode)?;
    let labels = spectral_clustering(&kernel.kernel, k, Mode::Algebraic, kmeans_restarts, seed)?;
    Ok((kernel, labels))
}

/// Spectral clustering of the module allegiance matrix.
pub fn module_allegiance_sc<T: AdjacencyTensor + Sync + ?Sized>(
    g: &T,
    k: usize,
    mode: Mode,
    kmeans_restarts: usize,
    seed: u64,
) -> Result<(FusionKernel, Partition)> {
    let kernel = module_allegiance(g, k, mode, kmeans_restarts, seed::derive(seed, 1))?;
    let labels = spectral_clustering(&kernel.kernel, k, Mode::Algebraic, kmeans_restarts, seed)?;
    Ok((kernel, labels))
}
