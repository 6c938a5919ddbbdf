//! Numerical building blocks shared by every method: top-k symmetric
//! eigenvectors, orthonormalization and k-means on embedding rows.

mod eigen;
mod kmeans;

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Error, Result};
use crate::graph::SymMatrix;
use crate::Matrix;

pub use eigen::{
    matrix_abs, orthonormalize, spectral_norm, symmetric_eigen, top_k_eigen, top_k_eigen_above, top_k_eigen_from, top_k_eigvectors, top_k_gram_eigvectors,
    FullEigen, TopK,
};
pub use kmeans::{kmeans_rows, KMeans, KMeansFit};

const ORTHONORMAL_TOL: f64 = 1e-8;

/// Which eigenvalues count as "top" when building an embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Largest eigenvalues.
    #[default]
    Algebraic,
    /// Largest eigenvalues in magnitude; needed when some layers are
    /// heterophilic and their community eigenvalues are negative.
    Absolute,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Algebraic => "algebraic",
            Mode::Absolute => "absolute",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebraic" => Ok(Mode::Algebraic),
            "absolute" => Ok(Mode::Absolute),
            other => Err(invalid(format!("unknown mode `{other}` (expected algebraic or absolute)"))),
        }
    }
}

/// An `n x k` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Matrix);

impl Embedding {
    /// Wraps `u` after checking `||U^T U - I||_F <= 1e-8`.
    pub fn new(u: Matrix) -> Result<Self> {
        let err = orthonormality_error(&u);
        if err > ORTHONORMAL_TOL {
            return Err(invalid(format!("columns are not orthonormal (||U^T U - I||_F = {err:.3e})")));
        }
        Ok(Self(u))
    }

    pub(crate) fn new_unchecked(u: Matrix) -> Self {
        debug_assert!(orthonormality_error(&u) < 1e-6);
        Self(u)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn k(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    /// The orthogonal projector `U U^T`.
    pub fn projector(&self) -> Matrix {
        &self.0 * self.0.transpose()
    }
}

impl Deref for Embedding {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

pub fn orthonormality_error(u: &Matrix) -> f64 {
    let gram = u.transpose() * u;
    (gram - Matrix::identity(u.ncols(), u.ncols())).norm()
}

/// Community labels `0..k` for `n` nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(invalid(format!("label {l} of node {i} is not below k = {k}")));
        }
        Ok(Self { labels, k })
    }

    /// Uses `max label + 1` as the label count.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        Self { labels, k }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// The `n x k` 0/1 membership matrix `Z`.
    pub fn membership_matrix(&self) -> Matrix {
        let mut z = Matrix::zeros(self.labels.len(), self.k);
        for (i, &l) in self.labels.iter().enumerate() {
            z[(i, l)] = 1.0;
        }
        z
    }

    /// `Z (Z^T Z)^{-1/2}`, the orthonormal basis of the membership column
    /// space. Fails if a community is empty.
    pub fn normalized_membership(&self) -> Result<Embedding> {
        let sizes = self.sizes();
        if let Some(c) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::DegenerateInput(format!("community {c} is empty")));
        }
        let mut z = self.membership_matrix();
        for (c, &s) in sizes.iter().enumerate() {
            z.column_mut(c).scale_mut(1.0 / (s as f64).sqrt());
        }
        Ok(Embedding(z))
    }

    /// Applies a node permutation: node `i` of the result is node `perm[i]`
    /// of `self`.
    pub fn permute_nodes(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.labels.len() {
            return Err(mismatch("permutation length differs from partition size"));
        }
        Ok(Self {
            labels: perm.iter().map(|&p| self.labels[p]).collect(),
            k: self.k,
        })
    }
}

/// Spectral clustering: k-means on the rows of the top-k eigenvectors.
pub fn spectral_clustering(s: &SymMatrix, k: usize, mode: Mode, restarts: usize, seed: u64) -> Result<Partition> {
    let u = top_k_eigvectors(s, k, mode)?;
    kmeans_rows(&u, k, restarts, seed)
}
