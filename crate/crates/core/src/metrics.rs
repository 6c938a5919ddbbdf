//! Partition comparison: misclustering rate, normalized mutual information
//! and distances between embedding subspaces.

use pathfinding::kuhn_munkres::kuhn_munkres;

use crate::error::{mismatch, Result};
use crate::spectral::{Embedding, Partition};
use crate::Matrix;

/// Counts of nodes per (label in `a`, label in `b`) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionTable {
    pub counts: Vec<Vec<usize>>,
    pub n: usize,
}

impl ConfusionTable {
    pub fn new(a: &Partition, b: &Partition) -> Result<Self> {
        if a.n() != b.n() {
            return Err(mismatch(format!("partitions have {} and {} nodes", a.n(), b.n())));
        }
        let mut counts = vec![vec![0usize; b.k()]; a.k()];
        for (&x, &y) in a.labels().iter().zip(b.labels()) {
            counts[x][y] += 1;
        }
        Ok(Self { counts, n: a.n() })
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        let cols = self.counts.first().map_or(0, Vec::len);
        (0..cols).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    /// Largest number of nodes that any one-to-one label matching agrees on.
    pub fn max_matched(&self) -> usize {
        let rows = self.counts.len();
        let cols = self.counts.first().map_or(0, Vec::len);
        let size = rows.max(cols);
        if size == 0 {
            return 0;
        }
        let weights = pathfinding::matrix::Matrix::from_fn(size, size, |(i, j)| {
            if i < rows && j < cols {
                self.counts[i][j] as i64
            } else {
                0
            }
        });
        let (total, _) = kuhn_munkres(&weights);
        total as usize
    }
}

/// Fraction of nodes whose labels disagree under the best relabeling of
/// `est`.
pub fn misclustering_rate(truth: &Partition, est: &Partition) -> Result<f64> {
    let table = ConfusionTable::new(truth, est)?;
    if table.n == 0 {
        return Ok(0.0);
    }
    Ok((table.n - table.max_matched()) as f64 / table.n as f64)
}

/// Mutual information over the geometric mean of the two entropies,
/// natural logarithms. When either partition has zero entropy the result is
/// 1 for identical groupings and 0 otherwise.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    let table = ConfusionTable::new(a, b)?;
    let n = table.n as f64;
    let entropy = |sums: &[usize]| -> f64 {
        sums.iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let rows = table.row_sums();
    let cols = table.col_sums();
    let (ha, hb) = (entropy(&rows), entropy(&cols));
    if ha <= 0.0 || hb <= 0.0 {
        return Ok(if same_grouping(a, b) { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

fn same_grouping(a: &Partition, b: &Partition) -> bool {
    let mut forward = vec![None; a.k()];
    let mut backward = vec![None; b.k()];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        match (forward[x], backward[y]) {
            (None, None) => {
                forward[x] = Some(y);
                backward[y] = Some(x);
            }
            (Some(fy), Some(bx)) if fy == y && bx == x => {}
            _ => return false,
        }
    }
    true
}

/// `||sin Theta(U, V)||_F`, computed as `||UU^T - VV^T||_F / sqrt(2)`.
pub fn subspace_distance(u: &Embedding, v: &Embedding) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(mismatch(format!("embeddings are {:?} and {:?}", u.shape(), v.shape())));
    }
    Ok((u.projector() - v.projector()).norm() / std::f64::consts::SQRT_2)
}

/// `min_O ||U - V O||_F` over orthogonal `k x k` matrices `O`.
///
/// The minimizer is the orthogonal Procrustes solution, which gives the
/// closed form `||U||_F^2 + ||V||_F^2 - 2 * (nuclear norm of V^T U)`.
pub fn aligned_distance(u: &Matrix, v: &Matrix) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(mismatch(format!("matrices are {:?} and {:?}", u.shape(), v.shape())));
    }
    let cross = v.transpose() * u;
    let nuclear: f64 = cross.singular_values().iter().sum();
    let sq = u.norm_squared() + v.norm_squared() - 2.0 * nuclear;
    Ok(sq.max(0.0).sqrt())
}

/// Upper bound on the misclustering rate of k-means applied to `u_hat`:
/// `(8 n_max / n) * min_O ||U_hat - Z (Z^T Z)^{-1/2} O||_F^2`.
pub fn misclustering_upper_bound(truth: &Partition, u_hat: &Embedding) -> Result<f64> {
    let z = truth.normalized_membership()?;
    let d = aligned_distance(u_hat, &z)?;
    let n_max = truth.sizes().into_iter().max().unwrap_or(0) as f64;
    Ok(8.0 * n_max / truth.n() as f64 * d * d)
}
