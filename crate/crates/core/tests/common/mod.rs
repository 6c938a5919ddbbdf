//! Independent oracles shared by the integration tests. Nothing here calls
//! the routine it checks.
#![allow(dead_code)]

use multiplex_core::{Matrix, Partition, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let normal = rand_distr::StandardNormal;
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(normal))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let x = gaussian(rng, n, n);
    SymMatrix::symmetrize(&x + x.transpose())
}

/// Random 0/1 adjacency matrix with zero diagonal.
pub fn random_adjacency(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    a
}

/// Orthonormal `n x k` matrix by classical Gram-Schmidt on Gaussian columns.
pub fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Matrix {
    let mut q = gaussian(rng, n, k);
    for j in 0..k {
        for i in 0..j {
            let proj = q.column(i).dot(&q.column(j));
            let ci = q.column(i).clone_owned();
            q.column_mut(j).axpy(-proj, &ci, 1.0);
        }
        let norm = q.column(j).norm();
        q.column_mut(j).scale_mut(1.0 / norm);
    }
    q
}

pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Partition {
    Partition::new((0..n).map(|_| rng.random_range(0..k)).collect(), k).unwrap()
}

/// All permutations of `0..k` (Heap's algorithm).
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn heap(m: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if m <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..m {
            heap(m - 1, a, out);
            if m % 2 == 0 {
                a.swap(i, m - 1);
            } else {
                a.swap(0, m - 1);
            }
        }
    }
    let mut a: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    heap(k, &mut a, &mut out);
    out
}

/// Misclustering rate by enumerating every relabeling of `est`.
pub fn brute_force_misclustering(truth: &Partition, est: &Partition) -> f64 {
    let k = truth.k().max(est.k());
    let n = truth.n();
    let best = permutations(k)
        .into_iter()
        .map(|perm| {
            truth
                .labels()
                .iter()
                .zip(est.labels())
                .filter(|(&t, &e)| perm[e] != t)
                .count()
        })
        .min()
        .unwrap();
    best as f64 / n as f64
}

/// `sum_m ||A^(m) - P Lambda^(m) P^T||_F^2` written out entrywise.
pub fn loss_by_entries(layers: &[Matrix], p: &Matrix, lambdas: &[Matrix]) -> f64 {
    let (n, k) = p.shape();
    let mut total = 0.0;
    for (a, l) in layers.iter().zip(lambdas) {
        for i in 0..n {
            for j in 0..n {
                let mut fit = 0.0;
                for r in 0..k {
                    for s in 0..k {
                        fit += p[(i, r)] * l[(r, s)] * p[(j, s)];
                    }
                }
                total += (a[(i, j)] - fit).powi(2);
            }
        }
    }
    total
}
