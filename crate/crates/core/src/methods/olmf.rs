//! Orthogonal linked matrix factorization: `A^(m) ~ P Lambda^(m) P^T` with
//! one orthonormal `P` shared by all layers.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, mismatch, Result};
use crate::graph::{check_stack, mean_layer, AdjacencyTensor};
use crate::spectral::{kmeans_rows, orthonormalize, top_k_eigvectors, Embedding, Mode, Partition};
use crate::{seed, Matrix};

/// Fitted factors and optimizer diagnostics.
#[derive(Debug, Clone)]
pub struct OlmfFactors {
    pub p: Embedding,
    /// `P^T A^(m) P` at the returned `P`.
    pub lambdas: Vec<Matrix>,
    /// `sum_m ||P^T A^(m) P||_F^2`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted step of the winning restart,
    /// starting with its initial value.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlmfOptions {
    pub max_iter: usize,
    /// Relative objective change below which the ascent stops.
    pub tol: f64,
    /// Independent initializations; the best final objective wins. The
    /// first starts from the mean adjacency matrix, the others from
    /// uniformly chosen layers.
    pub restarts: usize,
    /// Curvature pairs kept for the quasi-Newton direction; 0 gives plain
    /// projected gradient ascent.
    pub memory: usize,
    /// Eigenvalue order used to build the initial `P` from a layer.
    pub mode: Mode,
    pub kmeans_restarts: usize,
    pub seed: u64,
}

impl Default for OlmfOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-9,
            restarts: 3,
            memory: 5,
            mode: Mode::Algebraic,
            kmeans_restarts: 20,
            seed: 0,
        }
    }
}

fn check_factor<T: AdjacencyTensor + ?Sized>(g: &T, p: &Matrix) -> Result<usize> {
    let n = check_stack(g)?;
    if p.nrows() != n {
        return Err(mismatch(format!("P has {} rows, layers have {n}", p.nrows())));
    }
    Ok(n)
}

/// `sum_m ||P^T A^(m) P||_F^2`, the quantity maximized over orthonormal `P`.
pub fn olmf_objective<T: AdjacencyTensor + ?Sized>(g: &T, p: &Matrix) -> Result<f64> {
    check_factor(g, p)?;
    Ok(g.layers().iter().map(|a| (p.transpose() * a.as_matrix() * p).norm_squared()).sum())
}

/// `sum_m ||A^(m) - P Lambda^(m) P^T||_F^2`, the factorization loss.
pub fn olmf_loss<T: AdjacencyTensor + ?Sized>(g: &T, p: &Matrix, lambdas: &[Matrix]) -> Result<f64> {
    check_lambdas(g, p, lambdas)?;
    Ok(g.layers()
        .iter()
        .zip(lambdas)
        .map(|(a, l)| (a.as_matrix() - p * l * p.transpose()).norm_squared())
        .sum())
}

fn check_lambdas<T: AdjacencyTensor + ?Sized>(g: &T, p: &Matrix, lambdas: &[Matrix]) -> Result<()> {
    check_factor(g, p)?;
    let k = p.ncols();
    if lambdas.len() != g.num_layers() {
        return Err(mismatch(format!("{} Lambda matrices for {} layers", lambdas.len(), g.num_layers())));
    }
    if let Some(l) = lambdas.iter().find(|l| l.shape() != (k, k)) {
        return Err(mismatch(format!("Lambda is {:?}, expected {k}x{k}", l.shape())));
    }
    Ok(())
}

/// Gradients of [`olmf_loss`] with respect to `P` and each `Lambda^(m)`,
/// treating every entry as a free variable:
///
/// * `dP = -4 sum_m (A^(m) - P Lambda^(m) P^T) P Lambda^(m)`
/// * `dLambda^(m) = -2 P^T (A^(m) - P Lambda^(m) P^T) P`
///
/// For orthonormal `P` and `Lambda^(m) = P^T A^(m) P` the first reduces to
/// `-4 sum_m (I - P P^T) A^(m) P Lambda^(m)` and the second vanishes.
/// Requires symmetric `Lambda^(m)`.
pub fn olmf_gradient<T: AdjacencyTensor + ?Sized>(
    g: &T,
    p: &Matrix,
    lambdas: &[Matrix],
) -> Result<(Matrix, Vec<Matrix>)> {
    check_lambdas(g, p, lambdas)?;
    let mut grad_p = Matrix::zeros(p.nrows(), p.ncols());
    let mut grad_l = Vec::with_capacity(lambdas.len());
    for (a, l) in g.layers().iter().zip(lambdas) {
        let resid = a.as_matrix() - p * l * p.transpose();
        let rp = &resid * p;
        grad_p -= 4.0 * &rp * l;
        grad_l.push(-2.0 * p.transpose() * rp);
    }
    Ok((grad_p, grad_l))
}

/// Maximizes `sum_m ||P^T A^(m) P||_F^2` over orthonormal `P` and clusters
/// the rows of the best `P`.
///
/// Each restart starts from the top-`k` eigenvectors of the mean adjacency
/// matrix or of a uniformly chosen layer and runs monotone Riemannian ascent: a quasi-Newton (or gradient)
/// direction in the tangent space, QR retraction, Armijo backtracking.
pub fn olmf_fit<T: AdjacencyTensor + Sync + ?Sized>(
    g: &T,
    k: usize,
    opts: &OlmfOptions,
) -> Result<(OlmfFactors, Partition)> {
    let n = check_stack(g)?;
    if k == 0 || k > n {
        return Err(invalid(format!("k = {k} must be in 1..={n}")));
    }
    if opts.restarts == 0 {
        return Err(invalid("OLMF needs at least one restart"));
    }
    let layers: Vec<&Matrix> = g.layers().iter().map(|l| l.as_matrix()).collect();
    let starts: Vec<Result<Embedding>> = (0..opts.restarts)
        .map(|r| {
            if r == 0 {
                return top_k_eigvectors(&mean_layer(g), k, opts.mode);
            }
            let m = seed::rng(seed::derive(opts.seed, r as u64)).random_range(0..layers.len());
            top_k_eigvectors(&g.layers()[m], k, opts.mode)
        })
        .collect();
    let fits: Vec<OlmfFactors> = starts
        .into_par_iter()
        .map(|p0| Ok(ascend(&layers, p0?.into_inner(), opts)))
        .collect::<Result<_>>()?;
    let best = fits
        .into_iter()
        .reduce(|best, f| if f.objective > best.objective { f } else { best })
        .expect("at least one restart");
    let labels = kmeans_rows(&best.p, k, opts.kmeans_restarts, seed::derive(opts.seed, u64::MAX))?;
    Ok((best, labels))
}

struct Eval {
    f: f64,
    lambdas: Vec<Matrix>,
    /// Riemannian gradient of the objective at `P`.
    xi: Matrix,
}

fn evaluate(layers: &[&Matrix], p: &Matrix) -> Eval {
    let mut f = 0.0;
    let mut euclid = Matrix::zeros(p.nrows(), p.ncols());
    let mut lambdas = Vec::with_capacity(layers.len());
    for a in layers {
        let ap = *a * p;
        let l = p.transpose() * &ap;
        f += l.norm_squared();
        euclid += 4.0 * ap * &l;
        lambdas.push(l);
    }
    // P^T (euclidean gradient) = 4 sum Lambda^2 is symmetric, so the
    // tangent projection is a plain (I - P P^T).
    let xi = &euclid - p * (p.transpose() * &euclid);
    Eval { f, lambdas, xi }
}

fn objective_only(layers: &[&Matrix], p: &Matrix) -> f64 {
    layers.iter().map(|a| (p.transpose() * (*a * p)).norm_squared()).sum()
}

fn dot(a: &Matrix, b: &Matrix) -> f64 {
    a.dot(b)
}

fn tangent(p: &Matrix, d: &Matrix) -> Matrix {
    let ptd = p.transpose() * d;
    let sym = (&ptd + ptd.transpose()) * 0.5;
    d - p * sym
}

/// Two-loop recursion for the minimization of `-F`; returns an ascent
/// direction for `F`.
fn quasi_newton(xi: &Matrix, pairs: &VecDeque<(Matrix, Matrix, f64)>) -> Matrix {
    let mut q = xi.clone();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q -= a * y;
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        q *= dot(s, y) / dot(y, y);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q += (a - b) * s;
    }
    q
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;

fn ascend(layers: &[&Matrix], p0: Matrix, opts: &OlmfOptions) -> OlmfFactors {
    let k = p0.ncols();
    let mut p = p0;
    let mut cur = evaluate(layers, &p);
    let mut history = vec![cur.f];
    let mut pairs: VecDeque<(Matrix, Matrix, f64)> = VecDeque::new();
    let mut last_step: Option<(Matrix, Matrix)> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let gnorm = cur.xi.norm();
        if gnorm <= f64::EPSILON * cur.f.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }

        let mut quasi = opts.memory > 0 && !pairs.is_empty();
        let mut dir = if quasi {
            tangent(&p, &quasi_newton(&cur.xi, &pairs))
        } else {
            cur.xi.clone()
        };
        let mut slope = dot(&cur.xi, &dir);
        if quasi && slope <= 0.0 {
            quasi = false;
            dir = cur.xi.clone();
            slope = gnorm * gnorm;
        }
        // quasi-Newton directions carry their own scale; gradient steps
        // start from the Barzilai-Borwein length
        let fallback = 0.1 * (k as f64).sqrt() / dir.norm();
        let mut t = match &last_step {
            _ if quasi => 1.0,
            Some((s, y)) if dot(s, y) > 0.0 => dot(s, s) / dot(s, y),
            _ => fallback,
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            if let Ok(cand) = orthonormalize(&(&p + t * &dir)) {
                let cand = cand.into_inner();
                let f = objective_only(layers, &cand);
                if f >= cur.f + ARMIJO * t * slope {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(next) = accepted else {
            // No step size improves the objective at working precision.
            converged = true;
            break;
        };

        iterations += 1;
        let new = evaluate(layers, &next);
        let s = &next - &p;
        // curvature pair for -F, whose gradient is -xi
        let y = &cur.xi - &new.xi;
        let sy = dot(&s, &y);
        if opts.memory > 0 && sy > 1e-12 * s.norm() * y.norm() {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s.clone(), y.clone(), 1.0 / sy));
        }
        last_step = Some((s, y));

        let rel = (new.f - cur.f).abs() / cur.f.abs().max(f64::MIN_POSITIVE);
        p = next;
        cur = new;
        history.push(cur.f);
        if rel < opts.tol {
            converged = true;
            break;
        }
    }

    OlmfFactors {
        p: Embedding::new_unchecked(p),
        lambdas: cur.lambdas,
        objective: cur.f,
        iterations,
        converged,
        history,
    }
}
