//! Co-regularized spectral clustering: per-layer embeddings `U^(m)` pulled
//! toward a consensus embedding `U*`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::graph::{check_stack, mean_layer, AdjacencyTensor, SymMatrix};
use crate::spectral::{
    kmeans_rows, matrix_abs, spectral_norm, top_k_eigen_above, top_k_eigvectors, top_k_gram_eigvectors, Embedding, Mode, Partition,
};
use crate::{seed, Matrix};

/// Residual tolerance, relative to the matrix infinity norm, of the
/// warm-started per-layer eigensolves.
const EIGEN_TOL: f64 = 1e-12;
const EIGEN_SWEEPS: usize = 300;

#[derive(Debug, Clone)]
pub struct CoregState {
    pub us: Vec<Embedding>,
    pub ustar: Embedding,
    pub gammas: Vec<f64>,
    /// `sum_m [tr(U^(m)T A^(m) U^(m)) + gamma_m tr(U*T U^(m) U^(m)T U*)]`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every outer iteration of the winning start.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoregOptions {
    pub max_outer: usize,
    pub tol: f64,
    /// `Absolute` replaces every layer by its matrix absolute value
    /// `|A^(m)|`, so each `U^(m)` favors eigenvectors of large eigenvalue
    /// magnitude. Needed when some layers have heterophilic communities,
    /// whose community eigenvalues are negative.
    pub mode: Mode,
    /// Number of starting points. The first starts from the mean
    /// adjacency matrix, the others from uniformly chosen layers.
    pub restarts: usize,
    pub kmeans_restarts: usize,
    pub seed: u64,
}

impl Default for CoregOptions {
    fn default() -> Self {
        Self {
            max_outer: 100,
            tol: 1e-8,
            mode: Mode::Algebraic,
            restarts: 3,
            kmeans_restarts: 20,
            seed: 0,
        }
    }
}

/// `c * max_m ||A^(m)||_2` for every layer.
pub fn default_gammas<T: AdjacencyTensor + ?Sized>(g: &T, c: f64) -> Result<Vec<f64>> {
    check_stack(g)?;
    if !(c > 0.0) {
        return Err(invalid(format!("gamma multiplier {c} must be positive")));
    }
    let norms = g.layers().iter().map(spectral_norm).collect::<Result<Vec<_>>>()?;
    let max = norms.into_iter().fold(0.0, f64::max);
    Ok(vec![c * max; g.num_layers()])
}

/// Per-layer lower thresholds on `gamma_m` above which the consistency
/// guarantee for co-regularized clustering applies:
/// `sqrt(M) ||A^(m)||_2^2 / sqrt(||(2/M) sum_m A^(m)||_2 log(4n/eps))`.
pub fn gamma_threshold<T: AdjacencyTensor + ?Sized>(g: &T, eps: f64) -> Result<Vec<f64>> {
    let n = check_stack(g)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("confidence level {eps} must lie in (0, 1)")));
    }
    let m = g.num_layers() as f64;
    let mean_norm = spectral_norm(&mean_layer(g))?;
    let denom = (2.0 * mean_norm * (4.0 * n as f64 / eps).ln()).sqrt();
    if !(denom > 0.0) {
        return Err(Error::DegenerateInput("all layers are empty".into()));
    }
    g.layers()
        .iter()
        .map(|a| Ok(m.sqrt() * spectral_norm(a)?.powi(2) / denom))
        .collect()
}

/// Value of the co-regularized objective for given embeddings.
pub fn coreg_objective<T: AdjacencyTensor + ?Sized>(
    g: &T,
    us: &[Embedding],
    ustar: &Embedding,
    gammas: &[f64],
) -> Result<f64> {
    check_stack(g)?;
    if us.len() != g.num_layers() || gammas.len() != g.num_layers() {
        return Err(crate::error::mismatch("one embedding and one gamma per layer are required"));
    }
    Ok(objective(g.layers().iter(), us, ustar, gammas))
}

fn objective<'a>(
    layers: impl Iterator<Item = &'a SymMatrix>,
    us: &[Embedding],
    ustar: &Embedding,
    gammas: &[f64],
) -> f64 {
    layers
        .zip(us)
        .zip(gammas)
        .map(|((a, u), &gamma)| {
            let fit = (u.transpose() * a.as_matrix() * u.as_matrix()).trace();
            let agree = (ustar.transpose() * u.as_matrix()).norm_squared();
            fit + gamma * agree
        })
        .sum()
}

/// Alternating maximization of the co-regularized objective, best of
/// several starting points, then k-means on the rows of `U*`.
///
/// Under [`Mode::Absolute`] the objective and the reported value use
/// `|A^(m)|` in place of `A^(m)`.
pub fn coreg_fit<T: AdjacencyTensor + Sync + ?Sized>(
    g: &T,
    k: usize,
    gammas: &[f64],
    opts: &CoregOptions,
) -> Result<(CoregState, Partition)> {
    let n = check_stack(g)?;
    if k == 0 || k > n {
        return Err(invalid(format!("k = {k} must be in 1..={n}")));
    }
    if gammas.len() != g.num_layers() {
        return Err(invalid(format!("{} gammas for {} layers", gammas.len(), g.num_layers())));
    }
    if let Some(gm) = gammas.iter().find(|&&x| !(x > 0.0)) {
        return Err(invalid(format!("every gamma must be positive, got {gm}")));
    }
    if opts.restarts == 0 {
        return Err(invalid("coreg needs at least one starting point"));
    }

    let starts = (0..opts.restarts)
        .map(|r| {
            if r == 0 {
                top_k_eigvectors(&mean_layer(g), k, opts.mode)
            } else {
                let m = seed::rng(seed::derive(opts.seed, r as u64)).random_range(0..g.num_layers());
                top_k_eigvectors(&g.layers()[m], k, opts.mode)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    // each layer with a lower bound on its spectrum
    let effective: Vec<(SymMatrix, f64)> = match opts.mode {
        Mode::Algebraic => g
            .layers()
            .par_iter()
            .map(|a| Ok((a.clone(), -spectral_norm(a)?)))
            .collect::<Result<_>>()?,
        Mode::Absolute => g.layers().par_iter().map(|a| Ok((matrix_abs(a)?, 0.0))).collect::<Result<_>>()?,
    };
    let fits = starts
        .into_iter()
        .map(|u0| alternate(&effective, k, gammas, u0, opts))
        .collect::<Result<Vec<_>>>()?;
    let best = fits
        .into_iter()
        .reduce(|best, f| if f.objective > best.objective { f } else { best })
        .expect("at least one start");
    let labels = kmeans_rows(&best.ustar, k, opts.kmeans_restarts, seed::derive(opts.seed, u64::MAX))?;
    Ok((best, labels))
}

fn alternate(
    layers: &[(SymMatrix, f64)],
    k: usize,
    gammas: &[f64],
    mut ustar: Embedding,
    opts: &CoregOptions,
) -> Result<CoregState> {
    let n = ustar.n();
    let mut history = Vec::new();
    let mut us: Vec<Embedding> = Vec::new();
    let mut prev = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_outer {
        iterations += 1;
        let pull = ustar.projector();
        let warm: Vec<Matrix> = if us.is_empty() {
            vec![ustar.as_matrix().clone(); layers.len()]
        } else {
            us.iter().map(|u| u.as_matrix().clone()).collect()
        };
        us = layers
            .par_iter()
            .zip(gammas)
            .zip(&warm)
            .map(|((&(ref a, floor), &gamma), start)| {
                let shifted = SymMatrix::symmetrize(a.as_matrix() + gamma * &pull);
                Ok(top_k_eigen_above(&shifted, k, floor, start, EIGEN_TOL, EIGEN_SWEEPS)?.embedding)
            })
            .collect::<Result<Vec<_>>>()?;
        // sum_m gamma_m U^(m) U^(m)T = W W^T with W = [sqrt(gamma_m) U^(m)];
        // it is positive semidefinite, so algebraic and absolute orders agree
        let mut w = Matrix::zeros(n, k * us.len());
        for (m, (u, &gamma)) in us.iter().zip(gammas).enumerate() {
            w.columns_mut(m * k, k).copy_from(&(u.as_matrix() * gamma.sqrt()));
        }
        ustar = top_k_gram_eigvectors(&w, k)?;

        let value = objective(layers.iter().map(|(a, _)| a), &us, &ustar, gammas);
        history.push(value);
        let rel = (value - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
        prev = value;
        if rel < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(CoregState {
        us,
        ustar,
        gammas: gammas.to_vec(),
        objective: prev,
        iterations,
        converged,
        history,
    })
}
