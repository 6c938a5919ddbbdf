//! Computable quantities behind the recovery guarantees: expected degrees,
//! population eigengaps, concentration checks for the sum and the sum of
//! squares of the noise matrices, and the misclustering upper bounds of
//! co-regularized spectral clustering, OLMF and the mean adjacency matrix.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::graph::{AdjacencyTensor, SymMatrix};
use crate::mlsbm::BlockModel;
use crate::spectral::{spectral_norm, symmetric_eigen};
use crate::{seed, Matrix};

/// Exponent slack in the squared-deviation bound and in the OLMF bound.
pub const LOG_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryQuantities {
    /// Maximum expected degree of each layer.
    pub delta_m: Vec<f64>,
    pub delta_bar: f64,
    /// Mean of the squared maximum expected degrees.
    pub delta_bar_prime: f64,
    /// Per-layer eigengap: the smallest magnitude among the `k` largest
    /// magnitude eigenvalues of the population layer, zero when the layer
    /// has rank below `k`.
    pub lambda_m: Vec<f64>,
    /// The same eigengap for the mean population matrix.
    pub lambda_bar: f64,
    pub lambda_bar_zero: bool,
    pub n_max: usize,
    /// `(1/M) sum (a_m - b_m)^2` with `p_m = a_m Delta_m / n`,
    /// `q_m = b_m Delta_m / n`. Four-parameter models only.
    pub f_ab: Option<f64>,
    /// `((1/M) sum (a_m - b_m))^2`. Four-parameter models only.
    pub g_ab: Option<f64>,
}

/// Eigenvalues below `1e-8 n` in magnitude count as zero.
fn zero_threshold(n: usize) -> f64 {
    1e-8 * n as f64
}

/// k-th largest eigenvalue magnitude, or 0 if it is numerically zero.
pub fn eigengap(s: &SymMatrix, k: usize) -> Result<f64> {
    let n = s.dim();
    if k == 0 || k > n {
        return Err(invalid(format!("k = {k} must be in 1..={n}")));
    }
    let mut mags: Vec<f64> = symmetric_eigen(s.as_matrix())?.values.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let gap = mags[k - 1];
    Ok(if gap < zero_threshold(n) { 0.0 } else { gap })
}

/// `(p, q)` per layer when every community has the same size and every block
/// matrix is constant on and off its diagonal.
fn four_param_probabilities(model: &BlockModel) -> Option<Vec<(f64, f64)>> {
    let sizes = model.membership().sizes();
    if sizes.iter().any(|&s| s != sizes[0]) {
        return None;
    }
    let k = model.k();
    model
        .blocks()
        .iter()
        .map(|b| {
            let p = b[(0, 0)];
            let q = if k > 1 { b[(0, 1)] } else { p };
            let uniform = (0..k).all(|i| (0..k).all(|j| b[(i, j)] == if i == j { p } else { q }));
            uniform.then_some((p, q))
        })
        .collect()
}

pub fn theory_quantities(model: &BlockModel) -> Result<TheoryQuantities> {
    let n = model.n();
    let k = model.k();
    let pop = model.population();
    let layers = pop.layers();
    let m = layers.len() as f64;

    let delta_m: Vec<f64> = layers
        .iter()
        .map(|a| a.row_iter().map(|r| r.sum()).fold(0.0, f64::max))
        .collect();
    let delta_bar = delta_m.iter().sum::<f64>() / m;
    let delta_bar_prime = delta_m.iter().map(|d| d * d).sum::<f64>() / m;
    let lambda_m = layers.par_iter().map(|a| eigengap(a, k)).collect::<Result<Vec<_>>>()?;
    let lambda_bar = eigengap(&crate::graph::mean_layer(&pop), k)?;

    let (f_ab, g_ab) = match four_param_probabilities(model) {
        Some(pq) if delta_m.iter().all(|&d| d > 0.0) => {
            let diffs: Vec<f64> = pq
                .iter()
                .zip(&delta_m)
                .map(|(&(p, q), &d)| (p - q) * n as f64 / d)
                .collect();
            let f = diffs.iter().map(|x| x * x).sum::<f64>() / m;
            let mean = diffs.iter().sum::<f64>() / m;
            (Some(f), Some(mean * mean))
        }
        _ => (None, None),
    };

    Ok(TheoryQuantities {
        delta_m,
        delta_bar,
        delta_bar_prime,
        lambda_m,
        lambda_bar,
        lambda_bar_zero: lambda_bar == 0.0,
        n_max: model.membership().sizes().into_iter().max().unwrap_or(0),
        f_ab,
        g_ab,
    })
}

/// Empirical spectral norms of a noise statistic over independent samples,
/// against a high-probability bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub norms: Vec<f64>,
    pub bound: f64,
    /// Fraction of samples with `norm <= bound`.
    pub coverage: f64,
    /// Whether the density condition under which the bound holds is met.
    pub precondition_met: bool,
}

fn report(norms: Vec<f64>, bound: f64, precondition_met: bool) -> DeviationReport {
    let within = norms.iter().filter(|&&v| v <= bound).count();
    let coverage = if norms.is_empty() { 1.0 } else { within as f64 / norms.len() as f64 };
    DeviationReport {
        norms,
        bound,
        coverage,
        precondition_met,
    }
}

fn max_degrees(model: &BlockModel) -> Vec<f64> {
    model
        .population()
        .layers()
        .iter()
        .map(|a| a.row_iter().map(|r| r.sum()).fold(0.0, f64::max))
        .collect()
}

/// Runs `stat` on `reps` samples of `model` in parallel, in rep order.
fn sampled<F>(model: &BlockModel, reps: usize, seed: u64, stat: F) -> Result<Vec<f64>>
where
    F: Fn(&[SymMatrix], &[SymMatrix]) -> Result<f64> + Sync,
{
    let pop = model.population();
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let g = model.sample(seed::derive(seed, r as u64));
            stat(g.layers(), pop.layers())
        })
        .collect()
}

/// `||(1/M) sum (A^(m) - E A^(m))||_2` against
/// `sqrt(4 Delta_bar log(2n/eps) / M)`, valid when
/// `M Delta_bar > (4/9) log(2n/eps)`.
pub fn mean_deviation_check(model: &BlockModel, reps: usize, eps: f64, seed: u64) -> Result<DeviationReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps = {eps} must be in (0, 1)")));
    }
    let n = model.n() as f64;
    let m = model.num_layers() as f64;
    let delta_bar = max_degrees(model).iter().sum::<f64>() / m;
    let log_term = (2.0 * n / eps).ln();
    let bound = (4.0 * delta_bar * log_term / m).sqrt();
    let norms = sampled(model, reps, seed, |a, pop| {
        let mut acc = Matrix::zeros(a[0].dim(), a[0].dim());
        for (x, e) in a.iter().zip(pop) {
            acc += x.as_matrix() - e.as_matrix();
        }
        spectral_norm(&SymMatrix::symmetrize(acc / m))
    })?;
    Ok(report(norms, bound, m * delta_bar > 4.0 / 9.0 * log_term))
}

/// `||(1/M) sum (A^(m) - E A^(m))^2||_2` against
/// `(log n)^((3 + LOG_SLACK)/2) (log 2M / sqrt M) sqrt(Delta_bar') + Delta_bar`.
pub fn squared_deviation_check(model: &BlockModel, reps: usize, seed: u64) -> Result<DeviationReport> {
    let n = model.n() as f64;
    let m = model.num_layers() as f64;
    let deltas = max_degrees(model);
    let delta_bar = deltas.iter().sum::<f64>() / m;
    let delta_bar_prime = deltas.iter().map(|d| d * d).sum::<f64>() / m;
    let bound =
        n.ln().powf((3.0 + LOG_SLACK) / 2.0) * (2.0 * m).ln() / m.sqrt() * delta_bar_prime.sqrt() + delta_bar;

    let log_term = (2.0 * m * n.powi(3)).ln();
    let tail = deltas
        .iter()
        .map(|&d| {
            let v = 4.0 * d * log_term;
            (-v / (2.0 * d + 2.0 * v.sqrt() / 3.0)).exp()
        })
        .sum::<f64>()
        / m;
    let precondition_met = tail <= (-log_term).exp();

    let norms = sampled(model, reps, seed, |a, pop| {
        let mut acc = Matrix::zeros(a[0].dim(), a[0].dim());
        for (x, e) in a.iter().zip(pop) {
            let d = x.as_matrix() - e.as_matrix();
            acc += &d * &d;
        }
        spectral_norm(&SymMatrix::symmetrize(acc / m))
    })?;
    Ok(report(norms, bound, precondition_met))
}

/// Misclustering upper bounds; `+inf` where the relevant eigengap is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisclusteringBounds {
    pub coreg_bound: f64,
    pub olmf_bound: f64,
    pub mean_adj_bound: f64,
    /// Set when some bound is infinite because its eigengap vanished.
    pub zero_gap: bool,
}

/// `num / den`, or `+inf` for a zero denominator.
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

pub fn misclustering_bounds(q: &TheoryQuantities, n: usize, m: usize, k: usize, eps: f64) -> Result<MisclusteringBounds> {
    if n == 0 || m == 0 || k == 0 {
        return Err(invalid("n, M and k must be positive"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps = {eps} must be in (0, 1)")));
    }
    if q.delta_m.len() != q.lambda_m.len() || q.delta_m.is_empty() {
        return Err(invalid("per-layer degrees and eigengaps must be nonempty and of equal length"));
    }
    let (nf, mf, kf) = (n as f64, m as f64, k as f64);
    let n_max = q.n_max as f64;
    let layers = q.lambda_m.len() as f64;

    let signal: f64 = q
        .lambda_m
        .iter()
        .zip(&q.delta_m)
        .filter(|(_, &d)| d > 0.0)
        .map(|(l, d)| l * l / d)
        .sum::<f64>()
        / layers;
    let coreg_bound = ratio(96.0 * n_max * kf, nf * signal) * (q.delta_bar * (4.0 * nf / eps).ln() / mf).sqrt();

    let mean_sq = q.lambda_m.iter().map(|l| l * l).sum::<f64>() / layers;
    let spread = q.delta_bar.sqrt()
        + q.delta_bar_prime.powf(0.25) * (2.0 * mf).ln().sqrt() * nf.ln().powf(2.0 + LOG_SLACK) / mf.powf(0.25);
    let olmf_bound = ratio(48.0 * n_max * kf * q.delta_bar_prime.sqrt() * spread, mean_sq * nf);

    let mean_adj_bound = ratio(
        256.0 * n_max * kf * q.delta_bar * (2.0 * nf / eps).ln(),
        q.lambda_bar * q.lambda_bar * nf * mf,
    );

    Ok(MisclusteringBounds {
        coreg_bound,
        olmf_bound,
        mean_adj_bound,
        zero_gap: [coreg_bound, olmf_bound, mean_adj_bound].iter().any(|b| b.is_infinite()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlsbm::FourParamSpec;

    fn four(p: Vec<f64>, q: Vec<f64>, k: usize, s: usize) -> BlockModel {
        BlockModel::four_param(&FourParamSpec::new(p, q, k, s).unwrap()).unwrap()
    }

    #[test]
    fn four_param_eigengaps() {
        let model = four(vec![0.1, 0.1], vec![0.05, 0.05], 3, 200);
        let q = theory_quantities(&model).unwrap();
        for l in &q.lambda_m {
            assert!((l - 10.0).abs() < 1e-8 * 10.0, "{l}");
        }
        assert!((q.lambda_bar - 10.0).abs() < 1e-7);
        assert_eq!(q.n_max, 200);
        // row sum: 200 * 0.1 + 400 * 0.05
        assert!((q.delta_bar - 40.0).abs() < 1e-9);
        assert!((q.delta_bar_prime - 1600.0).abs() < 1e-7);
    }

    #[test]
    fn opposite_signals_cancel_in_the_mean() {
        let model = four(vec![0.1, 0.05], vec![0.05, 0.1], 3, 40);
        let q = theory_quantities(&model).unwrap();
        assert_eq!(q.lambda_bar, 0.0);
        assert!(q.lambda_bar_zero);
        assert!(q.lambda_m.iter().all(|&l| l > 1.0));
        let b = misclustering_bounds(&q, 120, 2, 3, 0.05).unwrap();
        assert!(b.mean_adj_bound.is_infinite() && b.zero_gap);
        assert!(b.coreg_bound.is_finite() && b.olmf_bound.is_finite());
    }

    #[test]
    fn identical_layers_have_equal_f_and_g() {
        let model = four(vec![0.2; 3], vec![0.05; 3], 2, 30);
        let q = theory_quantities(&model).unwrap();
        let (f, g) = (q.f_ab.unwrap(), q.g_ab.unwrap());
        assert!((f - g).abs() < 1e-12 * f);
    }

    #[test]
    fn non_four_param_model_has_no_signal_functionals() {
        let membership = crate::spectral::Partition::from_labels(vec![0, 0, 0, 1, 1]);
        let b = Matrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.4]);
        let q = theory_quantities(&BlockModel::new(membership, vec![b]).unwrap()).unwrap();
        assert_eq!((q.f_ab, q.g_ab), (None, None));
    }

    #[test]
    fn mean_adjacency_bound_scales_inversely_with_layers() {
        let q = theory_quantities(&four(vec![0.3, 0.25], vec![0.1, 0.1], 3, 50)).unwrap();
        let one = misclustering_bounds(&q, 150, 4, 3, 0.05).unwrap();
        let two = misclustering_bounds(&q, 150, 8, 3, 0.05).unwrap();
        assert!((one.mean_adj_bound / two.mean_adj_bound - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coreg_bound_by_hand() {
        let q = theory_quantities(&four(vec![0.3, 0.2], vec![0.1, 0.05], 2, 50)).unwrap();
        let (n, m, k, eps) = (100.0, 2.0, 2.0, 0.05);
        // lambda = s (p - q); Delta = s p + s q
        let lam = [50.0 * 0.2, 50.0 * 0.15];
        let del = [50.0 * 0.4, 50.0 * 0.25];
        let dbar = (del[0] + del[1]) / 2.0;
        let signal = (lam[0] * lam[0] / del[0] + lam[1] * lam[1] / del[1]) / 2.0;
        let want = 96.0 * 50.0 * k * (dbar * (4.0 * n / eps as f64).ln() / m).sqrt() / (n * signal);
        let got = misclustering_bounds(&q, 100, 2, 2, eps).unwrap().coreg_bound;
        assert!((got - want).abs() < 1e-9 * want, "{got} {want}");
    }

    #[test]
    fn empty_population_gives_zero_deviation() {
        let membership = crate::spectral::Partition::from_labels((0..20).map(|i| i % 2).collect());
        let model = BlockModel::new(membership, vec![Matrix::zeros(2, 2); 2]).unwrap();
        let mean = mean_deviation_check(&model, 3, 0.05, 1).unwrap();
        assert!(mean.norms.iter().all(|&v| v == 0.0));
        assert_eq!(mean.coverage, 1.0);
        assert!(!mean.precondition_met);
        let sq = squared_deviation_check(&model, 3, 1).unwrap();
        assert!(sq.norms.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_layer_squared_deviation_by_direct_arithmetic() {
        let model = four(vec![0.3], vec![0.1], 2, 15);
        let rep = squared_deviation_check(&model, 1, 4).unwrap();
        let a = model.sample(seed::derive(4, 0));
        let pop = model.population();
        let d = a.layer(0).as_matrix() - pop.layer(0).as_matrix();
        let direct = symmetric_eigen(&(&d * &d)).unwrap().values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!((rep.norms[0] - direct).abs() < 1e-10 * direct);
    }
}
