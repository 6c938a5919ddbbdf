use rand::Rng;
use rayon::prelude::*;

use super::Partition;
use crate::error::{invalid, Result};
use crate::{seed, Matrix};

/// Lloyd's k-means with k-means++ seeding on the rows of a matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeans {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when the within-cluster sum of squares improves by less than
    /// this fraction of its previous value.
    pub tol: f64,
}

impl KMeans {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            restarts: 20,
            max_iter: 300,
            tol: 1e-9,
        }
    }

    pub fn restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    /// Best of `restarts` runs by within-cluster sum of squares. Restarts run
    /// in parallel; ties go to the lowest restart index, so the result only
    /// depends on `seed`.
    pub fn fit(&self, x: &Matrix, seed: u64) -> Result<KMeansFit> {
        let n = x.nrows();
        if self.k == 0 || self.k > n {
            return Err(invalid(format!("k = {} must be in 1..={n}", self.k)));
        }
        if self.restarts == 0 {
            return Err(invalid("k-means needs at least one restart"));
        }
        let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
        let fits: Vec<KMeansFit> = (0..self.restarts)
            .into_par_iter()
            .map(|r| self.single_run(&rows, seed::derive(seed, r as u64)))
            .collect();
        let best = fits
            .into_iter()
            .reduce(|best, f| if f.wcss < best.wcss { f } else { best })
            .expect("at least one restart");
        Ok(best)
    }

    fn single_run(&self, rows: &[Vec<f64>], seed: u64) -> KMeansFit {
        let n = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        let k = self.k;
        let mut rng = seed::rng(seed);

        let mut centers = plus_plus_seeds(rows, k, &mut rng);
        let mut labels = vec![0usize; n];
        let mut history = Vec::new();
        let mut prev = f64::INFINITY;

        for _ in 0..self.max_iter {
            let changed = assign(rows, &centers, &mut labels);
            repair_empty(rows, &centers, &mut labels, k);
            centers = means(rows, &labels, k, dim);
            let wcss = cost(rows, &centers, &labels);
            history.push(wcss);
            let converged = !changed || prev - wcss <= self.tol * prev;
            prev = wcss;
            if converged {
                break;
            }
        }

        KMeansFit {
            partition: Partition { labels, k },
            wcss: prev,
            history,
        }
    }
}

/// Outcome of a k-means run. `history` holds the objective after every
/// Lloyd iteration of the winning restart; it never increases.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub partition: Partition,
    pub wcss: f64,
    pub history: Vec<f64>,
}

/// k-means on the rows of `u` with default settings and the given number
/// of restarts.
pub fn kmeans_rows(u: &Matrix, k: usize, restarts: usize, seed: u64) -> Result<Partition> {
    Ok(KMeans::new(k).restarts(restarts).fit(u, seed)?.partition)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_seeds<R: Rng>(rows: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![rows[first].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &rows[first])).collect();

    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            if chosen[pick] || d2[pick] <= 0.0 {
                // rounding pushed us past the end; take the last positive weight
                pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            // fewer distinct rows than k: any unchosen row will do
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[next] = true;
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, &rows[next]));
        }
        centers.push(rows[next].clone());
    }
    centers
}

/// Nearest-center assignment, ties to the lowest center index. Returns
/// whether any label changed.
fn assign(rows: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize]) -> bool {
    let mut changed = false;
    for (row, label) in rows.iter().zip(labels.iter_mut()) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.iter().enumerate() {
            let d = sq_dist(row, center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        if *label != best {
            *label = best;
            changed = true;
        }
    }
    changed
}

/// Moves the point farthest from its center into each empty cluster,
/// never emptying the donor cluster.
fn repair_empty(rows: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize], k: usize) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, row) in rows.iter().enumerate() {
            let l = labels[i];
            if sizes[l] <= 1 {
                continue;
            }
            let d = sq_dist(row, &centers[l]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        if let Some(i) = far {
            sizes[labels[i]] -= 1;
            labels[i] = empty;
            sizes[empty] = 1;
        }
    }
}

fn means(rows: &[Vec<f64>], labels: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (row, &l) in rows.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(row) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|x| *x /= c as f64);
        }
    }
    sums
}

fn cost(rows: &[Vec<f64>], centers: &[Vec<f64>], labels: &[usize]) -> f64 {
    rows.iter().zip(labels).map(|(r, &l)| sq_dist(r, &centers[l])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn same_grouping(a: &[usize], b: &[usize]) -> bool {
        let n = a.len();
        (0..n).all(|i| (0..n).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    #[test]
    fn exact_points_are_grouped_with_zero_cost() {
        let pts = [[0.0, 0.0], [5.0, 1.0], [-3.0, 4.0]];
        let truth: Vec<usize> = (0..30).map(|i| (i * 7) % 3).collect();
        let x = Matrix::from_fn(30, 2, |i, j| pts[truth[i]][j]);
        let fit = KMeans::new(3).fit(&x, 1).unwrap();
        assert_eq!(fit.wcss, 0.0);
        assert!(same_grouping(fit.partition.labels(), &truth));
    }

    #[test]
    fn single_cluster() {
        let x = Matrix::from_fn(7, 3, |i, j| (i * j) as f64);
        let p = kmeans_rows(&x, 1, 3, 0).unwrap();
        assert!(p.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn argument_errors() {
        let x = Matrix::zeros(3, 2);
        assert!(kmeans_rows(&x, 4, 1, 0).is_err());
        assert!(kmeans_rows(&x, 0, 1, 0).is_err());
        assert!(kmeans_rows(&x, 2, 0, 0).is_err());
    }

    #[test]
    fn duplicate_rows_still_fill_all_clusters() {
        let x = Matrix::from_fn(6, 1, |i, _| if i < 5 { 1.0 } else { 2.0 });
        let p = kmeans_rows(&x, 3, 4, 9).unwrap();
        assert!(p.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn separated_gaussian_clouds() {
        for s in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + s);
            let truth: Vec<usize> = (0..40).map(|i| i % 2).collect();
            let x = Matrix::from_fn(40, 2, |i, j| {
                let centre = if truth[i] == 1 && j == 0 { 10.0 } else { 0.0 };
                let z: f64 = StandardNormal.sample(&mut rng);
                centre + z
            });
            let p = kmeans_rows(&x, 2, 5, s).unwrap();
            assert!(same_grouping(p.labels(), &truth), "seed {s}");
        }
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in 0..20 {
            let x = Matrix::from_fn(60, 3, |_, _| rng.random::<f64>());
            let fit = KMeans::new(4).restarts(1).fit(&x, s).unwrap();
            for w in fit.history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", fit.history);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Matrix::from_fn(50, 2, |_, _| rng.random::<f64>());
        let a = kmeans_rows(&x, 5, 8, 42).unwrap();
        let b = kmeans_rows(&x, 5, 8, 42).unwrap();
        assert_eq!(a, b);
    }
}
