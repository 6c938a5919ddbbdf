use faer::Side;

use super::{Embedding, Mode};
use crate::error::{invalid, Error, Result};
use crate::graph::SymMatrix;
use crate::Matrix;

/// Full eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct FullEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Dense symmetric eigendecomposition.
///
/// Backed by faer built without its thread pool, so results are
/// bit-identical whatever the caller's parallelism.
pub fn symmetric_eigen(s: &Matrix) -> Result<FullEigen> {
    let n = s.nrows();
    if n == 0 {
        return Ok(FullEigen {
            values: Vec::new(),
            vectors: Matrix::zeros(0, 0),
        });
    }
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| s[(i, j)]);
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::DegenerateInput(format!("eigendecomposition failed: {e:?}")))?;
    let vals = evd.S().column_vector();
    let values: Vec<f64> = (0..n).map(|i| vals[i]).collect();
    let u = evd.U();
    let vectors = Matrix::from_fn(n, n, |i, j| u[(i, j)]);
    Ok(FullEigen { values, vectors })
}

/// Selected eigenpairs: `values[j]` belongs to column `j` of `embedding`.
#[derive(Debug, Clone)]
pub struct TopK {
    pub embedding: Embedding,
    pub values: Vec<f64>,
}

/// Eigenvectors of the `k` largest eigenvalues of `s` under `mode`.
///
/// Ties keep the ascending order of the underlying decomposition. Each
/// column is signed so that its largest-magnitude entry is positive.
///
/// The matrix is divided by its largest entry magnitude before the
/// decomposition, so `c * s` selects bit-identical vectors for every
/// `c > 0`, including the arbitrary basis of a degenerate eigenspace.
pub fn top_k_eigen(s: &SymMatrix, k: usize, mode: Mode) -> Result<TopK> {
    let n = s.dim();
    if k > n {
        return Err(invalid(format!("k = {k} exceeds matrix size {n}")));
    }
    let scale = s.as_matrix().amax();
    let mut full = if scale > 0.0 {
        symmetric_eigen(&(s.as_matrix() / scale))?
    } else {
        symmetric_eigen(s.as_matrix())?
    };
    if scale > 0.0 {
        full.values.iter_mut().for_each(|v| *v *= scale);
    }
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort: equal keys keep ascending decomposition index
    match mode {
        Mode::Algebraic => order.sort_by(|&a, &b| full.values[b].total_cmp(&full.values[a])),
        Mode::Absolute => order.sort_by(|&a, &b| full.values[b].abs().total_cmp(&full.values[a].abs())),
    }
    order.truncate(k);

    let mut u = Matrix::zeros(n, k);
    for (col, &idx) in order.iter().enumerate() {
        let mut v = full.vectors.column(idx).into_owned();
        fix_sign(v.as_mut_slice());
        u.set_column(col, &v);
    }
    Ok(TopK {
        embedding: Embedding::new_unchecked(u),
        values: order.iter().map(|&i| full.values[i]).collect(),
    })
}

pub fn top_k_eigvectors(s: &SymMatrix, k: usize, mode: Mode) -> Result<Embedding> {
    Ok(top_k_eigen(s, k, mode)?.embedding)
}

/// Matrix absolute value `V |D| V^T` of `S = V D V^T`. Its top-`k`
/// eigenvectors are the top-`k` eigenvectors of `S` by magnitude.
pub fn matrix_abs(s: &SymMatrix) -> Result<SymMatrix> {
    let full = symmetric_eigen(s.as_matrix())?;
    let scaled = Matrix::from_fn(s.dim(), s.dim(), |i, j| full.vectors[(i, j)] * full.values[j].abs());
    Ok(SymMatrix::symmetrize(scaled * full.vectors.transpose()))
}

/// Largest eigenvalue magnitude, i.e. the spectral norm of a symmetric
/// matrix.
pub fn spectral_norm(s: &SymMatrix) -> Result<f64> {
    let full = symmetric_eigen(s.as_matrix())?;
    Ok(full.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs())))
}

/// Same result as [`top_k_eigen`] computed by subspace iteration from
/// `start`, an `n x k` guess of the wanted eigenvectors.
///
/// Each sweep multiplies by `S` (shifted under [`Mode::Algebraic`] so the
/// wanted eigenvalues dominate in magnitude) and re-orthonormalizes;
/// Rayleigh-Ritz then rotates the block onto approximate eigenvectors. The
/// iteration stops once `||S X - X Theta||_F <= tol * ||S||_inf` and falls
/// back to the dense solver if that does not happen within `max_iter`
/// sweeps. A good start makes it much cheaper than a full decomposition.
pub fn top_k_eigen_from(s: &SymMatrix, k: usize, mode: Mode, start: &Matrix, tol: f64, max_iter: usize) -> Result<TopK> {
    subspace_iteration(s, k, mode, start, None, tol, max_iter)
}

/// [`top_k_eigen_from`] in algebraic order for a matrix whose eigenvalues
/// are known to be at least `floor`. A tight floor allows a smaller shift
/// and so faster convergence.
pub fn top_k_eigen_above(s: &SymMatrix, k: usize, floor: f64, start: &Matrix, tol: f64, max_iter: usize) -> Result<TopK> {
    subspace_iteration(s, k, Mode::Algebraic, start, Some(floor), tol, max_iter)
}

fn subspace_iteration(
    s: &SymMatrix,
    k: usize,
    mode: Mode,
    start: &Matrix,
    floor: Option<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<TopK> {
    let n = s.dim();
    if k > n {
        return Err(invalid(format!("k = {k} exceeds matrix size {n}")));
    }
    if start.shape() != (n, k) {
        return Err(crate::error::mismatch(format!("start is {:?}, expected {n}x{k}", start.shape())));
    }
    if k == 0 {
        return top_k_eigen(s, k, mode);
    }
    let a = s.as_matrix();
    // infinity norm bounds every eigenvalue magnitude
    let bound = a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    if bound == 0.0 {
        return top_k_eigen(s, k, mode);
    }
    let Ok(x0) = orthonormalize(start) else {
        return top_k_eigen(s, k, mode);
    };
    let mut x = x0.into_inner();
    for _ in 0..max_iter {
        let sx = a * &x;
        let h = SymMatrix::symmetrize(x.transpose() * &sx);
        let small = symmetric_eigen(h.as_matrix())?;
        let mut order: Vec<usize> = (0..k).collect();
        match mode {
            Mode::Algebraic => order.sort_by(|&i, &j| small.values[j].total_cmp(&small.values[i])),
            Mode::Absolute => order.sort_by(|&i, &j| small.values[j].abs().total_cmp(&small.values[i].abs())),
        }
        let w = Matrix::from_fn(k, k, |i, j| small.vectors[(i, order[j])]);
        let theta: Vec<f64> = order.iter().map(|&i| small.values[i]).collect();
        let xr = &x * &w;
        let sxr = &sx * &w;
        let mut resid = sxr.clone();
        for (j, t) in theta.iter().enumerate() {
            resid.column_mut(j).axpy(-t, &xr.column(j), 1.0);
        }
        if resid.norm() <= tol * bound {
            let mut u = xr;
            for mut col in u.column_iter_mut() {
                fix_sign(col.as_mut_slice());
            }
            return Ok(TopK {
                embedding: Embedding::new_unchecked(u),
                values: theta,
            });
        }
        // shift so that every eigenvalue below the current k-th estimate is
        // smaller in magnitude than it
        let lowest = floor.unwrap_or(-bound);
        let shift = match mode {
            Mode::Algebraic => (-0.5 * (lowest + theta[k - 1])).max(0.0) * 1.05,
            Mode::Absolute => 0.0,
        };
        match orthonormalize(&(sxr + shift * &xr)) {
            Ok(next) => x = next.into_inner(),
            Err(_) => break,
        }
    }
    top_k_eigen(s, k, mode)
}

/// Top-`k` eigenvectors of `W W^T` computed through the small Gram matrix
/// `W^T W`; cheap when `W` has few columns.
pub fn top_k_gram_eigvectors(w: &Matrix, k: usize) -> Result<Embedding> {
    let (n, c) = w.shape();
    if k > n || k > c {
        return Err(invalid(format!("k = {k} exceeds the {n}x{c} factor")));
    }
    let gram = SymMatrix::symmetrize(w.transpose() * w);
    let top = top_k_eigen(&gram, k, Mode::Algebraic)?;
    let largest = top.values.first().copied().unwrap_or(0.0);
    if top.values.iter().any(|&v| !(v > 1e-10 * largest)) {
        return top_k_eigvectors(&SymMatrix::symmetrize(w * w.transpose()), k, Mode::Algebraic);
    }
    let mut u = w * top.embedding.as_matrix();
    for (j, v) in top.values.iter().enumerate() {
        u.column_mut(j).unscale_mut(v.sqrt());
    }
    for mut col in u.column_iter_mut() {
        fix_sign(col.as_mut_slice());
    }
    Ok(Embedding::new_unchecked(u))
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Thin QR orthonormalization with a positive `R` diagonal.
///
/// Fails when the smallest singular value is below `1e-10` times the
/// largest.
pub fn orthonormalize(m: &Matrix) -> Result<Embedding> {
    let (n, k) = m.shape();
    if k == 0 || k > n {
        return Err(invalid(format!("cannot orthonormalize a {n}x{k} matrix")));
    }
    let qr = m.clone().qr();
    let r = qr.r();
    let sv = r.singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(hi > 0.0) || lo < 1e-10 * hi {
        return Err(Error::DegenerateInput(format!(
            "matrix is numerically rank deficient (singular values {lo:.3e} .. {hi:.3e})"
        )));
    }
    let mut q = qr.q();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(Embedding::new_unchecked(q))
}
