//! Multi-layer graphs over a shared node set.
//!
//! Layers are stored as dense symmetric 0/1 matrices with a zero diagonal.
//! The edge-list text format is
//!
//! ```text
//! # comment
//! n M
//! m u v
//! ```
//!
//! with 0-based layer and node indices. Edges are undirected and duplicates
//! collapse onto a single edge.

use std::fmt::Write as _;
use std::ops::Deref;

use crate::error::{invalid, mismatch, Error, Result};
use crate::Matrix;

const SYMMETRY_TOL: f64 = 1e-12;

/// Dense symmetric real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Wraps `m`, checking that it is square and symmetric to within 1e-12.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(mismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self(m))
    }

    /// Averages `m` with its transpose. Use for products that are symmetric
    /// up to rounding.
    pub fn symmetrize(m: Matrix) -> Self {
        assert!(m.is_square(), "symmetrize needs a square matrix");
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }
}

impl Deref for SymMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Anything that looks like a stack of `M` symmetric `n x n` layers: an
/// observed multi-layer graph, a population tensor, or a plain slice of
/// matrices in tests.
pub trait AdjacencyTensor {
    fn layers(&self) -> &[SymMatrix];

    fn n(&self) -> usize {
        self.layers().first().map_or(0, SymMatrix::dim)
    }

    fn num_layers(&self) -> usize {
        self.layers().len()
    }
}

impl AdjacencyTensor for [SymMatrix] {
    fn layers(&self) -> &[SymMatrix] {
        self
    }
}

impl AdjacencyTensor for Vec<SymMatrix> {
    fn layers(&self) -> &[SymMatrix] {
        self
    }
}

/// Checks that a layer stack is non-empty and every layer has the same size.
pub(crate) fn check_stack<T: AdjacencyTensor + ?Sized>(g: &T) -> Result<usize> {
    let layers = g.layers();
    let Some(first) = layers.first() else {
        return Err(invalid("at least one layer is required"));
    };
    let n = first.dim();
    if let Some((m, bad)) = layers.iter().enumerate().find(|(_, l)| l.dim() != n) {
        return Err(mismatch(format!(
            "layer {m} is {}x{}, layer 0 is {n}x{n}",
            bad.dim(),
            bad.dim()
        )));
    }
    Ok(n)
}

/// Entrywise mean of the layers of any tensor.
pub fn mean_layer<T: AdjacencyTensor + ?Sized>(g: &T) -> SymMatrix {
    let layers = g.layers();
    let n = g.n();
    let mut acc = Matrix::zeros(n, n);
    for layer in layers {
        acc += layer.as_matrix();
    }
    acc /= layers.len() as f64;
    SymMatrix(acc)
}

/// An observed undirected multi-layer network without inter-layer edges.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLayerGraph {
    n: usize,
    layers: Vec<SymMatrix>,
}

impl MultiLayerGraph {
    /// Builds a graph from dense adjacency matrices, validating that each is
    /// a symmetric 0/1 matrix with an empty diagonal.
    pub fn new(layers: Vec<Matrix>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(invalid("a multi-layer graph needs at least one layer"));
        };
        let n = first.nrows();
        if n < 2 {
            return Err(invalid(format!("a multi-layer graph needs n >= 2, got {n}")));
        }
        let mut out = Vec::with_capacity(layers.len());
        for (m, a) in layers.into_iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(mismatch(format!(
                    "layer {m} is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            for i in 0..n {
                if a[(i, i)] != 0.0 {
                    return Err(invalid(format!("layer {m} has a self-loop at node {i}")));
                }
                for j in (i + 1)..n {
                    let x = a[(i, j)];
                    if x != 0.0 && x != 1.0 {
                        return Err(invalid(format!("layer {m} entry ({i}, {j}) = {x} is not binary")));
                    }
                    if a[(j, i)] != x {
                        return Err(invalid(format!("layer {m} is not symmetric at ({i}, {j})")));
                    }
                }
            }
            out.push(SymMatrix(a));
        }
        Ok(Self { n, layers: out })
    }

    /// Builds a graph from `(layer, u, v)` triples.
    pub fn from_edges(n: usize, num_layers: usize, edges: &[(usize, usize, usize)]) -> Result<Self> {
        if num_layers == 0 {
            return Err(invalid("a multi-layer graph needs at least one layer"));
        }
        if n < 2 {
            return Err(invalid(format!("a multi-layer graph needs n >= 2, got {n}")));
        }
        let mut layers = vec![Matrix::zeros(n, n); num_layers];
        for &(m, u, v) in edges {
            if m >= num_layers {
                return Err(invalid(format!("layer {m} out of range (M = {num_layers})")));
            }
            if u >= n || v >= n {
                return Err(invalid(format!("edge ({u}, {v}) out of range (n = {n})")));
            }
            if u == v {
                return Err(invalid(format!("self-loop at node {u}")));
            }
            layers[m][(u, v)] = 1.0;
            layers[m][(v, u)] = 1.0;
        }
        Ok(Self {
            n,
            layers: layers.into_iter().map(SymMatrix).collect(),
        })
    }

    /// Parses the edge-list text format. Errors carry the 1-based line
    /// number of the offending line.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut layers: Vec<Matrix> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let fields = content
                .split_whitespace()
                .map(|f| {
                    f.parse::<usize>()
                        .map_err(|_| parse_err(format!("`{f}` is not a non-negative integer")))
                })
                .collect::<Result<Vec<_>>>()?;

            match header {
                None => {
                    let [n, m] = fields[..] else {
                        return Err(parse_err(format!(
                            "header must be `n M`, found {} fields",
                            fields.len()
                        )));
                    };
                    if n < 2 {
                        return Err(parse_err(format!("n must be at least 2, got {n}")));
                    }
                    if m < 1 {
                        return Err(parse_err("M must be at least 1".into()));
                    }
                    header = Some((n, m));
                    layers = vec![Matrix::zeros(n, n); m];
                }
                Some((n, num_layers)) => {
                    let [m, u, v] = fields[..] else {
                        return Err(parse_err(format!(
                            "edge line must be `m u v`, found {} fields",
                            fields.len()
                        )));
                    };
                    if m >= num_layers {
                        return Err(parse_err(format!("layer {m} out of range (M = {num_layers})")));
                    }
                    if u >= n || v >= n {
                        return Err(parse_err(format!("node index out of range (n = {n})")));
                    }
                    if u == v {
                        return Err(parse_err(format!("self-loop at node {u}")));
                    }
                    layers[m][(u, v)] = 1.0;
                    layers[m][(v, u)] = 1.0;
                }
            }
        }

        let Some((n, _)) = header else {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                message: "missing `n M` header".into(),
            });
        };
        Ok(Self {
            n,
            layers: layers.into_iter().map(SymMatrix).collect(),
        })
    }

    /// Serializes to the edge-list format, listing each edge once with
    /// `u < v`, ordered by layer then node indices.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.layers.len());
        for (m, a) in self.layers.iter().enumerate() {
            for i in 0..self.n {
                for j in (i + 1)..self.n {
                    if a[(i, j)] != 0.0 {
                        let _ = writeln!(out, "{m} {i} {j}");
                    }
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, m: usize) -> &SymMatrix {
        &self.layers[m]
    }

    pub fn num_edges(&self, m: usize) -> usize {
        let a = &self.layers[m];
        let mut count = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if a[(i, j)] != 0.0 {
                    count += 1;
                }
            }
        }
        count
    }

    /// Entrywise mean of the layers, `(1/M) sum_m A_m`.
    pub fn mean_adjacency(&self) -> SymMatrix {
        mean_layer(self)
    }

    pub fn degrees(&self) -> DegreeTable {
        let degrees = self
            .layers
            .iter()
            .map(|a| {
                (0..self.n)
                    .map(|i| a.row(i).iter().filter(|&&x| x != 0.0).count())
                    .collect()
            })
            .collect();
        DegreeTable { degrees }
    }

    /// `D^{-1/2} A D^{-1/2}` for layer `m`. Rows and columns of isolated
    /// nodes are zero.
    pub fn normalized_laplacian(&self, m: usize) -> Result<SymMatrix> {
        if m >= self.layers.len() {
            return Err(invalid(format!(
                "layer {m} out of range (M = {})",
                self.layers.len()
            )));
        }
        let a = &self.layers[m];
        let inv_sqrt: Vec<f64> = (0..self.n)
            .map(|i| {
                let d: f64 = a.row(i).sum();
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        let l = Matrix::from_fn(self.n, self.n, |i, j| a[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
        Ok(SymMatrix(l))
    }
}

impl AdjacencyTensor for MultiLayerGraph {
    fn layers(&self) -> &[SymMatrix] {
        &self.layers
    }

    fn n(&self) -> usize {
        self.n
    }
}

/// Per-layer node degrees, `degrees[m][i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeTable {
    pub degrees: Vec<Vec<usize>>,
}

impl DegreeTable {
    pub fn layer(&self, m: usize) -> &[usize] {
        &self.degrees[m]
    }

    pub fn mean_degree(&self, m: usize) -> f64 {
        let d = &self.degrees[m];
        d.iter().sum::<usize>() as f64 / d.len() as f64
    }
}
