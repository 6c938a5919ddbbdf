use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use multiplex_core::harness::ScenarioConfig;
use multiplex_core::methods::{self, DetectOptions};
use multiplex_core::mlsbm::{scenario_blocks, ScenarioParams};
use multiplex_core::{metrics, theory, Matrix, Method, Mode, Partition};

fn err(e: multiplex_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = multiplex_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn partition(labels: Vec<usize>) -> Partition {
    Partition::from_labels(labels)
}

#[pyclass(frozen, module = "multiplex")]
struct MultiLayerGraph(multiplex_core::MultiLayerGraph);

#[pymethods]
impl MultiLayerGraph {
    /// Builds a graph from dense 0/1 layers, each a list of rows.
    #[new]
    fn new(layers: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        let mats = layers
            .into_iter()
            .map(|rows| {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(PyValueError::new_err("every layer must be square"));
                }
                Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
            })
            .collect::<PyResult<Vec<_>>>()?;
        multiplex_core::MultiLayerGraph::new(mats).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        multiplex_core::MultiLayerGraph::from_edge_list(text).map(Self).map_err(err)
    }

    fn to_edge_list(&self) -> String {
        self.0.to_edge_list()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn num_layers(&self) -> usize {
        self.0.num_layers()
    }

    fn num_edges(&self, layer: usize) -> PyResult<usize> {
        if layer >= self.0.num_layers() {
            return Err(PyValueError::new_err(format!("layer {layer} out of range")));
        }
        Ok(self.0.num_edges(layer))
    }

    fn __repr__(&self) -> String {
        format!("MultiLayerGraph(n={}, layers={})", self.0.n(), self.0.num_layers())
    }
}

#[pyclass(frozen, module = "multiplex")]
struct BlockModel(multiplex_core::BlockModel);

#[pymethods]
impl BlockModel {
    #[new]
    fn new(labels: Vec<usize>, blocks: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        let mats = blocks
            .into_iter()
            .map(|rows| {
                let k = rows.len();
                Matrix::from_fn(k, k, |i, j| rows[i].get(j).copied().unwrap_or(f64::NAN))
            })
            .collect();
        multiplex_core::BlockModel::new(partition(labels), mats).map(Self).map_err(err)
    }

    /// Random model following one of the named simulation scenarios.
    #[staticmethod]
    #[pyo3(signature = (name, n, k, layers, avg_degree, seed=0))]
    fn scenario(name: &str, n: usize, k: usize, layers: usize, avg_degree: f64, seed: u64) -> PyResult<Self> {
        let params = ScenarioParams { n, k, layers, avg_degree };
        scenario_blocks(parse(name)?, &params, seed).map(Self).map_err(err)
    }

    /// Equal communities of size `s`; layer `m` has within/between
    /// probabilities `p[m]`, `q[m]`.
    #[staticmethod]
    fn four_param(p: Vec<f64>, q: Vec<f64>, k: usize, s: usize) -> PyResult<Self> {
        let spec = multiplex_core::FourParamSpec::new(p, q, k, s).map_err(err)?;
        multiplex_core::BlockModel::four_param(&spec).map(Self).map_err(err)
    }

    #[getter]
    fn membership(&self) -> Vec<usize> {
        self.0.membership().labels().to_vec()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn num_layers(&self) -> usize {
        self.0.num_layers()
    }

    fn expected_degree(&self) -> f64 {
        self.0.expected_degree()
    }

    fn sample(&self, seed: u64) -> MultiLayerGraph {
        MultiLayerGraph(self.0.sample(seed))
    }

    /// Diagnostics from the recovery theory as a dict.
    fn theory<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let q = theory::theory_quantities(&self.0).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("delta_m", q.delta_m)?;
        d.set_item("delta_bar", q.delta_bar)?;
        d.set_item("delta_bar_prime", q.delta_bar_prime)?;
        d.set_item("lambda_m", q.lambda_m)?;
        d.set_item("lambda_bar", q.lambda_bar)?;
        d.set_item("lambda_bar_zero", q.lambda_bar_zero)?;
        d.set_item("n_max", q.n_max)?;
        d.set_item("f_ab", q.f_ab)?;
        d.set_item("g_ab", q.g_ab)?;
        Ok(d)
    }
}

/// Consensus labels for `graph`. `method` is one of `olmf`, `coreg`,
/// `mean_adj`, `spectral_kernel`, `module_allegiance`.
#[pyfunction]
#[pyo3(signature = (graph, k, method="olmf", mode="algebraic", seed=0))]
fn detect(py: Python<'_>, graph: &MultiLayerGraph, k: usize, method: &str, mode: &str, seed: u64) -> PyResult<Vec<usize>> {
    let method: Method = parse(method)?;
    let opts = DetectOptions {
        mode: parse::<Mode>(mode)?,
        seed,
        ..Default::default()
    };
    let g = &graph.0;
    let found = py.detach(|| methods::detect(g, k, method, &opts)).map_err(err)?;
    Ok(found.partition.into_labels())
}

#[pyfunction]
fn nmi(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    metrics::nmi(&partition(a), &partition(b)).map_err(err)
}

#[pyfunction]
fn misclustering_rate(truth: Vec<usize>, est: Vec<usize>) -> PyResult<f64> {
    metrics::misclustering_rate(&partition(truth), &partition(est)).map_err(err)
}

/// Runs a JSON simulation config and returns the CSV text.
#[pyfunction]
#[pyo3(signature = (config, threads=None))]
fn simulate(py: Python<'_>, config: &str, threads: Option<usize>) -> PyResult<String> {
    let cfg = ScenarioConfig::from_json(config).map_err(err)?;
    py.detach(|| {
        let res = match threads {
            Some(t) => multiplex_core::harness::run_scenario_with_threads(&cfg, t),
            None => multiplex_core::harness::run_scenario(&cfg),
        }?;
        res.to_csv()
    })
    .map_err(err)
}

#[pymodule]
fn multiplex(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<MultiLayerGraph>()?;
    m.add_class::<BlockModel>()?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(misclustering_rate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
