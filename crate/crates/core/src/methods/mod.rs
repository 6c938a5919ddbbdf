//! The consensus community detection methods and a common entry point.

mod coreg;
mod fusion;
mod olmf;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AdjacencyTensor;
use crate::spectral::{Mode, Partition};

pub use coreg::{coreg_fit, coreg_objective, default_gammas, gamma_threshold, CoregOptions, CoregState};
pub use fusion::{
    allegiance_matrix, mean_adjacency_sc, module_allegiance, module_allegiance_sc, spectral_kernel, spectral_kernel_sc,
    FusionKernel, KernelKind, MeanAdjacencyFit,
};
pub use olmf::{olmf_fit, olmf_gradient, olmf_loss, olmf_objective, OlmfFactors, OlmfOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Olmf,
    Coreg,
    MeanAdj,
    SpectralKernel,
    ModuleAllegiance,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Olmf,
        Method::Coreg,
        Method::MeanAdj,
        Method::SpectralKernel,
        Method::ModuleAllegiance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Olmf => "olmf",
            Method::Coreg => "coreg",
            Method::MeanAdj => "mean_adj",
            Method::SpectralKernel => "spectral_kernel",
            Method::ModuleAllegiance => "module_allegiance",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Settings shared by every method in [`detect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectOptions {
    pub mode: Mode,
    /// `c` in `gamma_m = c * max_m ||A^(m)||_2` for co-regularization.
    pub gamma_multiplier: f64,
    pub kmeans_restarts: usize,
    pub seed: u64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Algebraic,
            gamma_multiplier: 4.0,
            kmeans_restarts: 20,
            seed: 0,
        }
    }
}

/// A consensus partition plus what the method reports about its fit.
#[derive(Debug, Clone)]
pub struct Detection {
    pub partition: Partition,
    /// Iterative methods report whether they met their tolerance; the
    /// closed-form ones always converge.
    pub converged: bool,
    /// Final objective for OLMF and coreg.
    pub objective: Option<f64>,
}

/// Runs `method` on `g` with its default settings.
pub fn detect<T: AdjacencyTensor + Sync + ?Sized>(
    g: &T,
    k: usize,
    method: Method,
    opts: &DetectOptions,
) -> Result<Detection> {
    let DetectOptions {
        mode,
        gamma_multiplier,
        kmeans_restarts,
        seed,
    } = *opts;
    let closed = |partition| Detection {
        partition,
        converged: true,
        objective: None,
    };
    Ok(match method {
        Method::Olmf => {
            let o = OlmfOptions { mode, kmeans_restarts, seed, ..Default::default() };
            let (fit, partition) = olmf_fit(g, k, &o)?;
            Detection {
                partition,
                converged: fit.converged,
                objective: Some(fit.objective),
            }
        }
        Method::Coreg => {
            let gammas = default_gammas(g, gamma_multiplier)?;
            let o = CoregOptions { mode, kmeans_restarts, seed, ..Default::default() };
            let (state, partition) = coreg_fit(g, k, &gammas, &o)?;
            Detection {
                partition,
                converged: state.converged,
                objective: Some(state.objective),
            }
        }
        Method::MeanAdj => closed(mean_adjacency_sc(g, k, mode, kmeans_restarts, seed)?.partition),
        Method::SpectralKernel => closed(spectral_kernel_sc(g, k, mode, kmeans_restarts, seed)?.1),
        Method::ModuleAllegiance => closed(module_allegiance_sc(g, k, mode, kmeans_restarts, seed)?.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::misclustering_rate;
    use crate::mlsbm::{scenario_blocks, Scenario, ScenarioParams};

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!(matches!("louvain".parse::<Method>(), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn every_method_is_invariant_under_node_relabeling() {
        let params = ScenarioParams { n: 90, k: 3, layers: 4, avg_degree: 40.0 };
        let model = scenario_blocks(Scenario::Strong, &params, 21).unwrap();
        let g = model.sample(21);
        let n = g.n();
        // node i of the permuted graph is node perm[i] of the original
        let perm: Vec<usize> = (0..n).map(|i| (i * 37 + 11) % n).collect();
        let layers = (0..g.num_layers())
            .map(|m| {
                let a = g.layer(m);
                crate::Matrix::from_fn(n, n, |i, j| a[(perm[i], perm[j])])
            })
            .collect();
        let permuted = crate::graph::MultiLayerGraph::new(layers).unwrap();
        let opts = DetectOptions::default();
        for method in Method::ALL {
            let base = detect(&g, 3, method, &opts).unwrap().partition;
            let moved = detect(&permuted, 3, method, &opts).unwrap().partition;
            let back = base.permute_nodes(&perm).unwrap();
            assert_eq!(misclustering_rate(&back, &moved).unwrap(), 0.0, "{method}");
        }
    }
}
