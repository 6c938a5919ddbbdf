//! Multi-layer stochastic block models: parameters, population tensors,
//! samplers and the simulation scenario recipes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Error, Result};
use crate::graph::{AdjacencyTensor, MultiLayerGraph, SymMatrix};
use crate::spectral::Partition;
use crate::{seed, Matrix};

const MAX_ASSIGNMENT_RETRIES: usize = 100;

/// Off-diagonal probability band every scenario starts from, before the
/// model is rescaled to the requested average degree.
pub const BASE_BAND: (f64, f64) = (0.045, 0.055);

/// Signal ratio of "weak" blocks that are hard to tell from noise.
pub const WEAK_RHO: f64 = 1.1;
/// Signal ratio of the strong blocks in the complementary and
/// heterophilic scenarios.
pub const HIGH_RHO: f64 = 3.0;
/// Signal ratio of the low-signal layer in the complementary scenario.
pub const LOW_RHO: f64 = 1.2;
/// Range of signal ratios for "strong" layers.
pub const STRONG_RHO: (f64, f64) = (2.0, 3.0);
/// Off-diagonal inflation of heterophilic layers, chosen so the mean
/// within/between gap over three homophilic and two heterophilic layers
/// is zero.
pub const HETERO_BAND_SCALE: f64 = 4.5;

/// MLSBM parameters: one membership vector shared by `M` block matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockModel {
    membership: Partition,
    blocks: Vec<Matrix>,
}

impl BlockModel {
    pub fn new(membership: Partition, blocks: Vec<Matrix>) -> Result<Self> {
        let k = membership.k();
        if membership.n() < 2 {
            return Err(invalid("a block model needs at least two nodes"));
        }
        if blocks.is_empty() {
            return Err(invalid("a block model needs at least one layer"));
        }
        if let Some(c) = membership.sizes().iter().position(|&s| s == 0) {
            return Err(invalid(format!("community {c} has no nodes")));
        }
        for (m, b) in blocks.iter().enumerate() {
            if b.shape() != (k, k) {
                return Err(mismatch(format!("block matrix {m} is {:?}, expected {k}x{k}", b.shape())));
            }
            for i in 0..k {
                for j in 0..k {
                    let x = b[(i, j)];
                    if !(0.0..=1.0).contains(&x) {
                        return Err(invalid(format!("block matrix {m} entry ({i},{j}) = {x} is not a probability")));
                    }
                    if (x - b[(j, i)]).abs() > 1e-12 {
                        return Err(invalid(format!("block matrix {m} is not symmetric")));
                    }
                }
            }
        }
        Ok(Self { membership, blocks })
    }

    /// Four-parameter model with contiguous equal-size communities.
    pub fn four_param(spec: &FourParamSpec) -> Result<Self> {
        let labels = (0..spec.k * spec.s).map(|i| i / spec.s).collect();
        Self::new(Partition::new(labels, spec.k)?, four_param_blocks(spec))
    }

    pub fn membership(&self) -> &Partition {
        &self.membership
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.membership.n()
    }

    pub fn k(&self) -> usize {
        self.membership.k()
    }

    pub fn num_layers(&self) -> usize {
        self.blocks.len()
    }

    pub fn population(&self) -> PopulationTensor {
        population_tensor(self)
    }

    pub fn sample(&self, seed: u64) -> MultiLayerGraph {
        sample(self, seed)
    }

    /// Mean row sum of `Z B Z^T`, averaged over layers.
    pub fn expected_degree(&self) -> f64 {
        let sizes: Vec<f64> = self.membership.sizes().iter().map(|&s| s as f64).collect();
        let n = self.n() as f64;
        let total: f64 = self
            .blocks
            .iter()
            .map(|b| {
                let mut t = 0.0;
                for (i, si) in sizes.iter().enumerate() {
                    for (j, sj) in sizes.iter().enumerate() {
                        t += si * b[(i, j)] * sj;
                    }
                }
                t / n
            })
            .sum();
        total / self.num_layers() as f64
    }

    /// Scales every block entry by one common factor so that
    /// [`expected_degree`](Self::expected_degree) hits `target`; entries are
    /// clamped to `[0, 1]` afterwards.
    pub fn scaled_to_degree(&self, target: f64) -> Result<Self> {
        if !(target >= 0.0) || !target.is_finite() {
            return Err(invalid(format!("target degree {target} must be a nonnegative number")));
        }
        let current = self.expected_degree();
        if current <= 0.0 {
            return Err(Error::DegenerateInput("cannot rescale an empty block model".into()));
        }
        let factor = target / current;
        let blocks = self.blocks.iter().map(|b| b.map(|x| (x * factor).clamp(0.0, 1.0))).collect();
        Ok(Self {
            membership: self.membership.clone(),
            blocks,
        })
    }
}

/// Uniform multinomial community assignment, redrawn until no community
/// is empty.
pub fn multinomial_assignments(n: usize, k: usize, seed: u64) -> Result<Partition> {
    if k == 0 || n < k {
        return Err(invalid(format!("cannot place {n} nodes in {k} nonempty communities")));
    }
    let mut rng = seed::rng(seed);
    for _ in 0..MAX_ASSIGNMENT_RETRIES {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let p = Partition::new(labels, k)?;
        if p.sizes().iter().all(|&s| s > 0) {
            return Ok(p);
        }
    }
    Err(Error::DegenerateInput(format!(
        "no assignment with all {k} communities nonempty after {MAX_ASSIGNMENT_RETRIES} draws"
    )))
}

/// Random symmetric block matrix: off-diagonals from `U(lo, hi)`, diagonal
/// entries from `U(rho*lo, rho*hi)`.
pub fn random_blocks(k: usize, lo: f64, hi: f64, rho: f64, seed: u64) -> Result<Matrix> {
    random_blocks_with(k, lo, hi, &vec![rho; k], &mut seed::rng(seed))
}

/// Like [`random_blocks`] with one signal ratio per community.
fn random_blocks_with<R: Rng>(k: usize, lo: f64, hi: f64, rhos: &[f64], rng: &mut R) -> Result<Matrix> {
    if !(0.0 <= lo && lo <= hi) {
        return Err(invalid(format!("need 0 <= lo <= hi, got lo = {lo}, hi = {hi}")));
    }
    for &rho in rhos {
        if !(rho >= 0.0) || rho * hi > 1.0 || hi > 1.0 {
            return Err(invalid(format!("rho = {rho} with hi = {hi} gives probabilities above 1")));
        }
    }
    let mut b = Matrix::zeros(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let x = uniform(rng, lo, hi);
            b[(i, j)] = x;
            b[(j, i)] = x;
        }
        b[(i, i)] = uniform(rng, rhos[i] * lo, rhos[i] * hi);
    }
    Ok(b)
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Four-parameter MLSBM: `k` communities of size `s`; layer `m` has
/// within-community probability `p[m]` and between-community `q[m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourParamSpec {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub k: usize,
    pub s: usize,
}

impl FourParamSpec {
    pub fn new(p: Vec<f64>, q: Vec<f64>, k: usize, s: usize) -> Result<Self> {
        if p.len() != q.len() {
            return Err(mismatch(format!("{} within-community vs {} between-community probabilities", p.len(), q.len())));
        }
        if p.is_empty() || k == 0 || s == 0 {
            return Err(invalid("need at least one layer, one community and one node per community"));
        }
        for (m, (&pm, &qm)) in p.iter().zip(&q).enumerate() {
            if !(0.0..=1.0).contains(&pm) || !(0.0..=1.0).contains(&qm) {
                return Err(invalid(format!("layer {m}: probabilities must lie in [0, 1]")));
            }
            if pm == qm {
                return Err(invalid(format!("layer {m}: p = q = {pm} carries no community signal")));
            }
        }
        Ok(Self { p, q, k, s })
    }

    pub fn n(&self) -> usize {
        self.k * self.s
    }
}

/// `B^(m) = (p_m - q_m) I + q_m 11^T`.
pub fn four_param_blocks(spec: &FourParamSpec) -> Vec<Matrix> {
    spec.p
        .iter()
        .zip(&spec.q)
        .map(|(&p, &q)| Matrix::from_fn(spec.k, spec.k, |i, j| if i == j { p } else { q }))
        .collect()
}

/// Expected adjacency matrices `Z B^(m) Z^T`, diagonal included.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTensor {
    layers: Vec<SymMatrix>,
}

impl PopulationTensor {
    pub fn n(&self) -> usize {
        self.layers.first().map_or(0, SymMatrix::dim)
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, m: usize) -> &SymMatrix {
        &self.layers[m]
    }

    pub fn into_layers(self) -> Vec<SymMatrix> {
        self.layers
    }
}

impl AdjacencyTensor for PopulationTensor {
    fn layers(&self) -> &[SymMatrix] {
        &self.layers
    }
}

pub fn population_tensor(model: &BlockModel) -> PopulationTensor {
    let labels = model.membership.labels();
    let n = labels.len();
    let layers = model
        .blocks
        .iter()
        .map(|b| SymMatrix::symmetrize(Matrix::from_fn(n, n, |i, j| b[(labels[i], labels[j])])))
        .collect();
    PopulationTensor { layers }
}

/// Independent Bernoulli edges for every pair `i < j` in every layer.
/// Layer `m` draws from its own stream of `seed`, so layers are reproducible
/// independently of each other.
pub fn sample(model: &BlockModel, seed: u64) -> MultiLayerGraph {
    let labels = model.membership.labels();
    let n = labels.len();
    let layers = model
        .blocks
        .iter()
        .enumerate()
        .map(|(m, b)| {
            let mut rng = seed::rng(seed::derive(seed, m as u64));
            let mut a = Matrix::zeros(n, n);
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < b[(labels[i], labels[j])] {
                        a[(i, j)] = 1.0;
                        a[(j, i)] = 1.0;
                    }
                }
            }
            a
        })
        .collect();
    MultiLayerGraph::new(layers).expect("sampled layers are valid adjacency matrices")
}

/// The simulation designs used to compare the methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Every layer has a strong signal ratio drawn from `U(2, 3)`.
    Strong,
    /// Three strong layers, the rest weak.
    Mixed,
    /// Each layer reveals only part of the structure: layer `m < k`
    /// separates community `m`, the next layer separates communities 0 and 1
    /// strongly, the one after weakly.
    Complementary,
    /// Repeating triples of one strong and two weak layers.
    Layers,
    /// Three homophilic layers and two heterophilic ones whose mean signal
    /// cancels the homophilic one.
    Hetero,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Strong,
        Scenario::Mixed,
        Scenario::Complementary,
        Scenario::Layers,
        Scenario::Hetero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Strong => "strong",
            Scenario::Mixed => "mixed",
            Scenario::Complementary => "complementary",
            Scenario::Layers => "layers",
            Scenario::Hetero => "hetero",
        }
    }

    /// Per-community signal ratios and off-diagonal band multiplier of
    /// layer `m`.
    fn layer_design<R: Rng>(self, m: usize, k: usize, rng: &mut R) -> (Vec<f64>, f64) {
        let strong = |rng: &mut R| uniform(rng, STRONG_RHO.0, STRONG_RHO.1);
        match self {
            Scenario::Strong => (vec![strong(rng); k], 1.0),
            Scenario::Mixed => {
                let rho = if m < 3 { strong(rng) } else { WEAK_RHO };
                (vec![rho; k], 1.0)
            }
            Scenario::Layers => {
                let rho = if m % 3 == 0 { strong(rng) } else { WEAK_RHO };
                (vec![rho; k], 1.0)
            }
            Scenario::Complementary => {
                let mut rhos = vec![WEAK_RHO; k];
                let slot = m % (k + 2);
                if slot < k {
                    rhos[slot] = HIGH_RHO;
                } else {
                    let rho = if slot == k { HIGH_RHO } else { LOW_RHO };
                    rhos.iter_mut().take(2).for_each(|r| *r = rho);
                }
                (rhos, 1.0)
            }
            Scenario::Hetero => {
                if m % 5 < 3 {
                    (vec![HIGH_RHO; k], 1.0)
                } else {
                    (vec![1.0 / HIGH_RHO; k], HETERO_BAND_SCALE)
                }
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// Size and density of a scenario instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub n: usize,
    pub k: usize,
    pub layers: usize,
    pub avg_degree: f64,
}

/// Draws a block model for `scenario`: random memberships, per-layer
/// block matrices following the scenario design, then one common rescale
/// to the requested average degree.
pub fn scenario_blocks(scenario: Scenario, params: &ScenarioParams, seed: u64) -> Result<BlockModel> {
    let ScenarioParams { n, k, layers, avg_degree } = *params;
    if layers == 0 {
        return Err(invalid("a scenario needs at least one layer"));
    }
    if scenario == Scenario::Complementary && k < 2 {
        return Err(invalid("the complementary scenario needs at least two communities"));
    }
    let membership = multinomial_assignments(n, k, seed::derive(seed, 0))?;
    let mut rng = seed::rng(seed::derive(seed, 1));
    let blocks = (0..layers)
        .map(|m| {
            let (rhos, band) = scenario.layer_design(m, k, &mut rng);
            random_blocks_with(k, BASE_BAND.0 * band, BASE_BAND.1 * band, &rhos, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    BlockModel::new(membership, blocks)?.scaled_to_degree(avg_degree)
}

/// Block model with `informative` strong layers at average degree
/// `avg_degree`, followed by `uninformative` layers whose block matrix is
/// the constant `density` (rank one, no community signal).
pub fn with_uninformative_layers(
    n: usize,
    k: usize,
    informative: usize,
    uninformative: usize,
    density: f64,
    avg_degree: f64,
    seed: u64,
) -> Result<BlockModel> {
    if !(0.0..=1.0).contains(&density) || density == 0.0 {
        return Err(invalid(format!("uninformative density {density} must lie in (0, 1]")));
    }
    let params = ScenarioParams { n, k, layers: informative, avg_degree };
    let base = scenario_blocks(Scenario::Strong, &params, seed)?;
    let mut blocks = base.blocks.clone();
    blocks.extend((0..uninformative).map(|_| Matrix::from_element(k, k, density)));
    BlockModel::new(base.membership, blocks)
}
