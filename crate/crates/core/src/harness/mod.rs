//! Simulation runner: JSON scenario configs in, one CSV row per
//! (sweep value, replication, method) out.

pub mod cli;
mod svg;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AdjacencyTensor, SymMatrix};
use crate::methods::{detect, DetectOptions, Method};
use crate::metrics::{misclustering_rate, nmi};
use crate::mlsbm::{scenario_blocks, with_uninformative_layers, BlockModel, Scenario, ScenarioParams};
use crate::seed;
use crate::spectral::Mode;

pub use svg::nmi_chart;

pub const CSV_HEADER: &str = "scenario,rep,sweep,method,nmi,miscluster,runtime_ms,converged,objective";

/// What generates each instance: one of the MLSBM scenarios, or strong
/// informative layers padded with constant-density uninformative ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Design {
    Mlsbm(Scenario),
    Uninformative,
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Design::Mlsbm(s) => write!(f, "{s}"),
            Design::Uninformative => f.write_str("uninformative"),
        }
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uninformative" {
            Ok(Design::Uninformative)
        } else {
            s.parse().map(Design::Mlsbm)
        }
    }
}

impl TryFrom<String> for Design {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Design> for String {
    fn from(d: Design) -> Self {
        d.to_string()
    }
}

/// The swept parameter and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    AvgDegree(Vec<f64>),
    /// Number of layers; for the uninformative design, informative layers.
    Layers(Vec<usize>),
    UninformativeCount(Vec<usize>),
    UninformativeDensity(Vec<f64>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::AvgDegree(v) | Sweep::UninformativeDensity(v) => v.len(),
            Sweep::Layers(v) | Sweep::UninformativeCount(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            Sweep::AvgDegree(v) | Sweep::UninformativeDensity(v) => v[i],
            Sweep::Layers(v) | Sweep::UninformativeCount(v) => v[i] as f64,
        }
    }
}

fn default_avg_degree() -> f64 {
    10.0
}

fn default_density() -> f64 {
    0.1
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_gamma_multiplier() -> f64 {
    4.0
}

fn default_kmeans_restarts() -> usize {
    20
}

/// One simulation study. Fields not swept keep their configured value at
/// every sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Design,
    pub n: usize,
    pub k: usize,
    /// Layer count; informative layers for the uninformative design.
    pub layers: usize,
    #[serde(default = "default_avg_degree")]
    pub avg_degree: f64,
    #[serde(default)]
    pub uninformative: usize,
    #[serde(default = "default_density")]
    pub uninformative_density: f64,
    /// Run the methods on the population tensor instead of a sample.
    #[serde(default)]
    pub population: bool,
    pub sweep: Sweep,
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_gamma_multiplier")]
    pub gamma_multiplier: f64,
    #[serde(default = "default_kmeans_restarts")]
    pub kmeans_restarts: usize,
    /// Wall-clock timings make the CSV differ between runs, so they are
    /// left blank unless asked for.
    #[serde(default)]
    pub record_runtime: bool,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.reps == 0 {
            return fail("reps must be at least 1".into());
        }
        if self.sweep.is_empty() {
            return fail("sweep needs at least one value".into());
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty".into());
        }
        if self.k == 0 || self.k > self.n {
            return fail(format!("k = {} must be in 1..=n", self.k));
        }
        if self.kmeans_restarts == 0 {
            return fail("kmeans_restarts must be at least 1".into());
        }
        if !(self.gamma_multiplier > 0.0) {
            return fail("gamma_multiplier must be positive".into());
        }
        let uninformative_sweep = matches!(self.sweep, Sweep::UninformativeCount(_) | Sweep::UninformativeDensity(_));
        if uninformative_sweep && self.scenario != Design::Uninformative {
            return fail("uninformative sweeps need the uninformative scenario".into());
        }
        for i in 0..self.sweep.len() {
            let v = self.sweep.value(i);
            let ok = match self.sweep {
                Sweep::AvgDegree(_) => v > 0.0,
                Sweep::Layers(_) => v >= 1.0,
                Sweep::UninformativeCount(_) => true,
                Sweep::UninformativeDensity(_) => v > 0.0 && v <= 1.0,
            };
            if !ok {
                return fail(format!("sweep value {v} out of range"));
            }
        }
        if self.layers == 0 && !matches!(self.sweep, Sweep::Layers(_)) {
            return fail("layers must be at least 1".into());
        }
        Ok(())
    }

    /// Block model at sweep point `point`, drawn from `seed`.
    pub fn model(&self, point: usize, seed: u64) -> Result<BlockModel> {
        let v = self.sweep.value(point);
        let mut degree = self.avg_degree;
        let mut layers = self.layers;
        let mut uninformative = self.uninformative;
        let mut density = self.uninformative_density;
        match self.sweep {
            Sweep::AvgDegree(_) => degree = v,
            Sweep::Layers(_) => layers = v as usize,
            Sweep::UninformativeCount(_) => uninformative = v as usize,
            Sweep::UninformativeDensity(_) => density = v,
        }
        match self.scenario {
            Design::Mlsbm(s) => {
                let params = ScenarioParams { n: self.n, k: self.k, layers, avg_degree: degree };
                scenario_blocks(s, &params, seed)
            }
            Design::Uninformative => {
                with_uninformative_layers(self.n, self.k, layers, uninformative, density, degree, seed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub rep: usize,
    pub sweep: f64,
    pub method: Method,
    pub nmi: f64,
    pub miscluster: f64,
    pub runtime_ms: Option<f64>,
    pub converged: bool,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioResult {
    pub rows: Vec<ResultRow>,
}

impl ScenarioResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER.split(','))?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.scenario.clone(),
                r.rep.to_string(),
                r.sweep.to_string(),
                r.method.to_string(),
                r.nmi.to_string(),
                r.miscluster.to_string(),
                opt(r.runtime_ms),
                r.converged.to_string(),
                opt(r.objective),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Mean of `f` over reps, per method and sweep value, in first-seen
    /// order of both.
    pub fn means<F: Fn(&ResultRow) -> f64>(&self, f: F) -> Vec<(Method, Vec<(f64, f64)>)> {
        let mut out: Vec<(Method, Vec<(f64, f64, usize)>)> = Vec::new();
        for r in &self.rows {
            let idx = match out.iter().position(|(m, _)| *m == r.method) {
                Some(i) => i,
                None => {
                    out.push((r.method, Vec::new()));
                    out.len() - 1
                }
            };
            let points = &mut out[idx].1;
            match points.iter_mut().find(|(x, _, _)| *x == r.sweep) {
                Some(p) => {
                    p.1 += f(r);
                    p.2 += 1;
                }
                None => points.push((r.sweep, f(r), 1)),
            }
        }
        out.into_iter()
            .map(|(m, pts)| (m, pts.into_iter().map(|(x, s, c)| (x, s / c as f64)).collect()))
            .collect()
    }
}

/// Seed of replication `rep`.
pub fn rep_seed(seed: u64, rep: usize) -> u64 {
    seed ^ rep as u64
}

/// Runs every (sweep point, rep) pair and every method. Within a
/// replication the model and sample seeds do not depend on the sweep
/// point, so neighbouring points share their random draws.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.sweep.len())
        .flat_map(|p| (0..cfg.reps).map(move |r| (p, r)))
        .collect();
    let per_job = jobs
        .par_iter()
        .map(|&(point, rep)| run_point(cfg, point, rep))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioResult {
        rows: per_job.into_iter().flatten().collect(),
    })
}

/// [`run_scenario`] on a dedicated pool of `threads` workers.
pub fn run_scenario_with_threads(cfg: &ScenarioConfig, threads: usize) -> Result<ScenarioResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_scenario(cfg))
}

fn run_point(cfg: &ScenarioConfig, point: usize, rep: usize) -> Result<Vec<ResultRow>> {
    let base = rep_seed(cfg.seed, rep);
    let model = cfg.model(point, seed::derive(base, 0))?;
    let layers: Vec<SymMatrix> = if cfg.population {
        model.population().into_layers()
    } else {
        model.sample(seed::derive(base, 1)).layers().to_vec()
    };
    let opts = DetectOptions {
        mode: cfg.mode,
        gamma_multiplier: cfg.gamma_multiplier,
        kmeans_restarts: cfg.kmeans_restarts,
        seed: seed::derive(base, 2),
    };
    let truth = model.membership();
    cfg.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let found = detect(&layers, cfg.k, method, &opts)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            Ok(ResultRow {
                scenario: cfg.scenario.to_string(),
                rep,
                sweep: cfg.sweep.value(point),
                method,
                nmi: nmi(truth, &found.partition)?,
                miscluster: misclustering_rate(truth, &found.partition)?,
                runtime_ms: cfg.record_runtime.then_some(elapsed),
                converged: found.converged,
                objective: found.objective,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig::from_json(
            r#"{"scenario": "strong", "n": 60, "k": 2, "layers": 3,
                "sweep": {"avg_degree": [10, 20]}, "reps": 2, "seed": 5,
                "methods": ["mean_adj", "module_allegiance"], "kmeans_restarts": 3}"#,
        )
        .unwrap()
    }

    #[test]
    fn config_rejects_bad_values() {
        let base = r#""n": 60, "k": 2, "layers": 3, "sweep": {"avg_degree": [10]}"#;
        for bad in [
            format!(r#"{{"scenario": "strong", {base}, "reps": 0}}"#),
            format!(r#"{{"scenario": "bogus", {base}, "reps": 1}}"#),
            format!(r#"{{"scenario": "strong", {base}, "reps": 1, "methods": ["louvain"]}}"#),
            format!(r#"{{"scenario": "strong", {base}, "reps": 1, "colour": 1}}"#),
            r#"{"scenario": "strong", "n": 60, "k": 2, "layers": 3, "sweep": {"avg_degree": []}, "reps": 1}"#.into(),
            r#"{"scenario": "strong", "n": 60, "k": 2, "layers": 3, "sweep": {"uninformative_count": [1]}, "reps": 1}"#
                .into(),
        ] {
            assert!(ScenarioConfig::from_json(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn rows_cover_the_grid_in_order() {
        let cfg = small();
        let res = run_scenario(&cfg).unwrap();
        assert_eq!(res.rows.len(), 2 * 2 * 2);
        let keys: Vec<_> = res.rows.iter().map(|r| (r.sweep as usize, r.rep, r.method)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let csv = res.to_csv().unwrap();
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(csv.lines().count(), 9);
        for r in &res.rows {
            assert!((0.0..=1.0).contains(&r.nmi) && (0.0..=1.0).contains(&r.miscluster));
            assert_eq!(r.runtime_ms, None);
        }
    }

    #[test]
    fn means_average_over_reps() {
        let res = run_scenario(&small()).unwrap();
        let means = res.means(|r| r.nmi);
        assert_eq!(means.len(), 2);
        let (method, points) = &means[0];
        let want: f64 = res
            .rows
            .iter()
            .filter(|r| r.method == *method && r.sweep == 10.0)
            .map(|r| r.nmi)
            .sum::<f64>()
            / 2.0;
        assert_eq!(points[0], (10.0, want));
    }
}
