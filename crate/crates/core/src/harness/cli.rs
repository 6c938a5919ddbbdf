//! The `multiplex` command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use super::{nmi_chart, run_scenario, run_scenario_with_threads, ScenarioConfig, Sweep};
use crate::error::{invalid, Result};
use crate::graph::MultiLayerGraph;
use crate::methods::{detect, DetectOptions, Method};
use crate::mlsbm::{scenario_blocks, BlockModel, FourParamSpec, Scenario, ScenarioParams};
use crate::spectral::{Mode, Partition};
use crate::theory::{
    mean_deviation_check, misclustering_bounds, squared_deviation_check, theory_quantities, DeviationReport,
    MisclusteringBounds, TheoryQuantities,
};

#[derive(Debug, Parser)]
#[command(name = "multiplex", version, about = "Consensus community detection in multi-layer networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a scenario instance; writes graph.edges and truth.txt.
    Generate(GenerateArgs),
    /// Detect communities in an edge-list file.
    Detect(DetectArgs),
    /// Run a simulation config and write CSV.
    Simulate(SimulateArgs),
    /// Concentration checks and misclustering bounds for a four-parameter model.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value = "strong")]
    scenario: Scenario,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    layers: usize,
    #[arg(long, default_value_t = 10.0)]
    avg_degree: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Edge-list file: an `n M` header, then one `layer u v` line per edge.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    method: Method,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = Mode::Algebraic)]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Labels file, one integer per line; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Restricts the run to these methods.
    #[arg(long)]
    method: Vec<Method>,
    /// Overrides the config mode.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    threads: Option<usize>,
    /// CSV path; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a chart of mean NMI per method.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Within-community probability per layer; one value is used for every layer.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    /// Between-community probability per layer.
    #[arg(long, value_delimiter = ',', required = true)]
    q: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    layers: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Community size.
    #[arg(long, default_value_t = 100)]
    s: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON report path; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    quantities: TheoryQuantities,
    bounds: Bounds,
    mean_deviation: DeviationReport,
    squared_deviation: DeviationReport,
}

#[derive(Debug, Serialize)]
struct Bounds {
    coreg: Option<f64>,
    olmf: Option<f64>,
    mean_adj: Option<f64>,
    zero_gap: bool,
}

impl From<MisclusteringBounds> for Bounds {
    fn from(b: MisclusteringBounds) -> Self {
        // JSON has no infinity
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            coreg: finite(b.coreg_bound),
            olmf: finite(b.olmf_bound),
            mean_adj: finite(b.mean_adj_bound),
            zero_gap: b.zero_gap,
        }
    }
}

/// Parses `argv` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 2 on a usage error, 1 on a failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Detect(a) => detect_cmd(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn labels_text(p: &Partition) -> String {
    p.labels().iter().map(|l| format!("{l}\n")).collect()
}

fn generate(a: GenerateArgs) -> Result<()> {
    let params = ScenarioParams {
        n: a.n,
        k: a.k,
        layers: a.layers,
        avg_degree: a.avg_degree,
    };
    let model = scenario_blocks(a.scenario, &params, a.seed)?;
    let graph = model.sample(a.seed);
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("graph.edges"), graph.to_edge_list())?;
    fs::write(a.out.join("truth.txt"), labels_text(model.membership()))?;
    Ok(())
}

fn detect_cmd(a: DetectArgs) -> Result<()> {
    let graph = MultiLayerGraph::from_edge_list(&fs::read_to_string(&a.input)?)?;
    let opts = DetectOptions {
        mode: a.mode,
        seed: a.seed,
        ..Default::default()
    };
    let found = detect(&graph, a.k, a.method, &opts)?;
    write_out(a.out.as_deref(), &labels_text(&found.partition))
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = ScenarioConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if !a.method.is_empty() {
        cfg.methods = a.method;
    }
    if let Some(mode) = a.mode {
        cfg.mode = mode;
    }
    let result = match a.threads {
        Some(t) if t > 0 => run_scenario_with_threads(&cfg, t)?,
        Some(_) => return Err(invalid("--threads must be at least 1")),
        None => run_scenario(&cfg)?,
    };
    write_out(a.out.as_deref(), &result.to_csv()?)?;
    if let Some(path) = a.svg {
        let label = match cfg.sweep {
            Sweep::AvgDegree(_) => "average degree",
            Sweep::Layers(_) => "layers",
            Sweep::UninformativeCount(_) => "uninformative layers",
            Sweep::UninformativeDensity(_) => "uninformative density",
        };
        fs::write(path, nmi_chart(&result, label))?;
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<()> {
    let widen = |v: Vec<f64>| if v.len() == 1 { vec![v[0]; a.layers] } else { v };
    let (p, q) = (widen(a.p), widen(a.q));
    let model = BlockModel::four_param(&FourParamSpec::new(p, q, a.k, a.s)?)?;
    let quantities = theory_quantities(&model)?;
    let bounds = misclustering_bounds(&quantities, model.n(), model.num_layers(), a.k, a.eps)?;
    let report = VerifyReport {
        bounds: bounds.into(),
        mean_deviation: mean_deviation_check(&model, a.reps, a.eps, a.seed)?,
        squared_deviation: squared_deviation_check(&model, a.reps, a.seed)?,
        quantities,
    };
    write_out(a.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))
}
