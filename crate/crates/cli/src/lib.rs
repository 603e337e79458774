//! Command-line front end: argument parsing, configuration and artifact
//! writing. [`run`] returns the process exit code.

mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use condforest::coding::{contour_from_height, forest_from_walk, height_from_walk, tree_distance, walk_from_forest};
use condforest::conditioned::{sample_bridge_batch, sample_first_passage_bridge_walk, ConditionedForestSpec};
use condforest::forest::{sample_gw_forest_capped, Forest, DEFAULT_SIZE_CAP};
use condforest::invariance::{
    invariance_experiment, shift_exchangeability, uniform_passage_check, Calibration, ExperimentConfig,
    Thresholds, MARGINAL_TIMES,
};
use condforest::law::OffspringLaw;
use condforest::realtree::FiniteRealTree;
use condforest::stable::{conditioned_forest_by_rescaling, sample_stable_path, StableParams};
use condforest::{io, plot};

pub use config::Config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERDICT: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Library(#[from] condforest::Error),
    #[error("verdict failed: {0}")]
    Verdict(String),
}

#[derive(Parser, Debug)]
#[command(name = "condforest", version, about = "Conditioned Galton-Watson forests and stable forest simulation")]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample an unconditioned Galton-Watson forest
    SampleForest(SampleForestArgs),
    /// Sample a forest of k trees conditioned on n total vertices
    Condition(ConditionArgs),
    /// Convert a forest JSON or walk CSV into all codings
    Transform(TransformArgs),
    /// Simulate a stable path and rescale it into a conditioned forest
    StableSim(StableSimArgs),
    /// Statistical checks of the conditioned walk
    Verify(VerifyArgs),
    /// Rescaled codings against their continuum limit over several n
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Offspring law: binary, geometric, geometric:q, power:alpha or pmf:p0,p1,...
    #[arg(long)]
    law: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleForestArgs {
    #[command(flatten)]
    common: Common,
    /// Number of trees
    #[arg(long)]
    k: Option<usize>,
    /// Give up once the forest exceeds this many vertices
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args, Debug)]
struct ConditionArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    k: Option<u64>,
    /// Total number of vertices
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Args, Debug)]
struct TransformArgs {
    /// Forest JSON or walk CSV (`index,value`)
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the distance matrix of the first tree
    #[arg(long)]
    distances: Option<bool>,
}

#[derive(Args, Debug)]
struct StableSimArgs {
    #[arg(long)]
    alpha: Option<f64>,
    /// Level of the conditioned forest
    #[arg(long)]
    s: Option<f64>,
    /// Grid points on [0, horizon]
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Height approximation level (default grid_step^(1/(2 alpha)))
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated subset of uniformity, shift, commutation
    #[arg(long)]
    checks: Option<String>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    /// Comma-separated sizes
    #[arg(long)]
    n_values: Option<String>,
    /// Samples per n
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    ks_max: Option<f64>,
    #[arg(long)]
    ks_min_n: Option<u64>,
    #[arg(long)]
    trend_se: Option<f64>,
    #[arg(long)]
    sup_hc_factor: Option<f64>,
    #[arg(long)]
    reference_samples: Option<usize>,
    #[arg(long)]
    reference_grid: Option<usize>,
    #[arg(long)]
    calibration_samples: Option<usize>,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit code: 0 on success, 1 on invalid input, 2 when a
/// statistical verdict fails.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(CliError::Verdict(msg)) => {
            eprintln!("verdict failed: {msg}");
            EXIT_VERDICT
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::SampleForest(a) => sample_forest(a, &config),
        Command::Condition(a) => condition(a, &config),
        Command::Transform(a) => transform(a, &config),
        Command::StableSim(a) => stable_sim(a, &config),
        Command::Verify(a) => verify(a, &config),
        Command::Experiment(a) => experiment(a, &config),
    }
}

fn law(common: &Common, config: &Config) -> Result<OffspringLaw, CliError> {
    let spec: String = config.require(common.law.clone(), "law")?;
    spec.parse::<OffspringLaw>().map_err(|e| CliError::Validation(format!("--law {spec}: {e}")))
}

fn seed(flag: Option<u64>, config: &Config) -> Result<u64, CliError> {
    config
        .pick(flag, "seed")?
        .ok_or_else(|| CliError::Validation("--seed is required for stochastic commands".into()))
}

fn out_dir(flag: Option<PathBuf>, config: &Config) -> Result<PathBuf, CliError> {
    config.pick_or(flag, "out", PathBuf::from("."))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    io::write_file(dir, name, contents)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", dir.join(name).display())))
}

fn write_codings(dir: &Path, forest: &Forest) -> Result<(), CliError> {
    let walk = walk_from_forest(forest);
    let heights = height_from_walk(&walk);
    write(dir, "forest.json", &io::forest_to_json(forest)?)?;
    write(dir, "walk.csv", &io::lattice_path_to_csv(&walk)?)?;
    write(dir, "heights.csv", &io::height_to_csv(&heights)?)?;
    write(dir, "contour.csv", &io::contour_to_csv(&contour_from_height(&heights))?)?;
    Ok(())
}

fn sample_forest(a: SampleForestArgs, config: &Config) -> Result<(), CliError> {
    let law = law(&a.common, config)?;
    let k: usize = config.require(a.k, "k")?;
    let cap = config.pick_or(a.cap, "cap", DEFAULT_SIZE_CAP)?;
    let seed = seed(a.common.seed, config)?;
    let dir = out_dir(a.common.out, config)?;
    if k == 0 {
        return Err(CliError::Validation("--k must be positive".into()));
    }
    let forest = sample_gw_forest_capped(&law, k, seed, cap)?;
    write_codings(&dir, &forest)
}

fn condition(a: ConditionArgs, config: &Config) -> Result<(), CliError> {
    let law = law(&a.common, config)?;
    let k = config.require(a.k, "k")?;
    let n = config.require(a.n, "n")?;
    let spec = ConditionedForestSpec::new(law, k, n)?;
    let seed = seed(a.common.seed, config)?;
    let dir = out_dir(a.common.out, config)?;
    let walk = sample_first_passage_bridge_walk(&spec, seed)?;
    write(&dir, "forest.json", &io::forest_to_json(&forest_from_walk(&walk)?)?)?;
    write(&dir, "walk.csv", &io::lattice_path_to_csv(&walk)?)?;
    Ok(())
}

fn distance_matrix(forest: &Forest) -> Result<FiniteRealTree, CliError> {
    let tree = &forest.trees()[0];
    let m = tree.size();
    let dist = (0..m)
        .map(|a| (0..m).map(|b| tree_distance(tree, a, b).map(|d| d as f64)).collect())
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    let walk = walk_from_forest(&Forest::from(tree.clone()));
    let times = height_from_walk(&walk)
        .values()
        .iter()
        .enumerate()
        .map(|(i, &h)| (2 * i) as f64 - h as f64)
        .collect();
    Ok(FiniteRealTree { sample_times: times, dist })
}

fn transform(a: TransformArgs, config: &Config) -> Result<(), CliError> {
    let input: PathBuf = config.require(a.input, "input")?;
    let dir = out_dir(a.out, config)?;
    let text = io::read_file(&input)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", input.display())))?;
    let forest = if text.trim_start().starts_with('{') {
        io::forest_from_json(&text)?
    } else {
        forest_from_walk(&io::lattice_path_from_csv(&text)?)?
    };
    write_codings(&dir, &forest)?;
    if config.pick_or(a.distances, "distances", false)? {
        write(&dir, "distances.csv", &io::distance_matrix_to_csv(&distance_matrix(&forest)?)?)?;
    }
    Ok(())
}

fn stable_sim(a: StableSimArgs, config: &Config) -> Result<(), CliError> {
    let params = StableParams::new(config.require(a.alpha, "alpha")?)?;
    let s: f64 = config.pick_or(a.s, "s", 1.0)?;
    let grid_n = config.pick_or(a.grid_n, "grid-n", 100_001)?;
    let horizon = config.pick_or(a.horizon, "horizon", 1.0)?;
    let epsilon = config.pick(a.epsilon, "epsilon")?;
    let seed = seed(a.seed, config)?;
    let dir = out_dir(a.out, config)?;
    let path = sample_stable_path(params, horizon, grid_n, seed)?;
    write(&dir, "path.csv", &io::real_path_to_csv(&path)?)?;
    let summary = match conditioned_forest_by_rescaling(&path, params, s, epsilon) {
        Ok(f) => {
            write(&dir, "bridge.csv", &io::real_path_to_csv(&f.bridge)?)?;
            write(&dir, "heights.csv", &io::real_path_to_csv(&f.heights)?)?;
            json!({
                "alpha": params.alpha(),
                "s": s,
                "seed": seed,
                "grid_step": path.grid_step(),
                "g": f.g,
                "terminal": f.bridge.values().last(),
                "terminal_tolerance": f.terminal_tolerance,
                "epsilon": f.epsilon,
                "excursions": f.excursions.excursions.len(),
            })
        }
        Err(condforest::Error::NoCrossing) => {
            eprintln!("no crossing of the level curve on [0, 1]; only the path was written");
            json!({ "alpha": params.alpha(), "s": s, "seed": seed, "grid_step": path.grid_step(), "g": null })
        }
        Err(e) => return Err(e.into()),
    };
    write(&dir, "summary.json", &io::to_json(&summary)?)
}

fn verify(a: VerifyArgs, config: &Config) -> Result<(), CliError> {
    let law = law(&a.common, config)?;
    let k = config.require(a.k, "k")?;
    let n = config.require(a.n, "n")?;
    let trials: usize = config.pick_or(a.trials, "trials", 10_000)?;
    let checks: String = config.pick_or(a.checks, "checks", "uniformity,shift,commutation".to_string())?;
    let seed = seed(a.common.seed, config)?;
    let dir = out_dir(a.common.out, config)?;
    let spec = ConditionedForestSpec::new(law, k, n)?;
    if trials == 0 {
        return Err(CliError::Validation("--trials must be positive".into()));
    }

    let mut results = serde_json::Map::new();
    let mut verdicts = serde_json::Map::new();
    for check in checks.split(',').map(str::trim) {
        match check {
            "uniformity" => {
                let r = uniform_passage_check(&spec, trials, seed)?;
                verdicts.insert(check.into(), json!(r.p_value > 1e-3));
                results.insert(check.into(), serde_json::to_value(r).map_err(condforest::Error::from)?);
            }
            "shift" => {
                let a_n = (spec.law.variance() * n as f64 / 2.0).sqrt().max(1.0);
                let rows = shift_exchangeability(&spec, a_n, trials, &MARGINAL_TIMES, seed)?;
                verdicts.insert(check.into(), json!(rows.iter().all(|r| r.walk_p > 1e-3 && r.height_p > 1e-3)));
                results.insert(check.into(), serde_json::to_value(rows).map_err(condforest::Error::from)?);
            }
            "commutation" => {
                let paths = sample_bridge_batch(&spec, trials, seed)?;
                let mut bad = 0;
                for (i, p) in paths.iter().enumerate() {
                    if !condforest::coding::height_of_shift_check(p, i as u64 % (k + 1))? {
                        bad += 1;
                    }
                }
                verdicts.insert(check.into(), json!(bad == 0));
                results.insert(check.into(), json!({ "paths": trials, "mismatches": bad }));
            }
            other => return Err(CliError::Validation(format!("unknown check `{other}`"))),
        }
    }
    let passed = verdicts.values().all(|v| v == &json!(true));
    let report = json!({
        "config": { "law": spec.law.to_string(), "k": k, "n": n, "trials": trials, "seed": seed },
        "results": results,
        "verdicts": verdicts,
    });
    write(&dir, "verify.json", &io::to_json(&report)?)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Verdict(format!("see {}", dir.join("verify.json").display())))
    }
}

fn parse_list(raw: &str) -> Result<Vec<u64>, CliError> {
    raw.split(',')
        .map(|s| s.trim().parse().map_err(|e| CliError::Validation(format!("--n-values `{s}`: {e}"))))
        .collect()
}

fn experiment(a: ExperimentArgs, config: &Config) -> Result<(), CliError> {
    let law = law(&a.common, config)?;
    let defaults = Thresholds::default();
    let n_values: String = config.pick_or(a.n_values, "n-values", "1000,10000".to_string())?;
    let mut exp = ExperimentConfig::new(
        law,
        config.pick_or(a.alpha, "alpha", 2.0)?,
        config.pick_or(a.s, "s", 1.0)?,
        parse_list(&n_values)?,
        config.pick_or(a.samples, "samples", 200)?,
        seed(a.common.seed, config)?,
    );
    exp.thresholds = Thresholds {
        ks_max: config.pick_or(a.ks_max, "ks-max", defaults.ks_max)?,
        ks_min_n: config.pick_or(a.ks_min_n, "ks-min-n", defaults.ks_min_n)?,
        trend_se: config.pick_or(a.trend_se, "trend-se", defaults.trend_se)?,
        sup_hc_factor: config.pick_or(a.sup_hc_factor, "sup-hc-factor", defaults.sup_hc_factor)?,
    };
    exp.reference_samples = config.pick_or(a.reference_samples, "reference-samples", exp.reference_samples)?;
    exp.reference_grid = config.pick_or(a.reference_grid, "reference-grid", exp.reference_grid)?;
    exp.calibration = Calibration {
        samples: config.pick_or(a.calibration_samples, "calibration-samples", Calibration::default().samples)?,
        ..Calibration::default()
    };
    let dir = out_dir(a.common.out, config)?;
    let report = invariance_experiment(&exp)?;
    write(&dir, "report.json", &io::report_to_json(&report)?)?;
    write(&dir, "report.csv", &io::report_to_csv(&report)?)?;
    write(&dir, "ks.svg", &plot::ks_chart(&report))?;
    write(&dir, "sup_hc.svg", &plot::sup_hc_chart(&report))?;
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.verdicts.iter().filter(|(_, &v)| !v).map(|(k, _)| k.as_str()).collect();
        Err(CliError::Verdict(failed.join(", ")))
    }
}
