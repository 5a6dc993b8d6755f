//! Command-line front end. Each subcommand writes CSV files plus a
//! `manifest.json` into an output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    adaptation_rate, cumulative_utility, direction_field, mean_cumulative_utility, monte_carlo, run, DynamicsError,
    FadingSchedule, InitialVelocity, MonteCarloConfig, RunConfig,
};
use crate::fraccalc::FracError;
use crate::game::{GameError, GameModel};
use crate::scenarios::{load_scenario, LoadedScenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Default output directory when `--out-dir` is absent.
pub const OUT_DIR_ENV: &str = "FRACGAME_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "fracgame", version, about = "Fractional replicator dynamics for HetNet selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory; writes trajectory.csv, adaptation.csv, cumulative.csv.
    Simulate(SimulateArgs),
    /// Replicator field on a simplex grid; writes field.csv.
    DirectionField(FieldArgs),
    /// Cumulative-utility loss under fading; writes montecarlo.csv.
    Montecarlo(MonteCarloArgs),
    /// Load and validate a scenario, printing a summary.
    ScenarioValidate(ValidateArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Preset name or scenario file path
    #[arg(long)]
    scenario: String,
    /// Output directory
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    out_dir: PathBuf,
    /// Time step in seconds (default: scenario)
    #[arg(long)]
    step: Option<f64>,
    /// Horizon in seconds (default: scenario)
    #[arg(long)]
    horizon: Option<f64>,
    /// Rate gain exponent δ (default: scenario)
    #[arg(long)]
    delta: Option<f64>,
    /// y′(0) for β > 1
    #[arg(long, value_enum, default_value_t = VelocityArg::Zero)]
    initial_velocity: VelocityArg,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum VelocityArg {
    Zero,
    Classical,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Fractional order (default: scenario)
    #[arg(long)]
    beta: Option<f64>,
    /// Redraw Exp(1) fading gains every --fade-period seconds
    #[arg(long)]
    fading: bool,
    #[arg(long, default_value_t = 0.01)]
    fade_period: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Moving-average width in nodes for adaptation.csv
    #[arg(long, default_value_t = 11)]
    smoothing_width: usize,
}

#[derive(Debug, Args)]
struct FieldArgs {
    #[command(flatten)]
    common: Common,
    /// Fractional order of the run that places the equilibrium marker
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 15)]
    resolution: usize,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated fractional orders
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.7, 1.0, 1.3])]
    betas: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 0.01)]
    delta_fade: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use h ≡ 1 in every replicate
    #[arg(long)]
    no_fading: bool,
    /// Worker threads (default: available parallelism; results do not depend on it)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: String,
    /// Print the scenario in normalised SI form
    #[arg(long)]
    print_toml: bool,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match &e {
            DynamicsError::Solver(FracError::NonFinite { .. } | FracError::NonConvergence { .. })
            | DynamicsError::NotConverged { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::DirectionField(a) => field(&a),
        Command::Montecarlo(a) => montecarlo(&a),
        Command::ScenarioValidate(a) => validate(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("fracgame: {e}");
            e.code()
        }
    }
}

fn load(name: &str) -> Result<(LoadedScenario, GameModel), CliError> {
    let loaded = load_scenario(name).map_err(|e| CliError::Config(e.to_string()))?;
    let model = GameModel::compile(&loaded.scenario)?;
    Ok((loaded, model))
}

fn base_config(loaded: &LoadedScenario, common: &Common, beta: Option<f64>) -> RunConfig {
    let mut cfg = RunConfig::from_scenario(&loaded.scenario);
    if let Some(b) = beta {
        cfg.beta = b;
    }
    if let Some(s) = common.step {
        cfg.step = s;
    }
    if let Some(h) = common.horizon {
        cfg.horizon = h;
    }
    if let Some(d) = common.delta {
        cfg.delta = d;
    }
    cfg.initial_velocity = match common.initial_velocity {
        VelocityArg::Zero => InitialVelocity::Zero,
        VelocityArg::Classical => InitialVelocity::ClassicalRate,
    };
    cfg
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let encode = |e: csv::Error| CliError::Config(format!("csv encoding: {e}"));
    w.write_record(header).map_err(encode)?;
    for row in rows {
        w.write_record(&row).map_err(encode)?;
    }
    w.into_inner().map_err(|e| CliError::Config(format!("csv encoding: {e}")))
}

/// Collects output files; every file is written to a temporary name and
/// renamed into place.
struct Outputs {
    dir: PathBuf,
    files: Vec<Value>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| io_error(&path, e))
    }

    fn add(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.write_atomic(name, bytes)?;
        self.files.push(json!({ "file": name, "sha256": sha256_hex(bytes) }));
        Ok(())
    }

    fn finish(self, command: &str, loaded: &LoadedScenario, parameters: Value) -> Result<(), CliError> {
        let manifest = json!({
            "tool": "fracgame",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "scenario": {
                "source": loaded.origin,
                "name": loaded.scenario.name,
                "sha256": sha256_hex(&loaded.source),
            },
            "parameters": parameters,
            "outputs": self.files,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        self.write_atomic("manifest.json", text.as_bytes())
    }
}

fn run_parameters(cfg: &RunConfig) -> Value {
    json!({
        "beta": cfg.beta,
        "delta": cfg.delta,
        "step": cfg.step,
        "horizon": cfg.horizon,
        "initial": cfg.initial,
        "initial_velocity": match cfg.initial_velocity {
            InitialVelocity::Zero => "zero",
            InitialVelocity::ClassicalRate => "classical",
            InitialVelocity::Explicit(_) => "explicit",
        },
        "corrector_iterations": cfg.corrector_iterations,
    })
}

fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let (loaded, model) = load(&a.common.scenario)?;
    let mut cfg = base_config(&loaded, &a.common, a.beta);
    if a.fading {
        cfg.fading = FadingSchedule::Redraw {
            period: a.fade_period,
            seed: a.seed,
        };
    }
    let traj = run(&model, &cfg)?;
    let layout = &traj.layout;

    let mut header = vec!["t".to_string()];
    header.extend(layout.column_names());
    header.extend(layout.blocks.iter().map(|b| format!("avg.{}", b.owner)));
    let rows = (0..traj.nodes()).map(|n| {
        let mut row = vec![num(traj.times[n])];
        row.extend(traj.state(n).iter().map(|&v| num(v)));
        row.extend((0..layout.blocks.len()).map(|b| num(traj.avg_utility(n, b))));
        row
    });
    let trajectory = csv_bytes(&header, rows)?;

    let rate = adaptation_rate(&traj, a.smoothing_width);
    let adaptation = csv_bytes(
        &["t".into(), "rate".into()],
        traj.times.iter().zip(&rate).map(|(&t, &r)| vec![num(t), num(r)]),
    )?;

    let per_owner: Vec<Vec<f64>> = layout
        .blocks
        .iter()
        .map(|b| cumulative_utility(&traj, &b.owner))
        .collect::<Result<_, _>>()?;
    let mean = mean_cumulative_utility(&traj);
    let mut header = vec!["t".to_string()];
    header.extend(layout.blocks.iter().map(|b| format!("cum.{}", b.owner)));
    header.push("cum.mean".into());
    let rows = (0..traj.nodes()).map(|n| {
        let mut row = vec![num(traj.times[n])];
        row.extend(per_owner.iter().map(|s| num(s[n])));
        row.push(num(mean[n]));
        row
    });
    let cumulative = csv_bytes(&header, rows)?;

    let mut out = Outputs::new(&a.common.out_dir)?;
    out.add("trajectory.csv", &trajectory)?;
    out.add("adaptation.csv", &adaptation)?;
    out.add("cumulative.csv", &cumulative)?;
    let mut params = run_parameters(&cfg);
    params["fading"] = json!(a.fading);
    params["fade_period"] = json!(a.fade_period);
    params["seed"] = json!(a.seed);
    params["smoothing_width"] = json!(a.smoothing_width);
    params["drift_corrections"] = json!(traj.drift_corrections);
    out.finish("simulate", &loaded, params)
}

fn field(a: &FieldArgs) -> Result<(), CliError> {
    let (loaded, model) = load(&a.common.scenario)?;
    let cfg = base_config(&loaded, &a.common, a.beta);
    // the marker is the state of a β-run at the horizon; the field itself is β-free
    let marker = run(&model, &cfg)?;
    let df = direction_field(&model, cfg.delta, a.resolution, marker.final_state())?;
    let header: Vec<String> = ["y_u", "y_m", "dy_u", "dy_m", "is_equilibrium"].map(String::from).to_vec();
    let grid = df
        .points
        .iter()
        .zip(&df.vectors)
        .map(|(p, v)| vec![num(p[0]), num(p[1]), num(v[0]), num(v[1]), "0".into()]);
    let eq = std::iter::once(vec![
        num(df.equilibrium[0]),
        num(df.equilibrium[1]),
        num(df.equilibrium_vector[0]),
        num(df.equilibrium_vector[1]),
        "1".into(),
    ]);
    let bytes = csv_bytes(&header, grid.chain(eq))?;
    let mut out = Outputs::new(&a.common.out_dir)?;
    out.add("field.csv", &bytes)?;
    let mut params = run_parameters(&cfg);
    params["resolution"] = json!(a.resolution);
    out.finish("direction-field", &loaded, params)
}

fn beta_label(beta: f64) -> String {
    format!("{beta:?}")
}

fn montecarlo(a: &MonteCarloArgs) -> Result<(), CliError> {
    let (loaded, model) = load(&a.common.scenario)?;
    if a.betas.is_empty() {
        return Err(CliError::Config("--betas needs at least one value".into()));
    }
    let mc = MonteCarloConfig {
        replicates: a.replicates,
        delta_fade: a.delta_fade,
        base_seed: a.seed,
        fading: !a.no_fading,
        threads: a.threads,
    };
    let mut reports = Vec::new();
    for &beta in &a.betas {
        let cfg = base_config(&loaded, &a.common, Some(beta));
        reports.push(monte_carlo(&model, &cfg, &mc)?);
    }
    let mut header = vec!["t".to_string()];
    for r in &reports {
        let b = beta_label(r.beta);
        for col in ["mean", "std", "baseline", "loss"] {
            header.push(format!("{col}.beta{b}"));
        }
    }
    let times = &reports[0].times;
    let rows = (0..times.len()).map(|n| {
        let mut row = vec![num(times[n])];
        for r in &reports {
            row.extend([
                num(r.mean_cumulative_utility[n]),
                num(r.std_cumulative_utility[n]),
                num(r.baseline_cumulative_utility[n]),
                num(r.loss[n]),
            ]);
        }
        row
    });
    let bytes = csv_bytes(&header, rows)?;
    let mut out = Outputs::new(&a.common.out_dir)?;
    out.add("montecarlo.csv", &bytes)?;
    let mut params = run_parameters(&base_config(&loaded, &a.common, None));
    params["betas"] = json!(a.betas);
    params["replicates"] = json!(a.replicates);
    params["delta_fade"] = json!(a.delta_fade);
    params["seed"] = json!(a.seed);
    params["fading"] = json!(!a.no_fading);
    out.finish("montecarlo", &loaded, params)
}

fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    let (loaded, model) = load(&a.scenario)?;
    let s = &loaded.scenario;
    if a.print_toml {
        print!("{}", s.to_toml());
        return Ok(());
    }
    println!("scenario {:?}: {:?}", s.name, s.kind);
    println!("sha256 {}", sha256_hex(&loaded.source));
    println!("{} base stations, {} users, {} strategy coordinates", s.base_stations.len(), s.users.len(), model.dim());
    for (i, u) in s.users.iter().enumerate() {
        println!("  {} covered by {}", u.id, s.coverage[i].join(", "));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        run_cli(std::iter::once("fracgame").chain(args.iter().copied()))
    }

    #[test]
    fn exit_codes() {
        assert_eq!(code(&["scenario-validate", "--scenario", "homogeneous-paper"]), EXIT_OK);
        assert_eq!(code(&["scenario-validate", "--scenario", "/no/such/file.toml"]), EXIT_CONFIG);
        assert_eq!(code(&["bogus"]), EXIT_CONFIG);
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().to_str().unwrap();
        assert_eq!(
            code(&["simulate", "--scenario", "homogeneous-paper", "--beta", "0.99", "--horizon", "0", "--out-dir", d]),
            EXIT_CONFIG
        );
        assert!(!dir.path().join("manifest.json").exists());
    }

    #[test]
    fn solver_abort_maps_to_numerical_exit() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().to_str().unwrap();
        let args = [
            "simulate", "--scenario", "homogeneous-paper", "--beta", "1.3", "--horizon", "10", "--initial-velocity",
            "classical", "--out-dir", d,
        ];
        assert_eq!(code(&args), EXIT_NUMERICAL);
    }
}
