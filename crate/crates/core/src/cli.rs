//! Command-line front end.
//!
//! Exit codes: 0 success, 1 other errors, 2 invalid game spec, 3 payoff
//! family without a value oracle.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::descriptor::{build_pair, parse_descriptor, BuildContext, GameFile, SigmaDescriptor, TauDescriptor};
use crate::error::{Error, Result};
use crate::gap::{example1_gap, GapConfig};
use crate::game::Belief;
use crate::simulate::{
    estimate_payoff_detailed, write_episodes_csv, write_summary_json, write_trajectory_csv, SimConfig,
};
use crate::solver::envelope::{concavify, ConcaveEnvelope};
use crate::solver::value::uniform_grid;
use crate::strategy::{oracle_for, ExploitParams, NrOracle};

#[derive(Debug, Parser)]
#[command(name = "tailcav", version, about = "Repeated games with incomplete information on one side")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Value u(p) of the non-revealing game on a grid, as CSV.
    Nrvalue(NrValueArgs),
    /// Concavification at a belief, with the achieving split.
    Cav(CavArgs),
    /// Monte Carlo estimate of the payoff of a strategy pair.
    Simulate(SimulateArgs),
    /// The maxmin/minmax gap experiment of the l/r example at p = 1/2.
    #[command(name = "example1-gap")]
    Example1Gap(GapArgs),
}

#[derive(Debug, Args)]
pub struct NrValueArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub mesh: f64,
    /// Also sample the kinks of u, so the grid concavifies exactly.
    #[arg(long)]
    pub with_kinks: bool,
    /// Directory for nrvalue.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CavArgs {
    /// Game file; u is sampled through its oracle.
    #[arg(long, conflicts_with = "samples", required_unless_present = "samples")]
    pub spec: Option<PathBuf>,
    /// CSV of samples as written by `nrvalue`.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Query belief: `p` (probability of the first state) for two states,
    /// otherwise comma-separated coordinates.
    #[arg(long)]
    pub p: String,
    #[arg(long, default_value_t = 0.01)]
    pub mesh: f64,
    /// Directory for breakpoints.csv (two states only).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Player I descriptor: inline JSON or a file.
    #[arg(long)]
    pub sigma: String,
    /// Player II descriptor: inline JSON or a file.
    #[arg(long)]
    pub tau: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 10_000)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    pub mesh: f64,
    #[arg(long, default_value_t = 64)]
    pub rollouts: usize,
    /// Allocate episodes to states in proportion to the prior.
    #[arg(long)]
    pub stratify: bool,
    /// Record belief trajectories (written to trajectory.csv).
    #[arg(long)]
    pub trajectory: bool,
    #[arg(long)]
    pub no_lasso: bool,
    /// Directory for summary.json, episodes.csv and trajectory.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 10_000)]
    pub episodes: usize,
    /// Horizon for pairings that never become periodic.
    #[arg(long, default_value_t = 2_000)]
    pub mixed_horizon: usize,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    pub mesh: f64,
    #[arg(long, default_value_t = 20)]
    pub switch_stage: usize,
    #[arg(long, default_value_t = 16)]
    pub rollouts: usize,
    #[arg(long, default_value_t = 500)]
    pub rollout_horizon: usize,
    /// Use the density payoff instead.
    #[arg(long)]
    pub example2: bool,
    /// Directory for gap.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) => 2,
        Error::NoOracle(_) => 3,
        _ => 1,
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    execute(cli.command, out)
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Nrvalue(a) => nrvalue(a, out),
        Command::Cav(a) => cav(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Example1Gap(a) => gap(a, out),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn header(num_states: usize) -> Vec<String> {
    let mut h: Vec<String> = if num_states == 2 {
        vec!["p".into()]
    } else {
        (0..num_states).map(|k| format!("p{k}")).collect()
    };
    h.push("u".into());
    h
}

fn row(q: &Belief, value: f64) -> Vec<String> {
    let mut r: Vec<String> = if q.len() == 2 {
        vec![q.get(0).to_string()]
    } else {
        q.as_slice().iter().map(|x| x.to_string()).collect()
    };
    r.push(value.to_string());
    r
}

fn load_oracle(path: &Path) -> Result<Box<dyn NrOracleBox>> {
    let (spec, f) = GameFile::load(path)?.build()?;
    Ok(Box::new(oracle_for(&f, &spec)?))
}

// Keeps `load_oracle`'s signature independent of the Arc.
trait NrOracleBox {
    fn get(&self) -> &dyn NrOracle;
}

impl NrOracleBox for std::sync::Arc<dyn NrOracle> {
    fn get(&self) -> &dyn NrOracle {
        self.as_ref()
    }
}

fn sorted_grid(num_states: usize, mesh: f64, extra: &[Belief]) -> Result<Vec<Belief>> {
    let mut grid = uniform_grid(num_states, mesh)?;
    for q in extra {
        if !grid.iter().any(|g| g.linf_distance(q) < 1e-12) {
            grid.push(q.clone());
        }
    }
    if num_states == 2 {
        grid.sort_by(|a, b| a.get(0).total_cmp(&b.get(0)));
    }
    Ok(grid)
}

fn nrvalue(a: NrValueArgs, out: &mut dyn Write) -> Result<()> {
    let oracle = load_oracle(&a.spec)?;
    let oracle = oracle.get();
    let extra = if a.with_kinks { oracle.breakpoints() } else { Vec::new() };
    let grid = sorted_grid(oracle.num_states(), a.mesh, &extra)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header(oracle.num_states()))?;
        for q in &grid {
            w.write_record(row(q, oracle.value(q)?))?;
        }
        w.flush()?;
    }
    out.write_all(&buf)?;
    if let Some(dir) = a.out {
        ensure_dir(&dir)?;
        fs::write(dir.join("nrvalue.csv"), &buf)?;
    }
    Ok(())
}

/// Reads `p,u` or `p0,…,p{K-1},u` rows.
pub fn read_samples(path: &Path) -> Result<(Vec<Belief>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let width = r.headers()?.len();
    if width < 2 {
        return Err(Error::InvalidParameter("sample CSV needs belief and value columns".into()));
    }
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let nums = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidParameter(format!("{s}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let (coords, value) = nums.split_at(width - 1);
        let q = if width == 2 {
            Belief::two_state(coords[0])?
        } else {
            Belief::new(coords.to_vec())?
        };
        grid.push(q);
        values.push(value[0]);
    }
    Ok((grid, values))
}

fn parse_query(p: &str, num_states: usize) -> Result<Belief> {
    let nums = p
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidParameter(format!("{s}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let q = match (num_states, nums.len()) {
        (2, 1) => Belief::two_state(nums[0]),
        (n, m) if n == m => Belief::new(nums),
        _ => return Err(Error::OutsideSimplex(format!("{p} is not a belief over {num_states} states"))),
    };
    q.map_err(|e| Error::OutsideSimplex(e.to_string()))
}

#[derive(Serialize)]
struct CavReport {
    p: Vec<f64>,
    value: f64,
    weights: Vec<f64>,
    posteriors: Vec<Belief>,
    u_values: Vec<f64>,
}

fn cav(a: CavArgs, out: &mut dyn Write) -> Result<()> {
    let (grid, values) = match (&a.spec, &a.samples) {
        (Some(spec), _) => {
            let oracle = load_oracle(spec)?;
            let oracle = oracle.get();
            let grid = sorted_grid(oracle.num_states(), a.mesh, &oracle.breakpoints())?;
            let values = grid.iter().map(|q| oracle.value(q)).collect::<Result<Vec<_>>>()?;
            (grid, values)
        }
        (None, Some(path)) => read_samples(path)?,
        (None, None) => return Err(Error::InvalidParameter("--spec or --samples is required".into())),
    };
    let env: ConcaveEnvelope = concavify(&grid, &values)?;
    let q = parse_query(&a.p, env.num_states())?;
    let split = env.split(&q)?;
    let report = CavReport {
        p: q.as_slice().to_vec(),
        value: env.eval(&q)?,
        weights: split.iter().map(|s| s.weight).collect(),
        posteriors: split.iter().map(|s| s.point.clone()).collect(),
        u_values: split.iter().map(|s| s.value).collect(),
    };
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)?;
    if let (Some(dir), Some(points)) = (a.out, env.breakpoints()) {
        ensure_dir(&dir)?;
        let mut w = csv::Writer::from_path(dir.join("breakpoints.csv"))?;
        w.write_record(["p", "cav"])?;
        for (p, v) in points {
            w.write_record([p.to_string(), v.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    payoff: String,
    config: &'a SimConfig,
    #[serde(flatten)]
    result: crate::simulate::SimResult,
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let (spec, f) = GameFile::load(&a.spec)?.build()?;
    let sigma: SigmaDescriptor = parse_descriptor(&a.sigma)?;
    let tau: TauDescriptor = parse_descriptor(&a.tau)?;
    let ctx = BuildContext {
        mesh: a.mesh,
        epsilon: a.epsilon,
        seed: a.seed,
        exploit: ExploitParams {
            rollouts: a.rollouts,
            seed: a.seed,
            ..ExploitParams::default()
        },
        ..BuildContext::new(spec.clone(), f.clone())
    };
    let (sigma, tau) = build_pair(&ctx, &sigma, &tau)?;
    let config = SimConfig {
        horizon: a.horizon,
        episodes: a.episodes,
        master_seed: a.seed,
        lasso_detection: !a.no_lasso,
        exploit_rollouts: a.rollouts,
        stratify_states: a.stratify,
        capture_trajectory: a.trajectory,
    };
    let (result, episodes) = estimate_payoff_detailed(&spec, &f, sigma.as_ref(), tau.as_ref(), &config)?;
    let report = SimulateReport {
        payoff: f.name(),
        config: &config,
        result,
    };
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)?;
    if let Some(dir) = a.out {
        ensure_dir(&dir)?;
        write_summary_json(&dir.join("summary.json"), &report)?;
        write_episodes_csv(fs::File::create(dir.join("episodes.csv"))?, &episodes)?;
        if a.trajectory {
            write_trajectory_csv(fs::File::create(dir.join("trajectory.csv"))?, spec.num_states(), &episodes)?;
        }
    }
    Ok(())
}

fn gap(a: GapArgs, out: &mut dyn Write) -> Result<()> {
    let config = GapConfig {
        sim: SimConfig {
            horizon: a.horizon,
            episodes: a.episodes,
            master_seed: a.seed,
            exploit_rollouts: a.rollouts,
            ..SimConfig::default()
        },
        mixed_horizon: a.mixed_horizon,
        epsilon: a.epsilon,
        mesh: a.mesh,
        example2: a.example2,
        exploit: ExploitParams {
            switch_stage: a.switch_stage,
            rollouts: a.rollouts,
            rollout_horizon: a.rollout_horizon,
            seed: a.seed,
        },
    };
    let report = example1_gap(&config)?;
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)?;
    if let Some(dir) = a.out {
        ensure_dir(&dir)?;
        write_summary_json(&dir.join("gap.json"), &report)?;
    }
    Ok(())
}
