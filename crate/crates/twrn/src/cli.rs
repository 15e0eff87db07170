use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use twrn_core::allocator::{
    brute_force_oracle, random_problem, solve_slot, RelayInput, SlotProblem, DEFAULT_ORACLE_BUDGET,
};
use twrn_core::engine::{run_episode_with_table, run_episodes, sweep, EpisodeMetrics, PolicyKind, SimConfig, SweepParam};
use twrn_core::fading::{sample_gain_table, GainPair};
use twrn_core::queues::RelayState;

use crate::config;
use crate::error::CliError;
use crate::files::{self, OracleRow};
use crate::format::sig9;

#[derive(Debug, Parser)]
#[command(name = "twrn", version, about = "Buffer-aided two-way relay selection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// `key = value` config file; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Config override `key=value`, repeatable; applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run episodes and write metrics.json, trajectory.csv and gains.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: Option<String>,
        /// Use this `slot,relay,g_sr,g_rd` table instead of sampling.
        #[arg(long)]
        gains: Option<PathBuf>,
    },
    /// Mean throughput across values of one parameter, on shared channels.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// B_max, E_max, p_max, K or N.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        policy: Option<String>,
    },
    /// Solve one slot and dump the dual iteration trace.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Seed of the random instance (defaults to the run seed).
        #[arg(long)]
        instance_seed: Option<u64>,
        /// All gains, buffers and batteries zero instead of a random instance.
        #[arg(long, conflicts_with = "instance_seed")]
        zero_instance: bool,
    },
    /// Compare the slot solver with exhaustive grid search.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, short = 'K', default_value_t = 2)]
        relays: usize,
        #[arg(long, default_value_t = 25)]
        grid: usize,
        /// Largest tolerated relative shortfall of the solver.
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
}

/// Parses arguments and runs; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("twrn: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { common, policy, gains } => simulate(&common, policy.as_deref(), gains.as_deref()),
        Command::Sweep { common, param, values, policy } => run_sweep(&common, &param, &values, policy.as_deref()),
        Command::Converge { common, instance_seed, zero_instance } => converge(&common, instance_seed, zero_instance),
        Command::OracleCheck { common, count, relays, grid, tolerance } => {
            oracle_check(&common, count, relays, grid, tolerance)
        }
    }
}

/// Defaults, then the config file, then `--set`, then dedicated flags.
pub fn resolve(common: &Common, policy: Option<&str>) -> Result<SimConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => config::load(path)?,
        None => SimConfig::default(),
    };
    for o in &common.overrides {
        config::apply_override(&mut cfg, o)?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(episodes) = common.episodes {
        cfg.episodes = episodes;
    }
    if let Some(p) = policy {
        cfg.policy = p.parse::<PolicyKind>().map_err(|e| CliError::Config(e.to_string()))?;
    }
    cfg.validate().map_err(CliError::Invalid)?;
    Ok(cfg)
}

fn write_manifest(out: &Path, command: &str, cfg: &SimConfig, arguments: serde_json::Value, outputs: &[&str]) -> Result<(), CliError> {
    let manifest = files::manifest_json(command, config::to_json(cfg), cfg.seed, arguments, outputs);
    files::write_json(&out.join("manifest.json"), &manifest)
}

fn simulate(common: &Common, policy: Option<&str>, gains: Option<&Path>) -> Result<(), CliError> {
    let cfg = resolve(common, policy)?;
    let imported = match gains {
        Some(path) => {
            let table = files::read_gains(path)?;
            if (table.slots(), table.relays()) != (cfg.slots, cfg.relays) {
                return Err(CliError::Config(format!(
                    "gain table is {}x{} but the config asks for N={} K={}",
                    table.slots(),
                    table.relays(),
                    cfg.slots,
                    cfg.relays
                )));
            }
            if cfg.episodes != 1 {
                return Err(CliError::Config("an imported gain table runs exactly one episode".into()));
            }
            Some(table)
        }
        None => None,
    };
    let episodes: Vec<EpisodeMetrics> = match &imported {
        Some(table) => vec![run_episode_with_table(&cfg, table)?],
        None => run_episodes(&cfg)?,
    };
    let out = files::ensure_dir(&common.out)?;
    let first = episodes.first().cloned().unwrap_or_default();
    files::write_trajectory(&out.join("trajectory.csv"), &first)?;
    let mut outputs = vec!["metrics.json", "trajectory.csv"];
    if cfg.slots > 0 {
        // the first episode's channels, importable with --gains
        let table = match imported {
            Some(t) => t,
            None => sample_gain_table(cfg.seed, cfg.slots, cfg.relays)?,
        };
        files::write_gains(&out.join("gains.csv"), &table)?;
        outputs.push("gains.csv");
    }
    files::write_json(&out.join("metrics.json"), &files::metrics_json(&episodes))?;
    let args = json!({ "gains": gains.map(|p| p.display().to_string()) });
    write_manifest(&out, "simulate", &cfg, args, &outputs)?;

    let total: f64 = episodes.iter().map(|m| m.sum_throughput).sum();
    println!(
        "simulate: {} episode(s), policy {}, mean sum throughput {}",
        episodes.len(),
        cfg.policy,
        sig9(if episodes.is_empty() { 0.0 } else { total / episodes.len() as f64 })
    );
    Ok(())
}

fn run_sweep(common: &Common, param: &str, values: &[f64], policy: Option<&str>) -> Result<(), CliError> {
    let cfg = resolve(common, policy)?;
    let param: SweepParam = param.parse().map_err(|e: twrn_core::Error| CliError::Config(e.to_string()))?;
    for &v in values {
        param.apply(&cfg, v).and_then(|c| c.validate()).map_err(CliError::Invalid)?;
    }
    let rows = sweep(&cfg, param, values, cfg.episodes)?;
    let out = files::ensure_dir(&common.out)?;
    files::write_sweep(&out.join("sweep.csv"), &rows)?;
    let args = json!({ "param": param.name(), "values": values, "episodes": cfg.episodes });
    write_manifest(&out, "sweep", &cfg, args, &["sweep.csv"])?;
    for r in &rows {
        println!("{} = {}: mean {} (stderr {})", r.param.name(), sig9(r.value), sig9(r.mean), sig9(r.stderr));
    }
    Ok(())
}

fn zero_problem(cfg: &SimConfig) -> Result<SlotProblem, CliError> {
    let params = cfg.slot_params()?;
    let state = RelayState::new(cfg.buffer_capacity, cfg.battery_capacity, 0.0)?;
    let relays = vec![RelayInput { gains: GainPair { sr: 0.0, rd: 0.0 }, state }; cfg.relays];
    Ok(SlotProblem::new(relays, params)?)
}

fn converge(common: &Common, instance_seed: Option<u64>, zero: bool) -> Result<(), CliError> {
    let cfg = resolve(common, None)?;
    let seed = instance_seed.unwrap_or(cfg.seed);
    let problem = if zero {
        zero_problem(&cfg)?
    } else {
        random_problem(seed, cfg.relays, cfg.slot_params()?, cfg.buffer_capacity, cfg.battery_capacity)?
    };
    let sol = solve_slot(&problem, &cfg.solver_options())?;
    let out = files::ensure_dir(&common.out)?;
    files::write_trace(&out.join("trace.csv"), &sol.trace)?;
    let d = &sol.decision;
    let solution = json!({
        "relay": d.relay + 1,
        "alpha": d.alpha,
        "p_s": d.powers.p_s,
        "p_d": d.powers.p_d,
        "p_r": d.powers.p_r,
        "objective": d.objective,
        "relaxed_objective": sol.relaxed.objective,
        "dual_bound": sol.relaxed.dual_bound,
        "rho": sol.relaxed.rho,
        "iterations": sol.trace.iterations(),
        "converged": sol.trace.converged,
        "inner_solves": sol.inner_solves,
        "all_inner_converged": sol.all_converged,
        "max_inner_iterations": sol.max_iterations,
    });
    files::write_json(&out.join("solution.json"), &solution)?;
    let args = json!({ "instance_seed": if zero { None } else { Some(seed) }, "zero_instance": zero });
    write_manifest(&out, "converge", &cfg, args, &["trace.csv", "solution.json"])?;
    println!(
        "converge: {} after {} iteration(s), relay {}, objective {}",
        if sol.trace.converged { "converged" } else { "not converged" },
        sol.trace.iterations(),
        d.relay + 1,
        sig9(d.objective)
    );
    Ok(())
}

fn oracle_check(common: &Common, count: usize, relays: usize, grid: usize, tolerance: f64) -> Result<(), CliError> {
    let cfg = resolve(common, None)?;
    if relays == 0 {
        return Err(CliError::Usage("--relays must be at least 1".into()));
    }
    if grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(CliError::Usage("--tolerance must be non-negative".into()));
    }
    let evaluations = (grid as u64).checked_pow(4).and_then(|g| g.checked_mul(relays as u64)).unwrap_or(u64::MAX);
    if evaluations > DEFAULT_ORACLE_BUDGET {
        return Err(twrn_core::Error::Budget { evaluations, cap: DEFAULT_ORACLE_BUDGET }.into());
    }
    let params = cfg.slot_params()?;
    let opts = cfg.solver_options();
    let mut rows = Vec::with_capacity(count);
    for instance in 0..count {
        let seed = cfg.episode_seed(instance);
        let problem = random_problem(seed, relays, params, cfg.buffer_capacity, cfg.battery_capacity)?;
        let solver = solve_slot(&problem, &opts)?.decision;
        let oracle = brute_force_oracle(&problem, grid, DEFAULT_ORACLE_BUDGET)?;
        let gap = if oracle.objective > 0.0 { (solver.objective - oracle.objective) / oracle.objective } else { 0.0 };
        rows.push(OracleRow { instance: instance + 1, seed, relay: solver.relay, solver: solver.objective, oracle: oracle.objective, gap });
    }
    let out = files::ensure_dir(&common.out)?;
    files::write_oracle_report(&out.join("oracle_check.csv"), &rows, tolerance)?;
    let args = json!({ "count": count, "relays": relays, "grid": grid, "tolerance": tolerance });
    write_manifest(&out, "oracle-check", &cfg, args, &["oracle_check.csv"])?;

    let failures = rows.iter().filter(|r| r.gap < -tolerance).count();
    let worst = rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    println!(
        "oracle-check: {count} instance(s), K={relays}, grid {grid}, worst gap {}, {failures} below -{}",
        if rows.is_empty() { "n/a".to_string() } else { sig9(worst) },
        sig9(tolerance)
    );
    if failures > 0 {
        return Err(CliError::Check(format!("{failures} instance(s) fell short of the grid oracle by more than {}", sig9(tolerance))));
    }
    Ok(())
}
