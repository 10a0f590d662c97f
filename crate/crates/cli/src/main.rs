use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use crewpair::cg::{StrategyThresholds, UtilizationBasis};
use crewpair::config::ProblemConfig;
use crewpair::engine::{run_on_space, EngineError, Mode, RunConfig, RunOutcome};
use crewpair::legalgen::LegalSpace;
use crewpair::model::{solution_objective, FlightNetwork};
use crewpair::netgen::{generate_with_witness, load_network, save_network, NetworkParams};

#[derive(Parser)]
#[command(name = "crewpair", version, about = "Airline crew pairing optimization by column generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic hub-and-spoke instance.
    Generate(GenerateArgs),
    /// Optimize one instance and report the final solution.
    Run(RunArgs),
    /// Run several modes over several seeds and tabulate the results.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    flights: usize,
    #[arg(long, default_value_t = 3)]
    bases: usize,
    #[arg(long, default_value_t = 4)]
    hubs: usize,
    /// Spoke airports attached to each hub.
    #[arg(long, default_value_t = 5)]
    spokes: usize,
    #[arg(long, default_value_t = 3)]
    days: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rules and costs the timetable must be coverable under.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// TOML file with [rules] and [cost] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// LP iterations improving by less than this many cents count as stalled.
    #[arg(long)]
    improvement_threshold: Option<i64>,
    #[arg(long)]
    stall_count: Option<u32>,
    #[arg(long)]
    max_lpp_iterations: Option<u32>,
    /// Integerization time limit in seconds.
    #[arg(long)]
    ipp_time_limit: Option<f64>,
    #[arg(long)]
    ipp_node_limit: Option<usize>,
    #[arg(long)]
    max_interactions: Option<u32>,
    /// Wall-clock limit for the whole run in seconds.
    #[arg(long)]
    walltime: Option<f64>,
    #[arg(long)]
    th_d: Option<u32>,
    #[arg(long)]
    th_u: Option<u32>,
    #[arg(long)]
    th_a: Option<u32>,
    #[arg(long)]
    th_r: Option<u32>,
    /// Measure crew utilization on elapsed duty time instead of flying time.
    #[arg(long)]
    elapsed_utilization: bool,
    /// Labels kept per node by standard pricing; 0 keeps all.
    #[arg(long)]
    beam_width: Option<usize>,
    #[arg(long)]
    ifs_window: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    JsonLines,
}

#[derive(Args)]
struct RunArgs {
    instance: PathBuf,
    /// cg-heuristic, cg-random, cg-standard or a strategy subset such as D+U.
    #[arg(long, default_value = "cg-heuristic", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Also write the line-delimited trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct CompareArgs {
    instance: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "cg-heuristic,cg-random,cg-standard", value_parser = parse_mode)]
    modes: Vec<Mode>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[command(flatten)]
    solver: SolverArgs,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn problem(path: Option<&Path>) -> Result<ProblemConfig> {
    match path {
        Some(p) => ProblemConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ProblemConfig::default()),
    }
}

impl SolverArgs {
    fn config(&self, mode: Mode, seed: u64, space: &LegalSpace) -> RunConfig {
        let mut cfg = RunConfig { mode, seed, ..RunConfig::default() };
        cfg.rules = space.rules.clone();
        cfg.cost = space.cost.clone();
        if let Some(v) = self.improvement_threshold {
            cfg.lpp_improvement_threshold = v;
        }
        if let Some(v) = self.stall_count {
            cfg.lpp_stall_count = v;
        }
        cfg.max_lpp_iterations = self.max_lpp_iterations;
        if let Some(v) = self.ipp_time_limit {
            cfg.ipp_time_limit = Duration::from_secs_f64(v);
        }
        if let Some(v) = self.ipp_node_limit {
            cfg.ipp_node_limit = Some(v);
        }
        if let Some(v) = self.max_interactions {
            cfg.max_interactions = v;
        }
        if let Some(v) = self.walltime {
            cfg.max_walltime = Duration::from_secs_f64(v);
        }
        if [self.th_d, self.th_u, self.th_a, self.th_r].iter().any(Option::is_some) {
            let d = StrategyThresholds::for_instance(space);
            cfg.thresholds = Some(StrategyThresholds {
                th_d: self.th_d.unwrap_or(d.th_d),
                th_u: self.th_u.unwrap_or(d.th_u),
                th_a: self.th_a.unwrap_or(d.th_a),
                th_r: self.th_r.unwrap_or(d.th_r),
            });
        }
        if self.elapsed_utilization {
            cfg.utilization = UtilizationBasis::Elapsed;
        }
        match self.beam_width {
            Some(0) => cfg.beam_width = None,
            Some(v) => cfg.beam_width = Some(v),
            None => {}
        }
        if let Some(v) = self.ifs_window {
            cfg.ifs_window = v;
        }
        cfg
    }

    fn space(&self, instance: &Path) -> Result<LegalSpace> {
        let problem = problem(self.config.as_deref())?;
        let network: FlightNetwork =
            load_network(instance).with_context(|| format!("loading {}", instance.display()))?;
        Ok(LegalSpace::build(network, problem.rules, problem.cost))
    }
}

/// Failures the caller can act on get their own exit code.
enum Failure {
    Infeasible(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn solve(cfg: &RunConfig, space: &LegalSpace) -> Result<RunOutcome, Failure> {
    run_on_space(cfg, space).map_err(|e| match e {
        EngineError::Infeasible(ids) => Failure::Infeasible(format!(
            "instance is infeasible: no legal pairing covers flights {ids:?}"
        )),
        other => Failure::Other(other.into()),
    })
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), Failure> {
    let problem = problem(args.config.as_deref())?;
    let params = NetworkParams {
        num_flights: args.flights,
        num_crew_bases: args.bases,
        num_hubs: args.hubs,
        num_spokes_per_hub: args.spokes,
        days: args.days,
        seed: args.seed,
        ..NetworkParams::default()
    };
    let generated = generate_with_witness(&params, &problem.rules, &problem.cost).map_err(anyhow::Error::from)?;
    save_network(&generated.network, &args.output)
        .with_context(|| format!("writing {}", args.output.display()))?;
    let space = LegalSpace::build(generated.network, problem.rules, problem.cost);
    println!(
        "{}: {} flights, {} crew bases, {} airports, {} legal duties",
        args.output.display(),
        space.network.num_flights(),
        space.network.crew_bases().len(),
        space.network.airports().len(),
        space.duties.len()
    );
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let space = args.solver.space(&args.instance)?;
    let cfg = args.solver.config(args.mode, args.seed, &space);
    cfg.validate().map_err(anyhow::Error::from)?;
    let out = solve(&cfg, &space)?;
    let lines = out.trace.to_json_lines();
    if let Some(path) = &args.trace {
        std::fs::write(path, &lines).with_context(|| format!("writing {}", path.display()))?;
    }
    let s = &out.solution;
    let (objective, deadheads) =
        solution_objective(&s.pairings, &space.network, space.cost.deadhead_penalty).map_err(anyhow::Error::from)?;
    match args.format {
        Format::JsonLines => print!("{lines}"),
        Format::Table => {
            print!("{}", out.trace.summary_table());
            println!(
                "cost {objective} cents ({} pairings, {deadheads} deadheads, pairing cost {} cents)",
                s.pairings.len(),
                s.total_pairing_cost()
            );
        }
    }
    Ok(())
}

struct Row {
    /// Position in the requested mode list, so aliases stay separate.
    group: usize,
    mode: Mode,
    seed: u64,
    cost: i64,
    pairings: usize,
    deadheads: u64,
    seconds: f64,
}

/// Mean and sample standard deviation (zero for a single value).
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let space = args.solver.space(&args.instance)?;
    let mut rows = Vec::new();
    for (group, &mode) in args.modes.iter().enumerate() {
        for &seed in &args.seeds {
            let cfg = args.solver.config(mode, seed, &space);
            cfg.validate().map_err(anyhow::Error::from)?;
            let start = Instant::now();
            let out = solve(&cfg, &space)?;
            let seconds = start.elapsed().as_secs_f64();
            let (cost, deadheads) =
                solution_objective(&out.solution.pairings, &space.network, space.cost.deadhead_penalty)
                    .map_err(anyhow::Error::from)?;
            rows.push(Row { group, mode, seed, cost, pairings: out.solution.pairings.len(), deadheads, seconds });
        }
    }
    match args.format {
        Format::JsonLines => {
            for r in &rows {
                let v = serde_json::json!({
                    "mode": r.mode.to_string(),
                    "seed": r.seed,
                    "cost": r.cost,
                    "pairings": r.pairings,
                    "deadheads": r.deadheads,
                    "seconds": r.seconds,
                });
                println!("{v}");
            }
        }
        Format::Table => {
            println!("{:<14} {:>5} {:>14} {:>9} {:>9} {:>9}", "mode", "seed", "cost (USD)", "pairings", "deadheads", "time (s)");
            for r in &rows {
                println!(
                    "{:<14} {:>5} {:>14.2} {:>9} {:>9} {:>9.2}",
                    r.mode.to_string(),
                    r.seed,
                    r.cost as f64 / 100.0,
                    r.pairings,
                    r.deadheads,
                    r.seconds
                );
            }
            println!();
            println!("{:<14} {:>28} {:>20}", "mode", "cost (USD) mean ± sd", "time (s) mean ± sd");
            for (group, &mode) in args.modes.iter().enumerate() {
                let of: Vec<&Row> = rows.iter().filter(|r| r.group == group).collect();
                let (cm, cs) = mean_sd(&of.iter().map(|r| r.cost as f64 / 100.0).collect::<Vec<_>>());
                let (tm, ts) = mean_sd(&of.iter().map(|r| r.seconds).collect::<Vec<_>>());
                println!("{:<14} {:>28} {:>20}", mode.to_string(), format!("{cm:.2} ± {cs:.2}"), format!("{tm:.2} ± {ts:.2}"));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors exit with 1 so that 2 stays reserved for infeasible instances.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Infeasible(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
