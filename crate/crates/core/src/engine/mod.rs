//! Optimizer loop: initial cover, LP phases with column generation, and
//! integerization, repeated until the integer and LP costs agree.

mod ifs;
mod trace;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cg::{
    self, cg_heuristic, cgr_generate, Archive, IterationKey, PricingContext, StrategySet,
    StrategyThresholds, UtilizationBasis,
};
use crate::exactpricing::{self, TimeSpaceNetwork};
use crate::ip::{integerize, IpError, IpLimits, DEFAULT_NODE_LIMIT};
use crate::legalgen::LegalSpace;
use crate::lp::{self, DualSolution, LpError, PrimalSolution};
use crate::model::{Cents, CostModel, FlightNetwork, ModelError, Pairing, RuleSet, Solution};
use crate::rng::StreamTag;

pub use ifs::{generate_ifs, DEFAULT_IFS_WINDOW};
pub use trace::{InteractionRecord, IterationRecord, RunTrace, Termination};

#[derive(Debug, Error)]
pub enum EngineError {
    /// Flight ids that no legal pairing can cover.
    #[error("no legal cover exists; uncoverable flights {0:?}")]
    Infeasible(Vec<u32>),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Ip(#[from] IpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Pricing mechanism used inside each LP phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// All four heuristic strategies.
    CgHeuristic,
    /// Random exploration alone, its threshold calibrated to the heuristic's batch size.
    CgRandom,
    /// Labeling on per-(day, base) time-space networks.
    CgStandard,
    /// A strict subset of the heuristic strategies.
    Ablation(StrategySet),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::CgHeuristic => f.write_str("cg-heuristic"),
            Mode::CgRandom => f.write_str("cg-random"),
            Mode::CgStandard => f.write_str("cg-standard"),
            Mode::Ablation(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cg-heuristic" => Ok(Mode::CgHeuristic),
            "cg-random" => Ok(Mode::CgRandom),
            "cg-standard" => Ok(Mode::CgStandard),
            other => match other.parse::<StrategySet>() {
                Ok(StrategySet::ALL) => Ok(Mode::CgHeuristic),
                Ok(set) => Ok(Mode::Ablation(set)),
                Err(_) => Err(format!(
                    "unknown mode {other:?}; expected cg-heuristic, cg-random, cg-standard or a subset like D+U"
                )),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    /// An LP iteration counts as stalled when it improves by less than this.
    pub lpp_improvement_threshold: Cents,
    pub lpp_stall_count: u32,
    /// Hard cap on LP iterations per phase, if any.
    pub max_lpp_iterations: Option<u32>,
    pub ipp_time_limit: Duration,
    pub ipp_node_limit: Option<usize>,
    pub max_interactions: u32,
    pub max_walltime: Duration,
    /// `None` derives thresholds from the instance.
    pub thresholds: Option<StrategyThresholds>,
    pub utilization: UtilizationBasis,
    /// Labels kept per node in standard mode; `None` keeps all.
    pub beam_width: Option<usize>,
    /// Most columns standard pricing returns per iteration.
    pub standard_batch_cap: Option<usize>,
    pub ifs_window: usize,
    pub rules: RuleSet,
    pub cost: CostModel,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::CgHeuristic,
            seed: 0,
            lpp_improvement_threshold: 100_00,
            lpp_stall_count: 10,
            max_lpp_iterations: None,
            ipp_time_limit: Duration::from_secs(20 * 60),
            ipp_node_limit: Some(DEFAULT_NODE_LIMIT),
            max_interactions: 30,
            max_walltime: Duration::from_secs(30 * 3600),
            thresholds: None,
            utilization: UtilizationBasis::Flying,
            beam_width: Some(exactpricing::DEFAULT_BEAM_WIDTH),
            standard_batch_cap: Some(5_000),
            ifs_window: DEFAULT_IFS_WINDOW,
            rules: RuleSet::default(),
            cost: CostModel::default(),
        }
    }
}

impl RunConfig {
    /// Settings for quick desk-scale runs: 30 s integerization limit.
    pub fn desk() -> Self {
        Self { ipp_time_limit: Duration::from_secs(30), ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.to_string()));
        if self.lpp_stall_count == 0 {
            return bad("lpp_stall_count must be positive");
        }
        if self.max_interactions == 0 {
            return bad("max_interactions must be positive");
        }
        if self.max_walltime.is_zero() {
            return bad("max_walltime must be positive");
        }
        if self.lpp_improvement_threshold < 0 {
            return bad("lpp_improvement_threshold must be non-negative");
        }
        if self.thresholds.is_some_and(|t| !t.is_valid()) {
            return bad("strategy thresholds must be at least 1");
        }
        if self.max_lpp_iterations == Some(0) || self.beam_width == Some(0) || self.ifs_window == 0 {
            return bad("iteration caps, beam width and window must be positive");
        }
        self.rules.validate()?;
        self.cost.validate()?;
        Ok(())
    }

    fn ip_limits(&self) -> IpLimits {
        IpLimits { time_limit: Some(self.ipp_time_limit), node_limit: self.ipp_node_limit }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub solution: Solution,
    pub trace: RunTrace,
}

/// Result of one LP phase.
pub struct PhaseResult {
    pub primal: PrimalSolution,
    pub dual: DualSolution,
    pub iterations: Vec<IterationRecord>,
    pub monotonicity_violations: u32,
}

/// Mutable state carried across phases and interactions.
pub struct Engine<'a> {
    pub config: &'a RunConfig,
    pub space: &'a LegalSpace,
    pub thresholds: StrategyThresholds,
    /// Persists across interactions.
    pub archive: Archive,
    networks: Option<Vec<TimeSpaceNetwork>>,
    pub calibrated_th_r: Option<u32>,
    started: Instant,
}

impl<'a> Engine<'a> {
    pub fn new(config: &'a RunConfig, space: &'a LegalSpace) -> Self {
        let thresholds = config.thresholds.unwrap_or_else(|| StrategyThresholds::for_instance(space));
        Self {
            config,
            space,
            thresholds,
            archive: Archive::new(),
            networks: None,
            calibrated_th_r: None,
            started: Instant::now(),
        }
    }

    fn psi(&self) -> Cents {
        self.space.cost.deadhead_penalty
    }

    fn out_of_time(&self) -> bool {
        self.started.elapsed() >= self.config.max_walltime
    }

    fn num_flights(&self) -> usize {
        self.space.network.num_flights()
    }

    /// Iterates LP solve and pricing until the improvement stays below the
    /// threshold for the configured number of consecutive iterations (or
    /// standard pricing finds nothing). `seen` holds the pairings the
    /// archive has not yet absorbed.
    pub fn lpp_phase(
        &mut self,
        interaction: u32,
        input: Vec<Arc<Pairing>>,
        mut seen: Vec<Arc<Pairing>>,
    ) -> Result<PhaseResult, EngineError> {
        let f = self.num_flights();
        let psi = self.psi();
        let mut input = input;
        let mut records = Vec::new();
        let mut previous: Option<f64> = None;
        let mut stalled = 0;
        let mut violations = 0;
        let mut t = 0u32;
        loop {
            t += 1;
            let lp_start = Instant::now();
            let primal = lp::solve_primal(&input, f, psi)?;
            let dual = lp::solve_dual(&primal.support, f, psi)?;
            let lp_violations = lp::contract_violations(&input, f, psi, &primal, &dual);
            let lp_seconds = lp_start.elapsed().as_secs_f64();

            if let Some(prev) = previous {
                if primal.objective > prev + 1e-6 * prev.abs() {
                    violations += 1;
                }
                if prev - primal.objective < self.config.lpp_improvement_threshold as f64 {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
            }
            previous = Some(primal.objective);
            let mut record = IterationRecord {
                interaction,
                iteration: t,
                z_lp: primal.objective,
                input_size: input.len(),
                support_size: primal.support.len(),
                from_cgd: 0,
                from_cgu: 0,
                from_cga: 0,
                from_cgr: 0,
                generated: 0,
                zero_deadhead: 0,
                half: None,
                draws: [0; 4],
                lp_pivots: primal.pivots,
                lp_violations,
                lp_seconds,
                pricing_seconds: 0.0,
            };
            let done = stalled >= self.config.lpp_stall_count
                || self.config.max_lpp_iterations.is_some_and(|m| t >= m)
                || self.out_of_time();
            if done {
                records.push(record);
                return Ok(PhaseResult { primal, dual, iterations: records, monotonicity_violations: violations });
            }

            let pricing_start = Instant::now();
            let key = IterationKey { seed: self.config.seed, interaction: interaction as u64, iteration: t as u64 };
            let batch = self.price(&primal, &dual, &seen, key, &mut record);
            record.pricing_seconds = pricing_start.elapsed().as_secs_f64();
            record.generated = batch.len();
            records.push(record);
            if batch.is_empty() && self.config.mode == Mode::CgStandard {
                return Ok(PhaseResult { primal, dual, iterations: records, monotonicity_violations: violations });
            }
            input = cg::merge(&[&primal.support, &batch]);
            seen = input.clone();
        }
    }

    fn price(
        &mut self,
        primal: &PrimalSolution,
        dual: &DualSolution,
        seen: &[Arc<Pairing>],
        key: IterationKey,
        record: &mut IterationRecord,
    ) -> Vec<Arc<Pairing>> {
        let space = self.space;
        let ctx = PricingContext {
            space,
            duals: dual,
            psi: self.psi(),
            utilization: self.config.utilization,
        };
        let out = match self.config.mode {
            Mode::CgHeuristic | Mode::Ablation(_) => {
                let set = match self.config.mode {
                    Mode::Ablation(s) => s,
                    _ => StrategySet::ALL,
                };
                let batch = cg_heuristic(&ctx, primal, &mut self.archive, seen, &self.thresholds, set, key);
                record.from_cgd = batch.from_cgd.len();
                record.from_cgu = batch.from_cgu.len();
                record.from_cga = batch.from_cga.len();
                record.from_cgr = batch.from_cgr.len();
                record.zero_deadhead = batch.zero_deadhead.len();
                record.half = batch.half;
                record.draws = batch.draws;
                batch.merged
            }
            Mode::CgRandom => {
                let th_r = match self.calibrated_th_r {
                    Some(th) => th,
                    None => {
                        let th = self.calibrate_random(&ctx, primal, seen);
                        self.calibrated_th_r = Some(th);
                        th
                    }
                };
                let (random, out) = cgr_generate(&ctx, th_r, None, &mut key.rng(StreamTag::Random));
                record.from_cgr = out.len();
                record.draws = [0, 0, 0, random];
                out
            }
            Mode::CgStandard => {
                let networks = self.networks.get_or_insert_with(|| exactpricing::build_all_networks(space));
                let out = exactpricing::cg_standard_iteration(
                    networks,
                    space,
                    dual,
                    ctx.psi,
                    self.config.beam_width,
                    self.config.standard_batch_cap,
                );
                let mut out = out;
                out.sort();
                out
            }
        };
        out
    }

    /// Finds a random-strategy threshold whose mean batch is within 20% of
    /// the heuristic's mean batch on the same duals. Uses dedicated streams
    /// and a scratch copy of the archive.
    fn calibrate_random(&self, ctx: &PricingContext<'_>, primal: &PrimalSolution, seen: &[Arc<Pairing>]) -> u32 {
        const SAMPLES: u64 = 4;
        let seed = self.config.seed;
        let calib_key = |k: u64| IterationKey { seed, interaction: 0, iteration: k };
        let target = (0..SAMPLES)
            .map(|k| {
                let mut archive = self.archive.clone();
                cg_heuristic(ctx, primal, &mut archive, seen, &self.thresholds, StrategySet::ALL, calib_key(k))
                    .merged
                    .len() as f64
            })
            .sum::<f64>()
            / SAMPLES as f64;
        let mean_batch = |th: u32| {
            (0..SAMPLES)
                .map(|k| cgr_generate(ctx, th, None, &mut calib_key(k).rng(StreamTag::Calibration)).1.len() as f64)
                .sum::<f64>()
                / SAMPLES as f64
        };
        let start = self.thresholds.th_r.max(1);
        if target <= 0.0 {
            return start;
        }
        let max_th = ctx.space.duties.by_base_map().values().map(Vec::len).max().unwrap_or(1).max(1) as u32;
        let within = |v: f64| (v - target).abs() <= 0.2 * target;
        let mut lo = start;
        let mut lo_val = mean_batch(lo);
        if within(lo_val) {
            return lo;
        }
        if lo_val > target {
            // Shrink: search below the default.
            let (mut a, mut b) = (1u32, lo);
            let mut best = (lo, lo_val);
            while a < b {
                let mid = (a + b) / 2;
                let v = mean_batch(mid);
                if (v - target).abs() < (best.1 - target).abs() {
                    best = (mid, v);
                }
                if within(v) {
                    return mid;
                }
                if v > target {
                    b = mid;
                } else {
                    a = mid + 1;
                }
            }
            return best.0;
        }
        let mut hi = lo;
        let mut hi_val = lo_val;
        while hi_val < target && hi < max_th {
            lo = hi;
            lo_val = hi_val;
            hi = (hi * 2).min(max_th);
            hi_val = mean_batch(hi);
            if within(hi_val) {
                return hi;
            }
        }
        if hi_val < target {
            return hi;
        }
        let mut best = if (lo_val - target).abs() < (hi_val - target).abs() { (lo, lo_val) } else { (hi, hi_val) };
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let v = mean_batch(mid);
            if (v - target).abs() < (best.1 - target).abs() {
                best = (mid, v);
            }
            if within(v) {
                return mid;
            }
            if v < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best.0
    }
}

/// Full optimization on an already enumerated instance.
pub fn run_on_space(config: &RunConfig, space: &LegalSpace) -> Result<RunOutcome, EngineError> {
    config.validate()?;
    let mut engine = Engine::new(config, space);
    let network = &space.network;
    let psi = space.cost.deadhead_penalty;
    let mut trace = RunTrace {
        mode: config.mode.to_string(),
        seed: config.seed,
        num_flights: network.num_flights(),
        num_duties: space.duties.len(),
        ..Default::default()
    };

    let ifs_start = Instant::now();
    let ifs = generate_ifs(space, psi, config.ifs_window, config.ip_limits())?;
    let ifs_solution = Solution::new(ifs.clone(), network, psi)?;
    trace.ifs_pairings = ifs.len();
    trace.ifs_objective = ifs_solution.objective;
    trace.ifs_seconds = ifs_start.elapsed().as_secs_f64();

    let mut best = ifs_solution;
    let mut input = ifs;
    let mut termination = None;
    for interaction in 1..=config.max_interactions {
        let phase_start = Instant::now();
        let phase = engine.lpp_phase(interaction, input.clone(), input.clone())?;
        let lpp_seconds = phase_start.elapsed().as_secs_f64();

        let ipp_start = Instant::now();
        let ip = integerize(&phase.primal.support, network, psi, config.ip_limits())?;
        let ipp_seconds = ipp_start.elapsed().as_secs_f64();
        if ip.solution.objective < best.objective
            || (ip.solution.objective == best.objective && ip.solution.pairings < best.pairings)
        {
            best = ip.solution.clone();
        }
        trace.iterations.extend(phase.iterations.iter().cloned());
        trace.interactions.push(InteractionRecord {
            interaction,
            lpp_iterations: phase.iterations.len() as u32,
            z_lp: phase.primal.objective,
            z_ip: ip.solution.objective,
            ip_pairings: ip.solution.pairings.len(),
            ip_deadheads: ip.solution.deadheads,
            ip_status: ip.status,
            ip_nodes: ip.nodes,
            best_z_ip: best.objective,
            monotonicity_violations: phase.monotonicity_violations,
            lpp_seconds,
            ipp_seconds,
        });
        if (ip.solution.objective as f64 - phase.primal.objective).abs() < 1.0 {
            termination = Some(Termination::Matched);
            break;
        }
        if engine.out_of_time() {
            termination = Some(Termination::Walltime);
            break;
        }
        if interaction == config.max_interactions {
            termination = Some(Termination::MaxInteractions);
        }
        input = ip.solution.pairings.clone();
    }
    trace.calibrated_th_r = engine.calibrated_th_r;
    trace.termination = termination;
    trace.final_objective = best.objective;
    trace.final_pairings = best.pairings.len();
    trace.final_deadheads = best.deadheads;
    trace.total_seconds = engine.started.elapsed().as_secs_f64();
    Ok(RunOutcome { solution: best, trace })
}

/// Enumerates duties for `network` under the configured rules, then runs.
pub fn run(config: &RunConfig, network: FlightNetwork) -> Result<RunOutcome, EngineError> {
    config.validate()?;
    let space = LegalSpace::build(network, config.rules.clone(), config.cost.clone());
    run_on_space(config, &space)
}
