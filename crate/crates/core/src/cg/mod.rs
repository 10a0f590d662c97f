//! Column generation heuristic: four pricing strategies driven by the
//! current LP solution and an archive of earlier pairings.

mod archive;
mod strategies;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::legalgen::LegalSpace;
use crate::lp::{self, DualSolution, PrimalSolution};
use crate::model::{Cents, CostModel, Flight, Pairing, RuleSet};
use crate::rng::{stream, StreamTag};

pub use archive::{Archive, FlightPair};
pub use strategies::{cga_update_and_generate, cgd_generate, cgr_generate, cgu_generate, CgdOutcome};

/// A column is priced out only when its reduced cost is below `-REDUCED_COST_TOL`.
pub const REDUCED_COST_TOL: f64 = lp::FEAS_TOL;

/// Reduced cost `mu` and dual component `mu_d` of a pairing.
pub fn reduced_cost(p: &Pairing, duals: &DualSolution, psi: Cents) -> (f64, f64) {
    let mu_d = lp::dual_sum(p, &duals.y);
    (lp::column_cost(p, psi) - mu_d, mu_d)
}

pub fn is_improving(p: &Pairing, duals: &DualSolution, psi: Cents) -> bool {
    reduced_cost(p, duals, psi).0 < -REDUCED_COST_TOL
}

/// Which duty quantity counts as work when measuring crew utilization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtilizationBasis {
    /// Flying time against the duty flying limit.
    #[default]
    Flying,
    /// Elapsed duty time against the duty elapsed limit.
    Elapsed,
}

/// Mean over duties of worked over permissible time, clipped to `(0, 1]`.
pub fn crew_utilization_ratio(p: &Pairing, rules: &RuleSet, basis: UtilizationBasis) -> f64 {
    let total: f64 = p
        .duties
        .iter()
        .map(|d| {
            let (work, limit) = match basis {
                UtilizationBasis::Flying => (d.flying, rules.max_duty_flying),
                UtilizationBasis::Elapsed => (d.end - d.start, rules.max_duty_elapsed),
            };
            (work as f64 / limit as f64).min(1.0)
        })
        .sum();
    (total / p.duties.len() as f64).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Flight-pair proxy for the reduced cost: flying cost minus dual, summed
/// over both flights.
pub fn reduced_cost_estimator(fm: &Flight, fn_: &Flight, duals: &DualSolution, model: &CostModel) -> f64 {
    [fm, fn_].iter().map(|f| model.flying_cost(f) - duals.y[f.id.index()]).sum()
}

/// Half of a threshold range that every strategy draws from in one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfSelector {
    Lower,
    Upper,
}

impl HalfSelector {
    pub fn draw(rng: &mut impl Rng) -> Self {
        if rng.gen_bool(0.5) {
            HalfSelector::Upper
        } else {
            HalfSelector::Lower
        }
    }

    /// `0..=th/2` for the lower half and `(th+1)/2..=th` for the upper half.
    pub fn bounds(self, th: u32) -> (u32, u32) {
        match self {
            HalfSelector::Lower => (0, th / 2),
            HalfSelector::Upper => (th.div_ceil(2), th),
        }
    }
}

/// Uniform integer in `[0, th]`, or in one half of it.
pub fn draw_random(th: u32, half: Option<HalfSelector>, rng: &mut impl Rng) -> u32 {
    let (lo, hi) = half.map_or((0, th), |h| h.bounds(th));
    rng.gen_range(lo..=hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyThresholds {
    pub th_d: u32,
    pub th_u: u32,
    pub th_a: u32,
    pub th_r: u32,
}

impl StrategyThresholds {
    /// Defaults scaled to the instance: a tenth of the mean number of
    /// duties departing a crew base for the duty samplers, a quarter of the
    /// flights for the utilization strategy, and 50 for the archive.
    pub fn for_instance(space: &LegalSpace) -> Self {
        let map = space.duties.by_base_map();
        let bases = map.len().max(1);
        let per_base = map.values().map(Vec::len).sum::<usize>().div_ceil(bases);
        let duty = (per_base.div_ceil(10)).max(1) as u32;
        let flights = (space.network.num_flights().div_ceil(4)).max(1) as u32;
        Self { th_d: duty, th_u: flights, th_a: 50, th_r: duty }
    }

    pub fn is_valid(&self) -> bool {
        self.th_d >= 1 && self.th_u >= 1 && self.th_a >= 1 && self.th_r >= 1
    }
}

/// Subset of the four strategies, written like `D+U+A+R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategySet {
    pub deadhead: bool,
    pub utilization: bool,
    pub archive: bool,
    pub random: bool,
}

impl StrategySet {
    pub const ALL: Self = Self { deadhead: true, utilization: true, archive: true, random: true };
    pub const RANDOM_ONLY: Self = Self { deadhead: false, utilization: false, archive: false, random: true };
}

impl fmt::Display for StrategySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [
            (self.deadhead, "D"),
            (self.utilization, "U"),
            (self.archive, "A"),
            (self.random, "R"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, s)| *s)
        .collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for StrategySet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = StrategySet { deadhead: false, utilization: false, archive: false, random: false };
        for part in s.split('+') {
            let slot = match part.trim().to_ascii_uppercase().as_str() {
                "D" => &mut set.deadhead,
                "U" => &mut set.utilization,
                "A" => &mut set.archive,
                "R" => &mut set.random,
                other => return Err(format!("unknown strategy {other:?} in {s:?}")),
            };
            if *slot {
                return Err(format!("strategy repeated in {s:?}"));
            }
            *slot = true;
        }
        Ok(set)
    }
}

/// Read-only inputs shared by every strategy in one iteration.
#[derive(Clone, Copy)]
pub struct PricingContext<'a> {
    pub space: &'a LegalSpace,
    pub duals: &'a DualSolution,
    pub psi: Cents,
    pub utilization: UtilizationBasis,
}

impl PricingContext<'_> {
    /// Keeps the improving pairings, shared and sorted by signature.
    pub(crate) fn improving(&self, pairings: Vec<Pairing>) -> Vec<Arc<Pairing>> {
        pairings
            .into_iter()
            .filter(|p| is_improving(p, self.duals, self.psi))
            .map(Arc::new)
            .collect()
    }
}

/// Stream coordinates of one pricing call.
#[derive(Clone, Copy, Debug)]
pub struct IterationKey {
    pub seed: u64,
    pub interaction: u64,
    pub iteration: u64,
}

impl IterationKey {
    pub fn rng(&self, tag: StreamTag) -> rand_chacha::ChaCha8Rng {
        stream(self.seed, self.interaction, self.iteration, tag)
    }
}

/// Output of one heuristic pricing round.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CgBatch {
    pub from_cgd: Vec<Arc<Pairing>>,
    pub from_cgu: Vec<Arc<Pairing>>,
    pub from_cga: Vec<Arc<Pairing>>,
    pub from_cgr: Vec<Arc<Pairing>>,
    /// Deduplicated union, sorted by signature.
    pub merged: Vec<Arc<Pairing>>,
    /// The zero-deadhead set extracted inside the deadhead strategy.
    pub zero_deadhead: Vec<Arc<Pairing>>,
    pub half: Option<HalfSelector>,
    /// Random values drawn by D, U, A, R (zero when disabled).
    pub draws: [u32; 4],
}

pub fn merge(parts: &[&[Arc<Pairing>]]) -> Vec<Arc<Pairing>> {
    let mut all: Vec<Arc<Pairing>> = parts.iter().flat_map(|p| p.iter().cloned()).collect();
    all.sort();
    all.dedup();
    all
}

/// Runs the enabled strategies in the order D, U, A, R with one shared
/// half selector, and merges their output.
#[allow(clippy::too_many_arguments)]
pub fn cg_heuristic(
    ctx: &PricingContext<'_>,
    primal: &PrimalSolution,
    archive: &mut Archive,
    newly_seen: &[Arc<Pairing>],
    thresholds: &StrategyThresholds,
    strategies: StrategySet,
    key: IterationKey,
) -> CgBatch {
    let half = HalfSelector::draw(&mut key.rng(StreamTag::HalfSelector));
    let mut batch = CgBatch { half: Some(half), ..Default::default() };
    if strategies.deadhead {
        let out = cgd_generate(ctx, &primal.support, thresholds.th_d, Some(half), &mut key.rng(StreamTag::Deadhead));
        batch.draws[0] = out.random;
        batch.from_cgd = out.pairings;
        batch.zero_deadhead = out.zero_deadhead;
    }
    if strategies.utilization {
        let (random, out) =
            cgu_generate(ctx, primal, thresholds.th_u, Some(half), &mut key.rng(StreamTag::Utilization));
        batch.draws[1] = random;
        batch.from_cgu = out;
    }
    if strategies.archive {
        let (random, out) = cga_update_and_generate(
            ctx,
            archive,
            newly_seen,
            &primal.support,
            thresholds.th_a,
            Some(half),
            &mut key.rng(StreamTag::Archive),
        );
        batch.draws[2] = random;
        batch.from_cga = out;
    }
    if strategies.random {
        let (random, out) = cgr_generate(ctx, thresholds.th_r, Some(half), &mut key.rng(StreamTag::Random));
        batch.draws[3] = random;
        batch.from_cgr = out;
    }
    batch.merged = merge(&[&batch.from_cgd, &batch.from_cgu, &batch.from_cga, &batch.from_cgr]);
    batch
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fixtures, AirportId, DutySpan, FlightId};
    use rand::SeedableRng;

    pub(super) fn duals(y: &[f64]) -> DualSolution {
        DualSolution { y: y.to_vec(), objective: y.iter().sum() }
    }

    fn pairing(flights: &[u32], cost: Cents, duties: &[(i64, i64, i64)]) -> Pairing {
        Pairing {
            base: AirportId(0),
            flights: flights.iter().map(|&f| FlightId(f)).collect(),
            duties: duties
                .iter()
                .map(|&(start, end, flying)| DutySpan { num_flights: 1, start, end, flying })
                .collect(),
            cost,
            tafb: 0,
        }
    }

    #[test]
    fn reduced_cost_arithmetic() {
        let p = pairing(&[1, 2], 1000, &[(0, 0, 0)]);
        assert_eq!(reduced_cost(&p, &duals(&[600.0, 600.0]), 100), (0.0, 1200.0));
        let (mu, _) = reduced_cost(&p, &duals(&[0.0, 0.0]), 100);
        assert_eq!(mu, 1200.0);
        let q = pairing(&[1], 500, &[(0, 0, 0)]);
        assert_eq!(reduced_cost(&q, &duals(&[700.0]), 0).0, -200.0);
        assert!(is_improving(&q, &duals(&[700.0]), 0));
        assert!(!is_improving(&p, &duals(&[600.0, 600.0]), 100));
    }

    #[test]
    fn utilization_ratio_arithmetic() {
        let rules = RuleSet { max_duty_flying: 480, ..RuleSet::default() };
        let one = pairing(&[1], 0, &[(0, 600, 240)]);
        assert_eq!(crew_utilization_ratio(&one, &rules, UtilizationBasis::Flying), 0.5);
        let capped = pairing(&[1, 2], 0, &[(0, 600, 480), (0, 600, 480)]);
        assert_eq!(crew_utilization_ratio(&capped, &rules, UtilizationBasis::Flying), 1.0);
        let rules = RuleSet { max_duty_flying: 720, ..RuleSet::default() };
        let mixed = pairing(&[1, 2], 0, &[(0, 600, 360), (0, 600, 180)]);
        assert_eq!(crew_utilization_ratio(&mixed, &rules, UtilizationBasis::Flying), 0.375);
        let rules = RuleSet { max_duty_elapsed: 1200, ..RuleSet::default() };
        assert_eq!(crew_utilization_ratio(&one, &rules, UtilizationBasis::Elapsed), 0.5);
    }

    #[test]
    fn estimator_arithmetic() {
        // 60 and 90 minutes at 100/hour give flying costs 100 and 150.
        let model = CostModel { flying_rate: 100, ..CostModel::default() };
        let a = fixtures::flight(1, 0, 1, 0, 60);
        let b = fixtures::flight(2, 1, 0, 100, 190);
        assert_eq!(reduced_cost_estimator(&a, &b, &duals(&[80.0, 90.0]), &model), 80.0);
        assert_eq!(reduced_cost_estimator(&a, &b, &duals(&[0.0, 0.0]), &model), 250.0);
        assert_eq!(reduced_cost_estimator(&a, &b, &duals(&[100.0, 150.0]), &model), 0.0);
    }

    #[test]
    fn half_ranges() {
        assert_eq!(HalfSelector::Lower.bounds(10), (0, 5));
        assert_eq!(HalfSelector::Upper.bounds(10), (5, 10));
        assert_eq!(HalfSelector::Lower.bounds(1), (0, 0));
        assert_eq!(HalfSelector::Upper.bounds(1), (1, 1));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let v = draw_random(7, Some(HalfSelector::Upper), &mut rng);
            assert!((4..=7).contains(&v));
            assert!(draw_random(7, None, &mut rng) <= 7);
        }
    }

    #[test]
    fn strategy_set_round_trip() {
        assert_eq!("D+U+A+R".parse::<StrategySet>().unwrap(), StrategySet::ALL);
        assert_eq!("r".parse::<StrategySet>().unwrap(), StrategySet::RANDOM_ONLY);
        assert_eq!("D+A".parse::<StrategySet>().unwrap().to_string(), "D+A");
        assert!("D+D".parse::<StrategySet>().is_err());
        assert!("X".parse::<StrategySet>().is_err());
    }

    #[test]
    fn merge_dedups_by_signature() {
        let a = Arc::new(pairing(&[1, 2], 5, &[(0, 0, 0)]));
        let b = Arc::new(pairing(&[3], 5, &[(0, 0, 0)]));
        let merged = merge(&[&[b.clone(), a.clone()], &[], &[a.clone()], &[]]);
        assert_eq!(merged, vec![a, b]);
        assert!(merge(&[&[], &[], &[], &[]]).is_empty());
    }
}
