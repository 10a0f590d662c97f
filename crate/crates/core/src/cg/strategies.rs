//! The four pricing strategies.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;

use super::{
    crew_utilization_ratio, draw_random, reduced_cost, reduced_cost_estimator, Archive, FlightPair,
    HalfSelector, PricingContext,
};
use crate::lp::PrimalSolution;
use crate::model::{FlightId, Pairing};

#[derive(Clone, Debug, Default)]
pub struct CgdOutcome {
    pub random: u32,
    /// Zero-deadhead set followed by the complementary pairings, merged.
    pub pairings: Vec<Arc<Pairing>>,
    pub zero_deadhead: Vec<Arc<Pairing>>,
    pub complementary: Vec<Arc<Pairing>>,
}

/// Samples `random` duties departing each crew base, without replacement,
/// and enumerates every pairing that starts with one of them.
fn pairings_from_sampled_duties(ctx: &PricingContext<'_>, random: u32, rng: &mut impl Rng) -> Vec<Pairing> {
    let mut starts = Vec::new();
    for &base in ctx.space.network.crew_bases() {
        starts.extend(ctx.space.duties.by_base(base).choose_multiple(rng, random as usize).copied());
    }
    ctx.space.pairings_starting_with(&starts)
}

/// Deadhead reduction: build a zero-deadhead set from sampled duties,
/// then re-cover the flights its overlapping LP pairings leave behind.
pub fn cgd_generate(
    ctx: &PricingContext<'_>,
    p_lp: &[Arc<Pairing>],
    th_d: u32,
    half: Option<HalfSelector>,
    rng: &mut impl Rng,
) -> CgdOutcome {
    let random = draw_random(th_d, half, rng);
    let mut out = CgdOutcome { random, ..Default::default() };
    if random == 0 {
        return out;
    }
    let mut candidates: Vec<(f64, Arc<Pairing>)> = ctx
        .improving(pairings_from_sampled_duties(ctx, random, rng))
        .into_iter()
        .map(|p| (reduced_cost(&p, ctx.duals, ctx.psi).0, p))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let mut covered = vec![false; ctx.space.network.num_flights()];
    for (_, p) in candidates {
        if p.flights.iter().any(|f| covered[f.index()]) {
            continue;
        }
        for f in &p.flights {
            covered[f.index()] = true;
        }
        out.zero_deadhead.push(p);
    }
    if out.zero_deadhead.is_empty() {
        return out;
    }

    let mut complement: BTreeSet<FlightId> = BTreeSet::new();
    for p in p_lp {
        if p.flights.iter().any(|f| covered[f.index()]) {
            complement.extend(p.flights.iter().filter(|f| !covered[f.index()]));
        }
    }
    let complement: Vec<FlightId> = complement.into_iter().collect();
    if !complement.is_empty() {
        let within = ctx.space.duties_within(&ctx.space.flight_mask(complement));
        out.complementary = ctx.improving(ctx.space.pairings_from_mask(&within));
    }
    out.pairings = super::merge(&[&out.zero_deadhead, &out.complementary]);
    out
}

/// Crew utilization enhancement: gather flights of high-dual LP pairings
/// across flight-count categories, enumerate over them, and keep the
/// improving pairings whose utilization is at least the median.
pub fn cgu_generate(
    ctx: &PricingContext<'_>,
    primal: &PrimalSolution,
    th_u: u32,
    half: Option<HalfSelector>,
    rng: &mut impl Rng,
) -> (u32, Vec<Arc<Pairing>>) {
    let mut dictionary: BTreeMap<usize, Vec<(f64, f64, Arc<Pairing>)>> = BTreeMap::new();
    for (p, &j) in primal.support.iter().zip(&primal.support_indices) {
        let mu_d = reduced_cost(p, ctx.duals, ctx.psi).1;
        dictionary.entry(p.num_flights()).or_default().push((mu_d, primal.x[j], Arc::clone(p)));
    }
    let random = draw_random(th_u, half, rng);
    if random == 0 || dictionary.is_empty() {
        return (random, Vec::new());
    }
    let k_min = *dictionary.keys().next().unwrap();
    let k_max = *dictionary.keys().next_back().unwrap();
    let quota = if k_max == k_min { random as f64 } else { random as f64 / (k_max - k_min) as f64 };

    let mut f_u: BTreeSet<FlightId> = BTreeSet::new();
    while f_u.len() < random as usize && !dictionary.is_empty() {
        let k = *dictionary.keys().choose(rng).unwrap();
        let mut category = dictionary.remove(&k).unwrap();
        category.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)).then_with(|| a.2.cmp(&b.2)));
        let mut counter = 0usize;
        for (_, _, p) in category {
            f_u.extend(p.flights.iter().copied());
            counter += p.num_flights();
            if counter as f64 >= quota {
                break;
            }
        }
    }

    let flights: Vec<FlightId> = f_u.into_iter().collect();
    let within = ctx.space.duties_within(&ctx.space.flight_mask(flights));
    let improving = ctx.improving(ctx.space.pairings_from_mask(&within));
    if improving.is_empty() {
        return (random, improving);
    }
    let gammas: Vec<f64> = improving
        .iter()
        .map(|p| crew_utilization_ratio(p, &ctx.space.rules, ctx.utilization))
        .collect();
    let median = lower_median(&gammas);
    let kept = improving.into_iter().zip(gammas).filter(|(_, g)| *g >= median).map(|(p, _)| p).collect();
    (random, kept)
}

/// Middle element, or the lower of the two middle elements.
pub(crate) fn lower_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

/// Archiving: file the previous iteration's pairings, rank the LP
/// solution's flight pairs by the reduced cost estimator, and draw
/// pairings from the best-ranked buckets.
pub fn cga_update_and_generate(
    ctx: &PricingContext<'_>,
    archive: &mut Archive,
    newly_seen: &[Arc<Pairing>],
    support: &[Arc<Pairing>],
    th_a: u32,
    half: Option<HalfSelector>,
    rng: &mut impl Rng,
) -> (u32, Vec<Arc<Pairing>>) {
    archive.update(newly_seen);
    let random = draw_random(th_a, half, rng);
    if random == 0 {
        return (random, Vec::new());
    }
    let network = &ctx.space.network;
    let keys: BTreeSet<FlightPair> = support
        .iter()
        .flat_map(|p| p.flight_pairs())
        .filter(|&k| archive.bucket(k).is_some())
        .collect();
    let mut ranked: Vec<(f64, FlightPair)> = keys
        .into_iter()
        .map(|(m, n)| {
            let eta = reduced_cost_estimator(network.get(m), network.get(n), ctx.duals, &ctx.space.cost);
            (eta, (m, n))
        })
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let limit = random as usize * random as usize;
    let mut selected: BTreeSet<Arc<Pairing>> = BTreeSet::new();
    for (_, key) in ranked {
        let bucket: Vec<&Arc<Pairing>> = archive.bucket(key).unwrap().iter().collect();
        for p in bucket.choose_multiple(rng, random as usize) {
            selected.insert(Arc::clone(p));
        }
        if selected.len() >= limit {
            break;
        }
    }
    let out = selected
        .into_iter()
        .filter(|p| super::is_improving(p, ctx.duals, ctx.psi))
        .collect();
    (random, out)
}

/// Random exploration: enumerate over randomly sampled duties.
pub fn cgr_generate(
    ctx: &PricingContext<'_>,
    th_r: u32,
    half: Option<HalfSelector>,
    rng: &mut impl Rng,
) -> (u32, Vec<Arc<Pairing>>) {
    let random = draw_random(th_r, half, rng);
    if random == 0 {
        return (random, Vec::new());
    }
    (random, ctx.improving(pairings_from_sampled_duties(ctx, random, rng)))
}
