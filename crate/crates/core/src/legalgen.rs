//! Legal duty pre-enumeration, the duty overnight-connection graph, and
//! pairing enumeration over duty or flight subsets.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::model::{
    pairing_cost, AirportId, CostModel, Duty, DutySpan, FlightId, FlightNetwork, Pairing, RuleSet,
};

/// Default per-call cap on enumerated pairings.
pub const DEFAULT_PAIRING_CAP: usize = 2_000_000;

/// Every legal duty of a network, sorted by `(start, flight sequence)`.
#[derive(Clone, Debug)]
pub struct DutySet {
    duties: Vec<Duty>,
    by_base: BTreeMap<AirportId, Vec<u32>>,
    by_flight: Vec<Vec<u32>>,
    by_origin: Vec<Vec<u32>>,
}

impl DutySet {
    pub fn duties(&self) -> &[Duty] {
        &self.duties
    }

    pub fn len(&self) -> usize {
        self.duties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.duties.is_empty()
    }

    pub fn get(&self, index: u32) -> &Duty {
        &self.duties[index as usize]
    }

    /// Duties whose first flight departs `base`.
    pub fn by_base(&self, base: AirportId) -> &[u32] {
        self.by_base.get(&base).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn by_base_map(&self) -> &BTreeMap<AirportId, Vec<u32>> {
        &self.by_base
    }

    /// Duties containing `flight`.
    pub fn by_flight(&self, flight: FlightId) -> &[u32] {
        &self.by_flight[flight.index()]
    }

    fn from_duties(mut duties: Vec<Duty>, network: &FlightNetwork) -> Self {
        duties.sort_by(|a, b| (a.start, &a.flight_ids).cmp(&(b.start, &b.flight_ids)));
        let mut by_base: BTreeMap<AirportId, Vec<u32>> =
            network.crew_bases().iter().map(|&b| (b, Vec::new())).collect();
        let mut by_flight = vec![Vec::new(); network.num_flights()];
        let mut by_origin = vec![Vec::new(); network.airports().len()];
        for (i, d) in duties.iter().enumerate() {
            let i = i as u32;
            if let Some(list) = by_base.get_mut(&d.origin) {
                list.push(i);
            }
            for f in &d.flight_ids {
                by_flight[f.index()].push(i);
            }
            by_origin[d.origin.0 as usize].push(i);
        }
        Self { duties, by_base, by_flight, by_origin }
    }
}

/// Enumerates every flight sequence that satisfies the duty-level rules:
/// connection city, sit window, flights per duty, elapsed and flying time.
pub fn enumerate_duties(network: &FlightNetwork, rules: &RuleSet) -> DutySet {
    let flights = network.flights();
    let mut departures: Vec<Vec<usize>> = vec![Vec::new(); network.airports().len()];
    for (pos, f) in flights.iter().enumerate() {
        departures[f.origin.0 as usize].push(pos);
    }
    // Legal within-duty successors of each flight position.
    let next: Vec<Vec<usize>> = flights
        .iter()
        .map(|f| {
            let list = &departures[f.destination.0 as usize];
            let lo = list.partition_point(|&p| flights[p].departure < f.arrival + rules.min_sit);
            let hi = list.partition_point(|&p| flights[p].departure <= f.arrival + rules.max_sit);
            list[lo..hi].to_vec()
        })
        .collect();

    let mut duties = Vec::new();
    let mut path = Vec::with_capacity(rules.max_flights_per_duty as usize);
    for first in 0..flights.len() {
        path.clear();
        path.push(first);
        extend_duty(network, rules, &next, &mut path, flights[first].flying_time(), &mut duties);
    }
    DutySet::from_duties(duties, network)
}

fn extend_duty(
    network: &FlightNetwork,
    rules: &RuleSet,
    next: &[Vec<usize>],
    path: &mut Vec<usize>,
    flying: i64,
    out: &mut Vec<Duty>,
) {
    let flights = network.flights();
    let first = &flights[path[0]];
    let last = &flights[*path.last().unwrap()];
    let start = first.departure - rules.briefing;
    let end = last.arrival + rules.debriefing;
    if end - start > rules.max_duty_elapsed || flying > rules.max_duty_flying {
        return;
    }
    out.push(Duty {
        flight_ids: path.iter().map(|&p| flights[p].id).collect(),
        start,
        end,
        flying,
        origin: first.origin,
        destination: last.destination,
    });
    if path.len() as u32 >= rules.max_flights_per_duty {
        return;
    }
    for &n in &next[*path.last().unwrap()] {
        path.push(n);
        extend_duty(network, rules, next, path, flying + flights[n].flying_time(), out);
        path.pop();
    }
}

/// Legal overnight connections between duties.
#[derive(Clone, Debug)]
pub struct DutyGraph {
    successors: Vec<Vec<u32>>,
}

impl DutyGraph {
    pub fn successors(&self, duty: u32) -> &[u32] {
        &self.successors[duty as usize]
    }

    pub fn num_edges(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }
}

/// Edge `a -> b` iff `b` departs where `a` ends and the rest between the end
/// of `a` and the start of `b` lies in the overnight window.
pub fn build_duty_graph(duties: &DutySet, rules: &RuleSet) -> DutyGraph {
    let successors = duties
        .duties
        .iter()
        .map(|d| {
            let list = &duties.by_origin[d.destination.0 as usize];
            let lo = list
                .partition_point(|&i| duties.duties[i as usize].start < d.end + rules.min_overnight);
            let hi = list
                .partition_point(|&i| duties.duties[i as usize].start <= d.end + rules.max_overnight);
            list[lo..hi].to_vec()
        })
        .collect();
    DutyGraph { successors }
}

/// The enumerated duty network plus everything needed to cost pairings.
#[derive(Clone, Debug)]
pub struct LegalSpace {
    pub network: FlightNetwork,
    pub rules: RuleSet,
    pub cost: CostModel,
    pub duties: DutySet,
    pub graph: DutyGraph,
    pub pairing_cap: usize,
}

impl LegalSpace {
    pub fn build(network: FlightNetwork, rules: RuleSet, cost: CostModel) -> Self {
        let duties = enumerate_duties(&network, &rules);
        let graph = build_duty_graph(&duties, &rules);
        Self { network, rules, cost, duties, graph, pairing_cap: DEFAULT_PAIRING_CAP }
    }

    pub fn duty_mask(&self, seed: impl IntoIterator<Item = u32>) -> Vec<bool> {
        let mut mask = vec![false; self.duties.len()];
        for d in seed {
            mask[d as usize] = true;
        }
        mask
    }

    /// Duties whose flights all lie in `flights` (a mask over flight rows).
    pub fn duties_within(&self, flights: &[bool]) -> Vec<bool> {
        self.duties
            .duties
            .iter()
            .map(|d| d.flight_ids.iter().all(|f| flights[f.index()]))
            .collect()
    }

    /// Every legal pairing built only from duties in `mask`, sorted by
    /// signature. Each crew base is an independent sub-search.
    pub fn pairings_from_mask(&self, mask: &[bool]) -> Vec<Pairing> {
        self.pairings_from_mask_for(mask, self.network.crew_bases())
    }

    pub fn pairings_from_mask_for(&self, mask: &[bool], bases: &[AirportId]) -> Vec<Pairing> {
        let mut all: Vec<Pairing> = bases
            .par_iter()
            .map(|&base| {
                let mut out = Vec::new();
                let mut path = Vec::with_capacity(self.rules.max_duties_per_pairing as usize);
                for &d in self.duties.by_base(base) {
                    if !mask[d as usize] {
                        continue;
                    }
                    path.clear();
                    path.push(d);
                    self.extend_pairing(base, mask, &mut path, &mut out);
                    if out.len() >= self.pairing_cap {
                        break;
                    }
                }
                out
            })
            .flatten()
            .collect();
        all.sort_unstable();
        all.truncate(self.pairing_cap);
        all
    }

    fn extend_pairing(&self, base: AirportId, mask: &[bool], path: &mut Vec<u32>, out: &mut Vec<Pairing>) {
        if out.len() >= self.pairing_cap {
            return;
        }
        let last = self.duties.get(*path.last().unwrap());
        let at_base = last.destination == base;
        if at_base {
            out.push(self.assemble(base, path));
        }
        if path.len() as u32 >= self.rules.max_duties_per_pairing
            || (at_base && self.rules.forbid_same_city_overnight)
        {
            return;
        }
        let start = self.duties.get(path[0]).start;
        for &s in self.graph.successors(*path.last().unwrap()) {
            if !mask[s as usize] || self.duties.get(s).end - start > self.rules.max_tafb {
                continue;
            }
            path.push(s);
            self.extend_pairing(base, mask, path, out);
            path.pop();
        }
    }

    /// Every legal pairing whose first duty is one of `starts`, extended
    /// over the whole duty graph. Starts not departing a crew base yield
    /// nothing.
    pub fn pairings_starting_with(&self, starts: &[u32]) -> Vec<Pairing> {
        let all = vec![true; self.duties.len()];
        let mut starts = starts.to_vec();
        starts.sort_unstable();
        starts.dedup();
        let mut out: Vec<Pairing> = starts
            .par_iter()
            .filter_map(|&d| {
                let base = self.duties.get(d).origin;
                if !self.network.is_crew_base(base) {
                    return None;
                }
                let mut found = Vec::new();
                let mut path = vec![d];
                self.extend_pairing(base, &all, &mut path, &mut found);
                Some(found)
            })
            .flatten()
            .collect();
        out.sort_unstable();
        out.truncate(self.pairing_cap);
        out
    }

    /// Builds the pairing for a base-to-base duty path.
    pub fn assemble(&self, base: AirportId, path: &[u32]) -> Pairing {
        let duties: Vec<DutySpan> = path.iter().map(|&d| self.duties.get(d).span()).collect();
        let flights: Vec<FlightId> =
            path.iter().flat_map(|&d| self.duties.get(d).flight_ids.iter().copied()).collect();
        let tafb = duties[duties.len() - 1].end - duties[0].start;
        let overnights = duties.len() as u32 - 1;
        let cost = pairing_cost(&duties, tafb, overnights, &self.cost, &self.rules);
        Pairing { base, flights, duties, cost, tafb }
    }

    pub fn flight_mask(&self, flights: impl IntoIterator<Item = FlightId>) -> Vec<bool> {
        let mut mask = vec![false; self.network.num_flights()];
        for f in flights {
            mask[f.index()] = true;
        }
        mask
    }
}

/// Every legal pairing whose duties all belong to `seed_duties`.
pub fn enumerate_pairings_from_duties(space: &LegalSpace, seed_duties: &[u32]) -> Vec<Pairing> {
    if seed_duties.is_empty() {
        return Vec::new();
    }
    space.pairings_from_mask(&space.duty_mask(seed_duties.iter().copied()))
}

/// Every legal pairing whose flights all belong to `flight_subset`.
pub fn enumerate_pairings_covering_flights(space: &LegalSpace, flight_subset: &[FlightId]) -> Vec<Pairing> {
    if flight_subset.is_empty() {
        return Vec::new();
    }
    let flights = space.flight_mask(flight_subset.iter().copied());
    space.pairings_from_mask(&space.duties_within(&flights))
}
