//! Baseline pricing: one resource-constrained shortest path search per
//! (day, crew base) on a duty-based time-space network.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;

use crate::cg::REDUCED_COST_TOL;
use crate::legalgen::LegalSpace;
use crate::lp::{self, DualSolution};
use crate::model::{validate_pairing, AirportId, Cents, Minutes, Pairing, Verdict, MINUTES_PER_DAY};

/// Default number of labels kept per node.
pub const DEFAULT_BEAM_WIDTH: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DutyArc {
    pub duty: u32,
    pub from: usize,
    pub to: usize,
}

/// Acyclic network for one (day, base) pair. Nodes are `(airport, time)`
/// and sorted by time; every arc is a legal duty.
#[derive(Clone, Debug)]
pub struct TimeSpaceNetwork {
    pub day: u32,
    pub base: AirportId,
    pub nodes: Vec<(AirportId, Minutes)>,
    pub arcs: Vec<DutyArc>,
    /// Arcs leaving the source: duties departing the base on `day`.
    pub source_arcs: Vec<usize>,
    /// Arcs leaving each node under the overnight rest window.
    pub out_arcs: Vec<Vec<usize>>,
}

impl TimeSpaceNetwork {
    /// Nodes at the base, which connect to the sink.
    pub fn sink_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&n| self.nodes[n].0 == self.base)
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }
}

/// Keeps every duty reachable from the base's departures on `day`.
pub fn build_pricing_network(day: u32, base: AirportId, space: &LegalSpace) -> TimeSpaceNetwork {
    let duties = &space.duties;
    let starts: Vec<u32> = duties
        .by_base(base)
        .iter()
        .copied()
        .filter(|&d| {
            let first = duties.get(d).flight_ids[0];
            space.network.get(first).departure / MINUTES_PER_DAY == day as Minutes
        })
        .collect();
    let mut seen: BTreeSet<u32> = starts.iter().copied().collect();
    let mut queue: VecDeque<u32> = starts.iter().copied().collect();
    while let Some(d) = queue.pop_front() {
        for &s in space.graph.successors(d) {
            if seen.insert(s) {
                queue.push_back(s);
            }
        }
    }
    let mut node_set: BTreeSet<(Minutes, AirportId)> = BTreeSet::new();
    for &d in &seen {
        let duty = duties.get(d);
        node_set.insert((duty.start, duty.origin));
        node_set.insert((duty.end, duty.destination));
    }
    let nodes: Vec<(AirportId, Minutes)> = node_set.iter().map(|&(t, a)| (a, t)).collect();
    let index: BTreeMap<(AirportId, Minutes), usize> =
        nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut arc_of: BTreeMap<u32, usize> = BTreeMap::new();
    let arcs: Vec<DutyArc> = seen
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            arc_of.insert(d, i);
            let duty = duties.get(d);
            DutyArc {
                duty: d,
                from: index[&(duty.origin, duty.start)],
                to: index[&(duty.destination, duty.end)],
            }
        })
        .collect();
    let mut out_arcs = vec![Vec::new(); nodes.len()];
    for arc in &arcs {
        if !out_arcs[arc.to].is_empty() {
            continue;
        }
        // Successors depend only on the arrival airport and time.
        out_arcs[arc.to] = space.graph.successors(arc.duty).iter().map(|s| arc_of[s]).collect();
    }
    let source_arcs = starts.iter().map(|d| arc_of[d]).collect();
    TimeSpaceNetwork { day, base, nodes, arcs, source_arcs, out_arcs }
}

/// Every (day, base) network of the instance, day-major.
pub fn build_all_networks(space: &LegalSpace) -> Vec<TimeSpaceNetwork> {
    let days = space.network.schedule_days();
    let bases = space.network.crew_bases();
    (0..days)
        .flat_map(|day| bases.iter().map(move |&b| (day, b)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(day, b)| build_pricing_network(day, b, space))
        .collect()
}

/// Partial path state. Cost is split so that the rounded total can be
/// recovered: `cost_minutes / 60` is the time-based part, `fixed` the rest.
#[derive(Clone, Debug)]
pub struct Label {
    pub node: usize,
    pub cost_minutes: i64,
    pub fixed: Cents,
    pub partial_dual: f64,
    pub duties_used: u32,
    pub tafb_so_far: Minutes,
    pub path: Vec<u32>,
}

impl Label {
    pub fn partial_cost(&self) -> f64 {
        self.cost_minutes as f64 / 60.0 + self.fixed as f64
    }

    pub fn reduced(&self) -> f64 {
        self.partial_cost() - self.partial_dual
    }

    /// Whether every completion of `other` is matched or beaten by the same
    /// completion of `self`. Totals are rounded to whole cents at the end,
    /// so a reduced-cost lead only carries over exactly when both time
    /// parts round alike; otherwise a full cent of lead is required.
    pub fn dominates(&self, other: &Label) -> bool {
        if self.duties_used > other.duties_used || self.tafb_so_far > other.tafb_so_far {
            return false;
        }
        let (a, b) = (self.reduced(), other.reduced());
        if self.cost_minutes.rem_euclid(60) == other.cost_minutes.rem_euclid(60) {
            a <= b + 1e-9
        } else {
            a + 1.0 <= b + 1e-9
        }
    }
}

struct Extender<'a> {
    space: &'a LegalSpace,
    duals: &'a DualSolution,
    psi: Cents,
}

impl Extender<'_> {
    fn duty_terms(&self, d: u32) -> (i64, Cents, f64) {
        let duty = self.space.duties.get(d);
        let (cm, rules) = (&self.space.cost, &self.space.rules);
        let n = duty.flight_ids.len() as i64;
        let minutes = cm.flying_rate * duty.flying
            + cm.excess_pay_rate * (rules.guaranteed_hours_per_duty - duty.flying).max(0);
        let fixed = cm.soft_cost_aircraft_change * (n - 1) + self.psi * n;
        let dual = duty.flight_ids.iter().map(|f| self.duals.y[f.index()]).sum();
        (minutes, fixed, dual)
    }

    fn start(&self, net: &TimeSpaceNetwork, arc: usize) -> Label {
        let d = net.arcs[arc].duty;
        let duty = self.space.duties.get(d);
        let (minutes, fixed, dual) = self.duty_terms(d);
        Label {
            node: net.arcs[arc].to,
            cost_minutes: minutes + self.space.cost.meal_rate * duty.elapsed(),
            fixed,
            partial_dual: dual,
            duties_used: 1,
            tafb_so_far: duty.elapsed(),
            path: vec![d],
        }
    }

    fn extend(&self, net: &TimeSpaceNetwork, label: &Label, arc: usize) -> Option<Label> {
        let rules = &self.space.rules;
        if label.duties_used >= rules.max_duties_per_pairing {
            return None;
        }
        let d = net.arcs[arc].duty;
        let duty = self.space.duties.get(d);
        let prev_end = net.nodes[label.node].1;
        let tafb = label.tafb_so_far + (duty.end - prev_end);
        if tafb > rules.max_tafb {
            return None;
        }
        let (minutes, fixed, dual) = self.duty_terms(d);
        let mut path = label.path.clone();
        path.push(d);
        Some(Label {
            node: net.arcs[arc].to,
            cost_minutes: label.cost_minutes + minutes + self.space.cost.meal_rate * (duty.end - prev_end),
            fixed: label.fixed + fixed + self.space.cost.hotel_cost,
            partial_dual: label.partial_dual + dual,
            duties_used: label.duties_used + 1,
            tafb_so_far: tafb,
            path,
        })
    }
}

/// Removes dominated labels and keeps at most `beam_width` of the rest,
/// preferring low partial reduced cost.
fn prune(mut labels: Vec<Label>, beam_width: Option<usize>) -> Vec<Label> {
    labels.sort_by(|a, b| {
        a.reduced()
            .total_cmp(&b.reduced())
            .then(a.duties_used.cmp(&b.duties_used))
            .then(a.tafb_so_far.cmp(&b.tafb_so_far))
            .then_with(|| a.path.cmp(&b.path))
    });
    let mut kept: Vec<Label> = Vec::new();
    for l in labels {
        if beam_width.is_some_and(|w| kept.len() >= w) {
            break;
        }
        if !kept.iter().any(|k| k.dominates(&l)) {
            kept.push(l);
        }
    }
    kept
}

/// Labeling search over one network; returns improving legal pairings
/// with their reduced costs. `beam_width = None` keeps every
/// non-dominated label.
pub fn label_search(
    net: &TimeSpaceNetwork,
    space: &LegalSpace,
    duals: &DualSolution,
    psi: Cents,
    beam_width: Option<usize>,
) -> Vec<(f64, Arc<Pairing>)> {
    let ext = Extender { space, duals, psi };
    let mut pending: Vec<Vec<Label>> = vec![Vec::new(); net.nodes.len()];
    for &arc in &net.source_arcs {
        let l = ext.start(net, arc);
        pending[l.node].push(l);
    }
    let mut found = Vec::new();
    let stop_at_base = space.rules.forbid_same_city_overnight;
    // Node indices are in time order and every arc moves forward in time.
    for node in 0..net.nodes.len() {
        let labels = prune(std::mem::take(&mut pending[node]), beam_width);
        let at_base = net.nodes[node].0 == net.base;
        for l in &labels {
            if at_base {
                let p = space.assemble(net.base, &l.path);
                let mu = lp::column_cost(&p, psi) - lp::dual_sum(&p, &duals.y);
                if mu < -REDUCED_COST_TOL {
                    let verdict = validate_pairing(&p.flights, p.base, &space.network, &space.rules, &space.cost);
                    if let Ok(Verdict::Legal(_)) = verdict {
                        found.push((mu, Arc::new(p)));
                    }
                }
                if stop_at_base {
                    continue;
                }
            }
            for &arc in &net.out_arcs[node] {
                if let Some(next) = ext.extend(net, l, arc) {
                    pending[next.node].push(next);
                }
            }
        }
    }
    found
}

/// Runs every sub-problem and returns the improving pairings, most
/// negative reduced cost first, deduplicated, at most `cap` of them.
pub fn cg_standard_iteration(
    networks: &[TimeSpaceNetwork],
    space: &LegalSpace,
    duals: &DualSolution,
    psi: Cents,
    beam_width: Option<usize>,
    cap: Option<usize>,
) -> Vec<Arc<Pairing>> {
    let mut all: Vec<(f64, Arc<Pairing>)> = networks
        .par_iter()
        .flat_map_iter(|net| label_search(net, space, duals, psi, beam_width))
        .collect();
    all.sort_by(|a, b| a.1.cmp(&b.1));
    all.dedup_by(|a, b| a.1 == b.1);
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    if let Some(cap) = cap {
        all.truncate(cap);
    }
    all.into_iter().map(|(_, p)| p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fixtures, CostModel, FlightNetwork, RuleSet};

    fn duals(y: &[f64]) -> DualSolution {
        DualSolution { y: y.to_vec(), objective: 0.0 }
    }

    fn round_trip_space() -> LegalSpace {
        LegalSpace::build(fixtures::round_trip(), RuleSet::default(), CostModel::default())
    }

    #[test]
    fn empty_day_has_no_arcs() {
        let s = round_trip_space();
        let net = build_pricing_network(1, AirportId(0), &s);
        assert!(net.is_empty() && net.nodes.is_empty());
    }

    #[test]
    fn round_trip_network_has_one_closing_path() {
        let s = round_trip_space();
        let net = build_pricing_network(0, AirportId(0), &s);
        // Duties {1} and {1,2} leave the base; {2} is reachable from neither.
        assert_eq!(net.source_arcs.len(), 2);
        assert_eq!(net.arcs.len(), 2);
        let closing: Vec<&DutyArc> =
            net.arcs.iter().filter(|a| net.nodes[a.to].0 == AirportId(0)).collect();
        assert_eq!(closing.len(), 1);
        for a in &net.arcs {
            assert!(net.nodes[a.from].1 < net.nodes[a.to].1);
        }
    }

    #[test]
    fn unreachable_duty_is_excluded() {
        let net = FlightNetwork::new(
            vec!["B".into(), "X".into(), "Y".into()],
            &["B".into()],
            vec![
                fixtures::flight(1, 0, 1, 480, 540),
                fixtures::flight(2, 1, 0, 600, 660),
                fixtures::flight(3, 2, 1, 500, 560),
            ],
        )
        .unwrap();
        let s = LegalSpace::build(net, RuleSet::default(), CostModel::default());
        let tsn = build_pricing_network(0, AirportId(0), &s);
        assert!(tsn.arcs.iter().all(|a| !s.duties.get(a.duty).flight_ids.contains(&crate::model::FlightId(3))));
    }

    #[test]
    fn zero_duals_price_nothing() {
        let s = round_trip_space();
        let nets = build_all_networks(&s);
        assert!(cg_standard_iteration(&nets, &s, &duals(&[0.0, 0.0]), 0, None, None).is_empty());
    }

    #[test]
    fn single_path_with_high_duals() {
        let s = round_trip_space();
        let net = build_pricing_network(0, AirportId(0), &s);
        let found = label_search(&net, &s, &duals(&[1e6, 1e6]), 0, None);
        assert_eq!(found.len(), 1);
        let p = &found[0].1;
        assert_eq!(p.flights.len(), 2);
        assert!((found[0].0 - (p.cost as f64 - 2e6)).abs() < 1e-9);
    }

    #[test]
    fn dominance_needs_all_three_resources() {
        let base = Label {
            node: 0,
            cost_minutes: 600,
            fixed: 0,
            partial_dual: 0.0,
            duties_used: 1,
            tafb_so_far: 100,
            path: vec![0],
        };
        let worse = Label { cost_minutes: 1200, duties_used: 2, tafb_so_far: 200, path: vec![1], ..base.clone() };
        assert!(base.dominates(&worse));
        assert!(!worse.dominates(&base));
        let shorter = Label { tafb_so_far: 50, ..worse.clone() };
        assert!(!base.dominates(&shorter));
        let kept = prune(vec![worse.clone(), base.clone()], None);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].path, vec![0]);
        // A lead of less than a cent survives only when rounding is aligned.
        let near = Label { cost_minutes: 630, ..worse };
        assert!(!base.dominates(&near));
    }

    #[test]
    fn label_costs_match_assembled_pairings() {
        let n = crate::netgen::generate_network(&crate::netgen::NetworkParams {
            num_flights: 30,
            seed: 4,
            ..Default::default()
        })
        .unwrap();
        let s = LegalSpace::build(n, RuleSet::default(), CostModel::default());
        let y = vec![5e5; s.network.num_flights()];
        for net in build_all_networks(&s) {
            for (mu, p) in label_search(&net, &s, &duals(&y), 100, None) {
                let expected = lp::column_cost(&p, 100) - lp::dual_sum(&p, &y);
                assert_eq!(mu, expected);
                assert!(mu < 0.0);
            }
        }
    }
}
