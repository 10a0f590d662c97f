//! Helpers shared by the integration tests: seeded small instances and a
//! brute-force pairing enumerator that only relies on the validator.

#![allow(dead_code)]

use std::collections::BTreeSet;

use crewpair::legalgen::LegalSpace;
use crewpair::model::{validate_pairing, CostModel, FlightId, FlightNetwork, Pairing, RuleSet, Verdict};
use crewpair::netgen::{generate_network, NetworkParams};

/// A seeded hub-and-spoke instance with `flights` flights over two days;
/// with one or two hubs the count must be even.
pub fn small_network(flights: usize, seed: u64) -> FlightNetwork {
    let params = NetworkParams {
        num_flights: flights,
        num_crew_bases: 1 + (seed % 2) as usize,
        num_hubs: 1 + (seed % 2) as usize,
        num_spokes_per_hub: 2,
        days: 2,
        seed,
        ..NetworkParams::default()
    };
    generate_network(&params).expect("small instance generates")
}

pub fn network(flights: usize, seed: u64) -> FlightNetwork {
    generate_network(&NetworkParams { num_flights: flights, seed, ..NetworkParams::default() })
        .expect("instance generates")
}

pub fn space(network: FlightNetwork) -> LegalSpace {
    LegalSpace::build(network, RuleSet::default(), CostModel::default())
}

/// Every legal pairing found by trying each flight subset, in departure
/// order, from each crew base.
pub fn brute_force_pairings(space: &LegalSpace) -> Vec<Pairing> {
    let net = &space.network;
    let n = net.num_flights();
    assert!(n <= 16, "brute force is exponential");
    let mut order: Vec<FlightId> = net.flights().iter().map(|f| f.id).collect();
    order.sort_by_key(|&id| (net.flight(id).unwrap().departure, id));
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let seq: Vec<FlightId> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| order[i]).collect();
        for &base in net.crew_bases() {
            if let Verdict::Legal(p) = validate_pairing(&seq, base, net, &space.rules, &space.cost).unwrap() {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

pub fn signatures<'a>(pairings: impl IntoIterator<Item = &'a Pairing>) -> BTreeSet<Vec<FlightId>> {
    pairings.into_iter().map(|p| p.flights.clone()).collect()
}

/// Re-validates a pairing from its flight sequence and checks that the
/// stored derived fields agree.
pub fn is_legal(space: &LegalSpace, p: &Pairing) -> bool {
    match validate_pairing(&p.flights, p.base, &space.network, &space.rules, &space.cost) {
        Ok(Verdict::Legal(q)) => q == *p,
        _ => false,
    }
}
