//! Archive of previously seen pairings indexed by consecutive flight pair.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::model::{FlightId, Pairing};

pub type FlightPair = (FlightId, FlightId);

#[derive(Clone, Debug, Default)]
pub struct Archive {
    by_pair: BTreeMap<FlightPair, BTreeSet<Arc<Pairing>>>,
    pairings: BTreeSet<Arc<Pairing>>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Files every pairing under each of its consecutive flight pairs.
    /// Returns how many pairings were new.
    pub fn update<'a>(&mut self, pairings: impl IntoIterator<Item = &'a Arc<Pairing>>) -> usize {
        let mut added = 0;
        for p in pairings {
            if !self.pairings.insert(Arc::clone(p)) {
                continue;
            }
            added += 1;
            for key in p.flight_pairs() {
                self.by_pair.entry(key).or_default().insert(Arc::clone(p));
            }
        }
        added
    }

    pub fn bucket(&self, key: FlightPair) -> Option<&BTreeSet<Arc<Pairing>>> {
        self.by_pair.get(&key)
    }

    pub fn contains(&self, p: &Pairing) -> bool {
        self.pairings.contains(p)
    }

    pub fn num_pairs(&self) -> usize {
        self.by_pair.len()
    }

    pub fn num_pairings(&self) -> usize {
        self.pairings.len()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&FlightPair, &BTreeSet<Arc<Pairing>>)> {
        self.by_pair.iter()
    }
}
