//! Initial feasible solution by time-window divide-and-cover.

use std::sync::Arc;

use crate::ip::{solve_cover_ip, IpError, IpLimits};
use crate::legalgen::LegalSpace;
use crate::lp::CoverMatrix;
use crate::model::{Cents, FlightId, Minutes, Pairing};

use super::EngineError;

/// Flights per divide-and-cover window.
pub const DEFAULT_IFS_WINDOW: usize = 25;

/// Covers the schedule window by window in departure order. Each window
/// takes the earliest still-uncovered flights and picks pairings touching
/// them by a small covering IP; chosen pairings may also cover later
/// flights, which are then skipped. Candidate pairings come from the duties
/// inside a time band around the window, widened whenever some window
/// flight has no candidate.
pub fn generate_ifs(
    space: &LegalSpace,
    psi: Cents,
    window: usize,
    limits: IpLimits,
) -> Result<Vec<Arc<Pairing>>, EngineError> {
    let network = &space.network;
    let rules = &space.rules;
    let f = network.num_flights();
    let window = window.max(1);
    let horizon: Minutes = network.flights().iter().map(|f| f.arrival).max().unwrap_or(0)
        - network.flights().iter().map(|f| f.departure).min().unwrap_or(0);
    let first_margin = rules.max_duty_elapsed + rules.max_overnight;

    let mut covered = vec![false; f];
    let mut chosen: Vec<Arc<Pairing>> = Vec::new();
    loop {
        let w: Vec<FlightId> = network
            .flights()
            .iter()
            .filter(|fl| !covered[fl.id.index()])
            .take(window)
            .map(|fl| fl.id)
            .collect();
        if w.is_empty() {
            break;
        }
        let lo = w.iter().map(|&id| network.get(id).departure).min().unwrap();
        let hi = w.iter().map(|&id| network.get(id).arrival).max().unwrap();
        let mut in_window = vec![false; f];
        for id in &w {
            in_window[id.index()] = true;
        }

        let mut margin = first_margin;
        let candidates = loop {
            let mask: Vec<bool> = space
                .duties
                .duties()
                .iter()
                .map(|d| d.start >= lo - margin && d.end <= hi + margin)
                .collect();
            let candidates: Vec<Pairing> = space
                .pairings_from_mask(&mask)
                .into_iter()
                .filter(|p| p.flights.iter().any(|fl| in_window[fl.index()]))
                .collect();
            let mut reached = vec![false; f];
            for p in &candidates {
                for fl in &p.flights {
                    reached[fl.index()] = true;
                }
            }
            let missing: Vec<u32> = w.iter().filter(|id| !reached[id.index()]).map(|id| id.0).collect();
            if missing.is_empty() {
                break candidates;
            }
            if margin >= horizon + rules.max_tafb {
                return Err(EngineError::Infeasible(missing));
            }
            margin *= 2;
        };

        // Rows are the window flights; flights already covered add a deadhead.
        let row_of: Vec<usize> = {
            let mut r = vec![usize::MAX; f];
            for (i, id) in w.iter().enumerate() {
                r[id.index()] = i;
            }
            r
        };
        let mut a = CoverMatrix::new(w.len());
        for p in &candidates {
            let repeats = p.flights.iter().filter(|fl| covered[fl.index()]).count() as Cents;
            let rows: Vec<usize> =
                p.flights.iter().map(|fl| row_of[fl.index()]).filter(|&r| r != usize::MAX).collect();
            a.push_column(rows, (p.cost + psi * repeats) as f64);
        }
        let rank: Vec<usize> = (0..candidates.len()).collect();
        let search = match solve_cover_ip(&a, &rank, limits) {
            Ok(s) => s,
            Err(IpError::Infeasible(rows)) => {
                return Err(EngineError::Infeasible(rows.iter().map(|&r| w[r].0).collect()))
            }
            Err(e) => return Err(e.into()),
        };
        for &j in &search.selected {
            let p = &candidates[j];
            for fl in &p.flights {
                covered[fl.index()] = true;
            }
            chosen.push(Arc::new(p.clone()));
        }
    }
    chosen.sort();
    chosen.dedup();
    Ok(chosen)
}
