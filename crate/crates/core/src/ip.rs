//! Integerization of a column set by best-first branch-and-bound, and the
//! exhaustive small-instance oracle built on it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::legalgen::LegalSpace;
use crate::lp::{self, solve_cover, CoverMatrix, LpError};
use crate::model::{Cents, FlightNetwork, ModelError, Pairing, Solution};

/// Largest pairing set the exhaustive oracle accepts.
pub const ORACLE_PAIRING_GUARD: usize = 50_000;
/// Default node budget; keeps runs reproducible when the clock is generous.
pub const DEFAULT_NODE_LIMIT: usize = 5_000;

const EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum IpError {
    #[error("no cover exists; uncovered rows {0:?}")]
    Infeasible(Vec<usize>),
    #[error("oracle refused: {0} pairings exceed the guard of {ORACLE_PAIRING_GUARD}")]
    TooLarge(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IpStatus {
    Optimal,
    TimeLimited,
}

#[derive(Clone, Copy, Debug)]
pub struct IpLimits {
    /// `None` means unlimited.
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
}

impl IpLimits {
    pub fn unlimited() -> Self {
        Self { time_limit: None, node_limit: None }
    }

    pub fn with_time(time_limit: Duration) -> Self {
        Self { time_limit: Some(time_limit), node_limit: Some(DEFAULT_NODE_LIMIT) }
    }
}

/// Result of a search over a cover matrix, in matrix terms.
#[derive(Clone, Debug)]
pub struct CoverSearch {
    /// Chosen column indices, ascending.
    pub selected: Vec<usize>,
    pub value: f64,
    pub root_bound: f64,
    pub status: IpStatus,
    pub nodes: usize,
}

#[derive(Clone, Debug)]
pub struct IpOutcome {
    pub solution: Solution,
    pub status: IpStatus,
    /// Root relaxation value on the same objective as `solution.objective`.
    pub lp_bound: f64,
    pub nodes: usize,
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    /// +1 fixed to one, -1 fixed to zero, 0 free.
    fixed: Vec<i8>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap: lowest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

enum NodeLp {
    Infeasible,
    Solved { bound: f64, x: Vec<f64> },
}

struct Search<'a> {
    a: &'a CoverMatrix,
    /// Position of each column in the tie-break order.
    rank: &'a [usize],
    /// Whether all costs are integers, allowing bound rounding.
    integral: bool,
}

impl<'a> Search<'a> {
    fn node_lp(&self, fixed: &[i8]) -> Result<NodeLp, LpError> {
        let m = self.a.num_rows();
        let mut covered = vec![false; m];
        let mut base = 0.0;
        for (j, &f) in fixed.iter().enumerate() {
            if f == 1 {
                base += self.a.cost(j);
                for &r in self.a.column(j) {
                    covered[r as usize] = true;
                }
            }
        }
        let mut row_map = vec![usize::MAX; m];
        let mut rows = 0;
        for i in 0..m {
            if !covered[i] {
                row_map[i] = rows;
                rows += 1;
            }
        }
        let mut x = vec![0.0; fixed.len()];
        for (j, &f) in fixed.iter().enumerate() {
            if f == 1 {
                x[j] = 1.0;
            }
        }
        if rows == 0 {
            return Ok(NodeLp::Solved { bound: base, x });
        }
        let mut sub = CoverMatrix::new(rows);
        let mut cols = Vec::new();
        for (j, &f) in fixed.iter().enumerate() {
            if f != 0 {
                continue;
            }
            let c: Vec<usize> = self
                .a
                .column(j)
                .iter()
                .map(|&r| row_map[r as usize])
                .filter(|&r| r != usize::MAX)
                .collect();
            if !c.is_empty() {
                sub.push_column(c, self.a.cost(j));
                cols.push(j);
            }
        }
        match solve_cover(&sub) {
            Ok(out) => {
                for (k, &j) in cols.iter().enumerate() {
                    x[j] = out.x[k];
                }
                Ok(NodeLp::Solved { bound: base + out.objective, x })
            }
            Err(LpError::Infeasible(_)) => Ok(NodeLp::Infeasible),
            Err(e) => Err(e),
        }
    }

    /// Rounds an LP point: keep columns at one, then repeatedly add the
    /// column with the lowest cost per newly covered row (preferring
    /// columns in the LP support), then drop redundant columns.
    fn round(&self, fixed: &[i8], x: &[f64]) -> Option<(Vec<usize>, f64)> {
        let m = self.a.num_rows();
        let mut count = vec![0u32; m];
        let mut chosen = vec![false; fixed.len()];
        let mut uncovered = m;
        let take = |j: usize, chosen: &mut Vec<bool>, count: &mut Vec<u32>, uncovered: &mut usize| {
            chosen[j] = true;
            for &r in self.a.column(j) {
                if count[r as usize] == 0 {
                    *uncovered -= 1;
                }
                count[r as usize] += 1;
            }
        };
        for j in 0..fixed.len() {
            if fixed[j] == 1 || x[j] >= 1.0 - EPS {
                take(j, &mut chosen, &mut count, &mut uncovered);
            }
        }
        while uncovered > 0 {
            let mut best: Option<(usize, f64, bool)> = None;
            for j in 0..fixed.len() {
                if chosen[j] || fixed[j] == -1 {
                    continue;
                }
                let new = self.a.column(j).iter().filter(|&&r| count[r as usize] == 0).count();
                if new == 0 {
                    continue;
                }
                let ratio = self.a.cost(j) / new as f64;
                let in_support = x[j] > lp::SUPPORT_TOLERANCE;
                let better = match best {
                    None => true,
                    Some((b, br, bs)) => (in_support, -ratio, std::cmp::Reverse(self.rank[j]))
                        .partial_cmp(&(bs, -br, std::cmp::Reverse(self.rank[b])))
                        == Some(Ordering::Greater),
                };
                if better {
                    best = Some((j, ratio, in_support));
                }
            }
            let (j, _, _) = best?;
            take(j, &mut chosen, &mut count, &mut uncovered);
        }
        let mut order: Vec<usize> = (0..fixed.len()).filter(|&j| chosen[j] && fixed[j] != 1).collect();
        order.sort_by(|&a, &b| self.a.cost(b).total_cmp(&self.a.cost(a)).then(self.rank[a].cmp(&self.rank[b])));
        for j in order {
            if self.a.column(j).iter().all(|&r| count[r as usize] >= 2) {
                chosen[j] = false;
                for &r in self.a.column(j) {
                    count[r as usize] -= 1;
                }
            }
        }
        let selected: Vec<usize> = (0..fixed.len()).filter(|&j| chosen[j]).collect();
        let value = selected.iter().map(|&j| self.a.cost(j)).sum();
        Some((selected, value))
    }

    fn prunable(&self, bound: f64, incumbent: f64) -> bool {
        if self.integral {
            (bound - EPS).ceil() >= incumbent - EPS
        } else {
            bound >= incumbent - EPS * incumbent.abs().max(1.0)
        }
    }

    fn run(&self, limits: IpLimits) -> Result<CoverSearch, IpError> {
        let start = Instant::now();
        let n = self.a.num_columns();
        let uncovered = self.a.uncovered_rows();
        if !uncovered.is_empty() {
            return Err(IpError::Infeasible(uncovered));
        }
        let root_fixed = vec![0i8; n];
        let NodeLp::Solved { bound: root_bound, x } = self.node_lp(&root_fixed)? else {
            return Err(IpError::Infeasible(Vec::new()));
        };
        let (mut best_sel, mut best_val) =
            self.round(&root_fixed, &x).expect("a feasible LP has a feasible rounding");
        let out_of_time = |nodes: usize| {
            limits.time_limit.is_some_and(|t| start.elapsed() >= t)
                || limits.node_limit.is_some_and(|l| nodes >= l)
        };
        let mut heap = BinaryHeap::new();
        let mut seq = 0;
        let mut nodes = 1;
        let mut pending = Some((root_fixed, root_bound, x));
        let mut status = IpStatus::Optimal;
        loop {
            if let Some((fixed, bound, x)) = pending.take() {
                if !self.prunable(bound, best_val) {
                    // Branch on the most fractional column.
                    let frac = (0..n)
                        .filter(|&j| fixed[j] == 0 && x[j] > EPS && x[j] < 1.0 - EPS)
                        .min_by(|&a, &b| {
                            (x[a] - 0.5).abs().total_cmp(&(x[b] - 0.5).abs()).then(self.rank[a].cmp(&self.rank[b]))
                        });
                    match frac {
                        None => {
                            let sel: Vec<usize> = (0..n).filter(|&j| x[j] >= 1.0 - EPS).collect();
                            let val: f64 = sel.iter().map(|&j| self.a.cost(j)).sum();
                            if val < best_val - EPS {
                                best_sel = sel;
                                best_val = val;
                            }
                        }
                        Some(j) => {
                            for v in [1i8, -1] {
                                let mut child = fixed.clone();
                                child[j] = v;
                                seq += 1;
                                heap.push(Node { bound, depth: child.iter().filter(|&&f| f != 0).count(), seq, fixed: child });
                            }
                        }
                    }
                }
            }
            if out_of_time(nodes) {
                if heap.iter().any(|node: &Node| !self.prunable(node.bound, best_val)) {
                    status = IpStatus::TimeLimited;
                }
                break;
            }
            let Some(node) = heap.pop() else { break };
            if self.prunable(node.bound, best_val) {
                continue;
            }
            nodes += 1;
            if let NodeLp::Solved { bound, x } = self.node_lp(&node.fixed)? {
                if !self.prunable(bound, best_val) {
                    if let Some((sel, val)) = self.round(&node.fixed, &x) {
                        if val < best_val - EPS {
                            best_sel = sel;
                            best_val = val;
                        }
                    }
                }
                pending = Some((node.fixed, bound, x));
            }
        }
        if limits.time_limit == Some(Duration::ZERO) {
            status = IpStatus::TimeLimited;
        }
        Ok(CoverSearch { selected: best_sel, value: best_val, root_bound, status, nodes })
    }
}

/// Minimum-cost cover of the rows of `a` by whole columns.
/// `rank[j]` orders columns for tie-breaking.
pub fn solve_cover_ip(a: &CoverMatrix, rank: &[usize], limits: IpLimits) -> Result<CoverSearch, IpError> {
    let integral = (0..a.num_columns()).all(|j| a.cost(j).fract() == 0.0);
    Search { a, rank, integral }.run(limits)
}

/// Selects pairings (each at most once) covering every flight at minimum
/// `sum c_j + psi * deadheads`.
pub fn integerize(
    pairings: &[Arc<Pairing>],
    network: &FlightNetwork,
    psi: Cents,
    limits: IpLimits,
) -> Result<IpOutcome, IpError> {
    let f = network.num_flights();
    let mut a = CoverMatrix::new(f);
    for p in pairings {
        a.push_column(p.flights.iter().map(|f| f.index()), lp::column_cost(p, psi));
    }
    let mut order: Vec<usize> = (0..pairings.len()).collect();
    order.sort_by(|&x, &y| pairings[x].cmp(&pairings[y]).then(x.cmp(&y)));
    let mut rank = vec![0; pairings.len()];
    for (r, &j) in order.iter().enumerate() {
        rank[j] = r;
    }
    let search = solve_cover_ip(&a, &rank, limits)?;
    let chosen = search.selected.iter().map(|&j| Arc::clone(&pairings[j])).collect();
    let solution = Solution::new(chosen, network, psi)?;
    let shift = (f as Cents * psi) as f64;
    debug_assert!((solution.objective as f64 - (search.value - shift)).abs() < 0.5);
    Ok(IpOutcome {
        solution,
        status: search.status,
        lp_bound: search.root_bound - shift,
        nodes: search.nodes,
    })
}

/// Optimal crew pairing solution by enumerating every legal pairing and
/// solving the covering problem to optimality.
pub fn exact_small_oracle(space: &LegalSpace, psi: Cents) -> Result<Solution, IpError> {
    let mut space = space.clone();
    space.pairing_cap = ORACLE_PAIRING_GUARD + 1;
    let all = space.pairings_from_mask(&vec![true; space.duties.len()]);
    if all.len() > ORACLE_PAIRING_GUARD {
        return Err(IpError::TooLarge(all.len()));
    }
    let pairings: Vec<Arc<Pairing>> = all.into_iter().map(Arc::new).collect();
    let out = integerize(&pairings, &space.network, psi, IpLimits::unlimited())?;
    debug_assert_eq!(out.status, IpStatus::Optimal);
    Ok(out.solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fixtures, AirportId, CostModel, DutySpan, FlightId, RuleSet};

    fn pairing(flights: &[u32], cost: Cents) -> Arc<Pairing> {
        Arc::new(Pairing {
            base: AirportId(0),
            flights: flights.iter().map(|&f| FlightId(f)).collect(),
            duties: vec![DutySpan { num_flights: flights.len() as u32, start: 0, end: 0, flying: 0 }],
            cost,
            tafb: 0,
        })
    }

    fn network(n: u32) -> FlightNetwork {
        let flights = (1..=n)
            .map(|i| {
                let (o, d) = if i % 2 == 1 { (0, 1) } else { (1, 0) };
                fixtures::flight(i, o, d, 100 * i as i64, 100 * i as i64 + 50)
            })
            .collect();
        FlightNetwork::new(vec!["B".into(), "X".into()], &["B".into()], flights).unwrap()
    }

    /// Every subset of columns that covers all rows; the cheapest one.
    fn brute_force(pairings: &[Arc<Pairing>], net: &FlightNetwork, psi: Cents) -> Cents {
        let mut best = Cents::MAX;
        for mask in 1u32..(1 << pairings.len()) {
            let chosen: Vec<&Pairing> =
                (0..pairings.len()).filter(|j| mask >> j & 1 == 1).map(|j| &*pairings[j]).collect();
            if let Ok((z, _)) = crate::model::solution_objective(&chosen, net, psi) {
                best = best.min(z);
            }
        }
        best
    }

    #[test]
    fn combined_column_beats_two_singles() {
        let net = network(2);
        let ps = vec![pairing(&[1, 2], 15), pairing(&[1], 8), pairing(&[2], 8)];
        let out = integerize(&ps, &net, 0, IpLimits::unlimited()).unwrap();
        assert_eq!(out.solution.objective, 15);
        assert_eq!(brute_force(&ps, &net, 0), 15);
        assert_eq!(out.solution.pairings, vec![ps[0].clone()]);
        assert_eq!(out.status, IpStatus::Optimal);
    }

    #[test]
    fn integral_root_is_kept() {
        let net = network(2);
        let ps = vec![pairing(&[1], 10), pairing(&[2], 10), pairing(&[1, 2], 15)];
        let lp = lp::solve_primal(&ps, 2, 0).unwrap();
        let out = integerize(&ps, &net, 0, IpLimits::unlimited()).unwrap();
        assert_eq!(out.solution.objective as f64, lp.objective);
        assert_eq!(out.lp_bound, lp.objective);
        assert_eq!(out.status, IpStatus::Optimal);
    }

    #[test]
    fn fractional_root_needs_branching() {
        // Triangle: LP 1.5 * 10 = 15, integer optimum 20.
        let net = network(3);
        let ps = vec![pairing(&[1, 2], 10), pairing(&[2, 3], 10), pairing(&[1, 3], 10)];
        let out = integerize(&ps, &net, 0, IpLimits::unlimited()).unwrap();
        assert!((out.lp_bound - 15.0).abs() < 1e-9);
        assert_eq!(out.solution.objective, 20 + 0);
        assert_eq!(out.solution.objective, brute_force(&ps, &net, 0));
    }

    #[test]
    fn zero_time_returns_greedy_incumbent() {
        let net = network(3);
        let ps = vec![pairing(&[1, 2], 10), pairing(&[2, 3], 10), pairing(&[1, 3], 10), pairing(&[1], 3)];
        let out = integerize(&ps, &net, 0, IpLimits { time_limit: Some(Duration::ZERO), node_limit: None }).unwrap();
        assert_eq!(out.status, IpStatus::TimeLimited);
        assert!(out.solution.coverage.len() == 3);
        assert!(out.solution.objective as f64 >= out.lp_bound - 1e-6);
    }

    #[test]
    fn deadheads_are_charged() {
        let net = network(3);
        let ps = vec![pairing(&[1, 2], 10), pairing(&[2, 3], 10)];
        let out = integerize(&ps, &net, 100, IpLimits::unlimited()).unwrap();
        assert_eq!(out.solution.objective, 20 + 100);
        assert_eq!(out.solution.deadheads, 1);
    }

    #[test]
    fn uncoverable_is_error() {
        let net = network(3);
        let ps = vec![pairing(&[1, 2], 10)];
        assert!(matches!(integerize(&ps, &net, 0, IpLimits::unlimited()), Err(IpError::Infeasible(r)) if r == vec![2]));
    }

    #[test]
    fn oracle_on_round_trip() {
        let space = LegalSpace::build(fixtures::round_trip(), RuleSet::default(), CostModel::default());
        let sol = exact_small_oracle(&space, CostModel::default().deadhead_penalty).unwrap();
        assert_eq!(sol.pairings.len(), 1);
        assert_eq!(sol.objective, sol.pairings[0].cost);
    }

    #[test]
    fn oracle_rejects_infeasible_network() {
        // A single outbound flight can never return to base.
        let net = FlightNetwork::new(
            vec!["B".into(), "X".into()],
            &["B".into()],
            vec![fixtures::flight(1, 0, 1, 480, 540), fixtures::flight(2, 0, 1, 700, 760)],
        )
        .unwrap();
        let space = LegalSpace::build(net, RuleSet::default(), CostModel::default());
        assert!(matches!(exact_small_oracle(&space, 0), Err(IpError::Infeasible(_))));
    }
}
