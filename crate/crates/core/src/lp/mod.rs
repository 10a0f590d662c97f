//! Restricted master LP: primal values, support set and flight duals.

mod simplex;

use std::sync::Arc;

use thiserror::Error;

use crate::model::{Cents, Pairing};

pub use simplex::{solve_cover, CoverMatrix, LpOutcome};

/// Columns with `x_j` above this value form the support.
pub const SUPPORT_TOLERANCE: f64 = 1e-9;
/// Slack allowed on coverage and dual-feasibility checks.
pub const FEAS_TOL: f64 = 1e-7;
/// Relative gap allowed between primal and dual objectives.
pub const DUALITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    /// Rows (flight indices for master problems) that no column covers.
    #[error("master problem is infeasible; uncovered rows {0:?}")]
    Infeasible(Vec<usize>),
    #[error("master problem has no flights")]
    NoFlights,
    #[error("simplex stopped after {0} pivots")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Clone, Debug)]
pub struct PrimalSolution {
    /// Values indexed like the input pairings.
    pub x: Vec<f64>,
    /// Objective in cents, including the `-F*psi` constant.
    pub objective: f64,
    /// Input positions with `x_j > SUPPORT_TOLERANCE`, in signature order.
    pub support_indices: Vec<usize>,
    pub support: Vec<Arc<Pairing>>,
    pub pivots: usize,
}

#[derive(Clone, Debug)]
pub struct DualSolution {
    /// Dual value of each flight, indexed by `FlightId::index`.
    pub y: Vec<f64>,
    pub objective: f64,
}

/// LP objective coefficient of a pairing: its cost plus one deadhead
/// penalty per flight it covers.
pub fn column_cost(p: &Pairing, deadhead_penalty: Cents) -> f64 {
    (p.cost + deadhead_penalty * p.num_flights() as Cents) as f64
}

fn build_matrix(pairings: &[Arc<Pairing>], num_flights: usize, psi: Cents) -> CoverMatrix {
    let mut a = CoverMatrix::new(num_flights);
    for p in pairings {
        a.push_column(p.flights.iter().map(|f| f.index()), column_cost(p, psi));
    }
    a
}

fn solve(
    pairings: &[Arc<Pairing>],
    num_flights: usize,
    psi: Cents,
) -> Result<LpOutcome, LpError> {
    if num_flights == 0 {
        return Err(LpError::NoFlights);
    }
    let a = build_matrix(pairings, num_flights, psi);
    let mut out = solve_cover(&a)?;
    out.objective -= (num_flights as Cents * psi) as f64;
    Ok(out)
}

/// Solves `min sum (c_j + psi|p_j|) x_j - F psi` subject to every flight
/// being covered at least once and `x >= 0`.
pub fn solve_primal(
    pairings: &[Arc<Pairing>],
    num_flights: usize,
    psi: Cents,
) -> Result<PrimalSolution, LpError> {
    let out = solve(pairings, num_flights, psi)?;
    let mut support_indices: Vec<usize> =
        (0..pairings.len()).filter(|&j| out.x[j] > SUPPORT_TOLERANCE).collect();
    support_indices.sort_by(|&a, &b| pairings[a].cmp(&pairings[b]).then(a.cmp(&b)));
    let support = support_indices.iter().map(|&j| Arc::clone(&pairings[j])).collect();
    Ok(PrimalSolution {
        x: out.x,
        objective: out.objective,
        support_indices,
        support,
        pivots: out.pivots,
    })
}

/// Flight duals of the LP restricted to the support columns.
pub fn solve_dual(
    support: &[Arc<Pairing>],
    num_flights: usize,
    psi: Cents,
) -> Result<DualSolution, LpError> {
    let out = solve(support, num_flights, psi)?;
    let objective = out.y.iter().sum::<f64>() - (num_flights as Cents * psi) as f64;
    Ok(DualSolution { y: out.y, objective })
}

/// Sum of flight duals over a pairing's flights.
pub fn dual_sum(p: &Pairing, y: &[f64]) -> f64 {
    p.flights.iter().map(|f| y[f.index()]).sum()
}

/// Describes every broken LP contract; empty when primal and dual agree.
pub fn contract_violations(
    pairings: &[Arc<Pairing>],
    num_flights: usize,
    psi: Cents,
    primal: &PrimalSolution,
    dual: &DualSolution,
) -> Vec<String> {
    let mut out = Vec::new();
    let mut cover = vec![0.0; num_flights];
    let mut recomputed = -((num_flights as Cents * psi) as f64);
    for (p, &x) in pairings.iter().zip(&primal.x) {
        if x < -FEAS_TOL || x > 1.0 + FEAS_TOL {
            out.push(format!("x out of [0,1] for {:?}: {x}", p.signature()));
        }
        for f in &p.flights {
            cover[f.index()] += x;
        }
        recomputed += column_cost(p, psi) * x;
    }
    for (i, c) in cover.iter().enumerate() {
        if *c < 1.0 - FEAS_TOL {
            out.push(format!("flight {} covered {c}", i + 1));
        }
    }
    let scale = primal.objective.abs().max(1.0);
    if (recomputed - primal.objective).abs() > DUALITY_TOL * scale {
        out.push(format!("objective {} but x gives {recomputed}", primal.objective));
    }
    if (dual.objective - primal.objective).abs() > DUALITY_TOL * scale {
        out.push(format!("duality gap: primal {} dual {}", primal.objective, dual.objective));
    }
    for v in &dual.y {
        if *v < -FEAS_TOL {
            out.push(format!("negative dual {v}"));
        }
    }
    for p in &primal.support {
        let lhs = dual_sum(p, &dual.y);
        let rhs = column_cost(p, psi);
        if lhs > rhs + FEAS_TOL * rhs.abs().max(1.0) {
            out.push(format!("dual infeasible on {:?}: {lhs} > {rhs}", p.signature()));
        }
    }
    out
}
