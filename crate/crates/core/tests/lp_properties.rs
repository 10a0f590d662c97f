use std::sync::Arc;

use crewpair::lp::{self, solve_cover, CoverMatrix};
use crewpair::model::{AirportId, DutySpan, FlightId, Pairing};
use proptest::prelude::*;

fn pairing(flights: Vec<u32>, cost: i64) -> Arc<Pairing> {
    let n = flights.len() as u32;
    Arc::new(Pairing {
        base: AirportId(0),
        flights: flights.into_iter().map(FlightId).collect(),
        duties: vec![DutySpan { num_flights: n, start: 0, end: 0, flying: 0 }],
        cost,
        tafb: 0,
    })
}

/// Random covering instance: one singleton per row guarantees feasibility.
fn instance() -> impl Strategy<Value = (usize, Vec<Arc<Pairing>>)> {
    (1usize..9).prop_flat_map(|rows| {
        let col = (proptest::collection::btree_set(1..=rows as u32, 1..=rows), 0i64..5000);
        (Just(rows), proptest::collection::vec(col, 0..25), proptest::collection::vec(0i64..5000, rows))
            .prop_map(|(rows, cols, singles)| {
                let mut ps: Vec<Arc<Pairing>> = singles
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| pairing(vec![i as u32 + 1], c))
                    .collect();
                ps.extend(cols.into_iter().map(|(s, c)| pairing(s.into_iter().collect(), c)));
                (rows, ps)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Primal feasibility plus dual feasibility over every column plus equal
    /// objectives certify optimality independently of how the solver works.
    #[test]
    fn optimality_certificate((rows, ps) in instance(), psi in 0i64..3) {
        let psi = psi * 1000;
        let mut a = CoverMatrix::new(rows);
        for p in &ps {
            a.push_column(p.flights.iter().map(|f| f.index()), lp::column_cost(p, psi));
        }
        let out = solve_cover(&a).unwrap();
        let scale = out.objective.abs().max(1.0);
        let mut cover = vec![0.0; rows];
        for (p, x) in ps.iter().zip(&out.x) {
            prop_assert!(*x >= 0.0 && *x <= 1.0 + lp::FEAS_TOL);
            for f in &p.flights { cover[f.index()] += x; }
            let reduced = lp::column_cost(p, psi) - lp::dual_sum(p, &out.y);
            prop_assert!(reduced >= -1e-7 * scale, "column reduced cost {}", reduced);
        }
        prop_assert!(cover.iter().all(|c| *c >= 1.0 - lp::FEAS_TOL));
        prop_assert!(out.y.iter().all(|v| *v >= 0.0));
        let dual: f64 = out.y.iter().sum();
        prop_assert!((dual - out.objective).abs() <= 1e-6 * scale);
    }

    #[test]
    fn primal_and_support_duals_meet_contracts((rows, ps) in instance(), psi in 0i64..3) {
        let psi = psi * 1000;
        let primal = lp::solve_primal(&ps, rows, psi).unwrap();
        let dual = lp::solve_dual(&primal.support, rows, psi).unwrap();
        let broken = lp::contract_violations(&ps, rows, psi, &primal, &dual);
        prop_assert!(broken.is_empty(), "{:?}", broken);
        for p in &primal.support {
            let mu = lp::column_cost(p, psi) - lp::dual_sum(p, &dual.y);
            prop_assert!(mu <= lp::FEAS_TOL * lp::column_cost(p, psi).max(1.0));
        }
    }

    /// Adding columns to a set that contains the previous support never
    /// raises the optimum.
    #[test]
    fn adding_columns_never_hurts((rows, ps) in instance(), extra in proptest::collection::vec((proptest::collection::btree_set(1u32..9, 1..4), 0i64..5000), 0..10)) {
        let before = lp::solve_primal(&ps, rows, 0).unwrap();
        let mut next = before.support.clone();
        next.extend(extra.into_iter()
            .map(|(s, c)| (s.into_iter().filter(|&f| f as usize <= rows).collect::<Vec<_>>(), c))
            .filter(|(s, _)| !s.is_empty())
            .map(|(s, c)| pairing(s, c)));
        let after = lp::solve_primal(&next, rows, 0).unwrap();
        prop_assert!(after.objective <= before.objective + 1e-6 * before.objective.abs().max(1.0));
    }
}
