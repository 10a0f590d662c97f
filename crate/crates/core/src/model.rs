//! Domain types, the pairing legality validator and the pairing cost function.
//!
//! Time is integer minutes since the schedule epoch and money is integer
//! cents, so every legality and cost comparison is exact.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Minutes = i64;
pub type Cents = i64;

pub const MINUTES_PER_DAY: Minutes = 24 * 60;

/// Dense 1-based flight identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlightId(pub u32);

impl FlightId {
    /// Zero-based row index of the flight in coverage vectors.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(index: usize) -> Self {
        FlightId(index as u32 + 1)
    }
}

impl fmt::Display for FlightId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

/// Index into [`FlightNetwork::airports`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AirportId(pub u16);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flight {
    pub id: FlightId,
    pub origin: AirportId,
    pub destination: AirportId,
    pub departure: Minutes,
    pub arrival: Minutes,
}

impl Flight {
    #[inline]
    pub fn flying_time(&self) -> Minutes {
        self.arrival - self.departure
    }

    #[inline]
    pub fn departure_day(&self) -> i64 {
        self.departure.div_euclid(MINUTES_PER_DAY)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown flight id {0}")]
    UnknownFlight(u32),
    #[error("unknown airport `{0}`")]
    UnknownAirport(String),
    #[error("airport `{0}` is not a crew base")]
    NotACrewBase(String),
    #[error("empty flight sequence")]
    EmptySequence,
    #[error("flight {id}: arrival {arrival} must be after departure {departure}")]
    NonPositiveFlightTime { id: u32, departure: Minutes, arrival: Minutes },
    #[error("flight {0}: origin equals destination")]
    SelfLoop(u32),
    #[error("flight ids must be dense 1..={expected}; found {found}")]
    SparseIds { expected: usize, found: u32 },
    #[error("network needs at least one crew base")]
    NoCrewBase,
    #[error("crew base `{0}` is not served by any flight")]
    UnservedBase(String),
    #[error("flights not covered by any pairing: {0:?}")]
    Uncovered(Vec<u32>),
    #[error("invalid rule set: {0}")]
    InvalidRules(String),
    #[error("invalid cost model: {0}")]
    InvalidCost(String),
}

/// Immutable timetable. Flights are held sorted by `(departure, id)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlightNetwork {
    flights: Vec<Flight>,
    position: Vec<usize>,
    airports: Vec<String>,
    crew_bases: Vec<AirportId>,
    schedule_days: u32,
}

impl FlightNetwork {
    /// Builds a network from airport codes, crew base codes and flights whose
    /// `origin`/`destination` index into `airports`.
    pub fn new(
        airports: Vec<String>,
        crew_bases: &[String],
        mut flights: Vec<Flight>,
    ) -> Result<Self, ModelError> {
        let lookup = |code: &str| {
            airports
                .iter()
                .position(|a| a == code)
                .map(|i| AirportId(i as u16))
                .ok_or_else(|| ModelError::UnknownAirport(code.to_string()))
        };
        let mut bases = Vec::with_capacity(crew_bases.len());
        for code in crew_bases {
            let id = lookup(code)?;
            if !bases.contains(&id) {
                bases.push(id);
            }
        }
        if bases.is_empty() {
            return Err(ModelError::NoCrewBase);
        }
        bases.sort();

        for f in &flights {
            if f.arrival <= f.departure {
                return Err(ModelError::NonPositiveFlightTime {
                    id: f.id.0,
                    departure: f.departure,
                    arrival: f.arrival,
                });
            }
            if f.origin == f.destination {
                return Err(ModelError::SelfLoop(f.id.0));
            }
            for a in [f.origin, f.destination] {
                if a.0 as usize >= airports.len() {
                    return Err(ModelError::UnknownAirport(format!("#{}", a.0)));
                }
            }
        }
        flights.sort_by_key(|f| (f.departure, f.id));
        let n = flights.len();
        let mut position = vec![usize::MAX; n];
        for (pos, f) in flights.iter().enumerate() {
            let id = f.id.0;
            if id == 0 || id as usize > n || position[id as usize - 1] != usize::MAX {
                return Err(ModelError::SparseIds { expected: n, found: id });
            }
            position[id as usize - 1] = pos;
        }
        for &b in &bases {
            if !flights.iter().any(|f| f.origin == b || f.destination == b) {
                return Err(ModelError::UnservedBase(airports[b.0 as usize].clone()));
            }
        }
        let schedule_days = flights
            .iter()
            .map(|f| f.departure_day() + 1)
            .max()
            .unwrap_or(0)
            .max(0) as u32;
        Ok(Self { flights, position, airports, crew_bases: bases, schedule_days })
    }

    /// Flights in `(departure, id)` order.
    pub fn flights(&self) -> &[Flight] {
        &self.flights
    }

    pub fn num_flights(&self) -> usize {
        self.flights.len()
    }

    pub fn flight(&self, id: FlightId) -> Result<&Flight, ModelError> {
        id.0.checked_sub(1)
            .and_then(|i| self.position.get(i as usize))
            .map(|&p| &self.flights[p])
            .ok_or(ModelError::UnknownFlight(id.0))
    }

    /// Panicking lookup for ids already known to be valid.
    #[inline]
    pub(crate) fn get(&self, id: FlightId) -> &Flight {
        &self.flights[self.position[id.index()]]
    }

    pub fn airports(&self) -> &[String] {
        &self.airports
    }

    pub fn airport_code(&self, id: AirportId) -> &str {
        &self.airports[id.0 as usize]
    }

    pub fn airport_id(&self, code: &str) -> Option<AirportId> {
        self.airports.iter().position(|a| a == code).map(|i| AirportId(i as u16))
    }

    pub fn crew_bases(&self) -> &[AirportId] {
        &self.crew_bases
    }

    pub fn is_crew_base(&self, a: AirportId) -> bool {
        self.crew_bases.contains(&a)
    }

    pub fn schedule_days(&self) -> u32 {
        self.schedule_days
    }
}

/// Legality parameters. Durations in minutes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleSet {
    pub min_sit: Minutes,
    pub max_sit: Minutes,
    pub min_overnight: Minutes,
    pub max_overnight: Minutes,
    pub briefing: Minutes,
    pub debriefing: Minutes,
    pub max_flights_per_duty: u32,
    pub max_duty_elapsed: Minutes,
    pub max_duty_flying: Minutes,
    pub max_duties_per_pairing: u32,
    pub max_tafb: Minutes,
    pub forbid_same_city_overnight: bool,
    pub guaranteed_hours_per_duty: Minutes,
}

impl Default for RuleSet {
    fn default() -> Self {
        Self {
            min_sit: 30,
            max_sit: 4 * 60,
            min_overnight: 9 * 60,
            max_overnight: 24 * 60,
            briefing: 45,
            debriefing: 30,
            max_flights_per_duty: 6,
            max_duty_elapsed: 14 * 60,
            max_duty_flying: 8 * 60,
            max_duties_per_pairing: 4,
            max_tafb: 96 * 60,
            forbid_same_city_overnight: false,
            guaranteed_hours_per_duty: 4 * 60,
        }
    }
}

impl RuleSet {
    pub fn validate(&self) -> Result<(), ModelError> {
        let durations = [
            self.min_sit,
            self.max_sit,
            self.min_overnight,
            self.max_overnight,
            self.briefing,
            self.debriefing,
            self.max_duty_elapsed,
            self.max_duty_flying,
            self.max_tafb,
            self.guaranteed_hours_per_duty,
        ];
        if durations.iter().any(|&d| d < 0) {
            return Err(ModelError::InvalidRules("durations must be non-negative".into()));
        }
        if !(self.min_sit <= self.max_sit
            && self.max_sit < self.min_overnight
            && self.min_overnight <= self.max_overnight)
        {
            return Err(ModelError::InvalidRules(
                "need min_sit <= max_sit < min_overnight <= max_overnight".into(),
            ));
        }
        if self.max_flights_per_duty == 0 || self.max_duties_per_pairing == 0 {
            return Err(ModelError::InvalidRules("counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Cost parameters in cents (per hour where the field says so).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub flying_rate: Cents,
    pub hotel_cost: Cents,
    pub meal_rate: Cents,
    pub excess_pay_rate: Cents,
    pub deadhead_penalty: Cents,
    pub soft_cost_aircraft_change: Cents,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            flying_rate: 100_00,
            hotel_cost: 120_00,
            meal_rate: 5_00,
            excess_pay_rate: 80_00,
            deadhead_penalty: 1_000_00,
            soft_cost_aircraft_change: 0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        let rates = [
            self.flying_rate,
            self.hotel_cost,
            self.meal_rate,
            self.excess_pay_rate,
            self.deadhead_penalty,
            self.soft_cost_aircraft_change,
        ];
        if rates.iter().any(|&r| r < 0) {
            return Err(ModelError::InvalidCost("rates must be non-negative".into()));
        }
        Ok(())
    }

    /// Flying cost of one flight, used by the flight-pair estimator.
    pub fn flying_cost(&self, flight: &Flight) -> f64 {
        self.flying_rate as f64 * flight.flying_time() as f64 / 60.0
    }
}

/// A legal single-day flight sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Duty {
    pub flight_ids: Vec<FlightId>,
    pub start: Minutes,
    pub end: Minutes,
    pub flying: Minutes,
    pub origin: AirportId,
    pub destination: AirportId,
}

impl Duty {
    pub fn elapsed(&self) -> Minutes {
        self.end - self.start
    }

    pub fn span(&self) -> DutySpan {
        DutySpan {
            num_flights: self.flight_ids.len() as u32,
            start: self.start,
            end: self.end,
            flying: self.flying,
        }
    }
}

/// The per-duty quantities a pairing keeps after construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DutySpan {
    pub num_flights: u32,
    pub start: Minutes,
    pub end: Minutes,
    pub flying: Minutes,
}

impl DutySpan {
    pub fn elapsed(&self) -> Minutes {
        self.end - self.start
    }
}

/// A legal pairing: the column object of the master problem.
///
/// The flight sequence doubles as the canonical signature; it fixes the
/// duty split, the crew base and every derived quantity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pairing {
    pub base: AirportId,
    pub flights: Vec<FlightId>,
    pub duties: Vec<DutySpan>,
    pub cost: Cents,
    pub tafb: Minutes,
}

impl Pairing {
    pub fn signature(&self) -> &[FlightId] {
        &self.flights
    }

    pub fn num_flights(&self) -> usize {
        self.flights.len()
    }

    pub fn num_duties(&self) -> usize {
        self.duties.len()
    }

    pub fn overnights(&self) -> u32 {
        self.duties.len() as u32 - 1
    }

    pub fn covers(&self, id: FlightId) -> bool {
        self.flights.contains(&id)
    }

    /// Consecutive flight pairs, including those across an overnight rest.
    pub fn flight_pairs(&self) -> impl Iterator<Item = (FlightId, FlightId)> + '_ {
        self.flights.windows(2).map(|w| (w[0], w[1]))
    }
}

impl PartialOrd for Pairing {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pairing {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.flights.cmp(&other.flights)
    }
}

/// Constraint classes, in the order they are checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Violation {
    ConnectionCity,
    StartEndCity,
    SitTime,
    OvernightRest,
    DutyFlights,
    DutyElapsed,
    DutyFlying,
    DutyCount,
    Tafb,
    SameCityOvernight,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Legal(Pairing),
    Illegal(Violation),
}

impl Verdict {
    pub fn is_legal(&self) -> bool {
        matches!(self, Verdict::Legal(_))
    }

    pub fn legal(self) -> Option<Pairing> {
        match self {
            Verdict::Legal(p) => Some(p),
            Verdict::Illegal(_) => None,
        }
    }
}

/// Checks a candidate flight sequence against every legality class and
/// builds the pairing when all pass.
///
/// Consecutive flights whose gap is at most `max_sit` belong to the same
/// duty; any longer gap is an overnight rest.
pub fn validate_pairing(
    candidate: &[FlightId],
    base: AirportId,
    network: &FlightNetwork,
    rules: &RuleSet,
    cost: &CostModel,
) -> Result<Verdict, ModelError> {
    if candidate.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    if base.0 as usize >= network.airports().len() {
        return Err(ModelError::UnknownAirport(format!("#{}", base.0)));
    }
    if !network.is_crew_base(base) {
        return Err(ModelError::NotACrewBase(network.airport_code(base).to_string()));
    }
    let flights = candidate
        .iter()
        .map(|&id| network.flight(id))
        .collect::<Result<Vec<_>, _>>()?;

    if flights.windows(2).any(|w| w[0].destination != w[1].origin) {
        return Ok(Verdict::Illegal(Violation::ConnectionCity));
    }
    if flights[0].origin != base || flights[flights.len() - 1].destination != base {
        return Ok(Verdict::Illegal(Violation::StartEndCity));
    }

    // Split into duties and check the rest windows.
    let mut breaks = Vec::new();
    for (i, w) in flights.windows(2).enumerate() {
        let gap = w[1].departure - w[0].arrival;
        if gap <= rules.max_sit {
            if gap < rules.min_sit {
                return Ok(Verdict::Illegal(Violation::SitTime));
            }
        } else {
            let rest = gap - rules.debriefing - rules.briefing;
            if rest < rules.min_overnight || rest > rules.max_overnight {
                return Ok(Verdict::Illegal(Violation::OvernightRest));
            }
            breaks.push(i + 1);
        }
    }

    let mut duties = Vec::with_capacity(breaks.len() + 1);
    let mut lo = 0;
    for hi in breaks.iter().copied().chain(std::iter::once(flights.len())) {
        let part = &flights[lo..hi];
        duties.push(DutySpan {
            num_flights: part.len() as u32,
            start: part[0].departure - rules.briefing,
            end: part[part.len() - 1].arrival + rules.debriefing,
            flying: part.iter().map(|f| f.flying_time()).sum(),
        });
        lo = hi;
    }
    for d in &duties {
        if d.num_flights > rules.max_flights_per_duty {
            return Ok(Verdict::Illegal(Violation::DutyFlights));
        }
        if d.elapsed() > rules.max_duty_elapsed {
            return Ok(Verdict::Illegal(Violation::DutyElapsed));
        }
        if d.flying > rules.max_duty_flying {
            return Ok(Verdict::Illegal(Violation::DutyFlying));
        }
    }
    if duties.len() as u32 > rules.max_duties_per_pairing {
        return Ok(Verdict::Illegal(Violation::DutyCount));
    }
    let tafb = duties[duties.len() - 1].end - duties[0].start;
    if tafb > rules.max_tafb {
        return Ok(Verdict::Illegal(Violation::Tafb));
    }
    if rules.forbid_same_city_overnight {
        if breaks.iter().any(|&b| flights[b - 1].destination == base) {
            return Ok(Verdict::Illegal(Violation::SameCityOvernight));
        }
    }

    let overnights = duties.len() as u32 - 1;
    let cost = pairing_cost(&duties, tafb, overnights, cost, rules);
    Ok(Verdict::Legal(Pairing { base, flights: candidate.to_vec(), duties, cost, tafb }))
}

/// Cost of a pairing built from `duties`.
///
/// Hourly terms are accumulated in cent-minutes and rounded once (half up),
/// which keeps the result monotone in every rate.
pub fn pairing_cost(
    duties: &[DutySpan],
    tafb: Minutes,
    overnights: u32,
    model: &CostModel,
    rules: &RuleSet,
) -> Cents {
    let flying: Minutes = duties.iter().map(|d| d.flying).sum();
    let excess: Minutes = duties
        .iter()
        .map(|d| (rules.guaranteed_hours_per_duty - d.flying).max(0))
        .sum();
    let changes: i64 = duties.iter().map(|d| d.num_flights as i64 - 1).sum();
    let cent_minutes =
        model.flying_rate * flying + model.meal_rate * tafb + model.excess_pay_rate * excess;
    (cent_minutes + 30).div_euclid(60)
        + model.hotel_cost * overnights as i64
        + model.soft_cost_aircraft_change * changes
}

/// A covering set of pairings with its objective and deadhead count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub pairings: Vec<std::sync::Arc<Pairing>>,
    pub objective: Cents,
    pub deadheads: u64,
    pub coverage: BTreeMap<FlightId, u32>,
}

impl Solution {
    pub fn new(
        mut pairings: Vec<std::sync::Arc<Pairing>>,
        network: &FlightNetwork,
        deadhead_penalty: Cents,
    ) -> Result<Self, ModelError> {
        pairings.sort();
        let (objective, deadheads) = solution_objective(&pairings, network, deadhead_penalty)?;
        let mut coverage = BTreeMap::new();
        for p in &pairings {
            for &f in &p.flights {
                *coverage.entry(f).or_insert(0) += 1;
            }
        }
        Ok(Self { pairings, objective, deadheads, coverage })
    }

    pub fn total_pairing_cost(&self) -> Cents {
        self.pairings.iter().map(|p| p.cost).sum()
    }
}

/// Objective of a set of pairings all taken once: pairing costs plus the
/// deadhead penalty for every coverage beyond the first.
pub fn solution_objective<P: AsRef<Pairing>>(
    pairings: &[P],
    network: &FlightNetwork,
    deadhead_penalty: Cents,
) -> Result<(Cents, u64), ModelError> {
    let mut coverage = vec![0u64; network.num_flights()];
    let mut cost = 0;
    for p in pairings {
        let p = p.as_ref();
        cost += p.cost;
        for &f in &p.flights {
            network.flight(f)?;
            coverage[f.index()] += 1;
        }
    }
    let missing: Vec<u32> = coverage
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .map(|(i, _)| FlightId::from_index(i).0)
        .collect();
    if !missing.is_empty() {
        return Err(ModelError::Uncovered(missing));
    }
    let deadheads: u64 = coverage.iter().map(|c| c - 1).sum();
    Ok((cost + deadhead_penalty * deadheads as i64, deadheads))
}

impl AsRef<Pairing> for Pairing {
    fn as_ref(&self) -> &Pairing {
        self
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn one_duty_rules() -> RuleSet {
        RuleSet { max_duties_per_pairing: 1, ..RuleSet::default() }
    }

    #[test]
    fn single_outbound_leg_violates_end_city() {
        let n = round_trip();
        let v = validate_pairing(&[FlightId(1)], AirportId(0), &n, &one_duty_rules(), &CostModel::default())
            .unwrap();
        assert_eq!(v, Verdict::Illegal(Violation::StartEndCity));
    }

    #[test]
    fn round_trip_is_one_duty_pairing() {
        let n = round_trip();
        let rules = RuleSet { min_sit: 30, max_sit: 240, ..one_duty_rules() };
        let v = validate_pairing(&[FlightId(1), FlightId(2)], AirportId(0), &n, &rules, &CostModel::default())
            .unwrap();
        let p = v.legal().expect("legal");
        assert_eq!(p.num_duties(), 1);
        assert_eq!(p.duties[0].start, 480 - 45);
        assert_eq!(p.duties[0].end, 660 + 30);
        assert_eq!(p.duties[0].flying, 120);
        assert_eq!(p.tafb, 255);
        assert_eq!(p.base, AirportId(0));
    }

    #[test]
    fn short_sit_is_sit_time_violation() {
        let n = round_trip();
        let rules = RuleSet { min_sit: 90, ..one_duty_rules() };
        let v = validate_pairing(&[FlightId(1), FlightId(2)], AirportId(0), &n, &rules, &CostModel::default())
            .unwrap();
        assert_eq!(v, Verdict::Illegal(Violation::SitTime));
    }

    #[test]
    fn unknown_flight_is_input_error() {
        let n = round_trip();
        let err = validate_pairing(&[FlightId(1), FlightId(9)], AirportId(0), &n, &RuleSet::default(), &CostModel::default())
            .unwrap_err();
        assert_eq!(err, ModelError::UnknownFlight(9));
    }

    #[test]
    fn connection_city_checked_before_end_city() {
        let n = round_trip();
        let v = validate_pairing(&[FlightId(2), FlightId(1)], AirportId(0), &n, &RuleSet::default(), &CostModel::default())
            .unwrap();
        assert_eq!(v, Verdict::Illegal(Violation::StartEndCity));
        let v = validate_pairing(&[FlightId(1), FlightId(1)], AirportId(0), &n, &RuleSet::default(), &CostModel::default())
            .unwrap();
        assert_eq!(v, Verdict::Illegal(Violation::ConnectionCity));
    }

    #[test]
    fn same_city_overnight_rule() {
        // BASE->X, X->BASE day 0, BASE->X, X->BASE day 1.
        let n = FlightNetwork::new(
            vec!["BASE".into(), "X".into()],
            &["BASE".into()],
            vec![
                flight(1, 0, 1, 480, 540),
                flight(2, 1, 0, 600, 660),
                flight(3, 0, 1, 1440 + 480, 1440 + 540),
                flight(4, 1, 0, 1440 + 600, 1440 + 660),
            ],
        )
        .unwrap();
        let seq = [FlightId(1), FlightId(2), FlightId(3), FlightId(4)];
        let cost = CostModel::default();
        let ok = validate_pairing(&seq, AirportId(0), &n, &RuleSet::default(), &cost).unwrap();
        assert_eq!(ok.legal().unwrap().num_duties(), 2);
        let strict = RuleSet { forbid_same_city_overnight: true, ..RuleSet::default() };
        let v = validate_pairing(&seq, AirportId(0), &n, &strict, &cost).unwrap();
        assert_eq!(v, Verdict::Illegal(Violation::SameCityOvernight));
        let tight = RuleSet { max_duties_per_pairing: 1, ..RuleSet::default() };
        let v = validate_pairing(&seq, AirportId(0), &n, &tight, &cost).unwrap();
        assert_eq!(v, Verdict::Illegal(Violation::DutyCount));
    }

    fn span(flying_h: i64) -> DutySpan {
        DutySpan { num_flights: 1, start: 0, end: 600, flying: flying_h * 60 }
    }

    #[test]
    fn zero_model_costs_nothing() {
        let zero = CostModel {
            flying_rate: 0,
            hotel_cost: 0,
            meal_rate: 0,
            excess_pay_rate: 0,
            deadhead_penalty: 0,
            soft_cost_aircraft_change: 0,
        };
        assert_eq!(pairing_cost(&[span(3), span(5)], 2000, 1, &zero, &RuleSet::default()), 0);
    }

    #[test]
    fn cost_one_duty_with_excess_pay() {
        let m = CostModel {
            flying_rate: 100,
            hotel_cost: 0,
            meal_rate: 0,
            excess_pay_rate: 10,
            deadhead_penalty: 0,
            soft_cost_aircraft_change: 0,
        };
        let rules = RuleSet { guaranteed_hours_per_duty: 5 * 60, ..RuleSet::default() };
        assert_eq!(pairing_cost(&[span(2)], 600, 0, &m, &rules), 230);
    }

    #[test]
    fn cost_two_duties_with_hotel() {
        let m = CostModel {
            flying_rate: 50,
            hotel_cost: 80,
            meal_rate: 0,
            excess_pay_rate: 20,
            deadhead_penalty: 0,
            soft_cost_aircraft_change: 0,
        };
        let rules = RuleSet { guaranteed_hours_per_duty: 4 * 60, ..RuleSet::default() };
        assert_eq!(pairing_cost(&[span(3), span(4)], 3000, 1, &m, &rules), 450);
    }

    #[test]
    fn soft_cost_charges_within_duty_connections() {
        let m = CostModel {
            flying_rate: 0,
            hotel_cost: 0,
            meal_rate: 0,
            excess_pay_rate: 0,
            deadhead_penalty: 0,
            soft_cost_aircraft_change: 7,
        };
        let d = DutySpan { num_flights: 3, start: 0, end: 100, flying: 60 };
        assert_eq!(pairing_cost(&[d, d], 1000, 1, &m, &RuleSet::default()), 28);
    }

    fn legal(n: &FlightNetwork, ids: &[u32]) -> Pairing {
        let seq: Vec<_> = ids.iter().map(|&i| FlightId(i)).collect();
        validate_pairing(&seq, AirportId(0), n, &RuleSet::default(), &CostModel::default())
            .unwrap()
            .legal()
            .unwrap()
    }

    #[test]
    fn objective_of_partition_and_overlap() {
        let n = FlightNetwork::new(
            vec!["BASE".into(), "X".into()],
            &["BASE".into()],
            vec![
                flight(1, 0, 1, 480, 540),
                flight(2, 1, 0, 600, 660),
                flight(3, 0, 1, 720, 780),
                flight(4, 1, 0, 840, 900),
            ],
        )
        .unwrap();
        let a = legal(&n, &[1, 2]);
        let b = legal(&n, &[3, 4]);
        let (z, dh) = solution_objective(&[a.clone(), b.clone()], &n, 1000).unwrap();
        assert_eq!((z, dh), (a.cost + b.cost, 0));

        let c = legal(&n, &[1, 2, 3, 4]);
        let (z, dh) = solution_objective(&[a.clone(), c.clone()], &n, 1000).unwrap();
        assert_eq!(dh, 2);
        assert_eq!(z, a.cost + c.cost + 2000);

        let err = solution_objective(&[a], &n, 1000).unwrap_err();
        assert_eq!(err, ModelError::Uncovered(vec![3, 4]));
    }

    #[test]
    fn single_overlap_adds_one_penalty() {
        let n = FlightNetwork::new(
            vec!["B".into(), "X".into(), "Y".into()],
            &["B".into()],
            vec![
                flight(1, 0, 1, 480, 540),
                flight(2, 1, 0, 600, 660),
                flight(3, 1, 2, 610, 670),
                flight(4, 2, 0, 720, 780),
            ],
        )
        .unwrap();
        let a = legal(&n, &[1, 2]);
        let b = legal(&n, &[1, 3, 4]);
        let (z, dh) = solution_objective(&[a.clone(), b.clone()], &n, 1000).unwrap();
        assert_eq!(dh, 1);
        assert_eq!(z, a.cost + b.cost + 1000);
        let (z0, _) = solution_objective(&[a.clone(), b.clone()], &n, 0).unwrap();
        assert_eq!(z0, a.cost + b.cost);
    }

    #[test]
    fn rules_validation() {
        assert!(RuleSet::default().validate().is_ok());
        let bad = RuleSet { max_sit: 600, min_overnight: 540, ..RuleSet::default() };
        assert!(bad.validate().is_err());
        let bad = RuleSet { max_flights_per_duty: 0, ..RuleSet::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn network_rejects_bad_flights() {
        let err = FlightNetwork::new(
            vec!["A".into(), "B".into()],
            &["A".into()],
            vec![flight(1, 0, 1, 100, 100)],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::NonPositiveFlightTime { .. }));
        let err = FlightNetwork::new(
            vec!["A".into(), "B".into()],
            &["A".into()],
            vec![flight(1, 0, 1, 100, 200), flight(3, 1, 0, 300, 400)],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::SparseIds { .. }));
        let err = FlightNetwork::new(
            vec!["A".into(), "B".into(), "C".into()],
            &["C".into()],
            vec![flight(1, 0, 1, 100, 200)],
        )
        .unwrap_err();
        assert_eq!(err, ModelError::UnservedBase("C".into()));
    }
}
