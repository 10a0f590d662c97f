//! Seeded synthetic timetables with several crew bases and several
//! hub-and-spoke sub-networks, plus the line-oriented instance format.
//!
//! Flights are produced as the legs of randomly routed, randomly timed
//! pairings that are each checked by the legality validator. Those pairings
//! are kept as a witness that the timetable admits a legal cover.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::model::{
    validate_pairing, AirportId, CostModel, Flight, FlightId, FlightNetwork, Minutes, ModelError,
    RuleSet, Verdict, MINUTES_PER_DAY,
};
use crate::rng::{stream, StreamTag};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkParams {
    pub num_flights: usize,
    pub num_crew_bases: usize,
    pub num_hubs: usize,
    pub num_spokes_per_hub: usize,
    pub days: u32,
    pub hub_turn_mean: Minutes,
    pub seed: u64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            num_flights: 200,
            num_crew_bases: 3,
            num_hubs: 4,
            num_spokes_per_hub: 5,
            days: 3,
            hub_turn_mean: 75,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid network parameters: {0}")]
    InvalidParams(String),
    #[error("could not construct a timetable: {0}")]
    Unsatisfiable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("invalid network: {0}")]
    Model(#[from] ModelError),
}

/// A generated network together with the legal cover it was built from.
#[derive(Clone, Debug)]
pub struct GeneratedNetwork {
    pub network: FlightNetwork,
    /// `(crew base, flight sequence)` of each constructed pairing; together
    /// they partition the flights.
    pub witness: Vec<(AirportId, Vec<FlightId>)>,
}

impl NetworkParams {
    fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidParams(m.to_string()));
        if self.num_hubs == 0 {
            return bad("need at least one hub");
        }
        if self.num_flights < 2 {
            return bad("need at least two flights (an outbound and a return leg)");
        }
        if self.num_crew_bases == 0 {
            return bad("need at least one crew base");
        }
        if self.num_crew_bases > self.num_hubs + self.num_hubs * self.num_spokes_per_hub {
            return bad("more crew bases than airports");
        }
        if self.num_hubs == 1 && self.num_spokes_per_hub == 0 {
            return bad("a single hub without spokes has no routes");
        }
        if self.days == 0 {
            return bad("need at least one day");
        }
        if self.hub_turn_mean <= 0 {
            return bad("hub_turn_mean must be positive");
        }
        Ok(())
    }
}

pub fn generate_network(params: &NetworkParams) -> Result<FlightNetwork, GenError> {
    Ok(generate_with_witness(params, &RuleSet::default(), &CostModel::default())?.network)
}

struct Graph {
    names: Vec<String>,
    adjacency: Vec<Vec<usize>>,
    block: Vec<Vec<Minutes>>,
}

impl Graph {
    fn build(params: &NetworkParams, rng: &mut impl Rng) -> Self {
        let h = params.num_hubs;
        let s = params.num_spokes_per_hub;
        let n = h + h * s;
        let mut names = Vec::with_capacity(n);
        for i in 0..h {
            names.push(format!("H{i:02}"));
        }
        for i in 0..h {
            for k in 0..s {
                names.push(format!("S{i:02}{k:02}"));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut block = vec![vec![0; n]; n];
        let mut link = |a: usize, b: usize, minutes: Minutes| {
            adjacency[a].push(b);
            adjacency[b].push(a);
            block[a][b] = minutes;
            block[b][a] = minutes;
        };
        for i in 0..h {
            for j in i + 1..h {
                link(i, j, rng.gen_range(80..=190));
            }
            for k in 0..s {
                link(i, h + i * s + k, rng.gen_range(45..=130));
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Self { names, adjacency, block }
    }

    /// `reach[len][v]`: a walk of exactly `len` legs leads from `v` to `target`.
    fn exact_reach(&self, target: usize, max_len: usize) -> Vec<Vec<bool>> {
        let n = self.names.len();
        let mut reach = vec![vec![false; n]; max_len + 1];
        reach[0][target] = true;
        for len in 1..=max_len {
            for v in 0..n {
                reach[len][v] = self.adjacency[v].iter().any(|&u| reach[len - 1][u]);
            }
        }
        reach
    }
}

const MAX_LEGS: usize = 8;

/// Generates a network under `rules` and returns it with its witness cover.
pub fn generate_with_witness(
    params: &NetworkParams,
    rules: &RuleSet,
    cost: &CostModel,
) -> Result<GeneratedNetwork, GenError> {
    params.validate()?;
    rules.validate()?;
    let mut rng = stream(params.seed, 0, 0, StreamTag::Generator);
    let graph = Graph::build(params, &mut rng);
    let bases: Vec<usize> = (0..params.num_crew_bases).collect();
    let reach: Vec<Vec<Vec<bool>>> =
        bases.iter().map(|&b| graph.exact_reach(b, MAX_LEGS)).collect();

    let legs_per_duty = (rules.max_flights_per_duty as usize).min(4);
    let max_legs = MAX_LEGS.min(legs_per_duty * rules.max_duties_per_pairing as usize);
    let feasible_lengths = |bi: usize| -> Vec<usize> {
        (2..=max_legs).filter(|&l| reach[bi][l][bases[bi]]).collect()
    };
    let odd_possible = (0..bases.len()).any(|bi| feasible_lengths(bi).iter().any(|l| l % 2 == 1));
    if !odd_possible && params.num_flights % 2 == 1 {
        return Err(GenError::Unsatisfiable(
            "every closed route has an even number of legs; use an even flight count or at least three hubs"
                .into(),
        ));
    }
    if params.num_flights < 2 * bases.len() {
        return Err(GenError::Unsatisfiable(
            "not enough flights to give every crew base a pairing".into(),
        ));
    }

    let mut usage = vec![vec![0u32; graph.names.len()]; graph.names.len()];
    let mut legs: Vec<RawLeg> = Vec::with_capacity(params.num_flights);
    let mut rotations: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut remaining = params.num_flights;
    let mut attempts = 0usize;

    while remaining > 0 {
        attempts += 1;
        if attempts > 50 * params.num_flights + 1000 {
            return Err(GenError::Unsatisfiable(
                "no legal pairing timing found within the retry budget (duty elapsed/flying or TAFB limits)"
                    .into(),
            ));
        }
        let bi = if rotations.len() < bases.len() {
            rotations.len()
        } else {
            rng.gen_range(0..bases.len())
        };
        let base = bases[bi];
        // Leave at least two legs for every base still without a rotation.
        let reserve = 2 * bases.len().saturating_sub(rotations.len() + 1);
        let lengths: Vec<usize> = feasible_lengths(bi)
            .into_iter()
            .filter(|&l| l + reserve <= remaining)
            .filter(|&l| {
                let rest = remaining - l;
                rest == 0 || (rest >= 2 && (odd_possible || rest % 2 == 0))
            })
            .collect();
        let Some(&len) = lengths.choose(&mut rng) else {
            continue;
        };

        let walk = random_walk(&graph, &reach[bi], base, len, &usage, &mut rng);
        let Some(timed) = time_walk(&graph, &walk, params, rules, &mut rng) else {
            continue;
        };
        // Validate against a throwaway network holding just these legs.
        if !legal_in_isolation(&graph, base, &timed, rules, cost) {
            continue;
        }
        for w in walk.windows(2) {
            usage[w[0]][w[1]] += 1;
        }
        let first = legs.len();
        legs.extend(timed);
        rotations.push((base, (first..legs.len()).collect()));
        remaining -= len;
    }

    // Assign ids in (departure, arrival, origin, destination, creation) order.
    let mut order: Vec<usize> = (0..legs.len()).collect();
    order.sort_by_key(|&i| (legs[i].departure, legs[i].arrival, legs[i].origin, legs[i].destination, i));
    let mut new_id = vec![0u32; legs.len()];
    for (rank, &i) in order.iter().enumerate() {
        new_id[i] = rank as u32 + 1;
    }

    let mut used: Vec<bool> = vec![false; graph.names.len()];
    for l in &legs {
        used[l.origin] = true;
        used[l.destination] = true;
    }
    let mut airport_index = vec![u16::MAX; graph.names.len()];
    let mut airports = Vec::new();
    for (i, name) in graph.names.iter().enumerate() {
        if used[i] {
            airport_index[i] = airports.len() as u16;
            airports.push(name.clone());
        }
    }
    let flights: Vec<Flight> = legs
        .iter()
        .enumerate()
        .map(|(i, l)| Flight {
            id: FlightId(new_id[i]),
            origin: AirportId(airport_index[l.origin]),
            destination: AirportId(airport_index[l.destination]),
            departure: l.departure,
            arrival: l.arrival,
        })
        .collect();
    let base_codes: Vec<String> = bases.iter().map(|&b| graph.names[b].clone()).collect();
    let network = FlightNetwork::new(airports, &base_codes, flights)?;
    let witness: Vec<(AirportId, Vec<FlightId>)> = rotations
        .iter()
        .map(|(b, idx)| {
            (AirportId(airport_index[*b]), idx.iter().map(|&i| FlightId(new_id[i])).collect())
        })
        .collect();
    for (b, seq) in &witness {
        match validate_pairing(seq, *b, &network, rules, cost)? {
            Verdict::Legal(_) => {}
            Verdict::Illegal(v) => {
                return Err(GenError::Unsatisfiable(format!("witness pairing violates {v:?}")))
            }
        }
    }
    Ok(GeneratedNetwork { network, witness })
}

#[derive(Clone, Debug)]
struct RawLeg {
    origin: usize,
    destination: usize,
    departure: Minutes,
    arrival: Minutes,
}

fn random_walk(
    graph: &Graph,
    reach: &[Vec<bool>],
    base: usize,
    len: usize,
    usage: &[Vec<u32>],
    rng: &mut impl Rng,
) -> Vec<usize> {
    let mut walk = vec![base];
    let mut cur = base;
    for step in 0..len {
        let left = len - step - 1;
        let options: Vec<usize> =
            graph.adjacency[cur].iter().copied().filter(|&v| reach[left][v]).collect();
        // Prefer the least used routes half of the time so every spoke is served.
        let next = if rng.gen_bool(0.5) {
            let least = options.iter().map(|&v| usage[cur][v]).min().unwrap();
            let quiet: Vec<usize> =
                options.iter().copied().filter(|&v| usage[cur][v] == least).collect();
            *quiet.choose(rng).unwrap()
        } else {
            *options.choose(rng).unwrap()
        };
        walk.push(next);
        cur = next;
    }
    walk
}

fn time_walk(
    graph: &Graph,
    walk: &[usize],
    params: &NetworkParams,
    rules: &RuleSet,
    rng: &mut impl Rng,
) -> Option<Vec<RawLeg>> {
    let legs = walk.len() - 1;
    let per_duty = (rules.max_flights_per_duty as usize).min(4);
    let min_duties = legs.div_ceil(per_duty);
    let max_duties = legs.min(rules.max_duties_per_pairing as usize).min(params.days as usize);
    if min_duties > max_duties {
        return None;
    }
    let duties = rng.gen_range(min_duties..=max_duties);
    // Random composition of `legs` into `duties` parts of size 1..=per_duty.
    let mut sizes = vec![1usize; duties];
    let mut extra = legs - duties;
    while extra > 0 {
        let i = rng.gen_range(0..duties);
        if sizes[i] < per_duty {
            sizes[i] += 1;
            extra -= 1;
        }
    }
    let start_day = rng.gen_range(0..=(params.days as usize - duties)) as Minutes;
    let sit_hi = rules.max_sit.min((2 * params.hub_turn_mean - rules.min_sit).max(rules.min_sit));
    let rest_hi = rules.max_overnight.min(rules.min_overnight + 5 * 60);

    let mut out = Vec::with_capacity(legs);
    let mut leg = 0;
    let mut clock = start_day * MINUTES_PER_DAY + rng.gen_range(5 * 60 + 30..=12 * 60);
    for (d, &size) in sizes.iter().enumerate() {
        if d > 0 {
            let rest = rng.gen_range(rules.min_overnight..=rest_hi);
            clock += rules.debriefing + rest + rules.briefing;
        }
        for k in 0..size {
            if k > 0 {
                clock += rng.gen_range(rules.min_sit..=sit_hi);
            }
            let (a, b) = (walk[leg], walk[leg + 1]);
            let arrival = clock + graph.block[a][b];
            out.push(RawLeg { origin: a, destination: b, departure: clock, arrival });
            clock = arrival;
            leg += 1;
        }
    }
    Some(out)
}

fn legal_in_isolation(
    graph: &Graph,
    base: usize,
    legs: &[RawLeg],
    rules: &RuleSet,
    cost: &CostModel,
) -> bool {
    let flights: Vec<Flight> = legs
        .iter()
        .enumerate()
        .map(|(i, l)| Flight {
            id: FlightId(i as u32 + 1),
            origin: AirportId(l.origin as u16),
            destination: AirportId(l.destination as u16),
            departure: l.departure,
            arrival: l.arrival,
        })
        .collect();
    let Ok(net) = FlightNetwork::new(graph.names.clone(), &[graph.names[base].clone()], flights) else {
        return false;
    };
    let seq: Vec<FlightId> = (1..=legs.len() as u32).map(FlightId).collect();
    matches!(
        validate_pairing(&seq, AirportId(base as u16), &net, rules, cost),
        Ok(Verdict::Legal(_))
    )
}

/// Writes the instance format: an `airports` line, a `bases` line and a
/// `flights <count>` header followed by `id origin destination departure
/// arrival` rows.
pub fn format_network(network: &FlightNetwork) -> String {
    let mut out = String::new();
    out.push_str("# crew pairing instance\n");
    writeln!(out, "airports {}", network.airports().join(" ")).unwrap();
    let bases: Vec<&str> = network.crew_bases().iter().map(|&b| network.airport_code(b)).collect();
    writeln!(out, "bases {}", bases.join(" ")).unwrap();
    writeln!(out, "flights {}", network.num_flights()).unwrap();
    for f in network.flights() {
        writeln!(
            out,
            "{} {} {} {} {}",
            f.id.0,
            network.airport_code(f.origin),
            network.airport_code(f.destination),
            f.departure,
            f.arrival
        )
        .unwrap();
    }
    out
}

pub fn save_network(network: &FlightNetwork, path: impl AsRef<Path>) -> Result<(), ParseError> {
    std::fs::write(path, format_network(network))?;
    Ok(())
}

pub fn load_network(path: impl AsRef<Path>) -> Result<FlightNetwork, ParseError> {
    parse_network(&std::fs::read_to_string(path)?)
}

pub fn parse_network(text: &str) -> Result<FlightNetwork, ParseError> {
    let err = |line: usize, message: String| ParseError::Syntax { line, message };
    let mut airports: Option<Vec<String>> = None;
    let mut bases: Option<Vec<String>> = None;
    let mut declared: Option<(usize, usize)> = None;
    let mut flights = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap();
        match head {
            "airports" if airports.is_none() => {
                let list: Vec<String> = parts.map(str::to_string).collect();
                if list.is_empty() {
                    return Err(err(line_no, "no airports listed".into()));
                }
                airports = Some(list);
            }
            "bases" if bases.is_none() => {
                bases = Some(parts.map(str::to_string).collect());
            }
            "flights" if declared.is_none() => {
                let count = parts
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| err(line_no, "expected `flights <count>`".into()))?;
                declared = Some((count, line_no));
            }
            _ => {
                let Some(codes) = airports.as_ref() else {
                    return Err(err(line_no, "flight row before `airports` header".into()));
                };
                if declared.is_none() {
                    return Err(err(line_no, format!("unexpected `{head}`")));
                }
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 5 {
                    return Err(err(line_no, format!("expected 5 fields, found {}", fields.len())));
                }
                let num = |s: &str, what: &str| {
                    s.parse::<i64>().map_err(|_| err(line_no, format!("bad {what} `{s}`")))
                };
                let airport = |s: &str| {
                    codes
                        .iter()
                        .position(|c| c == s)
                        .map(|p| AirportId(p as u16))
                        .ok_or_else(|| err(line_no, format!("unknown airport `{s}`")))
                };
                let id = num(fields[0], "flight id")?;
                if id <= 0 || id > u32::MAX as i64 {
                    return Err(err(line_no, format!("bad flight id `{}`", fields[0])));
                }
                let flight = Flight {
                    id: FlightId(id as u32),
                    origin: airport(fields[1])?,
                    destination: airport(fields[2])?,
                    departure: num(fields[3], "departure")?,
                    arrival: num(fields[4], "arrival")?,
                };
                if flight.arrival <= flight.departure {
                    return Err(err(line_no, "arrival must be after departure".into()));
                }
                if flight.origin == flight.destination {
                    return Err(err(line_no, "origin equals destination".into()));
                }
                flights.push(flight);
            }
        }
    }
    let last = text.lines().count().max(1);
    let airports = airports.ok_or_else(|| err(last, "missing `airports` header".into()))?;
    let bases = bases.ok_or_else(|| err(last, "missing `bases` header".into()))?;
    let (count, header_line) = declared.ok_or_else(|| err(last, "missing `flights` header".into()))?;
    if flights.len() != count {
        return Err(err(
            header_line,
            format!("header declares {count} flights but {} rows follow", flights.len()),
        ));
    }
    if flights.len() < 2 {
        return Err(err(header_line, "an instance needs at least two flights".into()));
    }
    Ok(FlightNetwork::new(airports, &bases, flights)?)
}
