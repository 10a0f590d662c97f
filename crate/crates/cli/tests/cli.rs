use std::path::Path;
use std::process::{Command, Output};

use crewpair::model::{validate_pairing, AirportId, CostModel, FlightId, RuleSet, Verdict};
use crewpair::netgen::load_network;

fn crewpair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crewpair")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const ROUND_TRIP: &str = "airports H A\nbases H\nflights 2\n1 H A 480 540\n2 A H 600 660\n";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn round_trip_cost(cost: &CostModel) -> i64 {
    let net = crewpair::netgen::parse_network(ROUND_TRIP).unwrap();
    let v = validate_pairing(&[FlightId(1), FlightId(2)], AirportId(0), &net, &RuleSet::default(), cost).unwrap();
    match v {
        Verdict::Legal(p) => p.cost,
        Verdict::Illegal(v) => panic!("{v:?}"),
    }
}

#[test]
fn generate_is_deterministic_and_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let args = |o: &Path| {
        crewpair(&["generate", "--flights", "40", "--bases", "2", "--hubs", "3", "--seed", "5", "-o", o.to_str().unwrap()])
    };
    let out = args(&a);
    assert!(out.status.success());
    assert!(args(&b).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let net = load_network(&a).unwrap();
    assert_eq!(net.num_flights(), 40);
    assert_eq!(net.crew_bases().len(), 2);
    let line = stdout(&out);
    assert!(line.contains("40 flights") && line.contains("2 crew bases") && line.contains("legal duties"), "{line}");
}

#[test]
fn generate_without_flight_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = crewpair(&["generate", "--seed", "1", "-o", dir.path().join("x.txt").to_str().unwrap()]);
    assert!(!out.status.success());
    assert_ne!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--flights"));
}

#[test]
fn run_on_round_trip_reports_its_cost_in_every_mode() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "rt.txt", ROUND_TRIP);
    let expected = round_trip_cost(&CostModel::default());
    for mode in ["cg-heuristic", "cg-standard", "cg-random", "D+U"] {
        let out = crewpair(&["run", &inst, "--mode", mode]);
        assert!(out.status.success(), "{mode}");
        assert!(stdout(&out).contains(&format!("cost {expected} cents (1 pairings, 0 deadheads")), "{}", stdout(&out));
    }
}

#[test]
fn run_reads_rule_and_cost_config() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "rt.txt", ROUND_TRIP);
    let cfg = write(dir.path(), "c.toml", "[cost]\nflying_rate = 6000\nmeal_rate = 0\n");
    let cost = CostModel { flying_rate: 6000, meal_rate: 0, ..CostModel::default() };
    let out = crewpair(&["run", &inst, "--config", &cfg]);
    assert!(out.status.success());
    assert!(stdout(&out).contains(&format!("cost {} cents", round_trip_cost(&cost))));
    let bad = write(dir.path(), "bad.toml", "[cost]\nflying_rat = 1\n");
    assert_eq!(crewpair(&["run", &inst, "--config", &bad]).status.code(), Some(1));
}

#[test]
fn invalid_mode_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "rt.txt", ROUND_TRIP);
    let out = crewpair(&["run", &inst, "--mode", "cg-fastest"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown mode"));
}

#[test]
fn infeasible_instance_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "bad.txt", "airports H A B\nbases H\nflights 3\n1 H A 480 540\n2 A H 600 660\n3 A B 700 760\n");
    let out = crewpair(&["run", &inst]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn json_lines_trace_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.txt");
    assert!(crewpair(&["generate", "--flights", "30", "--seed", "2", "-o", inst.to_str().unwrap()]).status.success());
    let trace = dir.path().join("trace.jsonl");
    let out = crewpair(&[
        "run",
        inst.to_str().unwrap(),
        "--format",
        "json-lines",
        "--ipp-time-limit",
        "30",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(std::fs::read_to_string(&trace).unwrap(), text);
    let events: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(events[0]["event"], "start");
    assert_eq!(events[1]["event"], "ifs");
    assert_eq!(events.last().unwrap()["event"], "finish");
    assert!(events.iter().any(|e| e["event"] == "iteration"));
    assert!(events.iter().any(|e| e["event"] == "interaction"));
}

fn compare_rows(args: &[&str]) -> Vec<serde_json::Value> {
    let out = crewpair(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn compare_tabulates_mean_and_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.txt");
    assert!(crewpair(&["generate", "--flights", "40", "--seed", "3", "-o", inst.to_str().unwrap()]).status.success());
    let inst = inst.to_str().unwrap();

    let single = crewpair(&["compare", inst, "--modes", "cg-heuristic", "--seeds", "0"]);
    assert!(single.status.success());
    let text = stdout(&single);
    assert_eq!(text.lines().filter(|l| l.starts_with("cg-heuristic")).count(), 2, "{text}");

    let rows = compare_rows(&["compare", inst, "--modes", "cg-heuristic", "--seeds", "0,1", "--format", "json-lines"]);
    assert_eq!(rows.len(), 2);
    let costs: Vec<f64> = rows.iter().map(|r| r["cost"].as_f64().unwrap() / 100.0).collect();
    let mean = (costs[0] + costs[1]) / 2.0;
    let sd = ((costs[0] - mean).powi(2) + (costs[1] - mean).powi(2)).sqrt();
    let table = stdout(&crewpair(&["compare", inst, "--modes", "cg-heuristic", "--seeds", "0,1"]));
    assert!(table.contains(&format!("{mean:.2} ± {sd:.2}")), "{table}");
}

#[test]
fn full_strategy_subset_matches_heuristic_mode() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.txt");
    assert!(crewpair(&["generate", "--flights", "40", "--seed", "4", "-o", inst.to_str().unwrap()]).status.success());
    let rows = compare_rows(&[
        "compare",
        inst.to_str().unwrap(),
        "--modes",
        "cg-heuristic,D+U+A+R",
        "--seeds",
        "0,1",
        "--format",
        "json-lines",
    ]);
    let strip = |r: &serde_json::Value| {
        let mut r = r.clone();
        r.as_object_mut().unwrap().remove("seconds");
        r
    };
    assert_eq!(strip(&rows[0]), strip(&rows[2]));
    assert_eq!(strip(&rows[1]), strip(&rows[3]));
}
