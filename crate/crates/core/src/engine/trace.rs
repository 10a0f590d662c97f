//! Structured record of a run: one entry per LP iteration and per
//! LP/IP interaction.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cg::HalfSelector;
use crate::ip::IpStatus;
use crate::model::Cents;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub interaction: u32,
    pub iteration: u32,
    pub z_lp: f64,
    pub input_size: usize,
    pub support_size: usize,
    pub from_cgd: usize,
    pub from_cgu: usize,
    pub from_cga: usize,
    pub from_cgr: usize,
    /// Size of the deduplicated batch handed to the next iteration.
    pub generated: usize,
    pub zero_deadhead: usize,
    pub half: Option<HalfSelector>,
    pub draws: [u32; 4],
    pub lp_pivots: usize,
    /// Broken LP contracts, expected empty.
    pub lp_violations: Vec<String>,
    pub lp_seconds: f64,
    pub pricing_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionRecord {
    pub interaction: u32,
    pub lpp_iterations: u32,
    pub z_lp: f64,
    pub z_ip: Cents,
    pub ip_pairings: usize,
    pub ip_deadheads: u64,
    pub ip_status: IpStatus,
    pub ip_nodes: usize,
    pub best_z_ip: Cents,
    /// Iterations whose LP value rose above the previous one.
    pub monotonicity_violations: u32,
    pub lpp_seconds: f64,
    pub ipp_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Integer and LP costs agree to within a cent.
    Matched,
    MaxInteractions,
    Walltime,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunTrace {
    pub mode: String,
    pub seed: u64,
    pub num_flights: usize,
    pub num_duties: usize,
    pub ifs_pairings: usize,
    pub ifs_objective: Cents,
    pub ifs_seconds: f64,
    /// Random-strategy threshold after calibration, in random mode.
    pub calibrated_th_r: Option<u32>,
    pub iterations: Vec<IterationRecord>,
    pub interactions: Vec<InteractionRecord>,
    pub termination: Option<Termination>,
    pub final_objective: Cents,
    pub final_pairings: usize,
    pub final_deadheads: u64,
    pub total_seconds: f64,
}

#[derive(Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Line<'a> {
    Start { mode: &'a str, seed: u64, num_flights: usize, num_duties: usize },
    Ifs { pairings: usize, objective: Cents, seconds: f64 },
    Calibration { th_r: u32 },
    Iteration(&'a IterationRecord),
    Interaction(&'a InteractionRecord),
    Finish {
        termination: Option<Termination>,
        objective: Cents,
        pairings: usize,
        deadheads: u64,
        seconds: f64,
    },
}

impl RunTrace {
    /// Copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> RunTrace {
        let mut t = self.clone();
        t.ifs_seconds = 0.0;
        t.total_seconds = 0.0;
        for it in &mut t.iterations {
            it.lp_seconds = 0.0;
            it.pricing_seconds = 0.0;
        }
        for ia in &mut t.interactions {
            ia.lpp_seconds = 0.0;
            ia.ipp_seconds = 0.0;
        }
        t
    }

    /// One JSON object per line: start, ifs, iterations and interactions in
    /// run order, then finish.
    pub fn to_json_lines(&self) -> String {
        let mut lines = vec![
            Line::Start {
                mode: &self.mode,
                seed: self.seed,
                num_flights: self.num_flights,
                num_duties: self.num_duties,
            },
            Line::Ifs { pairings: self.ifs_pairings, objective: self.ifs_objective, seconds: self.ifs_seconds },
        ];
        if let Some(th_r) = self.calibrated_th_r {
            lines.push(Line::Calibration { th_r });
        }
        let mut its = self.iterations.iter().peekable();
        for ia in &self.interactions {
            while let Some(it) = its.next_if(|it| it.interaction <= ia.interaction) {
                lines.push(Line::Iteration(it));
            }
            lines.push(Line::Interaction(ia));
        }
        lines.extend(its.map(Line::Iteration));
        lines.push(Line::Finish {
            termination: self.termination,
            objective: self.final_objective,
            pairings: self.final_pairings,
            deadheads: self.final_deadheads,
            seconds: self.total_seconds,
        });
        let mut out = String::new();
        for l in lines {
            out.push_str(&serde_json::to_string(&l).expect("trace serializes"));
            out.push('\n');
        }
        out
    }

    /// Per-interaction table: LP and IP cost in USD with phase times.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>3} {:>6} {:>16} {:>16} {:>9} {:>10} {:>10}",
            "T", "iters", "Z_LP (USD)", "Z_IP (USD)", "pairings", "LPP (s)", "IPP (s)"
        );
        for ia in &self.interactions {
            let _ = writeln!(
                s,
                "{:>3} {:>6} {:>16.2} {:>16.2} {:>9} {:>10.2} {:>10.2}",
                ia.interaction,
                ia.lpp_iterations,
                ia.z_lp / 100.0,
                ia.z_ip as f64 / 100.0,
                ia.ip_pairings,
                ia.lpp_seconds,
                ia.ipp_seconds
            );
        }
        let _ = writeln!(
            s,
            "final {:.2} USD, {} pairings, {} deadheads, {:.2} s ({})",
            self.final_objective as f64 / 100.0,
            self.final_pairings,
            self.final_deadheads,
            self.total_seconds,
            self.termination.map_or("unfinished".to_string(), |t| format!("{t:?}").to_lowercase())
        );
        s
    }
}
