//! Airline crew pairing optimization by column generation.
//!
//! The pipeline enumerates legal duties, builds an initial feasible cover,
//! and alternates LP phases (restricted master plus column generation) with
//! branch-and-bound integerization until the integer and LP costs agree.

pub mod cg;
pub mod config;
pub mod engine;
pub mod exactpricing;
pub mod ip;
pub mod legalgen;
pub mod lp;
pub mod model;
pub mod netgen;
pub mod rng;
