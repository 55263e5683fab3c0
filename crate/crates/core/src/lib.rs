//! Simulation laboratory for the random-walk parking process on the integer line.
//!
//! Cars and parking spaces are placed by independent Bernoulli(p) coin flips,
//! one per lattice site; each car then performs a simple symmetric random walk
//! until it parks in a free space. The crate provides:
//!
//! * two provably equivalent process engines — [`car_engine`] (walks attached
//!   to cars) and [`space_engine`] (direction stacks attached to vertices);
//! * pluggable parking strategies (greedy, never-park, interval-assignment)
//!   and the periodic-barrier car-removal rule in [`strategy`] / [`plan`];
//! * the label-preserving swap process used for lower-bound accounting in
//!   [`swap_process`];
//! * exact closed forms and scan-based oracles (hitting times, max-of-walk
//!   pmf, queue-chain stationary law, excess scans, series bounds) in
//!   [`analytics`];
//! * an exhaustive small-instance enumerator with exact rational weights in
//!   [`enumerate`];
//! * a reproducible experiment harness with CSV/JSON/plot outputs in
//!   [`harness`].
//!
//! Everything is deterministic given a single 64-bit master seed: all
//! randomness is derived by counter-based hashing of (entity kind, entity id,
//! sequence index), so coupled runs can consume identical variates in
//! different orders.

pub mod analytics;
pub mod car_engine;
pub mod config;
pub mod enumerate;
pub mod harness;
pub mod lattice;
pub mod plan;
pub mod rng;
pub mod space_engine;
pub mod strategy;
pub mod swap_process;

use thiserror::Error;

/// Errors surfaced by configuration validation and process contracts.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("window [{lo}, {hi}] is empty")]
    EmptyWindow { lo: i64, hi: i64 },
    #[error("invalid step distribution: {0}")]
    BadDistribution(String),
    #[error("barrier removal requires unit steps, got {from} -> {to}")]
    NonUnitStep { from: i64, to: i64 },
    #[error("barrier parameters require k > 8 and l > 4, got k={k}, l={l}")]
    BadBarrierParams { k: u32, l: u32 },
    #[error("inconsistent process state: {0}")]
    InconsistentState(String),
    #[error("assignment plan integrity violation: {0}")]
    PlanIntegrity(String),
    #[error("swap-process invariant breach at time {time} after pass {pass}: {dump}")]
    SwapInvariantBreach {
        time: u32,
        pass: &'static str,
        dump: String,
    },
    #[error("analytics domain error: {0}")]
    Domain(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
