//! Exhaustive small-instance enumeration with exact rational probabilities.
//!
//! A [`ScriptedSource`] replaces the hashed randomness with a depth-first
//! walk over every assignment of walk increments, vertex directions, and
//! tie-value orderings. Both production engines run unmodified against it,
//! so the resulting outcome distributions are those of the real step rules,
//! weighted exactly. Tie values are modelled by uniformly random insertion
//! into the order of values already drawn at the same time step, which
//! reproduces the joint law of i.i.d. continuous ties for every comparison
//! the engines can make.

use crate::car_engine::{CarProcess, Occupancy};
use crate::config::{Cell, InitialConfig, StepDistribution, Window};
use crate::lattice::Lattice;
use crate::rng::EnvSource;
use crate::space_engine::SpaceProcess;
use crate::strategy::{Greedy, NoRemoval};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, HashMap};

/// Depth-first tape over uniform choice points.
#[derive(Debug, Default)]
struct ChoiceTape {
    entries: Vec<(u32, u32)>,
    cursor: usize,
}

impl ChoiceTape {
    /// Resolve the next choice point with `options` alternatives.
    fn choose(&mut self, options: u32) -> u32 {
        debug_assert!(options >= 1);
        if self.cursor < self.entries.len() {
            let (chosen, n) = self.entries[self.cursor];
            debug_assert_eq!(n, options, "decision tree shape must be choice-driven");
            self.cursor += 1;
            chosen
        } else {
            self.entries.push((0, options));
            self.cursor += 1;
            0
        }
    }

    /// Probability of the current leaf: every choice point is uniform.
    fn leaf_probability(&self) -> BigRational {
        let mut denom = BigInt::one();
        for &(_, n) in &self.entries {
            denom *= BigInt::from(n);
        }
        BigRational::new(BigInt::one(), denom)
    }

    /// Advance to the next leaf in depth-first order.
    fn advance(&mut self) -> bool {
        while let Some(&(chosen, n)) = self.entries.last() {
            if chosen + 1 < n {
                self.entries.last_mut().unwrap().0 += 1;
                return true;
            }
            self.entries.pop();
        }
        false
    }

    fn rewind(&mut self) {
        self.cursor = 0;
    }
}

/// An [`EnvSource`] that enumerates the environment instead of hashing it.
#[derive(Debug, Default)]
pub struct ScriptedSource {
    tape: ChoiceTape,
    walks: HashMap<(i64, u32), i64>,
    dirs: HashMap<(i64, u64), i64>,
    ties: HashMap<(u8, i64, u32), u64>,
    tie_orders: HashMap<(u8, u32), Vec<u64>>,
}

const CAR_TIES: u8 = 0;
const SPACE_TIES: u8 = 1;

impl ScriptedSource {
    pub fn new() -> Self {
        ScriptedSource::default()
    }

    fn begin_run(&mut self) {
        self.tape.rewind();
        self.walks.clear();
        self.dirs.clear();
        self.ties.clear();
        self.tie_orders.clear();
    }

    fn binary_step(&mut self, mu: &StepDistribution) -> i64 {
        assert!(
            mu.is_symmetric_unit(),
            "enumeration supports the symmetric unit step distribution"
        );
        if self.tape.choose(2) == 0 {
            -1
        } else {
            1
        }
    }

    /// Draw a tie value by choosing its rank among the values already drawn
    /// at this time step; gapped keys keep earlier returns stable.
    fn scripted_tie(&mut self, stream: u8, car: i64, step: u32) -> u64 {
        if let Some(&v) = self.ties.get(&(stream, car, step)) {
            return v;
        }
        let order = self.tie_orders.entry((stream, step)).or_default();
        let slot = self.tape.choose(order.len() as u32 + 1) as usize;
        let lo = if slot == 0 { 0 } else { order[slot - 1] };
        let hi = if slot == order.len() { u64::MAX } else { order[slot] };
        assert!(hi - lo >= 2, "tie key space exhausted");
        let key = lo + (hi - lo) / 2;
        order.insert(slot, key);
        self.ties.insert((stream, car, step), key);
        key
    }
}

impl EnvSource for &mut ScriptedSource {
    fn walk_increment(&mut self, car: i64, step: u32, mu: &StepDistribution) -> i64 {
        if let Some(&v) = self.walks.get(&(car, step)) {
            return v;
        }
        let v = self.binary_step(mu);
        self.walks.insert((car, step), v);
        v
    }

    fn tie_raw(&mut self, car: i64, step: u32) -> u64 {
        self.scripted_tie(CAR_TIES, car, step)
    }

    fn space_tie_raw(&mut self, car: i64, step: u32) -> u64 {
        self.scripted_tie(SPACE_TIES, car, step)
    }

    fn direction(&mut self, vertex: i64, index: u64, mu: &StepDistribution) -> i64 {
        if let Some(&v) = self.dirs.get(&(vertex, index)) {
            return v;
        }
        let v = self.binary_step(mu);
        self.dirs.insert((vertex, index), v);
        v
    }
}

/// Final state of a run, compared across engines: per-vertex occupancy
/// (with filler identity) and the unparked cars with their positions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Outcome {
    pub occupancy: Vec<OutcomeCell>,
    pub unparked: Vec<(i64, i64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutcomeCell {
    CarCell,
    Free,
    FilledBy(i64),
}

fn occupancy_cell(o: Occupancy) -> OutcomeCell {
    match o {
        Occupancy::CarCell => OutcomeCell::CarCell,
        Occupancy::Free => OutcomeCell::Free,
        Occupancy::FilledBy(c) => OutcomeCell::FilledBy(c),
        Occupancy::Outside => unreachable!("cycles have no outside"),
    }
}

/// Exact conditional outcome distribution of the car-based engine on C_n for
/// a fixed placement, under greedy parking.
pub fn enumerate_car_outcomes(
    config: &InitialConfig,
    n: i64,
    horizon: u32,
) -> Result<BTreeMap<Outcome, BigRational>> {
    let mut scripted = ScriptedSource::new();
    let mut dist: BTreeMap<Outcome, BigRational> = BTreeMap::new();
    let mu = StepDistribution::symmetric_unit();
    loop {
        scripted.begin_run();
        let mut proc = CarProcess::new(
            config,
            Lattice::Cycle { n },
            mu.clone(),
            Greedy,
            NoRemoval,
            &mut scripted,
            horizon,
        )?;
        proc.run_to(horizon)?;
        let mut unparked: Vec<(i64, i64)> = proc.active_cars().collect();
        unparked.sort_unstable();
        let outcome = Outcome {
            occupancy: (0..n).map(|v| occupancy_cell(proc.occupancy_at(v))).collect(),
            unparked,
        };
        drop(proc);
        let prob = scripted.tape.leaf_probability();
        *dist.entry(outcome).or_insert_with(BigRational::zero) += prob;
        if !scripted.tape.advance() {
            break;
        }
    }
    check_total_mass(&dist)?;
    Ok(dist)
}

/// Exact conditional outcome distribution of the space-based engine on C_n.
pub fn enumerate_space_outcomes(
    config: &InitialConfig,
    n: i64,
    horizon: u32,
) -> Result<BTreeMap<Outcome, BigRational>> {
    let mut scripted = ScriptedSource::new();
    let mut dist: BTreeMap<Outcome, BigRational> = BTreeMap::new();
    let mu = StepDistribution::symmetric_unit();
    loop {
        scripted.begin_run();
        let mut proc = SpaceProcess::new(
            config,
            Lattice::Cycle { n },
            mu.clone(),
            Greedy,
            &mut scripted,
            horizon,
        )?;
        proc.run_to(horizon)?;
        let mut unparked: Vec<(i64, i64)> = proc.active_cars().collect();
        unparked.sort_unstable();
        let outcome = Outcome {
            occupancy: (0..n).map(|v| occupancy_cell(proc.occupancy_at(v))).collect(),
            unparked,
        };
        drop(proc);
        let prob = scripted.tape.leaf_probability();
        *dist.entry(outcome).or_insert_with(BigRational::zero) += prob;
        if !scripted.tape.advance() {
            break;
        }
    }
    check_total_mass(&dist)?;
    Ok(dist)
}

fn check_total_mass(dist: &BTreeMap<Outcome, BigRational>) -> Result<()> {
    let total: BigRational = dist.values().cloned().sum();
    if total != BigRational::one() {
        return Err(Error::InconsistentState(format!(
            "enumerated probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// Result of comparing both engines over every placement of C_n.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub n: i64,
    pub horizon: u32,
    pub placements: u32,
    pub outcomes_car: usize,
    pub outcomes_space: usize,
    pub identical: bool,
    pub first_mismatch: Option<String>,
}

/// Compare car-based and space-based outcome distributions on C_n at the
/// given horizon, placement by placement (hence also under any placement
/// density). Exact rational arithmetic throughout.
pub fn engine_equivalence_on_cycle(n: i64, horizon: u32) -> Result<EquivalenceReport> {
    let window = Window::new(0, n - 1)?;
    let mut outcomes_car = 0usize;
    let mut outcomes_space = 0usize;
    let mut identical = true;
    let mut first_mismatch = None;
    for mask in 0u64..(1 << n) {
        let cells: Vec<Cell> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { Cell::Car } else { Cell::Space })
            .collect();
        let config = InitialConfig::from_cells(window, cells, 0.5)?;
        let car = enumerate_car_outcomes(&config, n, horizon)?;
        let space = enumerate_space_outcomes(&config, n, horizon)?;
        outcomes_car += car.len();
        outcomes_space += space.len();
        if car != space && identical {
            identical = false;
            let diff = car
                .iter()
                .find(|(k, v)| space.get(k) != Some(v))
                .map(|(k, v)| format!("placement {mask:#b}: {k:?} has car-prob {v}"))
                .unwrap_or_else(|| format!("placement {mask:#b}: outcome sets differ"));
            first_mismatch = Some(diff);
        }
    }
    Ok(EquivalenceReport {
        n,
        horizon,
        placements: 1 << n,
        outcomes_car,
        outcomes_space,
        identical,
        first_mismatch,
    })
}

/// Exhaustively verify the mass-transport residual on C_n: zero on every
/// branch of every placement. Returns the largest |residual| seen.
pub fn exhaustive_mass_transport_residual(n: i64, horizon: u32) -> Result<i64> {
    use crate::car_engine::mass_transport_check;
    let window = Window::new(0, n - 1)?;
    let mu = StepDistribution::symmetric_unit();
    let mut worst = 0i64;
    for mask in 0u64..(1 << n) {
        let cells: Vec<Cell> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { Cell::Car } else { Cell::Space })
            .collect();
        let config = InitialConfig::from_cells(window, cells, 0.5)?;
        let mut scripted = ScriptedSource::new();
        loop {
            scripted.begin_run();
            let mut proc = CarProcess::new(
                &config,
                Lattice::Cycle { n },
                mu.clone(),
                Greedy,
                NoRemoval,
                &mut scripted,
                horizon,
            )?;
            proc.run_to(horizon)?;
            let m = proc.metrics();
            drop(proc);
            worst = worst.max(mass_transport_check(&m, &config).abs());
            if !scripted.tape.advance() {
                break;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tape_enumerates_binary_tree() {
        let mut tape = ChoiceTape::default();
        let mut seen = Vec::new();
        loop {
            tape.rewind();
            let a = tape.choose(2);
            let b = tape.choose(2);
            seen.push((a, b));
            if !tape.advance() {
                break;
            }
        }
        assert_eq!(seen, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn tape_handles_variable_arity() {
        // A tree whose second level depends on the first choice.
        let mut tape = ChoiceTape::default();
        let mut total = BigRational::zero();
        let mut leaves = 0;
        loop {
            tape.rewind();
            let a = tape.choose(2);
            if a == 0 {
                tape.choose(3);
            }
            total += tape.leaf_probability();
            leaves += 1;
            if !tape.advance() {
                break;
            }
        }
        assert_eq!(leaves, 4);
        assert!(total.is_one(), "total mass {total}");
    }

    #[test]
    fn scripted_ties_enumerate_orders() {
        // Three cars at one time step: 3! orderings, uniformly.
        let mut src = ScriptedSource::new();
        let mut orders: BTreeMap<Vec<i64>, BigRational> = BTreeMap::new();
        loop {
            src.begin_run();
            let mut s = &mut src;
            let vals = [(10i64, s.tie_raw(10, 1)), (20, s.tie_raw(20, 1)), (30, s.tie_raw(30, 1))];
            let mut by_value = vals;
            by_value.sort_by_key(|&(_, v)| v);
            let order: Vec<i64> = by_value.iter().map(|&(c, _)| c).collect();
            let prob = src.tape.leaf_probability();
            *orders.entry(order).or_insert_with(BigRational::zero) += prob;
            if !src.tape.advance() {
                break;
            }
        }
        assert_eq!(orders.len(), 6);
        for (order, p) in &orders {
            assert_eq!(*p, BigRational::new(1.into(), 6.into()), "order {order:?}");
        }
    }

    #[test]
    fn scripted_source_is_consistent_within_a_run() {
        let mut src = ScriptedSource::new();
        src.begin_run();
        let mu = StepDistribution::symmetric_unit();
        let mut s = &mut src;
        let a = s.walk_increment(5, 1, &mu);
        let b = s.walk_increment(5, 1, &mu);
        assert_eq!(a, b);
        let t1 = s.tie_raw(5, 2);
        let t2 = s.tie_raw(5, 2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn single_car_cycle_distribution_is_uniform_pair() {
        // C_3 with one car and two spaces, horizon 1: the car steps left or
        // right and parks; two outcomes, each 1/2.
        let window = Window::new(0, 2).unwrap();
        let config =
            InitialConfig::from_cells(window, vec![Cell::Car, Cell::Space, Cell::Space], 0.5)
                .unwrap();
        let dist = enumerate_car_outcomes(&config, 3, 1).unwrap();
        assert_eq!(dist.len(), 2);
        for p in dist.values() {
            assert_eq!(*p, BigRational::new(1.into(), 2.into()));
        }
    }

    #[test]
    fn equivalence_tiny() {
        let report = engine_equivalence_on_cycle(3, 1).unwrap();
        assert!(report.identical, "{:?}", report.first_mismatch);
    }
}
