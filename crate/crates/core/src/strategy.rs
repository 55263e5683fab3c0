//! Concrete parking strategies and car-removal strategies.
//!
//! A parking strategy answers one question per arrival: should this car park
//! at this free space now? The engine owns the structural gates (cars only
//! park at free spaces they have just arrived at, at most once, one car per
//! space, ties broken by the smallest tie value), so every strategy here
//! satisfies the strategy axioms by construction; `axioms::check_trace`
//! re-verifies them on recorded traces in test builds.

use crate::plan::AssignmentPlan;
use crate::{Error, Result};

/// Decision rule for parking, consulted when an active car arrives at a
/// free space. `car` is the car's starting vertex (its identity).
pub trait ParkingStrategy {
    fn wants_park(&self, car: i64, space: i64, step: u32) -> bool;
    fn name(&self) -> &'static str;
}

/// Park as soon as possible.
#[derive(Debug, Clone, Copy, Default)]
pub struct Greedy;

impl ParkingStrategy for Greedy {
    #[inline]
    fn wants_park(&self, _car: i64, _space: i64, _step: u32) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "greedy"
    }
}

/// Never park; cars walk forever. Useful as the extreme majorization case.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeverPark;

impl ParkingStrategy for NeverPark {
    #[inline]
    fn wants_park(&self, _car: i64, _space: i64, _step: u32) -> bool {
        false
    }

    fn name(&self) -> &'static str {
        "never"
    }
}

/// Drive to the pre-assigned space of an [`AssignmentPlan`] and park on the
/// first visit there; cars with a never-park target keep driving.
#[derive(Debug, Clone)]
pub struct Planned<'a> {
    plan: &'a AssignmentPlan,
}

impl<'a> Planned<'a> {
    pub fn new(plan: &'a AssignmentPlan) -> Self {
        Planned { plan }
    }

    pub fn plan(&self) -> &AssignmentPlan {
        self.plan
    }
}

impl ParkingStrategy for Planned<'_> {
    #[inline]
    fn wants_park(&self, car: i64, space: i64, _step: u32) -> bool {
        self.plan.assigned_space(car) == Some(space)
    }

    fn name(&self) -> &'static str {
        "t"
    }
}

/// Decision rule for car removal, consulted on every attempted step. A
/// removed car is parked off the lattice: it never occupies the destination
/// cell and its journey ends at the current step index.
pub trait RemovalStrategy {
    fn removes(&self, from: i64, to: i64, step: u32, car: i64) -> bool;
    fn name(&self) -> &'static str;
}

/// No removal.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoRemoval;

impl RemovalStrategy for NoRemoval {
    #[inline]
    fn removes(&self, _from: i64, _to: i64, _step: u32, _car: i64) -> bool {
        false
    }

    fn name(&self) -> &'static str {
        "none"
    }
}

/// Parameters of the periodic-barrier removal rule: barriers sit on the
/// edges {r*M, r*M + 1} for every integer r, with period
/// M = 2(k + l) * zeta + 1 and zeta = ceil(sqrt(t * ln t)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BarrierParams {
    pub horizon: u64,
    pub k: u32,
    pub l: u32,
    pub zeta: u64,
}

impl BarrierParams {
    /// Standard construction; requires k > 8 and l > 4.
    pub fn new(horizon: u64, k: u32, l: u32) -> Result<Self> {
        if k <= 8 || l <= 4 {
            return Err(Error::BadBarrierParams { k, l });
        }
        let zeta = barrier_zeta(horizon);
        Ok(BarrierParams { horizon, k, l, zeta })
    }

    /// Explicit zeta (small-instance tests).
    pub fn with_zeta(horizon: u64, k: u32, l: u32, zeta: u64) -> Result<Self> {
        if k <= 8 || l <= 4 {
            return Err(Error::BadBarrierParams { k, l });
        }
        Ok(BarrierParams { horizon, k, l, zeta })
    }

    /// The barrier period 2(k + l) zeta + 1.
    pub fn period(&self) -> i64 {
        2 * (self.k + self.l) as i64 * self.zeta as i64 + 1
    }
}

/// zeta = ceil(sqrt(t * ln t)), natural log.
pub fn barrier_zeta(t: u64) -> u64 {
    if t <= 1 {
        return 0;
    }
    let x = (t as f64) * (t as f64).ln();
    let mut z = x.sqrt().floor() as u64;
    while (z as f64) * (z as f64) < x {
        z += 1;
    }
    z
}

/// Should the unit step `from -> to` be removed? True exactly when
/// {from, to} = {r*M, r*M + 1} for some integer r. Rejects non-unit steps.
pub fn barrier_removal_decide(params: &BarrierParams, from: i64, to: i64) -> Result<bool> {
    if (to - from).abs() != 1 {
        return Err(Error::NonUnitStep { from, to });
    }
    Ok(edge_is_barrier(params.period(), from.min(to)))
}

#[inline]
fn edge_is_barrier(period: i64, edge_lo: i64) -> bool {
    edge_lo.rem_euclid(period) == 0
}

/// The periodic-barrier removal strategy.
#[derive(Debug, Clone, Copy)]
pub struct BarrierRemoval {
    period: i64,
}

impl BarrierRemoval {
    pub fn new(params: &BarrierParams) -> Self {
        BarrierRemoval {
            period: params.period(),
        }
    }

    pub fn period(&self) -> i64 {
        self.period
    }
}

impl RemovalStrategy for BarrierRemoval {
    #[inline]
    fn removes(&self, from: i64, to: i64, _step: u32, _car: i64) -> bool {
        debug_assert!((to - from).abs() == 1);
        edge_is_barrier(self.period, from.min(to))
    }

    fn name(&self) -> &'static str {
        "barrier"
    }
}

/// Post-hoc verification of the parking-strategy axioms on a recorded trace.
pub mod axioms {
    use crate::car_engine::{CarStatus, TraceEvent};
    use crate::config::{Cell, InitialConfig};
    use std::collections::{HashMap, HashSet};

    /// Assert the six structural axioms on a run trace:
    /// each car parks at most once, each space holds at most one car, only
    /// cars park, parking happens only on spaces, and only at the car's own
    /// arrival position at that time.
    pub fn check_trace(config: &InitialConfig, trace: &[TraceEvent]) {
        let mut parked_cars: HashSet<i64> = HashSet::new();
        let mut filled_spaces: HashSet<i64> = HashSet::new();
        let mut position_at: HashMap<(i64, u32), i64> = HashMap::new();
        for ev in trace {
            position_at.insert((ev.car, ev.time), ev.position);
        }
        for ev in trace {
            if let CarStatus::Parked { at, when } = ev.status {
                if when != ev.time {
                    continue; // later snapshots of an already parked car
                }
                assert!(parked_cars.insert(ev.car), "car {} parked twice", ev.car);
                assert!(filled_spaces.insert(at), "space {at} filled twice");
                assert_eq!(
                    config.cell(ev.car),
                    Cell::Car,
                    "non-existent car {} parked",
                    ev.car
                );
                assert_eq!(config.cell(at), Cell::Space, "car parked on car cell {at}");
                assert_eq!(
                    position_at.get(&(ev.car, when)),
                    Some(&at),
                    "car {} parked away from its position at time {when}",
                    ev.car
                );
            }
        }
    }
}
