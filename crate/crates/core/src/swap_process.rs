//! The label-preserving swap process on L ∪ M ∪ R.
//!
//! Cars are labelled by their starting subinterval. Each step applies the
//! raw walk moves and then three reordering passes (L/R, L/M, M/R) that swap
//! positions among violating cars so that, read left to right, active cars
//! are always labelled L, then M, then R. Swaps exchange positions, not walk
//! streams: increments are consumed per original car identity. Parking uses
//! L-then-R-then-M priority with the smallest tie value within a label; cars
//! reaching one cell beyond either end become inactive and leave the process.

use crate::config::Cell;
use crate::rng::RandomSource;
use crate::strategy::barrier_zeta;
use crate::{Error, Result};

/// Interval label of a car's starting position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    L,
    M,
    R,
}

impl Label {
    /// Parking priority rank: L before R before M.
    fn priority(self) -> u8 {
        match self {
            Label::L => 0,
            Label::R => 1,
            Label::M => 2,
        }
    }
}

/// Geometry of the study interval: L = [-(k+l)z, -kz), M = [-kz, kz],
/// R = (kz, (k+l)z].
#[derive(Debug, Clone, Copy)]
pub struct SwapParams {
    pub horizon: u32,
    pub k: u32,
    pub l: u32,
    pub zeta: u64,
}

impl SwapParams {
    pub fn new(horizon: u32, k: u32, l: u32) -> Result<Self> {
        if k <= 8 || l <= 4 {
            return Err(Error::BadBarrierParams { k, l });
        }
        let zeta = barrier_zeta(horizon as u64);
        if zeta == 0 {
            return Err(Error::Domain("horizon too small: zeta = 0".into()));
        }
        Ok(SwapParams { horizon, k, l, zeta })
    }

    pub fn with_zeta(horizon: u32, k: u32, l: u32, zeta: u64) -> Result<Self> {
        if k <= 8 || l <= 4 {
            return Err(Error::BadBarrierParams { k, l });
        }
        if zeta == 0 {
            return Err(Error::Domain("zeta must be positive".into()));
        }
        Ok(SwapParams { horizon, k, l, zeta })
    }

    pub fn min_pos(&self) -> i64 {
        -((self.k + self.l) as i64) * self.zeta as i64
    }

    pub fn max_pos(&self) -> i64 {
        (self.k + self.l) as i64 * self.zeta as i64
    }

    pub fn label_of(&self, pos: i64) -> Label {
        let kz = self.k as i64 * self.zeta as i64;
        if pos < -kz {
            Label::L
        } else if pos <= kz {
            Label::M
        } else {
            Label::R
        }
    }

    /// Deviation scale (t ln t)^(1/4) used by the excess events.
    pub fn deviation_scale(&self) -> f64 {
        let t = self.horizon as f64;
        (t * t.ln()).powf(0.25)
    }
}

/// Initial car/space counts per subinterval plus drive and inactivation
/// counters.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExcessCounters {
    pub s_l: u32,
    pub p_l: u32,
    pub s_m: u32,
    pub p_m: u32,
    pub s_r: u32,
    pub p_r: u32,
    /// Left/right inactivations under deterministic one-way driving.
    pub d_l: u32,
    pub d_r: u32,
    /// Realized inactivation counts.
    pub i_l: u32,
    pub i_r: u32,
}

impl ExcessCounters {
    /// The excess lower bound (S_M - P_M) + (S_L - P_L - D_L) + (S_R - P_R - D_R).
    pub fn excess_lower_bound(&self) -> i64 {
        (self.s_m as i64 - self.p_m as i64)
            + (self.s_l as i64 - self.p_l as i64 - self.d_l as i64)
            + (self.s_r as i64 - self.p_r as i64 - self.d_r as i64)
    }
}

/// Cars exiting the left end of an interval when every car drives one step
/// toward it per time unit and parks greedily on the way.
///
/// `cells` is the interval left to right; returns the number of cars that
/// pass beyond the left end within `t` steps.
pub fn deterministic_drive_count(cells: &[Cell], t: u32) -> u32 {
    let len = cells.len();
    let mut filled = vec![false; len];
    let mut cars: Vec<i64> = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == Cell::Car)
        .map(|(i, _)| i as i64)
        .collect();
    let mut exited = 0u32;
    let steps = (t as usize).min(len);
    for _ in 0..steps {
        if cars.is_empty() {
            break;
        }
        cars.retain_mut(|pos| {
            *pos -= 1;
            if *pos < 0 {
                exited += 1;
                return false;
            }
            let cell = *pos as usize;
            if cells[cell] == Cell::Space && !filled[cell] {
                filled[cell] = true;
                return false;
            }
            true
        });
    }
    exited
}

/// Mirrored drive: cars step right, exits counted past the right end.
pub fn deterministic_drive_count_right(cells: &[Cell], t: u32) -> u32 {
    let reversed: Vec<Cell> = cells.iter().rev().copied().collect();
    deterministic_drive_count(&reversed, t)
}

/// The running-minimum identity for the deterministic drive: for the
/// interval read right to left as a walk (car = +1, space = -1),
/// S - P - D equals the walk's minimum over all prefixes (including the
/// empty one).
pub fn right_to_left_running_min(cells: &[Cell]) -> i64 {
    let mut sum = 0i64;
    let mut min = 0i64;
    for cell in cells.iter().rev() {
        sum += match cell {
            Cell::Car => 1,
            Cell::Space => -1,
        };
        min = min.min(sum);
    }
    min
}

/// One reordering pass. `a` and `b` are the active cars of the two labels as
/// `(starting position, current position)` pairs, with A the left-priority
/// label. Violating A-cars (strictly right of some B-car) receive the lowest
/// positions of the violator pool in their own increasing order; violating
/// B-cars receive the highest. Non-violators are untouched and the position
/// multiset is preserved.
pub fn reorder_pass(a: &mut [(i64, i64)], b: &mut [(i64, i64)]) {
    if a.is_empty() || b.is_empty() {
        return;
    }
    let min_b = b.iter().map(|&(_, p)| p).min().expect("nonempty");
    let max_a = a.iter().map(|&(_, p)| p).max().expect("nonempty");
    if max_a <= min_b {
        return;
    }
    // Equal intermediate positions make the increasing enumeration
    // non-unique; break ties by starting position for reproducibility.
    let mut viol_a: Vec<usize> = (0..a.len()).filter(|&i| a[i].1 > min_b).collect();
    let mut viol_b: Vec<usize> = (0..b.len()).filter(|&i| b[i].1 < max_a).collect();
    debug_assert!(!viol_a.is_empty() && !viol_b.is_empty());
    viol_a.sort_by_key(|&i| (a[i].1, a[i].0));
    viol_b.sort_by_key(|&i| (b[i].1, b[i].0));
    let mut pool: Vec<i64> = viol_a
        .iter()
        .map(|&i| a[i].1)
        .chain(viol_b.iter().map(|&i| b[i].1))
        .collect();
    pool.sort_unstable();
    for (slot, &i) in viol_a.iter().enumerate() {
        a[i].1 = pool[slot];
    }
    for (slot, &i) in viol_b.iter().enumerate() {
        b[i].1 = pool[viol_a.len() + slot];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SwapStatus {
    Active,
    Parked { at: i64, when: u32 },
    InactiveLeft { when: u32 },
    InactiveRight { when: u32 },
}

struct SwapCar {
    start: i64,
    label: Label,
    pos: i64,
    status: SwapStatus,
}

/// Outcome of a full modified run.
#[derive(Debug, Clone)]
pub struct SwapRunReport {
    pub active_at_horizon: u32,
    pub parked: u32,
    pub counters: ExcessCounters,
    /// No M-car inactivated, no L-car reached R, no R-car reached L.
    pub event_a: bool,
    pub event_cl: bool,
    pub event_cm: bool,
    pub event_cr: bool,
    pub excess_lower_bound: i64,
}

/// The modified process state.
pub struct SwapProcess {
    params: SwapParams,
    src: RandomSource,
    cells: Vec<Cell>,
    occupied: Vec<bool>,
    cars: Vec<SwapCar>,
    active: Vec<u32>,
    counters: ExcessCounters,
    time: u32,
    event_a: bool,
    scratch_before: Vec<i64>,
    scratch_after: Vec<i64>,
}

impl SwapProcess {
    /// Sample a Bernoulli(p) environment over the study interval and set up
    /// the labelled process.
    pub fn new(params: SwapParams, p: f64, src: RandomSource) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::InvalidProbability(p));
        }
        let (min_pos, max_pos) = (params.min_pos(), params.max_pos());
        let len = (max_pos - min_pos + 1) as usize;
        let mut cells = Vec::with_capacity(len);
        let mut cars = Vec::new();
        let mut counters = ExcessCounters::default();
        for pos in min_pos..=max_pos {
            let cell = if src.cell_is_car(pos, p) { Cell::Car } else { Cell::Space };
            cells.push(cell);
            let label = params.label_of(pos);
            match (cell, label) {
                (Cell::Car, Label::L) => counters.s_l += 1,
                (Cell::Car, Label::M) => counters.s_m += 1,
                (Cell::Car, Label::R) => counters.s_r += 1,
                (Cell::Space, Label::L) => counters.p_l += 1,
                (Cell::Space, Label::M) => counters.p_m += 1,
                (Cell::Space, Label::R) => counters.p_r += 1,
            }
            if cell == Cell::Car {
                cars.push(SwapCar {
                    start: pos,
                    label,
                    pos,
                    status: SwapStatus::Active,
                });
            }
        }
        let kz = params.k as i64 * params.zeta as i64;
        let l_cells: Vec<Cell> = (min_pos..-kz).map(|p| cells[(p - min_pos) as usize]).collect();
        let r_cells: Vec<Cell> = ((kz + 1)..=max_pos).map(|p| cells[(p - min_pos) as usize]).collect();
        counters.d_l = deterministic_drive_count(&l_cells, params.horizon);
        counters.d_r = deterministic_drive_count_right(&r_cells, params.horizon);
        let active = (0..cars.len() as u32).collect();
        Ok(SwapProcess {
            params,
            src,
            occupied: vec![false; len],
            cells,
            cars,
            active,
            counters,
            time: 0,
            event_a: true,
            scratch_before: Vec::new(),
            scratch_after: Vec::new(),
        })
    }

    pub fn time(&self) -> u32 {
        self.time
    }

    pub fn active_count(&self) -> u32 {
        self.active.len() as u32
    }

    pub fn counters(&self) -> ExcessCounters {
        self.counters
    }

    pub fn active_cars(&self) -> impl Iterator<Item = (i64, Label, i64)> + '_ {
        self.active.iter().map(|&ci| {
            let c = &self.cars[ci as usize];
            (c.start, c.label, c.pos)
        })
    }

    fn gather(&self, label: Label) -> Vec<(i64, i64)> {
        self.active
            .iter()
            .map(|&ci| &self.cars[ci as usize])
            .filter(|c| c.label == label)
            .map(|c| (c.start, c.pos))
            .collect()
    }

    fn scatter(&mut self, label: Label, updated: &[(i64, i64)]) {
        let mut it = updated.iter();
        for &ci in &self.active {
            let car = &mut self.cars[ci as usize];
            if car.label == label {
                let &(start, pos) = it.next().expect("label cohort size unchanged");
                debug_assert_eq!(start, car.start);
                car.pos = pos;
            }
        }
    }

    fn ordering_dump(&self) -> String {
        let mut rows: Vec<String> = self
            .active_cars()
            .map(|(start, label, pos)| format!("{label:?}@{pos}(from {start})"))
            .collect();
        rows.sort();
        rows.join(", ")
    }

    fn check_ordering(&self, pass: &'static str) -> Result<()> {
        let mut max_l = i64::MIN;
        let mut min_m = i64::MAX;
        let mut max_m = i64::MIN;
        let mut min_r = i64::MAX;
        for (_, label, pos) in self.active_cars() {
            match label {
                Label::L => max_l = max_l.max(pos),
                Label::M => {
                    min_m = min_m.min(pos);
                    max_m = max_m.max(pos);
                }
                Label::R => min_r = min_r.min(pos),
            }
        }
        let ok = match pass {
            // After L/R: no L strictly right of an R.
            "reorder-LR" => max_l <= min_r,
            // After L/M: additionally no L strictly right of an M.
            "reorder-LM" => max_l <= min_r && max_l <= min_m,
            // After the final pass the full ordering must hold.
            _ => max_l <= min_m.min(min_r) && max_m <= min_r,
        };
        if !ok {
            return Err(Error::SwapInvariantBreach {
                time: self.time + 1,
                pass,
                dump: self.ordering_dump(),
            });
        }
        Ok(())
    }

    /// One step: raw moves, the three passes, parking, inactivation.
    pub fn step(&mut self) -> Result<()> {
        let s = self.time + 1;
        let mu = crate::config::StepDistribution::symmetric_unit();

        self.scratch_before.clear();
        for &ci in &self.active {
            self.scratch_before.push(self.cars[ci as usize].pos);
        }
        let prev: Vec<i64> = self.scratch_before.clone();

        // Z1: every active car moves by its own walk increment.
        for &ci in &self.active {
            let car = &mut self.cars[ci as usize];
            car.pos += self.src.walk_increment(car.start, s, &mu);
        }
        self.scratch_after.clear();
        for &ci in &self.active {
            self.scratch_after.push(self.cars[ci as usize].pos);
        }
        let z1_multiset = {
            let mut v = self.scratch_after.clone();
            v.sort_unstable();
            v
        };

        // Z2: L/R, Z3: L/M, Y: M/R.
        for (a_label, b_label, pass) in [
            (Label::L, Label::R, "reorder-LR"),
            (Label::L, Label::M, "reorder-LM"),
            (Label::M, Label::R, "final"),
        ] {
            let mut a = self.gather(a_label);
            let mut b = self.gather(b_label);
            reorder_pass(&mut a, &mut b);
            self.scatter(a_label, &a);
            self.scatter(b_label, &b);
            self.check_ordering(pass)?;
            // Occupancy preservation: each pass permutes positions.
            let mut now: Vec<i64> = self
                .active
                .iter()
                .map(|&ci| self.cars[ci as usize].pos)
                .collect();
            now.sort_unstable();
            if now != z1_multiset {
                return Err(Error::SwapInvariantBreach {
                    time: s,
                    pass,
                    dump: format!("position multiset changed: {now:?} vs {z1_multiset:?}"),
                });
            }
        }

        // Unit speed: the net move of every car is at most one cell.
        for (idx, &ci) in self.active.iter().enumerate() {
            let car = &self.cars[ci as usize];
            if (car.pos - prev[idx]).abs() > 1 {
                return Err(Error::SwapInvariantBreach {
                    time: s,
                    pass: "unit-speed",
                    dump: format!(
                        "car from {} moved {} -> {}",
                        car.start, prev[idx], car.pos
                    ),
                });
            }
        }

        // Parking: L-then-R-then-M priority, smallest tie within a label.
        let min_pos = self.params.min_pos();
        let mut claims: std::collections::BTreeMap<i64, (u8, u64, i64, u32)> =
            std::collections::BTreeMap::new();
        for &ci in &self.active {
            let car = &self.cars[ci as usize];
            let pos = car.pos;
            if pos < min_pos || pos > self.params.max_pos() {
                continue;
            }
            let cell = (pos - min_pos) as usize;
            if self.cells[cell] == Cell::Space && !self.occupied[cell] {
                let key = (
                    car.label.priority(),
                    self.src.tie_raw(car.start, s),
                    car.start,
                    ci,
                );
                let entry = claims.entry(pos).or_insert(key);
                if (key.0, key.1, key.2) < (entry.0, entry.1, entry.2) {
                    *entry = key;
                }
            }
        }
        for (&pos, &(_, _, _, ci)) in claims.iter() {
            let cell = (pos - min_pos) as usize;
            self.occupied[cell] = true;
            self.cars[ci as usize].status = SwapStatus::Parked { at: pos, when: s };
        }

        // Inactivation at the interval ends; event-A tracking.
        let kz = self.params.k as i64 * self.params.zeta as i64;
        let max_pos = self.params.max_pos();
        for &ci in &self.active {
            let car = &mut self.cars[ci as usize];
            if car.status != SwapStatus::Active {
                continue;
            }
            if car.pos == min_pos - 1 {
                car.status = SwapStatus::InactiveLeft { when: s };
                self.counters.i_l += 1;
                if car.label == Label::M {
                    self.event_a = false;
                }
            } else if car.pos == max_pos + 1 {
                car.status = SwapStatus::InactiveRight { when: s };
                self.counters.i_r += 1;
                if car.label == Label::M {
                    self.event_a = false;
                }
            } else if car.label == Label::L && car.pos > kz {
                self.event_a = false;
            } else if car.label == Label::R && car.pos < -kz {
                self.event_a = false;
            }
        }
        self.active
            .retain(|&ci| self.cars[ci as usize].status == SwapStatus::Active);

        self.time = s;
        Ok(())
    }

    pub fn run_to_horizon(&mut self) -> Result<SwapRunReport> {
        while self.time < self.params.horizon {
            self.step()?;
        }
        let scale = self.params.deviation_scale();
        let c = self.counters;
        let parked = self
            .cars
            .iter()
            .filter(|car| matches!(car.status, SwapStatus::Parked { .. }))
            .count() as u32;
        Ok(SwapRunReport {
            active_at_horizon: self.active.len() as u32,
            parked,
            counters: c,
            event_a: self.event_a,
            event_cl: (c.s_l as f64 - c.p_l as f64 - c.d_l as f64) >= -scale,
            event_cm: (c.s_m as f64 - c.p_m as f64) >= 3.0 * scale,
            event_cr: (c.s_r as f64 - c.p_r as f64 - c.d_r as f64) >= -scale,
            excess_lower_bound: c.excess_lower_bound(),
        })
    }
}

/// Sample an environment, run the modified process to its horizon, and
/// report counters and events.
pub fn run_modified(params: SwapParams, p: f64, src: RandomSource) -> Result<SwapRunReport> {
    let mut proc = SwapProcess::new(params, p, src)?;
    proc.run_to_horizon()
}
