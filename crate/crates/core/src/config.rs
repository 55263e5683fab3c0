//! The random environment: step distributions and initial car/space placement.

use crate::rng::RandomSource;
use crate::{Error, Result};
use std::fmt;
use std::io::Write;

/// A finitely supported step distribution on integer offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    support: Vec<i64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepDistribution {
    /// Build a distribution from offsets and matching probabilities.
    ///
    /// Weights must be nonnegative and sum to 1 within 1e-12; the support
    /// must be nonempty.
    pub fn new(support: Vec<i64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::BadDistribution("empty support".into()));
        }
        if support.len() != weights.len() {
            return Err(Error::BadDistribution(format!(
                "support has {} offsets but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::BadDistribution("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadDistribution(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        // Guard the last bucket against rounding so sample() is total.
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        Ok(StepDistribution {
            support,
            weights,
            cumulative,
        })
    }

    /// The +-1 fair coin used by the integer-line car park triple.
    pub fn symmetric_unit() -> Self {
        StepDistribution::new(vec![-1, 1], vec![0.5, 0.5]).expect("valid by construction")
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True for the two-point {-1,+1} distribution with equal weights,
    /// which engines serve from a packed bit stream.
    pub fn is_symmetric_unit(&self) -> bool {
        self.support == [-1, 1] && (self.weights[0] - 0.5).abs() < 1e-15
    }

    /// Largest absolute offset; bounds the information speed of a step.
    pub fn max_step(&self) -> i64 {
        self.support.iter().map(|s| s.abs()).max().unwrap_or(0)
    }

    /// Inverse-CDF sample from a uniform in [0, 1).
    #[inline]
    pub fn sample(&self, u: f64) -> i64 {
        for (i, &c) in self.cumulative.iter().enumerate() {
            if u < c {
                return self.support[i];
            }
        }
        *self.support.last().expect("nonempty support")
    }
}

/// One lattice site of the initial environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Car,
    Space,
}

/// An inclusive integer interval of lattice positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::EmptyWindow { lo, hi });
        }
        Ok(Window { lo, hi })
    }

    /// Symmetric window [-radius, radius].
    pub fn radius(r: i64) -> Self {
        Window { lo: -r, hi: r }
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty windows
    }

    #[inline]
    pub fn contains(&self, pos: i64) -> bool {
        pos >= self.lo && pos <= self.hi
    }

    #[inline]
    pub fn offset(&self, pos: i64) -> usize {
        debug_assert!(self.contains(pos));
        (pos - self.lo) as usize
    }

    pub fn positions(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    /// Distance from `pos` to the nearest window boundary.
    pub fn boundary_distance(&self, pos: i64) -> i64 {
        (pos - self.lo).min(self.hi - pos)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// The Bernoulli(p) car/space placement on a finite window.
///
/// Positions outside the window hold neither a car nor a space; engines
/// decide boundary policy (the line engine lets cars walk beyond the window,
/// cycles wrap).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    window: Window,
    cells: Vec<Cell>,
    density: f64,
}

impl InitialConfig {
    /// Sample each cell independently: Car with probability p, Space
    /// otherwise. Deterministic given `(src, window, p)`.
    pub fn sample(window: Window, p: f64, src: &RandomSource) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::InvalidProbability(p));
        }
        let cells = window
            .positions()
            .map(|pos| {
                if src.cell_is_car(pos, p) {
                    Cell::Car
                } else {
                    Cell::Space
                }
            })
            .collect();
        Ok(InitialConfig {
            window,
            cells,
            density: p,
        })
    }

    /// Build a config from explicit cells (for tests and enumeration).
    pub fn from_cells(window: Window, cells: Vec<Cell>, density: f64) -> Result<Self> {
        if cells.len() != window.len() {
            return Err(Error::InconsistentState(format!(
                "{} cells for window {window}",
                cells.len()
            )));
        }
        Ok(InitialConfig {
            window,
            cells,
            density,
        })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    #[inline]
    pub fn cell(&self, pos: i64) -> Cell {
        self.cells[self.window.offset(pos)]
    }

    /// Cells as a dense slice aligned with `window().positions()`.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn is_car(&self, pos: i64) -> bool {
        self.window.contains(pos) && self.cell(pos) == Cell::Car
    }

    pub fn car_count(&self) -> usize {
        self.cells.iter().filter(|c| **c == Cell::Car).count()
    }

    pub fn space_count(&self) -> usize {
        self.cells.len() - self.car_count()
    }

    /// Replace a single cell (used to pin the origin in J-bound studies).
    pub fn set_cell(&mut self, pos: i64, cell: Cell) {
        let idx = self.window.offset(pos);
        self.cells[idx] = cell;
    }

    /// Dump as `position,tag` CSV with the master seed in the header.
    pub fn write_csv<W: Write>(&self, out: &mut W, master_seed: u64) -> Result<()> {
        writeln!(out, "# master_seed={master_seed} p={} window={}", self.density, self.window)?;
        writeln!(out, "position,tag")?;
        for pos in self.window.positions() {
            let tag = match self.cell(pos) {
                Cell::Car => "car",
                Cell::Space => "space",
            };
            writeln!(out, "{pos},{tag}")?;
        }
        Ok(())
    }
}
