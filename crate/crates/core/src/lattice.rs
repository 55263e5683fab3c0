//! The lattices the process runs on.
//!
//! The definitions hold on any Cayley graph; only the integer line, the line
//! with a reflecting window, and finite cycles are instantiated here.

use crate::config::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lattice {
    /// The integer line: positions are unbounded, windows only bound where
    /// cars and spaces were placed.
    Line,
    /// The integer line with reflecting boundaries: a step that would leave
    /// `[lo, hi]` bounces back to its origin cell's neighbour inside.
    ReflectingLine { lo: i64, hi: i64 },
    /// The cycle C_n on positions 0..n-1; steps wrap.
    Cycle { n: i64 },
}

impl Lattice {
    /// Apply a step offset to a position.
    #[inline]
    pub fn step(&self, pos: i64, offset: i64) -> i64 {
        match *self {
            Lattice::Line => pos + offset,
            Lattice::ReflectingLine { lo, hi } => {
                let raw = pos + offset;
                if raw < lo {
                    2 * lo - raw
                } else if raw > hi {
                    2 * hi - raw
                } else {
                    raw
                }
            }
            Lattice::Cycle { n } => (pos + offset).rem_euclid(n),
        }
    }

    /// Graph distance between two positions (unit-step metric).
    pub fn distance(&self, a: i64, b: i64) -> i64 {
        match *self {
            Lattice::Line | Lattice::ReflectingLine { .. } => (a - b).abs(),
            Lattice::Cycle { n } => {
                let d = (a - b).rem_euclid(n);
                d.min(n - d)
            }
        }
    }

    /// Whether the lattice has no boundary (every vertex looks alike), in
    /// which case finite-window exactness warnings do not apply.
    pub fn is_vertex_transitive(&self) -> bool {
        matches!(self, Lattice::Line | Lattice::Cycle { .. })
    }

    /// The natural placement window for finite lattices.
    pub fn full_window(&self) -> Option<Window> {
        match *self {
            Lattice::Cycle { n } => Some(Window { lo: 0, hi: n - 1 }),
            Lattice::ReflectingLine { lo, hi } => Some(Window { lo, hi }),
            Lattice::Line => None,
        }
    }
}
