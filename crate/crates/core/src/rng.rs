//! Seeded, entity-addressable randomness.
//!
//! Every random quantity in a run is a pure function of
//! `(master seed, stream kind, entity id, sequence index)`. There is no
//! mutable generator state, so two engines (or two coupled strategy runs) can
//! consume the same environment in different orders and still see identical
//! variates. That property is what turns the coupling theorems into exact,
//! pathwise-checkable assertions.

use crate::config::StepDistribution;

/// Which logical stream a draw belongs to.
///
/// Streams are disjoint by construction: changing draws in one stream never
/// moves another stream's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Initial car/space placement, one draw per lattice site.
    InitCell,
    /// Car walk increments, packed 64 steps per block (unit-step walks).
    WalkBlock,
    /// Car walk increments for general step distributions, one draw per step.
    WalkDraw,
    /// Car tie-break values, one per (car, time step).
    CarTie,
    /// Per-vertex direction stacks of the space-based model.
    SpaceDirection,
    /// Tie-break values of the space-based model (its own stream, shared
    /// with nothing from the car-based model).
    SpaceTie,
    /// The uniform interval shift of the assignment strategy.
    Shift,
    /// Sub-seed derivation for replicas.
    Replica,
}

impl Stream {
    #[inline]
    fn salt(self) -> u64 {
        match self {
            Stream::InitCell => 0x9e37_79b9_7f4a_7c15,
            Stream::WalkBlock => 0xbf58_476d_1ce4_e5b9,
            Stream::WalkDraw => 0x94d0_49bb_1331_11eb,
            Stream::CarTie => 0xd6e8_feb8_6659_fd93,
            Stream::SpaceDirection => 0xa076_1d64_78bd_642f,
            Stream::SpaceTie => 0xe703_7ed1_a0b4_28db,
            Stream::Shift => 0x8ebc_6af0_9c88_c6e3,
            Stream::Replica => 0x5895_08ce_d3f3_b1b2,
        }
    }
}

#[inline]
fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[inline]
fn to_unit(x: u64) -> f64 {
    // Top 53 bits -> [0, 1). Monotone in x, so u64 comparisons and f64
    // comparisons of derived values induce the same (weak) order.
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Supplier of the per-entity random environment an engine consumes.
///
/// The production implementation is [`RandomSource`]; the exhaustive
/// enumerator substitutes a scripted source that walks every assignment of
/// these values with exact rational weights, driving the same engine code.
pub trait EnvSource {
    fn walk_increment(&mut self, car: i64, step: u32, mu: &StepDistribution) -> i64;
    fn tie_raw(&mut self, car: i64, step: u32) -> u64;
    fn space_tie_raw(&mut self, car: i64, step: u32) -> u64;
    fn direction(&mut self, vertex: i64, index: u64, mu: &StepDistribution) -> i64;
    /// The backing hash source, when this is a real one (strategy views use
    /// it to peek at unconsumed directions).
    fn as_random(&self) -> Option<&RandomSource> {
        None
    }
}

/// The random environment supplier.
///
/// `RandomSource` is `Copy` and stateless after construction; replica workers
/// share it freely. Identical `(seed, stream, id, index)` quadruples always
/// yield identical variates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSource {
    master_seed: u64,
}

impl RandomSource {
    pub fn new(master_seed: u64) -> Self {
        RandomSource { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Core derivation: three avalanche rounds over the address words.
    #[inline]
    pub fn raw(&self, stream: Stream, id: i64, index: u64) -> u64 {
        let mut x = splitmix(self.master_seed ^ stream.salt());
        x = splitmix(x ^ (id as u64));
        splitmix(x ^ index)
    }

    /// Uniform variate in [0, 1) at the given address.
    #[inline]
    pub fn uniform(&self, stream: Stream, id: i64, index: u64) -> f64 {
        to_unit(self.raw(stream, id, index))
    }

    /// A block of 64 walk-increment bits for a unit-step walk.
    ///
    /// Step `s` (1-based) lives at bit `(s-1) % 64` of block `(s-1) / 64`;
    /// bit 1 means +1, bit 0 means -1.
    #[inline]
    pub fn walk_block(&self, car: i64, block: u64) -> u64 {
        self.raw(Stream::WalkBlock, car, block)
    }

    /// The s-th increment of car `v`'s walk (s >= 1).
    ///
    /// For the symmetric unit-step distribution this reads the packed bit
    /// stream, so it agrees exactly with the block-based fast path. Other
    /// distributions are sampled by inverse CDF from a per-step uniform.
    #[inline]
    pub fn walk_increment(&self, v: i64, s: u32, mu: &StepDistribution) -> i64 {
        debug_assert!(s >= 1, "walk increments are 1-indexed");
        if mu.is_symmetric_unit() {
            let idx = (s - 1) as u64;
            let bit = (self.walk_block(v, idx / 64) >> (idx % 64)) & 1;
            if bit == 1 {
                1
            } else {
                -1
            }
        } else {
            mu.sample(self.uniform(Stream::WalkDraw, v, s as u64))
        }
    }

    /// Raw tie-break value of car `v` at time `s` in the car-based model.
    ///
    /// Engines compare these as integers; [`RandomSource::tie_break_value`]
    /// exposes the same draw as a unit-interval float with the same order.
    #[inline]
    pub fn tie_raw(&self, v: i64, s: u32) -> u64 {
        self.raw(Stream::CarTie, v, s as u64)
    }

    /// Tie-break value U^v_s in [0, 1).
    #[inline]
    pub fn tie_break_value(&self, v: i64, s: u32) -> f64 {
        to_unit(self.tie_raw(v, s))
    }

    /// Raw tie-break value of the space-based model (independent stream).
    #[inline]
    pub fn space_tie_raw(&self, v: i64, s: u32) -> u64 {
        self.raw(Stream::SpaceTie, v, s as u64)
    }

    /// The n-th direction stored at vertex `v` in the space-based model
    /// (n is 0-based here; the stack is consumed in order).
    #[inline]
    pub fn direction(&self, v: i64, n: u64, mu: &StepDistribution) -> i64 {
        mu.sample(self.uniform(Stream::SpaceDirection, v, n))
    }

    /// Bernoulli(p) placement draw for one lattice site.
    #[inline]
    pub fn cell_is_car(&self, pos: i64, p: f64) -> bool {
        self.uniform(Stream::InitCell, pos, 0) < p
    }

    /// Uniform shift in {0, ..., modulus-1}.
    pub fn shift(&self, modulus: u64) -> u64 {
        debug_assert!(modulus > 0);
        let h = self.raw(Stream::Shift, 0, 0);
        ((h as u128 * modulus as u128) >> 64) as u64
    }

    /// Derive an independent sub-source for a replica.
    pub fn replica(&self, index: u64) -> RandomSource {
        RandomSource {
            master_seed: self.raw(Stream::Replica, 0, index),
        }
    }
}

impl EnvSource for RandomSource {
    #[inline]
    fn walk_increment(&mut self, car: i64, step: u32, mu: &StepDistribution) -> i64 {
        RandomSource::walk_increment(self, car, step, mu)
    }

    #[inline]
    fn tie_raw(&mut self, car: i64, step: u32) -> u64 {
        RandomSource::tie_raw(self, car, step)
    }

    #[inline]
    fn space_tie_raw(&mut self, car: i64, step: u32) -> u64 {
        RandomSource::space_tie_raw(self, car, step)
    }

    #[inline]
    fn direction(&mut self, vertex: i64, index: u64, mu: &StepDistribution) -> i64 {
        RandomSource::direction(self, vertex, index, mu)
    }

    fn as_random(&self) -> Option<&RandomSource> {
        Some(self)
    }
}
