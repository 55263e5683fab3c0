//! Closed-form formulas and exact scan oracles: hitting-time laws of the
//! simple symmetric walk, the max-of-walk pmf, the queue-chain stationary
//! distribution, deterministic-drive excess scans, the J radius, and the
//! subcritical series bound.

use crate::config::Cell;
use crate::rng::RandomSource;
use crate::{Error, Result};

/// Barrier depths for hitting-time queries: left barrier at -a, right at +b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HittingQuery {
    pub a: u64,
    pub b: u64,
}

impl HittingQuery {
    pub fn new(a: u64, b: u64) -> Result<Self> {
        if a < 1 || b < 1 {
            return Err(Error::Domain(format!("barriers must be >= 1, got a={a}, b={b}")));
        }
        Ok(HittingQuery { a, b })
    }
}

/// P[walk hits +b before -a] = a / (a + b).
pub fn gamblers_ruin_prob(q: HittingQuery) -> f64 {
    q.a as f64 / (q.a + q.b) as f64
}

/// E[hitting time of +b | +b is hit before -a] = b(b + 2a) / 3.
pub fn conditional_hit_time(q: HittingQuery) -> f64 {
    let (a, b) = (q.a as f64, q.b as f64);
    b * (b + 2.0 * a) / 3.0
}

/// E[first exit time of (-a, a)] = a^2.
pub fn expected_exit_time(a: u64) -> Result<f64> {
    if a < 1 {
        return Err(Error::Domain("exit barrier must be >= 1".into()));
    }
    Ok((a * a) as f64)
}

/// Binomial pmf term p_{n,r} = C(n, (n+r)/2) 2^{-n}; requires n - r even.
fn binom_half_pmf(n: u64, r: u64) -> f64 {
    debug_assert!((n - r) % 2 == 0 && r <= n);
    let k = (n + r) / 2;
    // C(n, k) stays within f64 range for n <= ~1000; relative error ~ n*eps.
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 1..=k {
        acc *= (n - k + i) as f64 / i as f64;
    }
    acc * 2.0f64.powi(-(n as i32))
}

/// pmf of M_n, the maximum of the walk over times 0..n (so M_n >= 0):
/// P[M_n = r] = p_{n,r} when n - r is even, else p_{n,r+1}.
pub fn max_walk_pmf(n: u64, r: u64) -> Result<f64> {
    if r > n {
        return Err(Error::Domain(format!("level r={r} exceeds walk length n={n}")));
    }
    Ok(if (n - r) % 2 == 0 {
        binom_half_pmf(n, r)
    } else {
        binom_half_pmf(n, r + 1)
    })
}

/// Exact tail P[M_n >= r] by summing the pmf.
pub fn max_walk_tail_exact(n: u64, r: u64) -> Result<f64> {
    let mut total = 0.0;
    for x in r..=n {
        total += max_walk_pmf(n, x)?;
    }
    Ok(total)
}

/// Threshold 2a*sqrt(n ln n) and the tail bound 2 n^(-2a^2) for
/// P[M_n >= threshold].
pub fn max_walk_tail_bound(n: u64, alpha: f64) -> (f64, f64) {
    let nf = n as f64;
    let threshold = 2.0 * alpha * (nf * nf.ln()).sqrt();
    let bound = 2.0 * nf.powf(-2.0 * alpha * alpha);
    (threshold, bound)
}

/// The queue chain of the interval-assignment sweep: states {0, ..., nu},
/// tracking the pending-car queue size cell by cell.
#[derive(Debug, Clone)]
pub struct QueueChain {
    nu: usize,
    rows: Vec<Vec<f64>>,
}

impl QueueChain {
    pub fn new(nu: usize) -> Result<Self> {
        if nu < 1 {
            return Err(Error::Domain("queue capacity must be >= 1".into()));
        }
        let n = nu + 1;
        let mut rows = vec![vec![0.0; n]; n];
        // State 0: a space leaves the queue empty, a car starts one.
        rows[0][0] = 0.5;
        rows[0][1] = 0.5;
        // Interior states step down on a space, up on a car.
        for k in 1..nu {
            rows[k][k - 1] = 0.5;
            rows[k][k + 1] = 0.5;
        }
        // At capacity the oldest car has just been told to leave; a space
        // then also serves a queued car (down two), a car refills the slot.
        rows[nu][nu.saturating_sub(2)] += 0.5;
        rows[nu][nu] += 0.5;
        Ok(QueueChain { nu, rows })
    }

    pub fn capacity(&self) -> usize {
        self.nu
    }

    /// Row-stochastic transition matrix over {0, ..., nu}.
    pub fn transition_matrix(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Left-multiply a distribution by the transition matrix.
    pub fn advance(&self, dist: &[f64]) -> Vec<f64> {
        let n = self.nu + 1;
        let mut out = vec![0.0; n];
        for (k, row) in self.rows.iter().enumerate() {
            for (l, &p) in row.iter().enumerate() {
                out[l] += dist[k] * p;
            }
        }
        out
    }
}

/// The stationary distribution of the queue chain:
/// pi(k) = 1/nu for k = 0..nu-2 and pi(k) = 1/(2 nu) for k = nu-1, nu.
pub fn queue_chain_stationary(nu: usize) -> Result<Vec<f64>> {
    if nu < 1 {
        return Err(Error::Domain("queue capacity must be >= 1".into()));
    }
    let mut pi = vec![1.0 / nu as f64; nu + 1];
    pi[nu - 1] = 1.0 / (2.0 * nu as f64);
    pi[nu] = 1.0 / (2.0 * nu as f64);
    Ok(pi)
}

/// One deterministic-drive excess scan.
///
/// `cells` must be ordered from the far end of the half-line toward the
/// target vertex (for E^L on [-t, -1] driving right: ascending positions;
/// for E^R on [r+1, r+t] driving left: descending positions). Returns the
/// number of cars that reach the target, i.e. the final queue size of the
/// left-to-right queue recursion.
pub fn excess_scan(cells: &[Cell]) -> u64 {
    let mut q = 0u64;
    for cell in cells {
        match cell {
            Cell::Car => q += 1,
            Cell::Space => q = q.saturating_sub(1),
        }
    }
    q
}

/// Excess scan with the stability-window truncation rule: the scan depth is
/// extended until the value has been stable for `10 * ceil((1-p)/(1-2p))`
/// consecutive cells (the queue chain's return times have geometric tails).
///
/// `cells_from_target` is ordered from the target outward (for E^L these are
/// the cells at positions -1, -2, -3, ...). Returns the scan value and the
/// depth actually used.
pub fn excess_scan_truncated(cells_from_target: &[Cell], p: f64) -> (u64, usize) {
    let window = stability_window(p);
    let mut best: i64 = 0;
    let mut sum: i64 = 0;
    let mut depth_used = 0usize;
    let mut stable = 0usize;
    for (d, cell) in cells_from_target.iter().enumerate() {
        // Suffix-sum view of the queue recursion: the scan value at depth d
        // is max(0, max over suffixes nearest the target of cars - spaces).
        sum += match cell {
            Cell::Car => 1,
            Cell::Space => -1,
        };
        if sum > best {
            best = sum;
            depth_used = d + 1;
            stable = 0;
        } else {
            stable += 1;
            if stable >= window {
                break;
            }
        }
    }
    (best.max(0) as u64, depth_used.max(1))
}

fn stability_window(p: f64) -> usize {
    if p >= 0.5 {
        return usize::MAX / 2;
    }
    (10.0 * ((1.0 - p) / (1.0 - 2.0 * p)).ceil()) as usize
}

/// Geometric law on {0, 1, ...} with success parameter q: pmf(k) = q(1-q)^k.
pub fn geom_pmf(q: f64, k: u64) -> f64 {
    q * (1.0 - q).powi(k as i32)
}

/// Total-variation distance between the empirical law of the excess scan
/// over `samples` random half-line configs of depth `t` and the limiting
/// Geom_{>=0}((1-2p)/(1-p)) law.
pub fn empirical_geom_check(p: f64, t: u64, samples: u64, src: &RandomSource) -> Result<f64> {
    if !(0.0..0.5).contains(&p) {
        return Err(Error::Domain(format!("geometric excess law requires p < 1/2, got {p}")));
    }
    let mut counts: Vec<u64> = Vec::new();
    for rep in 0..samples {
        let sub = src.replica(rep);
        // Suffix-max form of the scan; cells drawn nearest-the-target first.
        let mut sum: i64 = 0;
        let mut best: i64 = 0;
        for i in 0..t {
            sum += if sub.cell_is_car(-1 - i as i64, p) { 1 } else { -1 };
            best = best.max(sum);
        }
        let v = best as usize;
        if counts.len() <= v {
            counts.resize(v + 1, 0);
        }
        counts[v] += 1;
    }
    let q = (1.0 - 2.0 * p) / (1.0 - p);
    let mut tv = 0.0;
    let mut geom_mass = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        let g = geom_pmf(q, k as u64);
        geom_mass += g;
        tv += (c as f64 / samples as f64 - g).abs();
    }
    tv += 1.0 - geom_mass; // geometric mass beyond the largest observed value
    Ok(tv / 2.0)
}

/// Excess summary of one sampled environment around the origin, giving
/// E^R_K and S^R_K for every K on the right half-line (and mirrored on the
/// left) in one pass each.
#[derive(Debug, Clone)]
pub struct ExcessProfile {
    /// e_right[K] = limit excess of cars in (K, hi] driving left to K, K >= 0.
    e_right: Vec<i64>,
    /// cars_right[K] = number of cars in [1, K].
    cars_right: Vec<i64>,
    e_left: Vec<i64>,
    cars_left: Vec<i64>,
    pub scan_depth_right: usize,
    pub scan_depth_left: usize,
}

impl ExcessProfile {
    /// Build from dense cells over a window [-radius, radius] around the
    /// origin; `k_max` bounds the barrier index K that will be queried.
    ///
    /// The scans use the full available half-lines, so the profile is exact
    /// for the given finite environment; callers must make the window wide
    /// enough that the scans have converged (`scan_depth_*` report how far
    /// the running maxima kept moving).
    pub fn new(cells: &[Cell], radius: i64, k_max: usize) -> Result<Self> {
        if cells.len() != (2 * radius + 1) as usize {
            return Err(Error::InconsistentState(
                "excess profile needs cells over [-radius, radius]".into(),
            ));
        }
        if (k_max as i64) >= radius {
            return Err(Error::Domain("k_max must be below the config radius".into()));
        }
        let at = |pos: i64| cells[(pos + radius) as usize];
        let sign = |pos: i64| if at(pos) == Cell::Car { 1i64 } else { -1i64 };

        // Right half-line: prefix sums a[m] = sum_{i=1..m} x_i, so the
        // deterministic-drive excess at K is max(0, max_{m>K} a[m] - a[K]).
        let m_hi = radius as usize;
        let mut a = vec![0i64; m_hi + 1];
        for m in 1..=m_hi {
            a[m] = a[m - 1] + sign(m as i64);
        }
        let mut suffix_max = vec![i64::MIN; m_hi + 2];
        let mut argmax_depth = vec![0usize; m_hi + 2];
        for m in (1..=m_hi).rev() {
            if a[m] > suffix_max[m + 1] {
                suffix_max[m] = a[m];
                argmax_depth[m] = m;
            } else {
                suffix_max[m] = suffix_max[m + 1];
                argmax_depth[m] = argmax_depth[m + 1];
            }
        }
        let mut e_right = Vec::with_capacity(k_max + 1);
        let mut cars_right = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let excess = if k + 1 <= m_hi {
                (suffix_max[k + 1] - a[k]).max(0)
            } else {
                0
            };
            e_right.push(excess);
            cars_right.push((a[k] + k as i64) / 2); // cars = (sum + count) / 2
        }
        let scan_depth_right = argmax_depth[1];

        // Mirror for the left half-line.
        let mut b = vec![0i64; m_hi + 1];
        for m in 1..=m_hi {
            b[m] = b[m - 1] + sign(-(m as i64));
        }
        let mut suffix_max_l = vec![i64::MIN; m_hi + 2];
        let mut argmax_l = vec![0usize; m_hi + 2];
        for m in (1..=m_hi).rev() {
            if b[m] > suffix_max_l[m + 1] {
                suffix_max_l[m] = b[m];
                argmax_l[m] = m;
            } else {
                suffix_max_l[m] = suffix_max_l[m + 1];
                argmax_l[m] = argmax_l[m + 1];
            }
        }
        let mut e_left = Vec::with_capacity(k_max + 1);
        let mut cars_left = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let excess = if k + 1 <= m_hi {
                (suffix_max_l[k + 1] - b[k]).max(0)
            } else {
                0
            };
            e_left.push(excess);
            cars_left.push((b[k] + k as i64) / 2);
        }
        let scan_depth_left = argmax_l[1];

        Ok(ExcessProfile {
            e_right,
            cars_right,
            e_left,
            cars_left,
            scan_depth_right,
            scan_depth_left,
        })
    }

    /// E^R_K: limiting excess reaching K from the right.
    pub fn excess_right(&self, k: usize) -> i64 {
        self.e_right[k]
    }

    /// E^L_K: limiting excess reaching -K from the left.
    pub fn excess_left(&self, k: usize) -> i64 {
        self.e_left[k]
    }

    /// Number of cars in [1, K].
    pub fn cars_right(&self, k: usize) -> i64 {
        self.cars_right[k]
    }

    /// Number of cars in [-K, -1].
    pub fn cars_left(&self, k: usize) -> i64 {
        self.cars_left[k]
    }
}

/// The smallest K such that E^R_K + E^L + S^R_K < K/2 and
/// E^L_K + E^R + S^L_K < K/2, or `None` if no K <= k_max qualifies.
///
/// With J = N the walk of a car at the origin cannot exit (-N, N) unparked:
/// fewer than half the sites of [1, N] can ever hold foreign cars, so a free
/// space is always waiting on each side.
pub fn compute_j(profile: &ExcessProfile, k_max: usize) -> Option<usize> {
    let e_l0 = profile.excess_left(0);
    let e_r0 = profile.excess_right(0);
    (1..=k_max).find(|&k| {
        let right = 2 * (profile.excess_right(k) + e_l0 + profile.cars_right(k)) < k as i64;
        let left = 2 * (profile.excess_left(k) + e_r0 + profile.cars_left(k)) < k as i64;
        right && left
    })
}

/// The §-series tail bound terms for P[J >= N] at density p.
pub fn j_tail_bound(p: f64, n: u64) -> f64 {
    let eps = 0.5 - p;
    let rate1 = eps * eps / 2.0;
    let rate2 = ((1.0 - 2.0 * p) / (1.0 - p)) * (0.125 - p / 4.0);
    2.0 * (-rate1 * n as f64).exp() + 4.0 * (-rate2 * n as f64).exp()
}

/// Numeric value of the subcritical series bound
/// sum_{N>=1} N^2 [2 exp(-(1/2-p)^2 N / 2) + 4 exp(-((1-2p)/(1-p)) N (1/8 - p/4))],
/// summed until the remaining tail is below `tail_tol`.
pub fn tau_upper_series_with_tol(p: f64, tail_tol: f64) -> Result<f64> {
    if !(0.0 < p && p < 0.5) {
        return Err(Error::Domain(format!("series bound requires 0 < p < 1/2, got {p}")));
    }
    let eps = 0.5 - p;
    let r1 = (-eps * eps / 2.0).exp();
    let r2 = (-((1.0 - 2.0 * p) / (1.0 - p)) * (0.125 - p / 4.0)).exp();
    let tail = |r: f64, n0: f64| {
        // sum_{N > n0} N^2 r^N <= (n0+1)^2 r^(n0+1) (1+r)/(1-r)^3
        let m = n0 + 1.0;
        m * m * r.powf(m) * (1.0 + r) / (1.0 - r).powi(3)
    };
    let mut total = 0.0f64;
    let mut n = 1u64;
    loop {
        let nf = n as f64;
        total += nf * nf * (2.0 * r1.powf(nf) + 4.0 * r2.powf(nf));
        if 2.0 * tail(r1, nf) + 4.0 * tail(r2, nf) < tail_tol {
            return Ok(total);
        }
        n += 1;
        if n > 100_000_000 {
            return Err(Error::Domain("series bound did not converge".into()));
        }
    }
}

/// Series bound with the default 1e-12 tail threshold.
pub fn tau_upper_series(p: f64) -> Result<f64> {
    tau_upper_series_with_tol(p, 1e-12)
}

/// Ceiling integer square root: smallest z with z*z >= t.
pub fn ceil_sqrt(t: u64) -> u64 {
    if t == 0 {
        return 0;
    }
    let mut z = (t as f64).sqrt() as u64;
    while z * z >= t {
        z -= 1;
    }
    while z * z < t {
        z += 1;
    }
    z
}

/// Ceiling integer fourth root: smallest v with v^4 >= t.
pub fn ceil_fourth_root(t: u64) -> u64 {
    if t == 0 {
        return 0;
    }
    let mut v = (t as f64).powf(0.25) as u64;
    while v.pow(4) >= t && v > 0 {
        v -= 1;
    }
    while v.pow(4) < t {
        v += 1;
    }
    v
}

/// The never-park probability bound nu/zeta + 1/(2 nu) for the
/// interval-assignment strategy at horizon t, clamped to 1.
pub fn star_bound(t: u64) -> f64 {
    let zeta = ceil_sqrt(t).max(1) as f64;
    let nu = ceil_fourth_root(t).max(1) as f64;
    (nu / zeta + 1.0 / (2.0 * nu)).min(1.0)
}
