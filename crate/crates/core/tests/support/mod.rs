//! Independent oracles for the closed-form checks: absorbing-chain linear
//! systems solved numerically and exhaustive path enumeration. Nothing here
//! shares code with the formulas under test.

/// Solve a tridiagonal system `a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = d[i]`
/// by the Thomas algorithm.
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Hitting probabilities h(x) = P[X hits b before -a | X_0 = x] for the
/// symmetric walk, for all interior states -a < x < b, as a linear system.
fn hit_probabilities(a: i64, b: i64) -> Vec<f64> {
    let n = (a + b - 1) as usize; // interior states -a+1 ..= b-1
    // h(x) - (h(x-1) + h(x+1))/2 = 0, boundaries h(-a) = 0, h(b) = 1.
    let lower = vec![-0.5; n];
    let diag = vec![1.0; n];
    let upper = vec![-0.5; n];
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 0.5; // neighbour b contributes h(b)/2 = 1/2
    solve_tridiagonal(&lower, &diag, &upper, &rhs)
}

fn state_index(x: i64, a: i64) -> usize {
    (x + a - 1) as usize
}

/// Oracle for the ruin probability P[hit +b before -a] from 0.
pub fn gamblers_ruin_oracle(a: u64, b: u64) -> f64 {
    let (a, b) = (a as i64, b as i64);
    hit_probabilities(a, b)[state_index(0, a)]
}

/// Oracle for E[H_b | H_b < H_{-a}] from 0: solve for
/// f(x) = E[H 1{hit b first}] with source (h(x-1) + h(x+1))/2 and divide by
/// the success probability.
pub fn conditional_hit_time_oracle(a: u64, b: u64) -> f64 {
    let (a, b) = (a as i64, b as i64);
    let h = hit_probabilities(a, b);
    let n = (a + b - 1) as usize;
    let h_at = |x: i64| -> f64 {
        if x == -a {
            0.0
        } else if x == b {
            1.0
        } else {
            h[state_index(x, a)]
        }
    };
    let lower = vec![-0.5; n];
    let diag = vec![1.0; n];
    let upper = vec![-0.5; n];
    let mut rhs = vec![0.0; n];
    for x in (-a + 1)..b {
        rhs[state_index(x, a)] = 0.5 * (h_at(x - 1) + h_at(x + 1));
    }
    let f = solve_tridiagonal(&lower, &diag, &upper, &rhs);
    f[state_index(0, a)] / h_at(0)
}

/// Oracle for E[H_{-a} wedge H_a] from 0: expected absorption time of the
/// symmetric walk on (-a, a).
pub fn expected_exit_time_oracle(a: u64) -> f64 {
    let a = a as i64;
    let n = (2 * a - 1) as usize;
    let lower = vec![-0.5; n];
    let diag = vec![1.0; n];
    let upper = vec![-0.5; n];
    let rhs = vec![1.0; n];
    let m = solve_tridiagonal(&lower, &diag, &upper, &rhs);
    m[(a - 1) as usize] // state 0
}

/// Oracle for P[max over times 0..n of the walk = r]: exhaustive count over
/// all 2^n sign paths (use only for small n).
pub fn max_walk_pmf_oracle(n: u32, r: i64) -> f64 {
    assert!(n <= 22, "exhaustive enumeration is exponential in n");
    let total = 1u64 << n;
    let mut hits = 0u64;
    for mask in 0..total {
        let mut pos = 0i64;
        let mut max = 0i64;
        for s in 0..n {
            pos += if (mask >> s) & 1 == 1 { 1 } else { -1 };
            max = max.max(pos);
        }
        if max == r {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}
