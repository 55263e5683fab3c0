//! Small statistics helpers for the experiment harness.

/// Sample mean and standard error (sd / sqrt(n)).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of y against x.
pub fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Log-log slope of positive (x, y) pairs; `None` when fewer than two
/// usable points remain (degenerate data).
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logged: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if logged.len() < 2 {
        return None;
    }
    slope(&logged)
}

/// Standard normal quantile (Acklam's rational approximation, |err| < 1.2e-9).
pub fn inv_norm_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1), got {p}");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// One-sided empirical-CDF dominance test: fail only where
/// `F_hi(k) < F_lo(k) - z * SE(k)` for some k, with z Bonferroni-corrected
/// over the tested k range at the given significance.
///
/// Returns the first violating k. `F_hi` should dominate (i.e. the sample
/// whose CDF is claimed to be pointwise at least the other's).
pub fn cdf_dominance_violation(
    hi_sample: &[u64],
    lo_sample: &[u64],
    significance: f64,
) -> Option<u64> {
    let k_max = hi_sample
        .iter()
        .chain(lo_sample.iter())
        .copied()
        .max()
        .unwrap_or(0);
    let tests = k_max + 1;
    let z = inv_norm_cdf(1.0 - significance / tests as f64);
    let n_hi = hi_sample.len() as f64;
    let n_lo = lo_sample.len() as f64;
    for k in 0..=k_max {
        let f_hi = hi_sample.iter().filter(|&&v| v <= k).count() as f64 / n_hi;
        let f_lo = lo_sample.iter().filter(|&&v| v <= k).count() as f64 / n_lo;
        let se = (f_hi * (1.0 - f_hi) / n_hi + f_lo * (1.0 - f_lo) / n_lo).sqrt();
        if f_hi < f_lo - z * se {
            return Some(k);
        }
    }
    None
}

/// Two-sample z-test of equal means at the given two-sided confidence
/// level; true when the difference is within the confidence interval.
pub fn means_compatible(a: &[f64], b: &[f64], confidence: f64) -> bool {
    let (ma, sa) = mean_se(a);
    let (mb, sb) = mean_se(b);
    let z = inv_norm_cdf(0.5 + confidence / 2.0);
    (ma - mb).abs() <= z * (sa * sa + sb * sb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_se_basics() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-12);
        // sd = sqrt(5/3), se = sd/2
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn slope_recovers_line() {
        let pts: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 3.0 * i as f64 + 1.0)).collect();
        assert!((slope(&pts).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn loglog_slope_recovers_power_law() {
        let pts: Vec<(f64, f64)> = (1..8).map(|i| {
            let x = (1 << i) as f64;
            (x, 2.5 * x.powf(0.75))
        }).collect();
        assert!((loglog_slope(&pts).unwrap() - 0.75).abs() < 1e-10);
    }

    #[test]
    fn inv_norm_cdf_known_values() {
        assert!(inv_norm_cdf(0.5).abs() < 1e-9);
        assert!((inv_norm_cdf(0.975) - 1.959964).abs() < 1e-5);
        assert!((inv_norm_cdf(0.995) - 2.575829).abs() < 1e-5);
        assert!((inv_norm_cdf(0.025) + 1.959964).abs() < 1e-5);
    }

    #[test]
    fn cdf_dominance_detects_shift() {
        let hi: Vec<u64> = (0..2000).map(|i| i % 3).collect();
        let lo: Vec<u64> = (0..2000).map(|i| i % 3 + 4).collect();
        // hi's CDF dominates (smaller values): no violation in this order...
        assert_eq!(cdf_dominance_violation(&hi, &lo, 1e-3), None);
        // ...and a clear violation the other way around.
        assert!(cdf_dominance_violation(&lo, &hi, 1e-3).is_some());
    }

    #[test]
    fn means_compatible_sane() {
        let a: Vec<f64> = (0..500).map(|i| (i % 7) as f64).collect();
        let b = a.clone();
        assert!(means_compatible(&a, &b, 0.99));
        let shifted: Vec<f64> = a.iter().map(|x| x + 5.0).collect();
        assert!(!means_compatible(&a, &shifted, 0.99));
    }
}
