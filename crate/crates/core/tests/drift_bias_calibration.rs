//! One-off calibration (ignored by default): measures the window-truncation
//! bias of the drift estimator by comparing the diffusive-window estimate
//! with a cone-exact window at the same seeds.

use gridlock_core::harness::experiments::core_band_estimates;

#[test]
#[ignore = "calibration helper, run on demand"]
fn window_bias_at_t8192() {
    let horizons = [8192u32];
    // Diffusive window (radius 3261) vs a double-size window.
    let small = core_band_estimates(3, 91, 0.75, &horizons, 800, 3261, 1087).unwrap();
    let large = core_band_estimates(3, 91, 0.75, &horizons, 800, 6522, 1087).unwrap();
    println!(
        "small window: ratio {} +- {}",
        small[0].mean / 8192.0,
        small[0].std_error / 8192.0
    );
    println!(
        "large window: ratio {} +- {}",
        large[0].mean / 8192.0,
        large[0].std_error / 8192.0
    );
}
