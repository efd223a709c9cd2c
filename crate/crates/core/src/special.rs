//! The χ² survival function and its inverse.

use statrs::function::gamma::gamma_ur;

/// Survival function of the χ² distribution with `k` degrees of freedom.
pub fn chi2_sf(k: usize, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(k as f64 / 2.0, x / 2.0)
    }
}

/// The `x` with `chi2_sf(k, x) = delta`, by bisection on
/// `[k·1e-6, k + 40√k + 40]`.
pub fn chi2_inv_survival(k: usize, delta: f64) -> f64 {
    let kf = k as f64;
    let mut lo = kf * 1e-6;
    let mut hi = kf + 40.0 * kf.sqrt() + 40.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_sf(k, mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}
