//! The Kolmogorov distribution: law of `sup_{0≤λ≤1} |B(λ)|` for a Brownian
//! bridge `B`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Below this point the theta-function representation is used.
pub const SERIES_SWITCH: f64 = 0.2;

const TERM_CUTOFF: f64 = 1e-12;
const MAX_TERMS: usize = 10_000;

/// `K(x) = 1 - 2 Σ_{k≥1} (-1)^{k+1} exp(-2k²x²)`.
pub fn cdf_alternating(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for k in 1..=MAX_TERMS {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < TERM_CUTOFF {
            break;
        }
    }
    (1.0 - 2.0 * sum).clamp(0.0, 1.0)
}

/// `K(x) = (√(2π)/x) Σ_{k≥1} exp(-(2k-1)²π²/(8x²))`.
pub fn cdf_theta(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let c = PI * PI / (8.0 * x * x);
    let mut sum = 0.0;
    for k in 1..=MAX_TERMS {
        let odd = (2 * k - 1) as f64;
        let term = (-odd * odd * c).exp();
        sum += term;
        if term < TERM_CUTOFF * sum.max(f64::MIN_POSITIVE) || term == 0.0 {
            break;
        }
    }
    ((2.0 * PI).sqrt() / x * sum).clamp(0.0, 1.0)
}

/// Kolmogorov CDF `K(x)`; zero for `x ≤ 0`.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < SERIES_SWITCH {
        cdf_theta(x)
    } else {
        cdf_alternating(x)
    }
}

/// Inverse of [`kolmogorov_cdf`] for `0 < p < 1`.
pub fn kolmogorov_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
    }
    let (mut lo, mut hi) = (0.01_f64, 5.0_f64);
    if kolmogorov_cdf(lo) >= p {
        // extremely small p: widen downwards
        while kolmogorov_cdf(lo) >= p && lo > 1e-3 {
            lo /= 2.0;
        }
    }
    if kolmogorov_cdf(hi) <= p {
        while kolmogorov_cdf(hi) <= p && hi < 50.0 {
            hi *= 2.0;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kolmogorov_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Asymptotic p-value `1 - K(t)`.
pub fn p_value(t: f64) -> f64 {
    (1.0 - kolmogorov_cdf(t)).clamp(0.0, 1.0)
}
