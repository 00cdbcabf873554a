//! Angle helpers. Headings are stored in radians, normalized to `[0, 2π)`.

use std::f64::consts::{PI, TAU};

/// Wraps `theta` into `[0, 2π)`.
///
/// `rem_euclid` can round a tiny negative input up to exactly `2π`; that case
/// is folded back to `0`.
pub fn normalize(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(TAU);
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// `true` when `theta` lies in the half-open interval `[0, π)` required by
/// the shill control scenario.
pub fn in_upper_half_open(theta: f64) -> bool {
    (0.0..PI).contains(&theta)
}

/// Angle of the plane vector `(x, y)`, normalized to `[0, 2π)`.
pub fn vector_angle(x: f64, y: f64) -> f64 {
    normalize(y.atan2(x))
}
