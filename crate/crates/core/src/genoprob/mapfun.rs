//! Carter-Falconer map function and its numeric inverse.
//!
//! Map distance in Morgans from recombination fraction:
//! m = ¼·[tanh⁻¹(2r) + tan⁻¹(2r)], defined for r in [0, 0.5).
//! The inverse has no closed form and is solved by bisection.

use crate::error::{Error, Result};

/// Map distance in Morgans for a recombination fraction in [0, 0.5).
pub fn cf_map_distance(r: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&r) {
        return Err(Error::invalid(
            "recombination fraction",
            format!("{r} outside [0, 0.5)"),
        ));
    }
    let x = 2.0 * r;
    Ok(0.25 * (x.atanh() + x.atan()))
}

/// Recombination fraction for a map distance in Morgans.
///
/// Monotone in `d`, returning values in [0, 0.5); the bisection runs until
/// |m(r) − d| < 1e-12.
pub fn cf_rec_fraction(d: f64) -> f64 {
    assert!(d >= 0.0, "map distance must be nonnegative, got {d}");
    if d == 0.0 {
        return 0.0;
    }
    let mut lo = 0.0f64;
    let mut hi = 0.5 - f64::EPSILON;
    // tanh⁻¹ diverges at r = 0.5, so any finite d is bracketed.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = cf_map_distance(mid).expect("bisection stays inside the domain");
        if (m - d).abs() < 1e-12 {
            return mid;
        }
        if m < d {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() < f64::EPSILON {
            break;
        }
    }
    0.5 * (lo + hi)
}
