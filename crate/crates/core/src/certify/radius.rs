//! Certified radii per adversary operation set.
//!
//! With `m = μ_y − μ_y'` the radius is the largest integer `r` such that
//! `p_del^r > t`, where the threshold `t` depends on the operations:
//!
//! | ops                     | threshold `t`     |
//! |-------------------------|-------------------|
//! | any set containing sub  | `(2 − m) / 2`     |
//! | `{del}`, `{del, ins}`   | `1 / (1 + m)`     |
//! | `{ins}`                 | `1 − m`           |
//!
//! The inequality is strict. At `p_del^r = t` the worst-case neighbour can
//! tie the two classes, and a tie may be broken against `y`. The comparison
//! is made in exact rational arithmetic on the binary values of the inputs,
//! so a boundary case never rounds up.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::ScoreBounds;
use crate::edit_metrics::EditOps;
use crate::error::{Error, Result};

/// Radius reported when every finite radius is certified (only possible for
/// `{ins}` with `μ_y − μ_y' = 1`).
pub const UNBOUNDED_RADIUS: u32 = u32::MAX;

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

/// The certification threshold as an exact rational.
fn threshold(mu_y: f64, mu_yprime: f64, ops: EditOps) -> BigRational {
    let margin = exact(mu_y) - exact(mu_yprime);
    let one = BigRational::one();
    if ops.sub {
        (BigRational::from_integer(BigInt::from(2)) - margin) / BigRational::from_integer(BigInt::from(2))
    } else if ops.del {
        one.clone() / (one + margin)
    } else {
        one - margin
    }
}

/// Largest `r >= 0` with `p^r > t` (or 0 if none), for `0 < t` and `0 < p < 1`.
fn floor_log(p: f64, t: &BigRational) -> u32 {
    let tf = num_traits::ToPrimitive::to_f64(t).unwrap_or(0.0);
    let guess = if tf > 0.0 { (tf.ln() / p.ln()).floor() } else { f64::INFINITY };
    let pe = exact(p);
    let holds = |r: u32| -> bool { &pe.pow(r as i32) > t };
    let mut r = if guess.is_finite() {
        guess.clamp(0.0, (UNBOUNDED_RADIUS - 1) as f64) as u32
    } else {
        0
    };
    while r > 0 && !holds(r) {
        r -= 1;
    }
    while r < UNBOUNDED_RADIUS - 1 && holds(r + 1) {
        r += 1;
    }
    r
}

/// Certified radius for the adversary operations `ops`, or 0 when the bounds
/// cross (`μ_y < μ_y'`).
pub fn certified_radius(b: &ScoreBounds, p_del: f64, ops: EditOps) -> Result<u32> {
    radius_from_margin(b.mu_y, b.mu_yprime, p_del, ops)
}

pub fn radius_from_margin(mu_y: f64, mu_yprime: f64, p_del: f64, ops: EditOps) -> Result<u32> {
    if !(p_del > 0.0 && p_del < 1.0) {
        return Err(Error::invalid(format!("p_del {p_del} must lie in (0, 1)")));
    }
    if ops.is_empty() {
        return Err(Error::invalid("edit op set must be nonempty"));
    }
    if mu_y < mu_yprime {
        return Ok(0);
    }
    let t = threshold(mu_y, mu_yprime, ops);
    if !t.is_positive() {
        return Ok(UNBOUNDED_RADIUS);
    }
    Ok(floor_log(p_del, &t))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// High-precision reference: floor(log_p(t)) via f64 with an explicit
    /// epsilon check away from integers.
    fn reference(p: f64, t: f64) -> u32 {
        let v = t.ln() / p.ln();
        assert!((v - v.round()).abs() > 1e-9, "reference too close to an integer");
        v.floor() as u32
    }

    #[test]
    fn equal_bounds_give_zero() {
        for ops in EditOps::ALL {
            for mu in [0.0, 0.3, 0.5, 1.0] {
                assert_eq!(radius_from_margin(mu, mu, 0.9, ops).unwrap(), 0);
            }
        }
    }

    #[test]
    fn worked_examples() {
        let mu = 0.025f64.powf(1.0 / 4000.0);
        assert_eq!(radius_from_margin(mu, 1.0 - mu, 0.9, EditOps::FULL).unwrap(), 6);
        assert_eq!(reference(0.9, (2.0 + (1.0 - mu) - mu) / 2.0), 6);

        assert_eq!(radius_from_margin(0.95, 0.05, 0.9, EditOps::FULL).unwrap(), 5);
        assert_eq!(radius_from_margin(0.95, 0.05, 0.9, EditOps::DEL).unwrap(), 6);
        assert_eq!(radius_from_margin(0.95, 0.05, 0.9, EditOps::INS).unwrap(), 21);
        assert_eq!(reference(0.9, 0.55), 5);
        assert_eq!(reference(0.9, 1.0 / 1.9), 6);
        assert_eq!(reference(0.9, 0.1), 21);
    }

    #[test]
    fn exact_boundaries() {
        // margin 1 at p = 0.5: (2 − 1)/2 = 0.5 = p^1 exactly, so r = 1 would
        // admit a tie
        assert_eq!(radius_from_margin(1.0, 0.0, 0.5, EditOps::FULL).unwrap(), 0);
        assert_eq!(radius_from_margin(1.0, 0.0, 0.5, EditOps::DEL).unwrap(), 0);
        assert_eq!(radius_from_margin(1.0, 0.0, 0.5, EditOps::INS).unwrap(), UNBOUNDED_RADIUS);
        // margin 0.5 at p = 0.5 for {ins}: t = 0.5
        assert_eq!(radius_from_margin(0.75, 0.25, 0.5, EditOps::INS).unwrap(), 0);
        // margin 0.75 at p = 0.5 for {ins}: t = 0.25 = p^2
        assert_eq!(radius_from_margin(0.875, 0.125, 0.5, EditOps::INS).unwrap(), 1);
        // just inside the boundary
        assert_eq!(radius_from_margin(0.876, 0.125, 0.5, EditOps::INS).unwrap(), 2);
    }

    #[test]
    fn crossed_bounds_abstain() {
        for ops in EditOps::ALL {
            assert_eq!(radius_from_margin(0.4, 0.6, 0.9, ops).unwrap(), 0);
        }
    }

    #[test]
    fn rejects_degenerate_rates() {
        assert!(radius_from_margin(0.9, 0.1, 0.0, EditOps::FULL).is_err());
        assert!(radius_from_margin(0.9, 0.1, 1.0, EditOps::FULL).is_err());
    }
}
