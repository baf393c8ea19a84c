//! Coverage analysis for certificates stated in a permutation + embedding
//! threat model.
//!
//! A certificate against `r` token deletions (or insertions) must cover every
//! such edit, which forces a permutation-distance radius of `2r(n - r)` (or
//! `n²/2` once `n < 2r`). Capping that radius at `n` leaves nothing for
//! sequences longer than two tokens.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverKind {
    Deletion,
    Insertion,
}

impl FromStr for CoverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deletion" => Ok(Self::Deletion),
            "insertion" => Ok(Self::Insertion),
            other => Err(Error::invalid(format!("unknown cover kind {other:?}"))),
        }
    }
}

impl fmt::Display for CoverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Deletion => "deletion",
            Self::Insertion => "insertion",
        })
    }
}

/// Radii a certificate needs to contain every `r`-edit neighbour of a length
/// `n` sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverRequirement {
    pub n: usize,
    pub r: usize,
    /// Count radius on the deletion side; equals `r`.
    pub r_d: usize,
    /// Required L2 embedding radius, in the same units as `d_star`.
    /// Zero for the deletion case.
    pub r_i_min: f64,
    /// Required permutation-distance radius. Half-integral when `n < 2r`.
    pub r_r_min: BigRational,
    /// Maximum pairwise embedding distance; `None` for the deletion case.
    pub d_star: Option<f64>,
}

impl CoverRequirement {
    pub fn r_r_min_f64(&self) -> f64 {
        self.r_r_min.to_f64().unwrap_or(f64::INFINITY)
    }
}

fn r_r_min(n: usize, r: usize) -> BigRational {
    let n = BigInt::from(n);
    let r = BigInt::from(r);
    if &n >= &(&r * 2) {
        BigRational::from_integer(&r * 2 * (&n - &r))
    } else {
        BigRational::new(&n * &n, BigInt::from(2))
    }
}

pub fn deletion_cover_radii(n: usize, r: usize) -> CoverRequirement {
    CoverRequirement {
        n,
        r,
        r_d: r,
        r_i_min: 0.0,
        r_r_min: r_r_min(n, r),
        d_star: None,
    }
}

pub fn insertion_cover_radii(n: usize, r: usize, d_star: f64) -> CoverRequirement {
    let scale = if n >= 2 * r { r as f64 } else { n as f64 / 2.0 };
    CoverRequirement {
        n,
        r,
        r_d: r,
        r_i_min: scale.sqrt() * d_star,
        r_r_min: r_r_min(n, r),
        d_star: Some(d_star),
    }
}

/// Largest `r ≤ n` whose cover requirement fits under the caps. An absent
/// `r_i_cap` leaves the embedding radius unconstrained.
pub fn max_certified_edit_radius(
    n: usize,
    kind: CoverKind,
    r_r_cap: f64,
    r_i_cap: Option<f64>,
    d_star: f64,
) -> Result<usize> {
    if !(r_r_cap >= 0.0) || r_i_cap.is_some_and(|c| !(c >= 0.0)) {
        return Err(Error::invalid("caps must be nonnegative"));
    }
    if kind == CoverKind::Insertion && !(d_star > 0.0 && d_star.is_finite()) {
        return Err(Error::invalid("d_star must be positive"));
    }
    let cap = if r_r_cap.is_finite() {
        Some(BigRational::from_float(r_r_cap).expect("finite"))
    } else {
        None
    };
    // floor((r_I_cap / d_star)^2), the count an L2 ball of that size admits
    let l2_count = match (kind, r_i_cap) {
        (CoverKind::Insertion, Some(c)) => {
            let ratio = c / d_star;
            Some((ratio * ratio).floor() as usize)
        }
        _ => None,
    };
    let fits = |r: usize| {
        let req = match kind {
            CoverKind::Deletion => deletion_cover_radii(n, r),
            CoverKind::Insertion => insertion_cover_radii(n, r, d_star),
        };
        let perm_ok = cap.as_ref().is_none_or(|c| req.r_r_min <= *c);
        let l2_ok = match (kind, r_i_cap) {
            (CoverKind::Insertion, Some(c)) => {
                req.r_i_min <= c && l2_count.is_some_and(|k| r <= k)
            }
            _ => true,
        };
        perm_ok && l2_ok
    };
    Ok((0..=n).rev().find(|&r| fits(r)).unwrap_or(0))
}

/// `(n, r_max)` rows for a range of lengths under the cap `r_R ≤ n`.
pub fn vacuity_table(
    lengths: impl IntoIterator<Item = usize>,
    kind: CoverKind,
    r_i_cap: Option<f64>,
    d_star: f64,
) -> Result<Vec<(usize, usize)>> {
    lengths
        .into_iter()
        .map(|n| Ok((n, max_certified_edit_radius(n, kind, n as f64, r_i_cap, d_star)?)))
        .collect()
}

impl CoverRequirement {
    pub fn is_trivial(&self) -> bool {
        self.r_r_min.is_zero() && self.r_i_min == 0.0
    }
}
