//! Closed-form edit-ball sizes in exact big-integer arithmetic.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vocabulary size of the RoBERTa tokenizer, used as the default `v`.
pub const DEFAULT_VOCAB_SIZE: u64 = 50_265;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalityParams {
    pub vocab_size: u64,
    pub radius: u64,
    pub length: u64,
}

impl CardinalityParams {
    pub fn new(length: u64, vocab_size: u64, radius: u64) -> Self {
        Self {
            vocab_size,
            radius,
            length,
        }
    }
}

/// `C(n, k)` for k in `0..=kmax`, built incrementally.
fn binomial_row(n: u64, kmax: u64) -> Vec<BigUint> {
    let kmax = kmax.min(n);
    let mut row = Vec::with_capacity(kmax as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for k in 1..=kmax {
        c = c * (n - k + 1) / k;
        row.push(c.clone());
    }
    row
}

fn powers(base: u64, kmax: u64) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(kmax as usize + 1);
    let mut p = BigUint::one();
    out.push(p.clone());
    for _ in 0..kmax {
        p *= base;
        out.push(p.clone());
    }
    out
}

/// `Σ_{i<=kmax} C(len, i)·(v−1)^i`: strings of length `len` differing from a
/// fixed one in at most `kmax` positions.
fn substitution_shell_sum(len: u64, kmax: u64, pw: &[BigUint]) -> BigUint {
    binomial_row(len, kmax)
        .into_iter()
        .enumerate()
        .map(|(i, c)| c * &pw[i])
        .sum()
}

/// Exact size of the Hamming ball: `Σ_{i=0..r} C(n,i)·(v−1)^i`.
pub fn hamming_ball_cardinality(p: &CardinalityParams) -> Result<BigUint> {
    if p.radius > p.length {
        return Err(Error::invalid(format!(
            "Hamming radius {} exceeds length {}",
            p.radius, p.length
        )));
    }
    let pw = powers(p.vocab_size.saturating_sub(1), p.radius);
    Ok(substitution_shell_sum(p.length, p.radius, &pw))
}

/// Number of distinct length-`n+r` supersequences of a length-`n` string:
/// `Σ_{i=0..r} C(n+r, i)·(v−1)^i`.
pub fn supersequence_count(p: &CardinalityParams) -> BigUint {
    let pw = powers(p.vocab_size.saturating_sub(1), p.radius);
    substitution_shell_sum(p.length + p.radius, p.radius, &pw)
}

/// Certified lower bound on the Levenshtein ball size of any length-`n`
/// string over a `v`-letter vocabulary.
///
/// Unary strings have the smallest Levenshtein neighbourhoods among all
/// strings of a given length, so the exact neighbourhood size of `aⁿ` bounds
/// every other string from below. A length-`m` string `w` with `c` letters
/// other than `a` is at distance `max(n, m) − min(n, m − c)` from `aⁿ`, which
/// gives the count
///
/// ```text
/// Σ_{m=n−r}^{n}   Σ_{c ≤ r−(n−m)} C(m,c)·(v−1)^c
/// + Σ_{m=n+1}^{n+r} Σ_{c ≤ r}     C(m,c)·(v−1)^c
/// ```
pub fn lev_ball_cardinality_lower_bound(p: &CardinalityParams) -> BigUint {
    let (n, r, v) = (p.length, p.radius, p.vocab_size);
    let pw = powers(v.saturating_sub(1), r);
    let mut total = BigUint::zero();
    for m in n.saturating_sub(r)..=n + r {
        let cmax = if m <= n { r - (n - m) } else { r };
        total += substitution_shell_sum(m, cmax, &pw);
    }
    total
}

/// `log10` of a big integer, accurate to f64 precision for any magnitude.
pub fn log10_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").log10();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value");
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counts strings over `0..v` of length n differing from 0ⁿ in ≤ r places.
    fn brute_hamming(n: u32, v: u32, r: u32) -> u64 {
        let total = v.pow(n);
        (0..total)
            .filter(|&mut_k| {
                let mut k = mut_k;
                let mut diff = 0;
                for _ in 0..n {
                    if k % v != 0 {
                        diff += 1;
                    }
                    k /= v;
                }
                diff <= r
            })
            .count() as u64
    }

    #[test]
    fn hamming_examples() {
        for (n, v) in [(0, 5), (7, 50_265), (3, 2)] {
            assert_eq!(hamming_ball_cardinality(&CardinalityParams::new(n, v, 0)).unwrap(), BigUint::one());
        }
        assert_eq!(
            hamming_ball_cardinality(&CardinalityParams::new(3, 2, 1)).unwrap(),
            BigUint::from(4u32)
        );
        assert_eq!(
            hamming_ball_cardinality(&CardinalityParams::new(4, 3, 2)).unwrap(),
            BigUint::from(33u32)
        );
        assert!(hamming_ball_cardinality(&CardinalityParams::new(2, 3, 3)).is_err());
    }

    #[test]
    fn hamming_matches_brute_force() {
        for n in 0..=5u32 {
            for v in 1..=4u32 {
                for r in 0..=n {
                    let got = hamming_ball_cardinality(&CardinalityParams::new(n.into(), v.into(), r.into()))
                        .unwrap();
                    assert_eq!(got, BigUint::from(brute_hamming(n, v, r)), "n={n} v={v} r={r}");
                }
            }
        }
    }

    #[test]
    fn lower_bound_dominates_closed_form_floors() {
        for n in 0..=12u64 {
            for v in [1u64, 2, 3, 7, 50_265] {
                for r in 0..=6u64 {
                    let p = CardinalityParams::new(n, v, r);
                    let lb = lev_ball_cardinality_lower_bound(&p);
                    assert!(lb >= supersequence_count(&p), "n={n} v={v} r={r}");
                    if r <= n {
                        assert!(lb >= hamming_ball_cardinality(&p).unwrap());
                    }
                }
            }
        }
        assert_eq!(lev_ball_cardinality_lower_bound(&CardinalityParams::new(9, 100, 0)), BigUint::one());
    }

    #[test]
    fn lower_bound_is_monotone() {
        for n in 0..=8u64 {
            for v in 1..=5u64 {
                for r in 0..=5u64 {
                    let lb = lev_ball_cardinality_lower_bound(&CardinalityParams::new(n, v, r));
                    assert!(lev_ball_cardinality_lower_bound(&CardinalityParams::new(n, v, r + 1)) >= lb);
                    assert!(lev_ball_cardinality_lower_bound(&CardinalityParams::new(n, v + 1, r)) >= lb);
                }
            }
        }
    }

    #[test]
    fn log10_of_huge_values() {
        assert_eq!(log10_biguint(&BigUint::one()), 0.0);
        let big = BigUint::from(10u32).pow(300);
        assert!((log10_biguint(&big) - 300.0).abs() < 1e-9);
        let huger = BigUint::from(10u32).pow(5000) * 3u32;
        assert!((log10_biguint(&huger) - (5000.0 + 3f64.log10())).abs() < 1e-9);
    }
}
