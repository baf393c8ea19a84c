use super::{edit_distance_tokens, EditOps};
use crate::error::{Error, Result};
use crate::tokenization::TokenSeq;

/// Longest sequence `enumerate_ball` will generate.
pub const BALL_MAX_SPAN: usize = 8;
/// Largest alphabet `enumerate_ball` will enumerate over.
pub const BALL_MAX_ALPHABET: usize = 4;

/// Every `x̃` over `alphabet` with `edit_distance(x̃, x, ops) <= r`, sorted by
/// length then lexicographically by alphabet position.
///
/// Tokens of `x` missing from `alphabet` are appended to it. Oracle scale
/// only: the longest candidate length and the alphabet size are guarded by
/// [`BALL_MAX_SPAN`] and [`BALL_MAX_ALPHABET`].
pub fn enumerate_ball(
    x: &TokenSeq,
    r: usize,
    ops: EditOps,
    alphabet: &[String],
) -> Result<Vec<TokenSeq>> {
    if ops.is_empty() {
        return Err(Error::invalid("edit op set must be nonempty"));
    }
    let mut symbols: Vec<String> = Vec::with_capacity(alphabet.len());
    for t in alphabet.iter().chain(x.tokens()) {
        if !symbols.contains(t) {
            symbols.push(t.clone());
        }
    }
    if symbols.len() > BALL_MAX_ALPHABET {
        return Err(Error::ScaleGuard(format!(
            "ball alphabet has {} symbols, limit is {BALL_MAX_ALPHABET}",
            symbols.len()
        )));
    }

    let n = x.len();
    // Without deletions x̃ -> x cannot shrink, so x̃ is never longer than x and
    // at most n edits are ever needed.
    let r = if ops.del { r } else { r.min(n) };
    let min_len = if ops.ins { n.saturating_sub(r) } else { n };
    let max_len = if ops.del { n.saturating_add(r) } else { n };
    if max_len > BALL_MAX_SPAN {
        return Err(Error::ScaleGuard(format!(
            "ball candidates reach length {max_len}, limit is {BALL_MAX_SPAN}"
        )));
    }

    let target: Vec<usize> = x
        .tokens()
        .iter()
        .map(|t| symbols.iter().position(|s| s == t).expect("x tokens are in symbols"))
        .collect();
    let k = symbols.len();
    let mut out = Vec::new();
    let mut cand: Vec<usize> = Vec::with_capacity(max_len);
    for len in min_len..=max_len {
        cand.clear();
        cand.resize(len, 0);
        loop {
            if edit_distance_tokens(&cand, &target, ops).is_within(r) {
                out.push(TokenSeq::from_parts_unchecked(
                    cand.iter().map(|&i| symbols[i].clone()).collect(),
                    x.scheme(),
                ));
            }
            // odometer increment, most significant digit first
            let mut pos = len;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                cand[pos] += 1;
                if cand[pos] < k {
                    break;
                }
                cand[pos] = 0;
            }
            if len == 0 || cand.iter().all(|&c| c == 0) {
                break;
            }
        }
    }
    Ok(out)
}
