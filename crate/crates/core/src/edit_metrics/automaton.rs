//! Exact Levenshtein ball size by counting words accepted by a
//! determinized Levenshtein automaton.
//!
//! A deterministic state is the capped edit-distance row between the word
//! read so far and every prefix of `x`. Letters outside `x` all act alike, so
//! the alphabet collapses to the distinct tokens of `x` plus one class of
//! weight `v − distinct`.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::tokenization::TokenSeq;

/// Largest radius the automaton count accepts.
pub const AUTOMATON_MAX_RADIUS: usize = 16;

type Row = Vec<u8>;

fn step(row: &[u8], letter: Option<usize>, pattern: &[usize], cap: u8) -> Row {
    let mut next = Vec::with_capacity(row.len());
    next.push((row[0] + 1).min(cap));
    for j in 1..row.len() {
        let sub = row[j - 1] + u8::from(letter != Some(pattern[j - 1]));
        let v = sub.min(row[j] + 1).min(next[j - 1] + 1).min(cap);
        next.push(v);
    }
    next
}

/// `|{w : lev(w, x) <= r}|` over a vocabulary of `vocab_size` tokens.
pub fn lev_ball_cardinality_exact(x: &TokenSeq, vocab_size: u64, r: usize) -> Result<BigUint> {
    if r > AUTOMATON_MAX_RADIUS {
        return Err(Error::ScaleGuard(format!(
            "automaton radius {r} exceeds {AUTOMATON_MAX_RADIUS}"
        )));
    }
    let mut distinct: Vec<&str> = Vec::new();
    let pattern: Vec<usize> = x
        .tokens()
        .iter()
        .map(|t| match distinct.iter().position(|d| d == t) {
            Some(i) => i,
            None => {
                distinct.push(t);
                distinct.len() - 1
            }
        })
        .collect();
    if (distinct.len() as u64) > vocab_size {
        return Err(Error::invalid(format!(
            "vocabulary size {vocab_size} is smaller than the {} distinct tokens of x",
            distinct.len()
        )));
    }
    let other_weight = vocab_size - distinct.len() as u64;
    let n = pattern.len();
    let cap = (r + 1) as u8;

    let start: Row = (0..=n).map(|j| (j.min(r + 1)) as u8).collect();
    let accepts = |row: &Row| (row[n] as usize) <= r;
    let alive = |row: &Row| row.iter().any(|&d| (d as usize) <= r);

    let mut total = BigUint::zero();
    let mut layer: HashMap<Row, BigUint> = HashMap::new();
    layer.insert(start, BigUint::from(1u32));
    let mut transitions: HashMap<Row, Vec<(Row, Option<usize>)>> = HashMap::new();

    for _len in 0..=n + r {
        let mut next: HashMap<Row, BigUint> = HashMap::new();
        for (row, count) in &layer {
            if accepts(row) {
                total += count;
            }
            let succ = transitions.entry(row.clone()).or_insert_with(|| {
                let letters = (0..distinct.len()).map(Some).chain(
                    (other_weight > 0).then_some(None),
                );
                letters
                    .map(|l| (step(row, l, &pattern, cap), l))
                    .filter(|(s, _)| alive(s))
                    .collect()
            });
            for (s, letter) in succ.iter() {
                let c = match letter {
                    Some(_) => count.clone(),
                    None => count * other_weight,
                };
                *next.entry(s.clone()).or_insert_with(BigUint::zero) += c;
            }
        }
        layer = next;
        if layer.is_empty() {
            break;
        }
    }
    Ok(total)
}
