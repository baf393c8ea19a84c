use super::{Distance, EditOps};
use crate::error::Result;
use crate::tokenization::TokenSeq;

/// Operation counts of a minimal edit script turning `a` into `b`.
///
/// `lcs_length` counts the tokens the chosen alignment matches. Among all
/// minimal scripts the alignment maximizes matches, which also minimizes
/// substitutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EditDecomposition {
    pub distance: usize,
    pub n_del: usize,
    pub n_ins: usize,
    pub n_sub: usize,
    pub lcs_length: usize,
}

/// One step of an alignment of `a` against `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignOp {
    Match { a: usize, b: usize },
    Sub { a: usize, b: usize },
    /// `a[a]` is deleted.
    Del { a: usize },
    /// `b[b]` is inserted.
    Ins { b: usize },
}

/// Unit-cost edit distance from `a` to `b` restricted to `ops`.
pub fn edit_distance_tokens<T: PartialEq>(a: &[T], b: &[T], ops: EditOps) -> Distance {
    let (n, m) = (a.len(), b.len());
    // Shortcuts where only one op family is usable.
    if !ops.sub && !ops.ins && n < m || !ops.sub && !ops.del && n > m {
        return Distance::Infinite;
    }
    if !ops.del && !ops.ins && n != m {
        return Distance::Infinite;
    }
    let inf = usize::MAX;
    let mut prev: Vec<usize> = (0..=m).map(|j| if ops.ins || j == 0 { j } else { inf }).collect();
    let mut cur = vec![inf; m + 1];
    for i in 1..=n {
        cur[0] = if ops.del { i } else { inf };
        for j in 1..=m {
            let mut best = inf;
            if a[i - 1] == b[j - 1] {
                best = prev[j - 1];
            } else if ops.sub && prev[j - 1] != inf {
                best = prev[j - 1] + 1;
            }
            if ops.del && prev[j] != inf {
                best = best.min(prev[j] + 1);
            }
            if ops.ins && cur[j - 1] != inf {
                best = best.min(cur[j - 1] + 1);
            }
            cur[j] = best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    match prev[m] {
        d if d == inf => Distance::Infinite,
        d => Distance::Finite(d),
    }
}

pub fn edit_distance(a: &TokenSeq, b: &TokenSeq, ops: EditOps) -> Result<Distance> {
    a.check_scheme(b)?;
    Ok(edit_distance_tokens(a.tokens(), b.tokens(), ops))
}

/// Minimal unconstrained alignment of `a` onto `b`, maximizing matches among
/// minimal scripts. Returns the counts and the script in order.
pub fn alignment<T: PartialEq>(a: &[T], b: &[T]) -> (EditDecomposition, Vec<AlignOp>) {
    let (n, m) = (a.len(), b.len());
    // cost[i][j] = (distance, -matches) for a[..i] -> b[..j], minimized lexicographically
    let w = m + 1;
    let mut cost = vec![(0usize, 0isize); (n + 1) * w];
    for j in 0..=m {
        cost[j] = (j, 0);
    }
    for i in 1..=n {
        cost[i * w] = (i, 0);
        for j in 1..=m {
            let diag = cost[(i - 1) * w + j - 1];
            let mut best = if a[i - 1] == b[j - 1] {
                (diag.0, diag.1 - 1)
            } else {
                (diag.0 + 1, diag.1)
            };
            let up = cost[(i - 1) * w + j];
            best = best.min((up.0 + 1, up.1));
            let left = cost[i * w + j - 1];
            best = best.min((left.0 + 1, left.1));
            cost[i * w + j] = best;
        }
    }

    let mut script = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * w + j];
        if i > 0 && j > 0 {
            let diag = cost[(i - 1) * w + j - 1];
            if a[i - 1] == b[j - 1] && here == (diag.0, diag.1 - 1) {
                script.push(AlignOp::Match { a: i - 1, b: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
            if a[i - 1] != b[j - 1] && here == (diag.0 + 1, diag.1) {
                script.push(AlignOp::Sub { a: i - 1, b: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 {
            let up = cost[(i - 1) * w + j];
            if here == (up.0 + 1, up.1) {
                script.push(AlignOp::Del { a: i - 1 });
                i -= 1;
                continue;
            }
        }
        script.push(AlignOp::Ins { b: j - 1 });
        j -= 1;
    }
    script.reverse();

    let mut dec = EditDecomposition {
        distance: cost[n * w + m].0,
        n_del: 0,
        n_ins: 0,
        n_sub: 0,
        lcs_length: 0,
    };
    for op in &script {
        match op {
            AlignOp::Match { .. } => dec.lcs_length += 1,
            AlignOp::Sub { .. } => dec.n_sub += 1,
            AlignOp::Del { .. } => dec.n_del += 1,
            AlignOp::Ins { .. } => dec.n_ins += 1,
        }
    }
    debug_assert_eq!(dec.distance, dec.n_del + dec.n_ins + dec.n_sub);
    (dec, script)
}

pub fn edit_decomposition(a: &TokenSeq, b: &TokenSeq) -> Result<EditDecomposition> {
    a.check_scheme(b)?;
    Ok(alignment(a.tokens(), b.tokens()).0)
}
