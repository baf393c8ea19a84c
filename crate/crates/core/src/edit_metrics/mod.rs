//! Edit distances over token sequences and the size of edit balls.
//!
//! Distances are directional: `edit_distance(a, b, ops)` counts the edits
//! that turn `a` into `b` using only the operations in `ops`. The ball of
//! radius `r` around `x` is `{x̃ : edit_distance(x̃, x, ops) <= r}`.

mod automaton;
mod ball;
mod cardinality;
mod distance;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use automaton::lev_ball_cardinality_exact;
pub use ball::{enumerate_ball, BALL_MAX_ALPHABET, BALL_MAX_SPAN};
pub use cardinality::{
    hamming_ball_cardinality, lev_ball_cardinality_lower_bound, log10_biguint,
    supersequence_count, CardinalityParams, DEFAULT_VOCAB_SIZE,
};
pub use distance::{
    alignment, edit_decomposition, edit_distance, edit_distance_tokens, AlignOp,
    EditDecomposition,
};

/// The edit operations an adversary may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EditOps {
    pub del: bool,
    pub ins: bool,
    pub sub: bool,
}

impl EditOps {
    pub const FULL: EditOps = EditOps::new(true, true, true);
    pub const DEL: EditOps = EditOps::new(true, false, false);
    pub const INS: EditOps = EditOps::new(false, true, false);
    pub const SUB: EditOps = EditOps::new(false, false, true);
    pub const DEL_INS: EditOps = EditOps::new(true, true, false);
    pub const DEL_SUB: EditOps = EditOps::new(true, false, true);
    pub const INS_SUB: EditOps = EditOps::new(false, true, true);

    /// All seven nonempty operation sets.
    pub const ALL: [EditOps; 7] = [
        EditOps::FULL,
        EditOps::DEL_SUB,
        EditOps::INS_SUB,
        EditOps::SUB,
        EditOps::DEL_INS,
        EditOps::DEL,
        EditOps::INS,
    ];

    pub const fn new(del: bool, ins: bool, sub: bool) -> Self {
        Self { del, ins, sub }
    }

    pub fn is_empty(&self) -> bool {
        !(self.del || self.ins || self.sub)
    }

    /// Short code: `d`, `i`, `s` letters in that order (e.g. `dis`).
    pub fn code(&self) -> String {
        let mut s = String::with_capacity(3);
        if self.del {
            s.push('d');
        }
        if self.ins {
            s.push('i');
        }
        if self.sub {
            s.push('s');
        }
        s
    }
}

impl fmt::Display for EditOps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for EditOps {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut ops = EditOps::new(false, false, false);
        for c in s.trim().chars() {
            let slot = match c {
                'd' => &mut ops.del,
                'i' => &mut ops.ins,
                's' => &mut ops.sub,
                _ => return Err(Error::invalid(format!("unknown edit op {c:?} in {s:?}"))),
            };
            if *slot {
                return Err(Error::invalid(format!("repeated edit op {c:?} in {s:?}")));
            }
            *slot = true;
        }
        if ops.is_empty() {
            return Err(Error::invalid("edit op set must be nonempty"));
        }
        Ok(ops)
    }
}

/// An edit distance, infinite when no script over the allowed operations
/// exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Distance {
    Finite(usize),
    Infinite,
}

impl Distance {
    pub fn finite(self) -> Option<usize> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }

    pub fn is_within(self, r: usize) -> bool {
        matches!(self, Distance::Finite(d) if d <= r)
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => f.write_str("inf"),
        }
    }
}
