//! The adversary's tokenizer: text to token sequences and back.
//!
//! Edits are counted over tokens, so whitespace detokenization normalizes
//! runs of whitespace to a single space.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Split on runs of whitespace.
    Whitespace,
    /// One token per extended grapheme cluster.
    Character,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Whitespace => f.write_str("whitespace"),
            Scheme::Character => f.write_str("character"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" => Ok(Scheme::Whitespace),
            "character" => Ok(Scheme::Character),
            other => Err(Error::invalid(format!("unknown tokenizer scheme {other:?}"))),
        }
    }
}

/// A tokenized text. Its length is the `n` used by every downstream formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSeq {
    tokens: Vec<String>,
    scheme: Scheme,
}

impl TokenSeq {
    /// Builds a sequence from pre-split tokens. Under the whitespace scheme
    /// tokens must be nonempty and free of whitespace.
    pub fn new(tokens: Vec<String>, scheme: Scheme) -> Result<Self> {
        if scheme == Scheme::Whitespace {
            if let Some(bad) = tokens
                .iter()
                .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
            {
                return Err(Error::invalid(format!(
                    "whitespace token {bad:?} is empty or contains whitespace"
                )));
            }
        }
        Ok(Self { tokens, scheme })
    }

    /// Whitespace-scheme sequence from string literals.
    ///
    /// Panics if a word is empty or contains whitespace.
    pub fn words<S: AsRef<str>>(words: &[S]) -> Self {
        Self::new(
            words.iter().map(|w| w.as_ref().to_owned()).collect(),
            Scheme::Whitespace,
        )
        .expect("words must be nonempty and whitespace-free")
    }

    pub(crate) fn from_parts_unchecked(tokens: Vec<String>, scheme: Scheme) -> Self {
        Self { tokens, scheme }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub(crate) fn check_scheme(&self, other: &TokenSeq) -> Result<()> {
        if self.scheme == other.scheme {
            Ok(())
        } else {
            Err(Error::SchemeMismatch)
        }
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&detokenize(self))
    }
}

pub fn tokenize(text: &str, scheme: Scheme) -> TokenSeq {
    let tokens = match scheme {
        Scheme::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
        Scheme::Character => text.graphemes(true).map(str::to_owned).collect(),
    };
    TokenSeq { tokens, scheme }
}

pub fn detokenize(seq: &TokenSeq) -> String {
    match seq.scheme {
        Scheme::Whitespace => seq.tokens.join(" "),
        Scheme::Character => seq.tokens.concat(),
    }
}
