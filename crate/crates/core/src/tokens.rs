//! Token ids and framed caption sequences.

use serde::{Deserialize, Serialize};

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
/// Number of reserved ids preceding the attribute tokens.
pub const RESERVED: usize = 3;

/// Token id of attribute `a`.
pub fn attribute_token(a: usize) -> usize {
    RESERVED + a
}

pub fn is_special(token: usize) -> bool {
    token < RESERVED
}

/// A caption as a sequence of token ids, normally framed `BOS … EOS`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<usize>);

impl TokenSeq {
    pub fn new(tokens: Vec<usize>) -> Self {
        Self(tokens)
    }

    /// Wraps content tokens in `BOS … EOS`.
    pub fn framed(content: &[usize]) -> Self {
        let mut tokens = Vec::with_capacity(content.len() + 2);
        tokens.push(BOS);
        tokens.extend_from_slice(content);
        tokens.push(EOS);
        Self(tokens)
    }

    pub fn tokens(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_framed(&self) -> bool {
        self.0.len() >= 2 && self.0[0] == BOS && self.0[self.0.len() - 1] == EOS
    }

    /// The sequence without `BOS`, `EOS` and `PAD`.
    pub fn content(&self) -> Vec<usize> {
        self.0.iter().copied().filter(|&t| !is_special(t)).collect()
    }
}

impl From<Vec<usize>> for TokenSeq {
    fn from(tokens: Vec<usize>) -> Self {
        Self(tokens)
    }
}
