//! Connectionist temporal classification: loss with analytic gradients,
//! an exhaustive reference for testing, greedy decoding and edit distance.
//!
//! Index 0 is the blank in every vocabulary.

mod decode;
mod edit;
mod loss;

use alloc::vec::Vec;

pub use decode::{argmax, greedy_decode};
pub use edit::{levenshtein, EditStats};
pub use loss::{brute_force_ctc, ctc_loss, required_frames, CtcOutput};

use crate::error::{Error, Result};

pub const BLANK: usize = 0;

/// Label sequence over a vocabulary whose index 0 is the blank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSeq(Vec<usize>);

impl TokenSeq {
    /// Validates every token against `vocab_size` (blank included in the count).
    pub fn new(tokens: Vec<usize>, vocab_size: usize) -> Result<Self> {
        if let Some(&bad) = tokens.iter().find(|&&t| t == BLANK || t >= vocab_size) {
            return Err(Error::Vocab {
                token: bad,
                vocab: vocab_size,
            });
        }
        Ok(Self(tokens))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
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

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn max_token(&self) -> Option<usize> {
        self.0.iter().copied().max()
    }
}

impl From<TokenSeq> for Vec<usize> {
    fn from(t: TokenSeq) -> Self {
        t.0
    }
}

impl AsRef<[usize]> for TokenSeq {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}
