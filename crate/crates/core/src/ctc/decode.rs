use alloc::vec::Vec;

use super::{TokenSeq, BLANK};
use crate::numerics::Matrix;

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Best-path decoding: per-frame argmax, merge runs, drop blanks.
pub fn greedy_decode(logits: &Matrix) -> TokenSeq {
    let mut out = Vec::new();
    let mut prev = None;
    for t in 0..logits.rows() {
        let k = argmax(logits.row(t));
        if Some(k) != prev && k != BLANK {
            out.push(k);
        }
        prev = Some(k);
    }
    TokenSeq(out)
}
