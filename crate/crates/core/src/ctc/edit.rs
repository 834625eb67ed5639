use alloc::vec;

/// Edit operations aligning a hypothesis to a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditStats {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
    /// `100·(S+D+I)/|ref|`; `100·|hyp|` when the reference is empty.
    pub error_rate: f64,
    /// Set when the reference is empty but the hypothesis is not.
    pub degenerate: bool,
}

impl EditStats {
    pub fn edits(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Unit-cost edit distance with the S/D/I split.
///
/// Among minimum-cost alignments the one with the fewest substitutions is
/// reported. That choice does not depend on which side is the reference, so
/// swapping the arguments keeps `S` and exchanges `D` with `I`.
pub fn levenshtein<T: PartialEq>(reference: &[T], hyp: &[T]) -> EditStats {
    let (n, m) = (reference.len(), hyp.len());
    // (cost, substitutions), ordered lexicographically
    let mut prev: alloc::vec::Vec<(usize, usize)> = (0..=m).map(|j| (j, 0)).collect();
    let mut cur = vec![(0usize, 0usize); m + 1];
    for i in 1..=n {
        cur[0] = (i, 0);
        for j in 1..=m {
            let diag = if reference[i - 1] == hyp[j - 1] {
                prev[j - 1]
            } else {
                (prev[j - 1].0 + 1, prev[j - 1].1 + 1)
            };
            let del = (prev[j].0 + 1, prev[j].1);
            let ins = (cur[j - 1].0 + 1, cur[j - 1].1);
            cur[j] = diag.min(del).min(ins);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    let (cost, substitutions) = prev[m];
    // D − I = n − m and D + I = cost − S
    let indels = (cost - substitutions) as i64;
    let deletions = ((indels + n as i64 - m as i64) / 2) as usize;
    let insertions = indels as usize - deletions;
    let (error_rate, degenerate) = if n == 0 {
        (100.0 * m as f64, m > 0)
    } else {
        (100.0 * cost as f64 / n as f64, false)
    };
    EditStats {
        substitutions,
        deletions,
        insertions,
        ref_len: n,
        error_rate,
        degenerate,
    }
}
