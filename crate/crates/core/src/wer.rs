//! Word error rate.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_words: usize,
}

impl ErrorCounts {
    pub fn edits(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// Percentage; `NaN` for an empty reference.
    pub fn wer(&self) -> f64 {
        100.0 * self.edits() as f64 / self.reference_words as f64
    }
}

impl core::ops::AddAssign for ErrorCounts {
    fn add_assign(&mut self, o: Self) {
        self.substitutions += o.substitutions;
        self.deletions += o.deletions;
        self.insertions += o.insertions;
        self.reference_words += o.reference_words;
    }
}

/// Minimum-edit alignment of `hyp` against `reference`. Among alignments
/// with the same edit count, substitutions are preferred.
pub fn align<R: AsRef<str>, H: AsRef<str>>(reference: &[R], hyp: &[H]) -> ErrorCounts {
    let (n, m) = (reference.len(), hyp.len());
    // (edits, subs, dels, ins) per cell, compared on edits first.
    let mut prev: Vec<(usize, usize, usize, usize)> = (0..=m).map(|j| (j, 0, 0, j)).collect();
    for i in 1..=n {
        let mut cur = vec![(i, 0, i, 0); m + 1];
        for j in 1..=m {
            let same = reference[i - 1].as_ref() == hyp[j - 1].as_ref();
            let d = prev[j - 1];
            let diag = if same {
                d
            } else {
                (d.0 + 1, d.1 + 1, d.2, d.3)
            };
            let u = prev[j];
            let del = (u.0 + 1, u.1, u.2 + 1, u.3);
            let l = cur[j - 1];
            let ins = (l.0 + 1, l.1, l.2, l.3 + 1);
            cur[j] = [diag, del, ins]
                .into_iter()
                .min_by_key(|c| c.0)
                .expect("three candidates");
        }
        prev = cur;
    }
    let (_, s, d, ins) = prev[m];
    ErrorCounts {
        substitutions: s,
        deletions: d,
        insertions: ins,
        reference_words: n,
    }
}

/// Corpus WER in percent over `(reference, hypothesis)` pairs.
pub fn corpus_wer<'a, R, H, I>(pairs: I) -> Result<f64>
where
    R: AsRef<str> + 'a,
    H: AsRef<str> + 'a,
    I: IntoIterator<Item = (&'a [R], &'a [H])>,
{
    let mut total = ErrorCounts::default();
    for (i, (r, h)) in pairs.into_iter().enumerate() {
        if r.is_empty() {
            return Err(Error::EmptyReference(i));
        }
        total += align(r, h);
    }
    if total.reference_words == 0 {
        return Err(Error::EmptyReference(0));
    }
    Ok(total.wer())
}
