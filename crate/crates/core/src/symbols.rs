//! Reserved symbols shared by every vocabulary.

/// Start of sentence. Never scored as an output symbol.
pub const SOS: &str = "<sos>";
/// End of sentence.
pub const EOS: &str = "<eos>";
/// Unknown symbol: OOV words, OOV phones and unmatched subwords.
pub const UNK: &str = "<unk>";

/// Default word-boundary marker.
pub const DEFAULT_MARKER: char = '_';

pub(crate) fn is_reserved(sym: &str) -> bool {
    sym == SOS || sym == EOS || sym == UNK
}

/// `w * x` that keeps `-inf` as `-inf` even for a zero weight.
///
/// A zero weight must switch a score source off without turning the
/// "impossible" marker into NaN.
#[inline]
pub fn weighted(w: f64, x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        x
    } else {
        w * x
    }
}
