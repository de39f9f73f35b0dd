//! Language-model forwarding contract.
//!
//! Every model used by the decoders is driven through
//! [`LanguageModel::forward`]: given a state and the symbol just accepted,
//! return the new state and the log-probability of every next symbol.
//! Scores are natural logs throughout.

mod arpa;
mod ngram;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::Index;

pub use ngram::NGramLm;

use crate::symbols::{EOS, SOS, UNK};

pub type SymbolId = u32;

/// Ordered symbol table. `<sos>`, `<eos>` and `<unk>` always occupy ids
/// 0, 1 and 2; the remaining symbols follow in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    symbols: Vec<String>,
    ids: BTreeMap<String, SymbolId>,
}

impl Vocab {
    pub const SOS: SymbolId = 0;
    pub const EOS: SymbolId = 1;
    pub const UNK: SymbolId = 2;

    pub fn new<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut rest: Vec<String> = symbols
            .into_iter()
            .map(|s| s.as_ref().to_string())
            .filter(|s| s != SOS && s != EOS && s != UNK)
            .collect();
        rest.sort();
        rest.dedup();
        let mut all = alloc::vec![SOS.to_string(), EOS.to_string(), UNK.to_string()];
        all.extend(rest);
        let ids = all
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as SymbolId))
            .collect();
        Vocab { symbols: all, ids }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn id(&self, symbol: &str) -> Option<SymbolId> {
        self.ids.get(symbol).copied()
    }

    /// Id of `symbol`, or of `<unk>` when it is out of vocabulary.
    pub fn id_or_unk(&self, symbol: &str) -> SymbolId {
        self.id(symbol).unwrap_or(Self::UNK)
    }

    pub fn symbol(&self, id: SymbolId) -> &str {
        &self.symbols[id as usize]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }
}

/// Bounded history of accepted symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LmState {
    pub history: Vec<SymbolId>,
}

/// Log-probabilities over a vocabulary, indexed by [`SymbolId`].
///
/// The `<sos>` slot is always `-inf`: it is never predicted.
#[derive(Debug, Clone, PartialEq)]
pub struct LogpVector(Arc<[f64]>);

impl LogpVector {
    pub fn new(values: Vec<f64>) -> Self {
        LogpVector(values.into())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when both handles point at the same allocation.
    pub fn ptr_eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Index<SymbolId> for LogpVector {
    type Output = f64;

    fn index(&self, id: SymbolId) -> &f64 {
        &self.0[id as usize]
    }
}

/// `(state, symbol) -> (state', log P(. | state'))`.
pub trait LanguageModel: Send + Sync {
    fn vocab(&self) -> &Vocab;

    /// State before anything, including `<sos>`, has been accepted.
    fn initial_state(&self) -> LmState {
        LmState::default()
    }

    fn forward_id(&self, state: &LmState, symbol: SymbolId) -> (LmState, LogpVector);

    /// Out-of-vocabulary symbols are accepted as `<unk>`.
    fn forward(&self, state: &LmState, symbol: &str) -> (LmState, LogpVector) {
        self.forward_id(state, self.vocab().id_or_unk(symbol))
    }
}

/// Total log-probability of `symbols` followed by `<eos>`, starting from
/// `<sos>`.
pub fn score_sequence<L, S>(lm: &L, symbols: &[S]) -> f64
where
    L: LanguageModel + ?Sized,
    S: AsRef<str>,
{
    let (mut state, mut logp) = lm.forward_id(&lm.initial_state(), Vocab::SOS);
    let mut total = 0.0;
    for sym in symbols {
        let id = lm.vocab().id_or_unk(sym.as_ref());
        total += logp[id];
        (state, logp) = lm.forward_id(&state, id);
    }
    total + logp[Vocab::EOS]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocab_layout() {
        let v = Vocab::new(["b", "a", "<unk>", "a"]);
        assert_eq!(v.symbols(), [SOS, EOS, UNK, "a", "b"]);
        assert_eq!(v.id("a"), Some(3));
        assert_eq!(v.id_or_unk("zzz"), Vocab::UNK);
        for (i, s) in v.symbols().iter().enumerate() {
            assert_eq!(v.id(s), Some(i as SymbolId));
        }
    }

    #[test]
    fn score_sequence_of_uniform_model() {
        let lm = NGramLm::uniform(["a", "b"]);
        let quarter = (0.25f64).ln();
        assert!((score_sequence(&lm, &["a", "b"]) - 3.0 * quarter).abs() < 1e-12);
        assert!((score_sequence(&lm, &["a"]) - 2.0 * quarter).abs() < 1e-12);
        assert!(score_sequence(&lm, &["a", "b", "a"]) < score_sequence(&lm, &["a", "b"]));
    }

    #[test]
    fn score_sequence_matches_stepwise_forward() {
        let corpus = [["a", "b", "c"], ["b", "c", "a"]];
        let lm = NGramLm::train(&corpus, 3, 0.5).unwrap();
        let seq = ["a", "c", "c", "b"];
        let (mut st, mut lp) = lm.forward(&lm.initial_state(), SOS);
        let mut total = 0.0;
        for s in seq {
            total += lp[lm.vocab().id(s).unwrap()];
            (st, lp) = lm.forward(&st, s);
        }
        total += lp[Vocab::EOS];
        assert_eq!(total, score_sequence(&lm, &seq));
    }
}
