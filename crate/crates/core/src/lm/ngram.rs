use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{LanguageModel, LmState, LogpVector, SymbolId, Vocab};
use crate::{Error, Result};

/// Back-off n-gram model in ARPA form: explicit log-probabilities for
/// stored n-grams and back-off weights for their contexts.
///
/// Training uses interpolated add-k smoothing. With `V` outcomes (the
/// vocabulary minus `<sos>`), `c(h)` the number of events seen after
/// context `h` and `h'` its suffix:
///
/// ```text
/// P1(w)     = (c(w) + k) / (N + kV)
/// Pn(w | h) = (c(h w) + kV * P(w | h')) / (c(h) + kV)
/// ```
///
/// which back off exactly with weight `kV / (c(h) + kV)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramLm {
    order: usize,
    vocab: Vocab,
    unigram: Vec<f64>,
    // per order 2..=N: context -> (next symbol -> logp)
    higher: Vec<BTreeMap<Vec<SymbolId>, BTreeMap<SymbolId, f64>>>,
    backoff: BTreeMap<Vec<SymbolId>, f64>,
}

impl NGramLm {
    /// Trains on `corpus`, one symbol sequence per sentence.
    pub fn train<C, S>(corpus: C, order: usize, add_k: f64) -> Result<Self>
    where
        C: IntoIterator,
        C::Item: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::train_with_vocab(corpus, core::iter::empty::<&str>(), order, add_k)
    }

    /// Like [`NGramLm::train`] but also reserves probability mass for every
    /// symbol in `extra_vocab`, seen or not.
    pub fn train_with_vocab<C, S, V, T>(
        corpus: C,
        extra_vocab: V,
        order: usize,
        add_k: f64,
    ) -> Result<Self>
    where
        C: IntoIterator,
        C::Item: IntoIterator<Item = S>,
        S: AsRef<str>,
        V: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        if order == 0 {
            return Err(Error::InvalidConfig(
                "n-gram order must be at least 1".into(),
            ));
        }
        if !(add_k > 0.0 && add_k.is_finite()) {
            return Err(Error::InvalidConfig(
                "add-k constant must be positive".into(),
            ));
        }
        let sentences: Vec<Vec<alloc::string::String>> = corpus
            .into_iter()
            .map(|s| s.into_iter().map(|t| t.as_ref().into()).collect())
            .collect();
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let extra: Vec<alloc::string::String> =
            extra_vocab.into_iter().map(|t| t.as_ref().into()).collect();
        let vocab = Vocab::new(sentences.iter().flatten().chain(extra.iter()));

        // counts[n - 1]: n-gram -> count, last symbol being the outcome
        let mut counts: Vec<BTreeMap<Vec<SymbolId>, f64>> = alloc::vec![BTreeMap::new(); order];
        for sentence in &sentences {
            let mut ids = alloc::vec![Vocab::SOS];
            ids.extend(sentence.iter().map(|s| vocab.id_or_unk(s)));
            ids.push(Vocab::EOS);
            for i in 1..ids.len() {
                for n in 1..=order.min(i + 1) {
                    *counts[n - 1]
                        .entry(ids[i + 1 - n..=i].to_vec())
                        .or_insert(0.0) += 1.0;
                }
            }
        }

        let outcomes = (vocab.len() - 1) as f64;
        let kv = add_k * outcomes;
        let total: f64 = counts[0].values().sum();
        let mut unigram = alloc::vec![f64::NEG_INFINITY; vocab.len()];
        for (id, slot) in unigram.iter_mut().enumerate().skip(1) {
            let c = counts[0]
                .get(&alloc::vec![id as SymbolId])
                .copied()
                .unwrap_or(0.0);
            *slot = libm::log((c + add_k) / (total + kv));
        }
        let mut lm = NGramLm {
            order,
            vocab,
            unigram,
            higher: Vec::new(),
            backoff: BTreeMap::new(),
        };

        for n in 2..=order {
            let mut context_totals: BTreeMap<&[SymbolId], f64> = BTreeMap::new();
            for (gram, c) in &counts[n - 1] {
                *context_totals.entry(&gram[..n - 1]).or_insert(0.0) += c;
            }
            let mut level: BTreeMap<Vec<SymbolId>, BTreeMap<SymbolId, f64>> = BTreeMap::new();
            for (gram, c) in &counts[n - 1] {
                let (ctx, w) = (&gram[..n - 1], gram[n - 1]);
                let lower = libm::exp(lm.logp(&ctx[1..], w));
                let p = (c + kv * lower) / (context_totals[ctx] + kv);
                level
                    .entry(ctx.to_vec())
                    .or_default()
                    .insert(w, libm::log(p));
            }
            for (ctx, c) in &context_totals {
                lm.backoff.insert(ctx.to_vec(), libm::log(kv / (c + kv)));
            }
            lm.higher.push(level);
        }
        Ok(lm)
    }

    /// Order-1 model assigning equal probability to every outcome.
    pub fn uniform<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let vocab = Vocab::new(symbols);
        let p = -libm::log((vocab.len() - 1) as f64);
        let mut unigram = alloc::vec![p; vocab.len()];
        unigram[Vocab::SOS as usize] = f64::NEG_INFINITY;
        NGramLm {
            order: 1,
            vocab,
            unigram,
            higher: Vec::new(),
            backoff: BTreeMap::new(),
        }
    }

    pub(super) fn from_tables(
        order: usize,
        vocab: Vocab,
        unigram: Vec<f64>,
        higher: Vec<BTreeMap<Vec<SymbolId>, BTreeMap<SymbolId, f64>>>,
        backoff: BTreeMap<Vec<SymbolId>, f64>,
    ) -> Self {
        NGramLm {
            order,
            vocab,
            unigram,
            higher,
            backoff,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub(super) fn unigram(&self) -> &[f64] {
        &self.unigram
    }

    pub(super) fn higher(&self) -> &[BTreeMap<Vec<SymbolId>, BTreeMap<SymbolId, f64>>] {
        &self.higher
    }

    pub(super) fn backoff_weight(&self, context: &[SymbolId]) -> Option<f64> {
        self.backoff.get(context).copied()
    }

    /// Number of stored n-grams of order `n` (1-based).
    pub fn gram_count(&self, n: usize) -> usize {
        match n {
            1 => self.unigram.len(),
            n if n <= self.order => self.higher[n - 2].values().map(BTreeMap::len).sum(),
            _ => 0,
        }
    }

    /// `log P(w | history)` with standard back-off.
    pub fn logp(&self, history: &[SymbolId], w: SymbolId) -> f64 {
        let h = &history[history.len().saturating_sub(self.order - 1)..];
        let mut acc = 0.0;
        for start in 0..h.len() {
            let ctx = &h[start..];
            if let Some(p) = self.higher[ctx.len() - 1]
                .get(ctx)
                .and_then(|next| next.get(&w))
            {
                return acc + p;
            }
            acc += self.backoff.get(ctx).copied().unwrap_or(0.0);
        }
        acc + self.unigram[w as usize]
    }

    /// Full next-symbol distribution after `history`.
    pub fn distribution(&self, history: &[SymbolId]) -> Vec<f64> {
        let h = &history[history.len().saturating_sub(self.order - 1)..];
        let mut dist = self.unigram.clone();
        for len in 1..=h.len() {
            let ctx = &h[h.len() - len..];
            let bow = self.backoff.get(ctx).copied().unwrap_or(0.0);
            if bow != 0.0 {
                dist.iter_mut().for_each(|v| *v += bow);
            }
            if let Some(next) = self.higher[len - 1].get(ctx) {
                for (&w, &p) in next {
                    dist[w as usize] = p;
                }
            }
        }
        dist
    }
}

impl LanguageModel for NGramLm {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn forward_id(&self, state: &LmState, symbol: SymbolId) -> (LmState, LogpVector) {
        let symbol = if (symbol as usize) < self.vocab.len() {
            symbol
        } else {
            Vocab::UNK
        };
        let keep = self.order - 1;
        let mut history = state.history.clone();
        history.push(symbol);
        if history.len() > keep {
            history.drain(..history.len() - keep);
        }
        let dist = self.distribution(&history);
        (LmState { history }, LogpVector::new(dist))
    }
}
