//! Multi-level language model: a subword LM scoring every step and a word
//! LM that takes over at word boundaries.
//!
//! While the search walks down the prefix tree the subword LM scores are
//! accumulated (`accum`). When a marker-initial unit arrives at a non-root
//! node the pending word is closed: its accumulated subword score is
//! subtracted and the word LM score added instead, so a complete sentence
//! ends up scored by the word LM alone. Homophones at the closing node
//! split the hypothesis, one result per word; all results share the
//! subword-LM state.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::lexicon::{NodeId, PrefixTree};
use crate::lm::{LanguageModel, LmState, LogpVector, SymbolId, Vocab};
use crate::symbols::{weighted, UNK};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiLevelConfig {
    /// Weight of the subword LM; 0 switches it off.
    pub alpha: f64,
    /// Log-domain penalty added when a partial word closes as `<unk>`.
    pub oov_penalty: f64,
    /// Set look-ahead scores of units that cannot follow in the tree to
    /// `-inf` right away instead of on the next step.
    pub premask: bool,
}

impl Default for MultiLevelConfig {
    fn default() -> Self {
        MultiLevelConfig {
            alpha: 0.6,
            oov_penalty: -10.0,
            premask: false,
        }
    }
}

impl MultiLevelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig("alpha must be finite and >= 0".into()));
        }
        if self.oov_penalty.is_nan() || self.oov_penalty > 0.0 {
            return Err(Error::InvalidConfig("oov penalty must be <= 0".into()));
        }
        Ok(())
    }
}

/// `(Sstate, Slogp, Wstate, Wlogp, node, accum)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLevelState {
    pub s_state: LmState,
    pub s_logp: LogpVector,
    pub w_state: LmState,
    pub w_logp: LogpVector,
    pub node: NodeId,
    pub accum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    pub state: MultiLevelState,
    /// Look-ahead score of every subword, indexed by subword id.
    pub la_scores: Vec<f64>,
    /// The word closed by this step; `None` for `<incomplete>`.
    pub word: Option<String>,
}

/// Result of closing a hypothesis with `<eos>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Finalization {
    pub adjust: f64,
    /// The pending word closed at the end, if any (possibly `<unk>`).
    pub word: Option<String>,
}

pub struct MultiLevelLm {
    subword: Arc<dyn LanguageModel>,
    word: Arc<dyn LanguageModel>,
    tree: Arc<PrefixTree>,
    config: MultiLevelConfig,
    initial: Vec<bool>,
}

impl core::fmt::Debug for MultiLevelLm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MultiLevelLm")
            .field("config", &self.config)
            .field("subword_vocab", &self.subword.vocab().len())
            .field("word_vocab", &self.word.vocab().len())
            .field("tree_nodes", &self.tree.node_count())
            .finish()
    }
}

impl MultiLevelLm {
    /// Every unit on a tree edge must be in the subword LM vocabulary.
    pub fn new(
        subword: Arc<dyn LanguageModel>,
        word: Arc<dyn LanguageModel>,
        tree: Arc<PrefixTree>,
        config: MultiLevelConfig,
    ) -> Result<Self> {
        config.validate()?;
        if let Some(missing) = tree
            .token_inventory()
            .iter()
            .find(|u| subword.vocab().id(u).is_none())
        {
            return Err(Error::VocabMismatch(alloc::format!(
                "tree unit {missing:?} is not in the subword LM vocabulary"
            )));
        }
        let marker = tree.marker();
        let initial = subword
            .vocab()
            .symbols()
            .iter()
            .map(|s| s.starts_with(marker))
            .collect();
        Ok(MultiLevelLm {
            subword,
            word,
            tree,
            config,
            initial,
        })
    }

    pub fn config(&self) -> &MultiLevelConfig {
        &self.config
    }

    pub fn tree(&self) -> &PrefixTree {
        &self.tree
    }

    pub fn subword_vocab(&self) -> &Vocab {
        self.subword.vocab()
    }

    pub fn word_lm(&self) -> &dyn LanguageModel {
        &*self.word
    }

    pub fn subword_lm(&self) -> &dyn LanguageModel {
        &*self.subword
    }

    pub fn is_word_initial(&self, unit: SymbolId) -> bool {
        self.initial.get(unit as usize).copied().unwrap_or(false)
    }

    /// Both LMs accept `<sos>`; the tree position is the root.
    pub fn init_state(&self) -> MultiLevelState {
        let (s_state, s_logp) = self
            .subword
            .forward_id(&self.subword.initial_state(), Vocab::SOS);
        let (w_state, w_logp) = self.word.forward_id(&self.word.initial_state(), Vocab::SOS);
        MultiLevelState {
            s_state,
            s_logp,
            w_state,
            w_logp,
            node: NodeId::ROOT,
            accum: 0.0,
        }
    }

    /// What forwarding `<sos>` yields: the initial state and its look-ahead.
    pub fn start(&self) -> ForwardResult {
        let state = self.init_state();
        let la_scores = self.lookahead(&state.s_logp, 0.0, state.node);
        ForwardResult {
            state,
            la_scores,
            word: None,
        }
    }

    /// Accepts subword `s`. Returns one result per closed word at a word
    /// boundary, otherwise exactly one result.
    pub fn forward(&self, state: &MultiLevelState, s: SymbolId) -> Vec<ForwardResult> {
        let alpha = self.config.alpha;
        let root = self.tree.root();
        let sym = self.subword.vocab().symbol(s);

        if self.is_word_initial(s) && state.node != root {
            let Some(node_new) = self.tree.branch(root, sym) else {
                return vec![self.dead_end(state)];
            };
            let accum_new = weighted(alpha, state.s_logp[s]);
            let (s_state, s_logp) = self.subword.forward_id(&state.s_state, s);
            let words = self.tree.node_words(state.node);
            let closing: Vec<&str> = if words.is_empty() {
                vec![UNK]
            } else {
                words.iter().map(String::as_str).collect()
            };
            closing
                .into_iter()
                .map(|w| {
                    let adjust = self.close_adjust(state, w);
                    let (w_state, w_logp) = self.word.forward(&state.w_state, w);
                    ForwardResult {
                        la_scores: self.lookahead(&s_logp, adjust, node_new),
                        state: MultiLevelState {
                            s_state: s_state.clone(),
                            s_logp: s_logp.clone(),
                            w_state,
                            w_logp,
                            node: node_new,
                            accum: accum_new,
                        },
                        word: Some(w.to_string()),
                    }
                })
                .collect()
        } else {
            let Some(node_new) = self.tree.branch(state.node, sym) else {
                return vec![self.dead_end(state)];
            };
            let accum = state.accum + weighted(alpha, state.s_logp[s]);
            let (s_state, s_logp) = self.subword.forward_id(&state.s_state, s);
            let la_scores = self.lookahead(&s_logp, 0.0, node_new);
            let state = MultiLevelState {
                s_state,
                s_logp,
                w_state: state.w_state.clone(),
                w_logp: state.w_logp.clone(),
                node: node_new,
                accum,
            };
            vec![ForwardResult {
                state,
                la_scores,
                word: None,
            }]
        }
    }

    /// Closes a hypothesis with `<eos>`.
    ///
    /// `<eos>` acts as a boundary unit: any pending word is closed as in
    /// [`MultiLevelLm::forward`], then the word LM scores `<eos>` in place of
    /// the weighted subword `<eos>` score already spent by the search.
    pub fn finalize(&self, state: &MultiLevelState) -> Vec<Finalization> {
        let eos_spent = weighted(self.config.alpha, state.s_logp[Vocab::EOS]);
        if state.node == self.tree.root() {
            return vec![Finalization {
                adjust: state.w_logp[Vocab::EOS] - eos_spent,
                word: None,
            }];
        }
        let words = self.tree.node_words(state.node);
        let closing: Vec<&str> = if words.is_empty() {
            vec![UNK]
        } else {
            words.iter().map(String::as_str).collect()
        };
        closing
            .into_iter()
            .map(|w| {
                let adjust = self.close_adjust(state, w);
                let (_, w_logp) = self.word.forward(&state.w_state, w);
                Finalization {
                    adjust: adjust + w_logp[Vocab::EOS] - eos_spent,
                    word: Some(w.to_string()),
                }
            })
            .collect()
    }

    fn close_adjust(&self, state: &MultiLevelState, w: &str) -> f64 {
        if w == UNK {
            state.w_logp[Vocab::UNK] + self.config.oov_penalty
        } else {
            state.w_logp[self.word.vocab().id_or_unk(w)] - state.accum
        }
    }

    fn lookahead(&self, s_logp: &LogpVector, adjust: f64, node: NodeId) -> Vec<f64> {
        let alpha = self.config.alpha;
        let mut la: Vec<f64> = s_logp
            .as_slice()
            .iter()
            .map(|&v| adjust + weighted(alpha, v))
            .collect();
        if self.config.premask {
            let vocab = self.subword.vocab();
            let root = self.tree.root();
            for (id, v) in la.iter_mut().enumerate() {
                let id = id as SymbolId;
                let sym = vocab.symbol(id);
                let ok = id == Vocab::EOS
                    || self.tree.branch(node, sym).is_some()
                    || (node != root
                        && self.is_word_initial(id)
                        && self.tree.branch(root, sym).is_some());
                if !ok {
                    *v = f64::NEG_INFINITY;
                }
            }
        }
        la
    }

    fn dead_end(&self, state: &MultiLevelState) -> ForwardResult {
        ForwardResult {
            state: state.clone(),
            la_scores: vec![f64::NEG_INFINITY; self.subword.vocab().len()],
            word: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::Lexicon;
    use crate::lm::{score_sequence, NGramLm};
    use crate::subword::{BpeModel, UnitMode};
    use crate::symbols::EOS;

    struct Fixture {
        mlm: MultiLevelLm,
        bpe: BpeModel,
    }

    fn fixture(lexicon: &str, word_corpus: &[&[&str]], alpha: f64) -> Fixture {
        let lex = Lexicon::parse(lexicon).unwrap();
        let prons: Vec<Vec<String>> = lex.iter().map(|(_, p)| p.to_vec()).collect();
        let full = BpeModel::train(&prons, usize::MAX, '_', "+").unwrap();
        let bpe =
            BpeModel::from_parts('_', "+", full.base_vocab().iter().cloned(), vec![]).unwrap();
        let tree = PrefixTree::build(&lex, &bpe, UnitMode::Phone);
        let sub_corpus: Vec<Vec<String>> = word_corpus
            .iter()
            .map(|s| crate::subword::encode_corpus(s, Some(&lex), &bpe, UnitMode::Phone))
            .collect();
        let sub = NGramLm::train_with_vocab(&sub_corpus, bpe.vocab(), 2, 0.5).unwrap();
        let word =
            NGramLm::train_with_vocab(word_corpus.iter().map(|s| s.iter()), lex.words(), 2, 0.5)
                .unwrap();
        let cfg = MultiLevelConfig {
            alpha,
            ..Default::default()
        };
        let mlm = MultiLevelLm::new(Arc::new(sub), Arc::new(word), Arc::new(tree), cfg).unwrap();
        Fixture { mlm, bpe }
    }

    fn id(f: &Fixture, unit: &str) -> SymbolId {
        f.mlm.subword_vocab().id(unit).unwrap()
    }

    const HOMOPHONES: &str = "hi HH IY\nhigh HH IY\nthe DH AH";

    #[test]
    fn init_state_at_root() {
        let f = fixture(HOMOPHONES, &[&["hi", "the"]], 0.6);
        let st = f.mlm.init_state();
        assert_eq!(st.node, NodeId::ROOT);
        assert_eq!(st.accum, 0.0);
        assert_eq!(st, f.mlm.init_state());
    }

    #[test]
    fn homophone_boundary_branches() {
        let f = fixture(HOMOPHONES, &[&["hi", "the"], &["high", "the"]], 0.6);
        let st = f.mlm.init_state();
        let st = f.mlm.forward(&st, id(&f, "_HH")).remove(0).state;
        let st = f.mlm.forward(&st, id(&f, "IY")).remove(0).state;
        let out = f.mlm.forward(&st, id(&f, "_DH"));
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].word.as_deref(), Some("hi"));
        assert_eq!(out[1].word.as_deref(), Some("high"));
        assert_eq!(out[0].state.s_state, out[1].state.s_state);
        assert!(out[0].state.s_logp.ptr_eq(&out[1].state.s_logp));
        assert_ne!(out[0].state.w_state, out[1].state.w_state);
        let dh = f.mlm.tree().branch(NodeId::ROOT, "_DH").unwrap();
        assert_eq!(out[0].state.node, dh);
        assert_eq!(out[0].state.accum, 0.6 * st.s_logp[id(&f, "_DH")]);
    }

    #[test]
    fn dead_end_leaves_state_alone() {
        let f = fixture(HOMOPHONES, &[&["hi"]], 0.6);
        let st = f
            .mlm
            .forward(&f.mlm.init_state(), id(&f, "_HH"))
            .remove(0)
            .state;
        let out = f.mlm.forward(&st, id(&f, "AH"));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].word, None);
        assert_eq!(out[0].state, st);
        assert!(out[0].la_scores.iter().all(|&v| v == f64::NEG_INFINITY));
        // a marker-initial unit that starts no word at the root
        let out = f.mlm.forward(&f.mlm.init_state(), id(&f, "IY"));
        assert!(out[0].la_scores.iter().all(|&v| v == f64::NEG_INFINITY));
    }

    #[test]
    fn alpha_zero_gives_word_scores_only() {
        let f = fixture(HOMOPHONES, &[&["hi", "the"]], 0.0);
        let mut st = f.mlm.init_state();
        for u in ["_HH", "IY"] {
            let r = f.mlm.forward(&st, id(&f, u)).remove(0);
            assert_eq!(r.state.accum, 0.0);
            assert!(r
                .la_scores
                .iter()
                .all(|&v| v == 0.0 || v == f64::NEG_INFINITY));
            st = r.state;
        }
        let out = f.mlm.forward(&st, id(&f, "_DH"));
        for r in &out {
            let w = r.word.as_deref().unwrap();
            let expect = st.w_logp[f.mlm.word_lm().vocab().id(w).unwrap()];
            for (i, &v) in r.la_scores.iter().enumerate() {
                if i as SymbolId != Vocab::SOS {
                    assert_eq!(v, expect);
                }
            }
        }
    }

    #[test]
    fn finalize_cases() {
        let f = fixture(HOMOPHONES, &[&["hi"]], 0.0);
        let root = f.mlm.finalize(&f.mlm.init_state());
        assert_eq!(root.len(), 1);
        assert_eq!(root[0].word, None);
        assert_eq!(root[0].adjust, f.mlm.init_state().w_logp[Vocab::EOS]);

        let st = f
            .mlm
            .forward(&f.mlm.init_state(), id(&f, "_HH"))
            .remove(0)
            .state;
        let pending = f.mlm.forward(&st, id(&f, "IY")).remove(0).state;
        let fin = f.mlm.finalize(&pending);
        assert_eq!(
            fin.iter()
                .map(|x| x.word.as_deref().unwrap())
                .collect::<Vec<_>>(),
            ["hi", "high"]
        );

        // _HH alone completes no word: closes as <unk>
        let fin = f.mlm.finalize(&st);
        assert_eq!(fin.len(), 1);
        assert_eq!(fin[0].word.as_deref(), Some(UNK));
        let (_, after) = f.mlm.word_lm().forward(&st.w_state, UNK);
        let expect = st.w_logp[Vocab::UNK] - 10.0 + after[Vocab::EOS];
        assert!((fin[0].adjust - expect).abs() < 1e-12);
    }

    #[test]
    fn finalize_at_root_removes_spent_subword_eos() {
        let uniform_words = NGramLm::uniform(["hi", "high", "the"]);
        let f = fixture(HOMOPHONES, &[&["hi"]], 0.5);
        let mlm = MultiLevelLm::new(
            Arc::new(NGramLm::uniform(f.bpe.vocab())),
            Arc::new(uniform_words),
            Arc::new(f.mlm.tree().clone()),
            MultiLevelConfig {
                alpha: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        let st = mlm.init_state();
        let v = (mlm.word_lm().vocab().len() - 1) as f64;
        let fin = mlm.finalize(&st);
        let eos = 0.5 * st.s_logp[mlm.subword_vocab().id(EOS).unwrap()];
        assert!((fin[0].adjust - ((1.0 / v).ln() - eos)).abs() < 1e-12);
    }

    #[test]
    fn premask_kills_invalid_units_early() {
        let lex = Lexicon::parse(HOMOPHONES).unwrap();
        let prons: Vec<Vec<String>> = lex.iter().map(|(_, p)| p.to_vec()).collect();
        let full = BpeModel::train(&prons, usize::MAX, '_', "+").unwrap();
        let bpe =
            BpeModel::from_parts('_', "+", full.base_vocab().iter().cloned(), vec![]).unwrap();
        let tree = Arc::new(PrefixTree::build(&lex, &bpe, UnitMode::Phone));
        let sub: Arc<dyn LanguageModel> = Arc::new(NGramLm::uniform(bpe.vocab()));
        let word: Arc<dyn LanguageModel> = Arc::new(NGramLm::uniform(lex.words()));
        let cfg = MultiLevelConfig {
            premask: true,
            ..Default::default()
        };
        let mlm = MultiLevelLm::new(sub, word, tree, cfg).unwrap();
        let start = mlm.start();
        let v = mlm.subword_vocab();
        assert!(start.la_scores[v.id("_HH").unwrap() as usize].is_finite());
        assert_eq!(
            start.la_scores[v.id("IY").unwrap() as usize],
            f64::NEG_INFINITY
        );
        let st = mlm.forward(&start.state, v.id("_HH").unwrap()).remove(0);
        assert!(st.la_scores[v.id("IY").unwrap() as usize].is_finite());
        assert!(st.la_scores[v.id("_DH").unwrap() as usize].is_finite());
        assert_eq!(
            st.la_scores[v.id("AH").unwrap() as usize],
            f64::NEG_INFINITY
        );
    }

    /// Sum of the look-ahead scores selected along the forced path of
    /// `sentence`, plus the final adjustment.
    fn forced_path_score(f: &Fixture, lex: &Lexicon, sentence: &[&str]) -> f64 {
        let units: Vec<String> =
            crate::subword::encode_corpus(sentence, Some(lex), &f.bpe, UnitMode::Phone);
        let start = f.mlm.start();
        let (mut state, mut la) = (start.state, start.la_scores);
        let mut closed = 0;
        let mut total = 0.0;
        for u in &units {
            let s = id(f, u);
            total += la[s as usize];
            let mut out = f.mlm.forward(&state, s);
            let pick = if out.len() > 1 || out[0].word.is_some() {
                let want = sentence[closed];
                closed += 1;
                out.iter()
                    .position(|r| r.word.as_deref() == Some(want))
                    .unwrap()
            } else {
                0
            };
            let r = out.swap_remove(pick);
            state = r.state;
            la = r.la_scores;
        }
        total += la[Vocab::EOS as usize];
        let fin = f.mlm.finalize(&state);
        let last = fin
            .iter()
            .find(|x| x.word.as_deref() == Some(sentence[closed]))
            .unwrap();
        total + last.adjust
    }

    #[test]
    fn word_score_replacement_telescopes() {
        let lexicon = "a AH\nbig B IH G\nbit B IH T\ncat K AE T\nsat S AE T\nthe DH AH\non AA N";
        let corpus: &[&[&str]] = &[
            &["the", "cat", "sat"],
            &["a", "big", "cat"],
            &["the", "bit", "on", "a", "cat"],
        ];
        let lex = Lexicon::parse(lexicon).unwrap();
        let sentences: &[&[&str]] = &[
            &["the", "cat", "sat", "on", "a", "big", "cat"],
            &["bit"],
            &["sat", "sat"],
        ];
        for alpha in [0.0, 0.3, 0.6, 1.0] {
            let f = fixture(lexicon, corpus, alpha);
            for s in sentences {
                let expect = score_sequence(f.mlm.word_lm(), s);
                let got = forced_path_score(&f, &lex, s);
                assert!(
                    (got - expect).abs() < 1e-9,
                    "alpha {alpha} {s:?}: {got} vs {expect}"
                );
            }
        }
    }
}
