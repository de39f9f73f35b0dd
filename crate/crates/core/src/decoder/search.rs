use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::cmp::Ordering;

use super::{cmp_sequences, end_detected, top, DecodeResult, DecoderConfig, Hypothesis};
use crate::acoustic::{AmScorer, Utterance};
use crate::lm::{LanguageModel, LmState, LogpVector, SymbolId, Vocab};
use crate::multilevel::{MultiLevelLm, MultiLevelState};
use crate::subword::{spell, BpeModel};
use crate::symbols::{weighted, UNK};
use crate::{Error, Result};

/// The verifying system of joint decoding: a character-BPE model with its
/// own scorer and subword LM.
#[derive(Clone, Copy)]
pub struct SecondSystem<'a> {
    pub am: &'a dyn AmScorer,
    pub lm: &'a dyn LanguageModel,
    pub bpe: &'a BpeModel,
}

#[derive(Debug, Clone)]
struct Beam {
    score: f64,
    ws: Vec<String>,
    sc1: f64,
    ys1: Vec<SymbolId>,
    st1: MultiLevelState,
    sc2: f64,
    ys2: Vec<SymbolId>,
    st2: LmState,
}

/// Decodes `x` with one system.
pub fn decode_single(
    x: &Utterance,
    am: &dyn AmScorer,
    mlm: &MultiLevelLm,
    cfg: &DecoderConfig,
) -> Result<DecodeResult> {
    Search::new(x, am, mlm, None, cfg)?.run()
}

/// Decodes `x` with system 1 proposing and system 2 verifying at word
/// boundaries.
pub fn decode_joint(
    x: &Utterance,
    am1: &dyn AmScorer,
    mlm1: &MultiLevelLm,
    second: SecondSystem<'_>,
    cfg: &DecoderConfig,
) -> Result<DecodeResult> {
    Search::new(x, am1, mlm1, Some(second), cfg)?.run()
}

/// `(1 - gamma) * sc1 + gamma * sc2`, where a zero weight removes its term
/// entirely, so `gamma = 0` reproduces single-system scores even when the
/// second system rules a path out.
pub fn blend(gamma: f64, sc1: f64, sc2: f64) -> f64 {
    if gamma == 0.0 {
        sc1
    } else if gamma == 1.0 {
        sc2
    } else {
        (1.0 - gamma) * sc1 + gamma * sc2
    }
}

struct Search<'a> {
    x: &'a Utterance,
    am1: &'a dyn AmScorer,
    mlm: &'a MultiLevelLm,
    second: Option<SecondSystem<'a>>,
    cfg: DecoderConfig,
    lm2_memo: RefCell<BTreeMap<(LmState, SymbolId), (LmState, LogpVector)>>,
}

impl<'a> Search<'a> {
    fn new(
        x: &'a Utterance,
        am1: &'a dyn AmScorer,
        mlm: &'a MultiLevelLm,
        second: Option<SecondSystem<'a>>,
        cfg: &DecoderConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if am1.vocab() != mlm.subword_vocab() {
            return Err(Error::VocabMismatch(
                "acoustic scorer and subword LM vocabularies differ".into(),
            ));
        }
        if let Some(s) = &second {
            if s.am.vocab() != s.lm.vocab() {
                return Err(Error::VocabMismatch(
                    "second-system scorer and LM vocabularies differ".into(),
                ));
            }
        }
        Ok(Search {
            x,
            am1,
            mlm,
            second,
            cfg: *cfg,
            lm2_memo: RefCell::new(BTreeMap::new()),
        })
    }

    fn vocab1(&self) -> &Vocab {
        self.mlm.subword_vocab()
    }

    fn run(self) -> Result<DecodeResult> {
        let cfg = self.cfg;
        let initial = Beam {
            score: 0.0,
            ws: Vec::new(),
            sc1: 0.0,
            ys1: vec![Vocab::SOS],
            st1: self.mlm.init_state(),
            sc2: 0.0,
            ys2: vec![Vocab::SOS],
            st2: self
                .second
                .map(|s| s.lm.initial_state())
                .unwrap_or_default(),
        };
        let mut live = vec![initial];
        let mut completed: Vec<Hypothesis> = Vec::new();
        let mut best_by_step: Vec<f64> = Vec::new();
        let mut steps = 0;

        while !live.is_empty() && steps < cfg.max_steps {
            let best_completed = completed.iter().map(|h| h.score).reduce(f64::max);
            if end_detected(
                best_completed,
                &best_by_step,
                cfg.end_window,
                cfg.end_margin,
            ) {
                break;
            }
            steps += 1;
            let mut expanded = Vec::new();
            for beam in &live {
                self.expand(beam, &mut expanded);
            }
            live = self.prune(expanded);

            let mut partial_best = f64::NEG_INFINITY;
            let mut still_live = Vec::with_capacity(live.len());
            for beam in live {
                if beam.ys1.last() == Some(&Vocab::EOS) {
                    completed.extend(self.finish(&beam));
                } else {
                    partial_best = partial_best.max(beam.score);
                    still_live.push(beam);
                }
            }
            live = still_live;
            best_by_step.push(partial_best);
        }

        completed.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.ys1.cmp(&b.ys1).then_with(|| a.words.cmp(&b.words)))
        });
        completed.truncate(cfg.beamsize);
        let truncated = completed.is_empty() && steps >= cfg.max_steps;
        Ok(DecodeResult {
            hypotheses: completed,
            truncated,
            steps,
        })
    }

    fn expand(&self, beam: &Beam, out: &mut Vec<Beam>) {
        let cfg = &self.cfg;
        let last = *beam.ys1.last().expect("ys1 starts with <sos>");
        let lm_output = if beam.ys1.len() == 1 {
            vec![self.mlm.start()]
        } else {
            self.mlm.forward(&beam.st1, last)
        };
        let am = self.am1.score(self.x, &beam.ys1);

        for result in lm_output {
            let yscores: Vec<f64> = am
                .iter()
                .zip(&result.la_scores)
                .map(|(&a, &la)| a + weighted(cfg.beta, la))
                .collect();
            let candidates = top(&yscores, cfg.beamsize, self.vocab1());
            if candidates.is_empty() {
                continue;
            }
            let (sc2_n, ys2_n, st2_n) = match (&result.word, &self.second) {
                (Some(w), Some(second)) => self.advance_second(second, beam, w),
                _ => (beam.sc2, beam.ys2.clone(), beam.st2.clone()),
            };
            let mut ws_n = beam.ws.clone();
            if let Some(w) = &result.word {
                ws_n.push(w.clone());
            }
            for (c, y) in candidates {
                let mut ys1 = beam.ys1.clone();
                ys1.push(y);
                let score = if result.word.is_some() && self.second.is_some() {
                    blend(cfg.gamma, beam.sc1, sc2_n) + c
                } else {
                    beam.score + c
                };
                out.push(Beam {
                    score,
                    ws: ws_n.clone(),
                    sc1: beam.sc1 + c,
                    ys1,
                    st1: result.state.clone(),
                    sc2: sc2_n,
                    ys2: ys2_n.clone(),
                    st2: st2_n.clone(),
                });
            }
        }
    }

    /// Runs system 2 through the decomposition of `word`.
    fn advance_second(
        &self,
        second: &SecondSystem<'_>,
        beam: &Beam,
        word: &str,
    ) -> (f64, Vec<SymbolId>, LmState) {
        self.step_second(
            second,
            beam.sc2,
            beam.ys2.clone(),
            beam.st2.clone(),
            &second_units(second, word),
        )
    }

    fn step_second(
        &self,
        second: &SecondSystem<'_>,
        mut sc2: f64,
        mut ys2: Vec<SymbolId>,
        mut st2: LmState,
        units: &[SymbolId],
    ) -> (f64, Vec<SymbolId>, LmState) {
        for &y in units {
            let last = *ys2.last().expect("ys2 starts with <sos>");
            let (st, la) = self.forward_lm2(second, &st2, last);
            st2 = st;
            sc2 += second.am.score(self.x, &ys2)[y as usize] + weighted(self.cfg.beta, la[y]);
            ys2.push(y);
        }
        (sc2, ys2, st2)
    }

    fn forward_lm2(
        &self,
        second: &SecondSystem<'_>,
        st: &LmState,
        sym: SymbolId,
    ) -> (LmState, LogpVector) {
        let key = (st.clone(), sym);
        if let Some(hit) = self.lm2_memo.borrow().get(&key) {
            return hit.clone();
        }
        let out = second.lm.forward_id(st, sym);
        self.lm2_memo.borrow_mut().insert(key, out.clone());
        out
    }

    /// Keeps the `beamsize` best beams; exact `(ys1, ws)` duplicates keep
    /// their best copy.
    fn prune(&self, mut beams: Vec<Beam>) -> Vec<Beam> {
        let vocab = self.vocab1();
        beams.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| cmp_sequences(vocab, (&a.ys1, &a.ws), (&b.ys1, &b.ws)))
        });
        let mut seen = BTreeSet::new();
        let mut kept = Vec::with_capacity(self.cfg.beamsize.min(beams.len()));
        for beam in beams {
            if kept.len() == self.cfg.beamsize {
                break;
            }
            if seen.insert((beam.ys1.clone(), beam.ws.clone())) {
                kept.push(beam);
            }
        }
        kept
    }

    /// Closes an `<eos>`-ended beam in both systems; homophones pending at
    /// the end yield one hypothesis each.
    fn finish(&self, beam: &Beam) -> Vec<Hypothesis> {
        let cfg = &self.cfg;
        let vocab1 = self.vocab1();
        self.mlm
            .finalize(&beam.st1)
            .into_iter()
            .map(|fin| {
                let c = weighted(cfg.beta, fin.adjust);
                let sc1 = beam.sc1 + c;
                let mut words = beam.ws.clone();
                let (score, sc2, ys2) = match &self.second {
                    Some(second) => {
                        let (mut sc2, mut ys2, mut st2) =
                            (beam.sc2, beam.ys2.clone(), beam.st2.clone());
                        if let Some(w) = &fin.word {
                            (sc2, ys2, st2) =
                                self.step_second(second, sc2, ys2, st2, &second_units(second, w));
                        }
                        (sc2, ys2, _) = self.step_second(second, sc2, ys2, st2, &[Vocab::EOS]);
                        let score = blend(cfg.gamma, beam.sc1, sc2) + c;
                        let names = ys2
                            .iter()
                            .map(|&i| second.lm.vocab().symbol(i).to_string())
                            .collect();
                        (score, sc2, names)
                    }
                    None => (sc1, 0.0, vec![vocab1.symbol(Vocab::SOS).to_string()]),
                };
                if let Some(w) = fin.word {
                    words.push(w);
                }
                Hypothesis {
                    words,
                    score,
                    sc1,
                    sc2,
                    ys1: beam
                        .ys1
                        .iter()
                        .map(|&i| vocab1.symbol(i).to_string())
                        .collect(),
                    ys2,
                }
            })
            .collect()
    }
}

/// System-2 units of `word`; `<unk>` stays a single `<unk>`.
fn second_units(second: &SecondSystem<'_>, word: &str) -> Vec<SymbolId> {
    let vocab = second.lm.vocab();
    if word == UNK {
        return vec![Vocab::UNK];
    }
    second
        .bpe
        .encode_word(&spell(word))
        .iter()
        .map(|u| vocab.id_or_unk(u))
        .collect()
}
