//! Random tiny decoding problems and an exhaustive search over them.
//!
//! Instances are small enough that every unit sequence up to the length
//! limit can be scored, which gives a reference answer for the beam search.

use std::sync::Arc;

use jointbpe_core::acoustic::{AmScorer, TableAm, Utterance};
use jointbpe_core::decoder::{blend, DecoderConfig, SecondSystem};
use jointbpe_core::lexicon::{Lexicon, PrefixTree};
use jointbpe_core::lm::{LanguageModel, NGramLm, SymbolId, Vocab};
use jointbpe_core::multilevel::{MultiLevelConfig, MultiLevelLm};
use jointbpe_core::subword::{encode_corpus, spell, BpeModel, UnitMode};
use jointbpe_core::symbols::{weighted, UNK};
use rand::seq::IndexedRandom;
use rand::Rng;

pub const MAX_UNITS: usize = 8;
pub const MAX_LEN: usize = 5;

const PHONES: [&str; 4] = ["AA", "B", "K", "S"];
const LETTERS: [char; 4] = ['a', 'b', 'c', 'd'];

/// Second system of a joint instance.
pub struct Verifier {
    pub bpe: BpeModel,
    pub lm: NGramLm,
    pub am: TableAm,
}

pub struct Instance {
    pub lexicon: Lexicon,
    pub bpe: BpeModel,
    pub mlm: MultiLevelLm,
    pub am: TableAm,
    pub beta: f64,
    pub verifier: Option<Verifier>,
}

impl Instance {
    pub fn second(&self) -> Option<SecondSystem<'_>> {
        self.verifier.as_ref().map(|v| SecondSystem {
            am: &v.am,
            lm: &v.lm,
            bpe: &v.bpe,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        self.mlm.subword_vocab()
    }

    /// A configuration under which the beam never prunes.
    pub fn exhaustive_config(&self, gamma: f64) -> DecoderConfig {
        DecoderConfig {
            beamsize: 1_000_000,
            beta: self.beta,
            gamma,
            max_steps: MAX_LEN + 1,
            end_window: 1,
            end_margin: f64::INFINITY,
        }
    }
}

/// One complete path and its final score.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub ys: Vec<String>,
    pub words: Vec<String>,
    pub score: f64,
}

/// Random instance with up to [`MAX_UNITS`] subwords and bigram LMs.
pub fn tiny_single<R: Rng>(rng: &mut R) -> Instance {
    let n_words = rng.random_range(3..=6);
    let phones = &PHONES[..rng.random_range(2..=3)];
    let mut entries: Vec<(String, Vec<String>)> = Vec::new();
    for i in 0..n_words {
        let pron = if i > 0 && rng.random_bool(0.25) {
            entries.choose(rng).unwrap().1.clone()
        } else {
            random_pron(rng, phones)
        };
        entries.push((format!("w{i}"), pron));
    }
    let lexicon = Lexicon::from_entries(entries.iter().map(|(w, p)| (w, p))).unwrap();
    build(rng, lexicon, None)
}

/// Random joint instance over a five-word lexicon.
pub fn tiny_joint<R: Rng>(rng: &mut R, impossible_rate2: f64) -> Instance {
    let phones = &PHONES[..3];
    let mut entries: Vec<(String, Vec<String>)> = Vec::new();
    while entries.len() < 5 {
        let len = rng.random_range(1..=3);
        let word: String = (0..len).map(|_| *LETTERS.choose(rng).unwrap()).collect();
        if entries.iter().any(|(w, _)| *w == word) {
            continue;
        }
        let pron = if !entries.is_empty() && rng.random_bool(0.2) {
            entries.choose(rng).unwrap().1.clone()
        } else {
            random_pron(rng, phones)
        };
        entries.push((word, pron));
    }
    let lexicon = Lexicon::from_entries(entries.iter().map(|(w, p)| (w, p))).unwrap();
    build(rng, lexicon, Some(impossible_rate2))
}

fn random_pron<R: Rng>(rng: &mut R, phones: &[&str]) -> Vec<String> {
    let len = rng.random_range(1..=3);
    (0..len)
        .map(|_| phones.choose(rng).unwrap().to_string())
        .collect()
}

fn random_sentences<R: Rng>(rng: &mut R, lexicon: &Lexicon, n: usize) -> Vec<Vec<String>> {
    let words: Vec<&str> = lexicon.words().collect();
    (0..n)
        .map(|_| {
            (0..rng.random_range(1..=4))
                .map(|_| words.choose(rng).unwrap().to_string())
                .collect()
        })
        .collect()
}

fn capped_bpe<R: Rng>(rng: &mut R, words: &[Vec<String>], joiner: &str, cap: usize) -> BpeModel {
    let full = BpeModel::train(words, usize::MAX, '_', joiner).unwrap();
    let base = full.base_vocab().len();
    let target = (base + rng.random_range(0..=2)).min(cap.max(base));
    BpeModel::train(words, target, '_', joiner).unwrap()
}

fn build<R: Rng>(rng: &mut R, lexicon: Lexicon, verifier: Option<f64>) -> Instance {
    let prons: Vec<Vec<String>> = lexicon.iter().map(|(_, p)| p.to_vec()).collect();
    let bpe = capped_bpe(rng, &prons, "+", MAX_UNITS);
    let tree = PrefixTree::build(&lexicon, &bpe, UnitMode::Phone);

    let sentences = random_sentences(rng, &lexicon, 12);
    let sub_corpus: Vec<Vec<String>> = sentences
        .iter()
        .map(|s| encode_corpus(s, Some(&lexicon), &bpe, UnitMode::Phone))
        .collect();
    let sub =
        NGramLm::train_with_vocab(&sub_corpus, bpe.vocab(), 2, rng.random_range(0.1..1.0)).unwrap();
    let word =
        NGramLm::train_with_vocab(&sentences, lexicon.words(), 2, rng.random_range(0.1..1.0))
            .unwrap();
    let cfg = MultiLevelConfig {
        alpha: *[0.0, 0.3, 0.6, 1.0].choose(rng).unwrap(),
        oov_penalty: rng.random_range(-6.0..-1.0),
        premask: rng.random_bool(0.5),
    };
    let mlm = MultiLevelLm::new(Arc::new(sub), Arc::new(word), Arc::new(tree), cfg).unwrap();
    let am = random_table(rng, mlm.subword_vocab(), MAX_LEN + 1, 0.1);
    let beta = rng.random_range(0.2..1.5);

    let verifier = verifier.map(|rate| {
        let spellings: Vec<Vec<String>> = lexicon.words().map(spell).collect();
        let bpe2 = capped_bpe(rng, &spellings, "", usize::MAX);
        let corpus2: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| encode_corpus(s, None, &bpe2, UnitMode::Char))
            .collect();
        let lm2 = NGramLm::train_with_vocab(&corpus2, bpe2.vocab(), 2, rng.random_range(0.1..1.0))
            .unwrap();
        let am2 = random_table(rng, lm2.vocab(), 12, rate);
        Verifier {
            bpe: bpe2,
            lm: lm2,
            am: am2,
        }
    });
    Instance {
        lexicon,
        bpe,
        mlm,
        am,
        beta,
        verifier,
    }
}

/// Log-softmax rows of random scores; each non-`<sos>` entry is `-inf` with
/// probability `impossible_rate`.
pub fn random_table<R: Rng>(
    rng: &mut R,
    vocab: &Vocab,
    rows: usize,
    impossible_rate: f64,
) -> TableAm {
    let rows = (0..rows)
        .map(|_| {
            let mut row: Vec<f64> = (0..vocab.len())
                .map(|i| {
                    if i as SymbolId == Vocab::SOS || rng.random_bool(impossible_rate) {
                        f64::NEG_INFINITY
                    } else {
                        rng.random_range(-4.0..0.0)
                    }
                })
                .collect();
            let z = row
                .iter()
                .filter(|v| v.is_finite())
                .map(|v| v.exp())
                .sum::<f64>()
                .ln();
            if z.is_finite() {
                row.iter_mut().for_each(|v| *v -= z);
            }
            row
        })
        .collect();
    TableAm::new(vocab.clone(), rows).unwrap()
}

/// Table that allows exactly `path` then `<eos>`: every other unit at each
/// position scores `-inf`.
pub fn forced_table<S: AsRef<str>>(vocab: &Vocab, path: &[S], score: f64) -> TableAm {
    let mut rows = Vec::new();
    for unit in path
        .iter()
        .map(|s| s.as_ref())
        .chain([jointbpe_core::symbols::EOS])
    {
        let mut row = vec![f64::NEG_INFINITY; vocab.len()];
        row[vocab.id(unit).expect("path unit in vocabulary") as usize] = score;
        rows.push(row);
    }
    TableAm::new(vocab.clone(), rows).unwrap()
}

/// Scores every path of at most [`MAX_LEN`] units followed by `<eos>`,
/// one entry per homophone reading. With a verifier and `gamma > 0` the
/// verifier's score of the word sequence is blended in.
pub fn enumerate(inst: &Instance, gamma: f64) -> Vec<Scored> {
    let x = Utterance::new("tiny");
    let mut out = Vec::new();
    let mut ys = vec![Vocab::SOS];
    let start = inst.mlm.start();
    walk(
        inst,
        gamma,
        &x,
        &mut ys,
        vec![start],
        Vec::new(),
        0.0,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn walk(
    inst: &Instance,
    gamma: f64,
    x: &Utterance,
    ys: &mut Vec<SymbolId>,
    results: Vec<jointbpe_core::multilevel::ForwardResult>,
    words: Vec<String>,
    sc1: f64,
    out: &mut Vec<Scored>,
) {
    let vocab = inst.vocab();
    let am = inst.am.score(x, ys);
    for r in results {
        let mut ws = words.clone();
        ws.extend(r.word.clone());
        for y in 0..vocab.len() as SymbolId {
            if y == Vocab::SOS {
                continue;
            }
            let c = am[y as usize] + weighted(inst.beta, r.la_scores[y as usize]);
            if c == f64::NEG_INFINITY {
                continue;
            }
            ys.push(y);
            if y == Vocab::EOS {
                for fin in inst.mlm.finalize(&r.state) {
                    let mut fw = ws.clone();
                    fw.extend(fin.word.clone());
                    let total1 = sc1 + c;
                    let c_fin = weighted(inst.beta, fin.adjust);
                    let score = match &inst.verifier {
                        Some(v) => {
                            blend(gamma, total1, verifier_score(v, inst.beta, x, &fw)) + c_fin
                        }
                        None => total1 + c_fin,
                    };
                    out.push(Scored {
                        ys: ys.iter().map(|&i| vocab.symbol(i).to_string()).collect(),
                        words: fw,
                        score,
                    });
                }
            } else if ys.len() <= MAX_LEN + 1 {
                let next = inst.mlm.forward(&r.state, y);
                walk(inst, gamma, x, ys, next, ws.clone(), sc1 + c, out);
            }
            ys.pop();
        }
    }
}

/// Score of `words` under the verifier alone, `<eos>` included.
pub fn verifier_score(v: &Verifier, beta: f64, x: &Utterance, words: &[String]) -> f64 {
    let vocab = v.lm.vocab();
    let mut units = vec![Vocab::SOS];
    for w in words {
        if w == UNK {
            units.push(Vocab::UNK);
        } else {
            units.extend(
                v.bpe
                    .encode_word(&spell(w))
                    .iter()
                    .map(|u| vocab.id_or_unk(u)),
            );
        }
    }
    units.push(Vocab::EOS);
    let mut state = v.lm.initial_state();
    let mut total = 0.0;
    for t in 1..units.len() {
        let (next, logp) = v.lm.forward_id(&state, units[t - 1]);
        state = next;
        total += v.am.score(x, &units[..t])[units[t] as usize] + weighted(beta, logp[units[t]]);
    }
    total
}

/// Best score and every word sequence within `tol` of it.
pub fn argmax(paths: &[Scored], tol: f64) -> Option<(f64, Vec<Vec<String>>)> {
    let best = paths
        .iter()
        .map(|p| p.score)
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return None;
    }
    let mut words: Vec<Vec<String>> = paths
        .iter()
        .filter(|p| p.score >= best - tol)
        .map(|p| p.words.clone())
        .collect();
    words.sort();
    words.dedup();
    Some((best, words))
}
