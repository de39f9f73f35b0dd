//! Synthetic recognition task: a small lexicon with homophones, a word
//! bigram grammar, and noisy oracle scorers for a phone and a character
//! system.

use std::collections::BTreeSet;

use jointbpe_core::lexicon::Lexicon;
use jointbpe_core::lm::NGramLm;
use jointbpe_core::subword::{encode_corpus, spell, BpeModel, UnitMode};
use jointbpe_core::wer::{align, ErrorCounts};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::am::{oracle_scorers, OracleNoise};
use crate::batch::{decode_batch, Decoded, Job};
use crate::error::Result;
use crate::files::Transcript;
use crate::settings::Settings;
use crate::system::{System, Verifier};

/// Phones with their possible spellings.
const CONSONANTS: &[(&str, &[&str])] = &[
    ("P", &["p"]),
    ("B", &["b"]),
    ("T", &["t"]),
    ("D", &["d"]),
    ("K", &["k", "c"]),
    ("G", &["g"]),
    ("S", &["s"]),
    ("Z", &["z", "s"]),
    ("F", &["f", "ph"]),
    ("M", &["m"]),
    ("N", &["n"]),
    ("L", &["l"]),
    ("R", &["r"]),
];
const VOWELS: &[(&str, &[&str])] = &[
    ("AA", &["a"]),
    ("EH", &["e"]),
    ("IY", &["ee", "ea"]),
    ("UW", &["oo", "u"]),
    ("OW", &["o", "oa"]),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskConfig {
    pub words: usize,
    pub homophone_pairs: usize,
    pub train_sentences: usize,
    pub test_utterances: usize,
    pub seed: u64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            words: 50,
            homophone_pairs: 8,
            train_sentences: 2000,
            test_utterances: 200,
            seed: 0,
        }
    }
}

pub struct Task {
    pub lexicon: Lexicon,
    pub train: Vec<Vec<String>>,
    pub test: Vec<Transcript>,
}

impl Task {
    pub fn generate(cfg: &TaskConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let entries = lexicon_entries(&mut rng, cfg.words, cfg.homophone_pairs);
        let words: Vec<String> = entries.iter().map(|(w, _)| w.clone()).collect();
        let lexicon = Lexicon::from_entries(entries).expect("generated lexicon is well formed");
        let grammar = Grammar::random(&mut rng, words.len());
        let train = (0..cfg.train_sentences)
            .map(|_| grammar.sentence(&mut rng, &words))
            .collect();
        let test = (0..cfg.test_utterances)
            .map(|i| Transcript {
                id: format!("utt{i:04}"),
                words: grammar.sentence(&mut rng, &words),
            })
            .collect();
        Task {
            lexicon,
            train,
            test,
        }
    }

    pub fn lexicon_text(&self) -> String {
        self.lexicon
            .iter()
            .map(|(w, p)| format!("{w} {}\n", p.join(" ")))
            .collect()
    }

    pub fn train_text(&self) -> String {
        self.train.iter().map(|s| s.join(" ") + "\n").collect()
    }
}

fn lexicon_entries(
    rng: &mut ChaCha8Rng,
    n_words: usize,
    homophone_pairs: usize,
) -> Vec<(String, Vec<String>)> {
    let mut entries: Vec<(String, Vec<String>)> = Vec::new();
    let mut spellings = BTreeSet::new();
    let mut prons = BTreeSet::new();
    while entries.len() < n_words - homophone_pairs {
        let syllables = rng.random_range(1..=2);
        let mut pron = Vec::new();
        for _ in 0..syllables {
            pron.push(CONSONANTS.choose(rng).unwrap().0.to_string());
            pron.push(VOWELS.choose(rng).unwrap().0.to_string());
            if rng.random_bool(0.5) {
                pron.push(CONSONANTS.choose(rng).unwrap().0.to_string());
            }
        }
        let word = spell_pron(rng, &pron);
        if !prons.contains(&pron) && spellings.insert(word.clone()) {
            prons.insert(pron.clone());
            entries.push((word, pron));
        }
    }
    let mut attempts = 0;
    while entries.len() < n_words {
        attempts += 1;
        assert!(attempts < 100_000, "cannot find enough homophone spellings");
        let pron = entries[rng.random_range(0..n_words - homophone_pairs)]
            .1
            .clone();
        let word = spell_pron(rng, &pron);
        if spellings.insert(word.clone()) {
            entries.push((word, pron));
        }
    }
    entries
}

fn spell_pron(rng: &mut ChaCha8Rng, pron: &[String]) -> String {
    pron.iter()
        .map(|p| {
            let (_, options) = CONSONANTS
                .iter()
                .chain(VOWELS)
                .find(|(q, _)| q == p)
                .expect("known phone");
            *options.choose(rng).unwrap()
        })
        .collect()
}

/// Each word may be followed by a handful of others.
struct Grammar {
    successors: Vec<Vec<(usize, f64)>>,
}

impl Grammar {
    fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        let successors = (0..n)
            .map(|_| {
                let next = rand::seq::index::sample(rng, n, 6.min(n));
                next.into_iter()
                    .map(|w| (w, rng.random_range(0.2..1.0)))
                    .collect()
            })
            .collect();
        Grammar { successors }
    }

    fn sentence(&self, rng: &mut ChaCha8Rng, words: &[String]) -> Vec<String> {
        let len = rng.random_range(3..=8);
        let mut w = rng.random_range(0..words.len());
        let mut out = vec![words[w].clone()];
        while out.len() < len {
            let succ = &self.successors[w];
            w = succ
                .choose_weighted(rng, |s| s.1)
                .expect("non-empty successors")
                .0;
            out.push(words[w].clone());
        }
        out
    }
}

/// Models trained on a task's training text.
pub struct TaskModels {
    pub phone: System,
    pub char: System,
    pub verifier: Verifier,
}

/// Merges added on top of the base units, per system.
pub const MERGES: usize = 30;

impl TaskModels {
    pub fn train(task: &Task, settings: &Settings) -> Result<Self> {
        let tokens: Vec<&String> = task.train.iter().flatten().collect();
        let prons: Vec<Vec<String>> = tokens
            .iter()
            .map(|w| {
                task.lexicon
                    .pronunciation(w)
                    .expect("grammar words are in the lexicon")
                    .to_vec()
            })
            .collect();
        let spells: Vec<Vec<String>> = tokens.iter().map(|w| spell(w)).collect();
        let phone_bpe = train_bpe(&prons, UnitMode::Phone)?;
        let char_bpe = train_bpe(&spells, UnitMode::Char)?;

        let word_lm = NGramLm::train_with_vocab(&task.train, task.lexicon.words(), 2, 0.1)?;
        let sub_lm = |bpe: &BpeModel, mode: UnitMode| -> Result<NGramLm> {
            let corpus: Vec<Vec<String>> = task
                .train
                .iter()
                .map(|s| encode_corpus(s, Some(&task.lexicon), bpe, mode))
                .collect();
            Ok(NGramLm::train_with_vocab(&corpus, bpe.vocab(), 3, 0.1)?)
        };
        let phone_lm = sub_lm(&phone_bpe, UnitMode::Phone)?;
        let char_lm = sub_lm(&char_bpe, UnitMode::Char)?;
        let ml = settings.multilevel();
        let phone = System::new(
            UnitMode::Phone,
            task.lexicon.clone(),
            phone_bpe,
            phone_lm,
            word_lm.clone(),
            ml,
        )?;
        let char = System::new(
            UnitMode::Char,
            task.lexicon.clone(),
            char_bpe.clone(),
            char_lm.clone(),
            word_lm,
            ml,
        )?;
        let verifier = Verifier::new(char_bpe, char_lm)?;
        Ok(TaskModels {
            phone,
            char,
            verifier,
        })
    }
}

fn train_bpe(words: &[Vec<String>], mode: UnitMode) -> Result<BpeModel> {
    let base = BpeModel::train(words, usize::MAX, '_', mode.default_joiner())?
        .base_vocab()
        .len();
    Ok(BpeModel::train(
        words,
        base + MERGES,
        '_',
        mode.default_joiner(),
    )?)
}

/// WER of phone-only, char-only and joint decoding on one task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendReport {
    pub phone: f64,
    pub char: f64,
    pub joint: f64,
}

pub struct TrendRun {
    pub report: TrendReport,
    pub phone: Vec<Decoded>,
    pub char: Vec<Decoded>,
    pub joint: Vec<Decoded>,
}

/// Oracle scorers for both systems get independent noise streams.
pub fn run_trend(
    task: &Task,
    noise: &OracleNoise,
    settings: &Settings,
    threads: usize,
) -> Result<TrendRun> {
    let models = TaskModels::train(task, settings)?;
    let refs_phone: Vec<Vec<String>> = task
        .test
        .iter()
        .map(|t| models.phone.units_of(&t.words))
        .collect();
    let refs_char: Vec<Vec<String>> = task
        .test
        .iter()
        .map(|t| models.char.units_of(&t.words))
        .collect();
    let jobs = |with_second: bool, first_is_char: bool| -> Result<Vec<Job>> {
        let (sys, refs, stream) = if first_is_char {
            (&models.char, &refs_char, 1)
        } else {
            (&models.phone, &refs_phone, 0)
        };
        let first = oracle_scorers(sys.mlm.subword_vocab(), &sys.bpe, refs, noise, stream)?;
        let mut second: Vec<Option<_>> = if with_second {
            oracle_scorers(
                models.verifier.lm_vocab(),
                &models.verifier.bpe,
                &refs_char,
                noise,
                1,
            )?
            .into_iter()
            .map(Some)
            .collect()
        } else {
            task.test.iter().map(|_| None).collect()
        };
        Ok(task
            .test
            .iter()
            .zip(first)
            .zip(second.iter_mut())
            .map(|((t, am1), am2)| Job {
                id: t.id.clone(),
                am1,
                am2: am2.take(),
            })
            .collect())
    };
    let phone = decode_batch(&jobs(false, false)?, &models.phone, None, settings, threads)?;
    let char = decode_batch(&jobs(false, true)?, &models.char, None, settings, threads)?;
    let joint = decode_batch(
        &jobs(true, false)?,
        &models.phone,
        Some(&models.verifier),
        settings,
        threads,
    )?;
    let report = TrendReport {
        phone: wer(task, &phone),
        char: wer(task, &char),
        joint: wer(task, &joint),
    };
    Ok(TrendRun {
        report,
        phone,
        char,
        joint,
    })
}

fn wer(task: &Task, decoded: &[Decoded]) -> f64 {
    let mut total = ErrorCounts::default();
    for (t, d) in task.test.iter().zip(decoded) {
        total += align(&t.words, &d.transcript().words);
    }
    total.wer()
}
