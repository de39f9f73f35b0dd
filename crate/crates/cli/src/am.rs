//! Acoustic scorer sources for batch decoding.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use jointbpe_core::acoustic::{AmScorer, OracleAm, Utterance};
use jointbpe_core::lm::{SymbolId, Vocab};
use jointbpe_core::subword::BpeModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::files::{self, Transcript};

/// Where per-utterance scores come from.
#[derive(Debug, Clone, PartialEq)]
pub enum AmSource {
    /// A directory of `<id>.am` tables.
    Table(PathBuf),
    /// Scores derived from reference transcripts.
    Oracle(PathBuf),
}

impl std::str::FromStr for AmSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("table", p)) => Ok(AmSource::Table(p.into())),
            Some(("oracle", p)) => Ok(AmSource::Oracle(p.into())),
            _ if !s.is_empty() => Ok(AmSource::Table(s.into())),
            _ => Err(Error::Usage("empty acoustic scorer source".into())),
        }
    }
}

/// How oracle scores are corrupted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleNoise {
    /// Standard deviation of the Gaussian noise on every logit; 0 gives a
    /// clean [`OracleAm`].
    pub sigma: f64,
    /// Logit bonus of the reference unit.
    pub margin: f64,
    pub seed: u64,
    /// Score of non-reference units in the clean case.
    pub penalty: f64,
}

impl Default for OracleNoise {
    fn default() -> Self {
        OracleNoise {
            sigma: 0.0,
            margin: 8.0,
            seed: 0,
            penalty: -10.0,
        }
    }
}

/// A scorer for one utterance and the output length it expects, if known.
pub struct Scorer {
    pub am: Box<dyn AmScorer>,
    pub length_bound: Option<usize>,
}

/// Base-token spans of every unit of a vocabulary: what each unit covers
/// of a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSpans {
    tokens: Vec<Vec<String>>,
}

impl UnitSpans {
    pub fn new(vocab: &Vocab, bpe: &BpeModel) -> Self {
        let tokens = vocab
            .symbols()
            .iter()
            .enumerate()
            .map(|(id, s)| match id as SymbolId {
                Vocab::SOS | Vocab::EOS => Vec::new(),
                _ => bpe
                    .unit_tokens(s)
                    .map(<[String]>::to_vec)
                    .unwrap_or_else(|| vec![s.clone()]),
            })
            .collect();
        UnitSpans { tokens }
    }

    fn len(&self, unit: SymbolId) -> usize {
        self.tokens[unit as usize].len()
    }
}

/// Noisy oracle that follows the reference by base-token position.
///
/// The position of a prefix is the number of base tokens its units cover,
/// right or wrong, so a substitution does not throw later positions off
/// and all segmentations of the reference are scored alike. At each
/// position every unit whose tokens continue the reference gets `margin`
/// on top of Gaussian noise. Ending early costs `margin` per reference
/// token left unexplained. Rows are log-softmax normalized and `<sos>`
/// scores `-inf`.
#[derive(Debug, Clone)]
pub struct NoisyOracleAm {
    vocab: Vocab,
    spans: Arc<UnitSpans>,
    rows: Vec<Vec<f64>>,
}

impl NoisyOracleAm {
    pub fn new(
        vocab: &Vocab,
        spans: Arc<UnitSpans>,
        reference: &[SymbolId],
        margin: f64,
        sigma: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let tokens: Vec<&String> = reference
            .iter()
            .flat_map(|&u| &spans.tokens[u as usize])
            .collect();
        let rows = (0..=tokens.len())
            .map(|t| {
                let rest = &tokens[t..];
                let mut row: Vec<f64> = (0..vocab.len() as SymbolId)
                    .map(|u| {
                        let z: f64 = StandardNormal.sample(rng);
                        let span = &spans.tokens[u as usize];
                        let hit = if u == Vocab::EOS {
                            rest.is_empty()
                        } else {
                            !span.is_empty()
                                && rest.len() >= span.len()
                                && span.iter().zip(rest).all(|(a, b)| a == *b)
                        };
                        if u == Vocab::SOS {
                            f64::NEG_INFINITY
                        } else if u == Vocab::EOS && !hit {
                            sigma * z - margin * rest.len() as f64
                        } else {
                            sigma * z + if hit { margin } else { 0.0 }
                        }
                    })
                    .collect();
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let norm = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                row.iter_mut().for_each(|v| *v -= norm);
                row
            })
            .collect();
        NoisyOracleAm {
            vocab: vocab.clone(),
            spans,
            rows,
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

impl AmScorer for NoisyOracleAm {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn score(&self, _x: &Utterance, ys: &[SymbolId]) -> Vec<f64> {
        let t: usize = ys.iter().skip(1).map(|&u| self.spans.len(u)).sum();
        self.rows[t.min(self.rows.len() - 1)].clone()
    }
}

/// Builds one scorer per utterance from reference units, in the order of
/// `references`. `stream` separates the noise of different systems.
pub fn oracle_scorers(
    vocab: &Vocab,
    bpe: &BpeModel,
    references: &[Vec<String>],
    noise: &OracleNoise,
    stream: u64,
) -> Result<Vec<Scorer>> {
    let spans = Arc::new(UnitSpans::new(vocab, bpe));
    references
        .iter()
        .enumerate()
        .map(|(i, units)| {
            let am: Box<dyn AmScorer> = if noise.sigma > 0.0 {
                let ids: Vec<SymbolId> = units.iter().map(|u| vocab.id_or_unk(u)).collect();
                let mut rng = utterance_rng(noise.seed, stream, i as u64);
                Box::new(NoisyOracleAm::new(
                    vocab,
                    spans.clone(),
                    &ids,
                    noise.margin,
                    noise.sigma,
                    &mut rng,
                ))
            } else {
                Box::new(OracleAm::new(vocab.clone(), units, noise.penalty)?)
            };
            Ok(Scorer {
                am,
                length_bound: Some(units.len() + 1),
            })
        })
        .collect()
}

fn utterance_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) << 20);
    rng
}

/// Loads the tables of `ids` from `dir`, checking each against `vocab`.
pub fn table_scorers(dir: &Path, ids: &[String], vocab: &Vocab) -> Result<Vec<Scorer>> {
    let available: BTreeMap<String, PathBuf> = files::list_am_tables(dir)?.into_iter().collect();
    ids.iter()
        .map(|id| {
            let path = available.get(id).ok_or_else(|| Error::Config {
                path: dir.to_path_buf(),
                msg: format!("no table {id}.am for utterance {id}"),
            })?;
            let table = files::load_am_table(path)?;
            if table.vocab() != vocab {
                return Err(Error::Config {
                    path: path.clone(),
                    msg: "table vocabulary differs from the subword LM vocabulary".into(),
                });
            }
            let bound = table.rows().len();
            Ok(Scorer {
                am: Box::new(table),
                length_bound: Some(bound),
            })
        })
        .collect()
}

/// Utterance ids a source provides on its own.
pub fn source_utterances(source: &AmSource) -> Result<Vec<Transcript>> {
    match source {
        AmSource::Table(dir) => Ok(files::list_am_tables(dir)?
            .into_iter()
            .map(|(id, _)| Transcript {
                id,
                words: Vec::new(),
            })
            .collect()),
        AmSource::Oracle(path) => files::load_transcripts(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use jointbpe_core::symbols::EOS;

    fn spans_fixture() -> (Vocab, BpeModel, Arc<UnitSpans>) {
        let bpe = BpeModel::train([["a", "b"], ["a", "b"], ["c", "a"]], 6, '_', "").unwrap();
        let vocab = Vocab::new(bpe.vocab());
        let spans = Arc::new(UnitSpans::new(&vocab, &bpe));
        (vocab, bpe, spans)
    }

    #[test]
    fn noisy_rows_are_normalized_and_seeded() {
        let (vocab, _, spans) = spans_fixture();
        let reference = [vocab.id("_ab").unwrap(), vocab.id("_c").unwrap()];
        let make = |stream| {
            NoisyOracleAm::new(
                &vocab,
                spans.clone(),
                &reference,
                4.0,
                1.0,
                &mut utterance_rng(5, stream, 1),
            )
        };
        assert_eq!(make(0).rows(), make(0).rows());
        assert_ne!(make(0).rows(), make(1).rows());
        // one row per base token plus the end
        assert_eq!(make(0).rows().len(), 4);
        for row in make(0).rows() {
            let mass: f64 = row.iter().map(|v| v.exp()).sum();
            assert!((mass - 1.0).abs() < 1e-12);
            assert_eq!(row[Vocab::SOS as usize], f64::NEG_INFINITY);
        }
    }

    #[test]
    fn noisy_oracle_tracks_token_position() {
        let (vocab, _, spans) = spans_fixture();
        let id = |u: &str| vocab.id(u).unwrap();
        let reference = [id("_ab"), id("_c")];
        let am = NoisyOracleAm::new(
            &vocab,
            spans,
            &reference,
            20.0,
            1e-9,
            &mut utterance_rng(0, 0, 0),
        );
        let x = Utterance::new("u");
        let good = |ys: &[SymbolId], u: &str| am.score(&x, ys)[id(u) as usize] > -1.0;
        // both segmentations of the first word continue the reference
        assert!(good(&[0], "_ab") && good(&[0], "_a"));
        assert!(good(&[0, id("_a")], "b"));
        assert!(good(&[0, id("_ab")], "_c"));
        // a wrong unit of the same length keeps the position
        assert!(good(&[0, id("_a"), id("a")], "_c"));
        assert!(good(&[0, id("_ab"), id("_c")], EOS));
        assert!(!good(&[0], "_c"));
    }

    #[test]
    fn source_syntax() {
        assert_eq!(
            "oracle:r.txt".parse::<AmSource>().unwrap(),
            AmSource::Oracle("r.txt".into())
        );
        assert_eq!(
            "table:d".parse::<AmSource>().unwrap(),
            AmSource::Table("d".into())
        );
        assert_eq!(
            "d".parse::<AmSource>().unwrap(),
            AmSource::Table("d".into())
        );
        assert!("".parse::<AmSource>().is_err());
    }
}
