//! A decoding system: lexicon, BPE model and the two LMs behind it.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use jointbpe_core::acoustic::AmScorer;
use jointbpe_core::decoder::SecondSystem;
use jointbpe_core::lexicon::{Lexicon, PrefixTree};
use jointbpe_core::lm::{LanguageModel, NGramLm, Vocab};
use jointbpe_core::multilevel::{MultiLevelConfig, MultiLevelLm};
use jointbpe_core::subword::{encode_corpus, BpeModel, UnitMode};

use crate::error::{Error, Result};
use crate::files;

pub struct System {
    pub mode: UnitMode,
    pub lexicon: Lexicon,
    pub bpe: BpeModel,
    pub mlm: MultiLevelLm,
}

impl System {
    pub fn new(
        mode: UnitMode,
        lexicon: Lexicon,
        bpe: BpeModel,
        subword_lm: NGramLm,
        word_lm: NGramLm,
        cfg: MultiLevelConfig,
    ) -> Result<Self> {
        let tree = PrefixTree::build(&lexicon, &bpe, mode);
        let mlm = MultiLevelLm::new(Arc::new(subword_lm), Arc::new(word_lm), Arc::new(tree), cfg)?;
        Ok(System {
            mode,
            lexicon,
            bpe,
            mlm,
        })
    }

    pub fn load(paths: &SystemPaths, mode: UnitMode, cfg: MultiLevelConfig) -> Result<Self> {
        let lexicon = files::load_lexicon(&paths.lexicon)?;
        let bpe = files::load_bpe(&paths.bpe)?;
        let sub = files::load_arpa(&paths.subword_lm)?;
        let word = files::load_arpa(&paths.word_lm)?;
        Self::new(mode, lexicon, bpe, sub, word, cfg).map_err(|e| match e {
            Error::Core(source) => Error::format(&paths.subword_lm, source),
            other => other,
        })
    }

    /// Subword sequence of a word sequence; unknown words become `<unk>`.
    pub fn units_of<W: AsRef<str>>(&self, words: &[W]) -> Vec<String> {
        encode_corpus(words, Some(&self.lexicon), &self.bpe, self.mode)
    }
}

#[derive(Debug, Clone)]
pub struct SystemPaths {
    pub lexicon: PathBuf,
    pub bpe: PathBuf,
    pub subword_lm: PathBuf,
    pub word_lm: PathBuf,
}

/// The verifying side of joint decoding: a character BPE model and a
/// subword LM over its units.
pub struct Verifier {
    pub bpe: BpeModel,
    pub lm: NGramLm,
}

impl Verifier {
    pub fn new(bpe: BpeModel, lm: NGramLm) -> Result<Self> {
        if let Some(u) = bpe.vocab().find(|u| lm.vocab().id(u).is_none()) {
            return Err(Error::Usage(format!(
                "second-system unit {u:?} is missing from its LM"
            )));
        }
        Ok(Verifier { bpe, lm })
    }

    pub fn load(bpe: &Path, lm: &Path) -> Result<Self> {
        let model = files::load_bpe(bpe)?;
        let lm_model = files::load_arpa(lm)?;
        Self::new(model, lm_model).map_err(|e| match e {
            Error::Usage(msg) => Error::Config {
                path: lm.to_path_buf(),
                msg,
            },
            other => other,
        })
    }

    pub fn units_of<W: AsRef<str>>(&self, words: &[W]) -> Vec<String> {
        encode_corpus(words, None, &self.bpe, UnitMode::Char)
    }

    pub fn lm_vocab(&self) -> &Vocab {
        self.lm.vocab()
    }

    pub fn with_am<'a>(&'a self, am: &'a dyn AmScorer) -> SecondSystem<'a> {
        SecondSystem {
            am,
            lm: &self.lm as &dyn LanguageModel,
            bpe: &self.bpe,
        }
    }
}
