use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary size {requested} is smaller than the base vocabulary ({base})")]
    InvalidVocabSize { requested: usize, base: usize },
    #[error("invalid token {0:?}")]
    InvalidToken(String),
    #[error("malformed subword sequence: {0}")]
    MalformedSequence(String),
    #[error("malformed BPE model at line {line}: {msg}")]
    MalformedModel { line: usize, msg: String },
    #[error("malformed lexicon entry at line {line}: {text:?}")]
    MalformedEntry { line: usize, text: String },
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("malformed ARPA file at line {line}: {msg}")]
    MalformedArpa { line: usize, msg: String },
    #[error("malformed AM table at line {line}: {msg}")]
    MalformedAmTable { line: usize, msg: String },
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty reference at line {0}")]
    EmptyReference(usize),
}
