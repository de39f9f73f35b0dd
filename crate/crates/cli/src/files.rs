//! Loading and saving the on-disk formats.

use std::fs;
use std::path::{Path, PathBuf};

use jointbpe_core::acoustic::TableAm;
use jointbpe_core::lexicon::Lexicon;
use jointbpe_core::lm::NGramLm;
use jointbpe_core::subword::BpeModel;

use crate::error::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    Lexicon::parse(&read_text(path)?).map_err(|e| Error::format(path, e))
}

pub fn load_bpe(path: &Path) -> Result<BpeModel> {
    BpeModel::parse(&read_text(path)?).map_err(|e| Error::format(path, e))
}

pub fn load_arpa(path: &Path) -> Result<NGramLm> {
    NGramLm::read_arpa(&read_text(path)?).map_err(|e| Error::format(path, e))
}

pub fn load_am_table(path: &Path) -> Result<TableAm> {
    TableAm::parse(&read_text(path)?).map_err(|e| Error::format(path, e))
}

/// Whitespace-separated tokens, one sentence per non-empty line.
pub fn load_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = read_text(path)?;
    Ok(text
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect())
}

/// One utterance of a transcript file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub id: String,
    pub words: Vec<String>,
}

/// Parses `id<TAB>words` lines. The words may be empty.
pub fn parse_transcripts(text: &str) -> std::result::Result<Vec<Transcript>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, words) = line.split_once('\t').unwrap_or((line, ""));
        let id = id.trim();
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err((i + 1, format!("bad utterance id in {line:?}")));
        }
        out.push(Transcript {
            id: id.to_string(),
            words: words.split_whitespace().map(str::to_string).collect(),
        });
    }
    Ok(out)
}

pub fn load_transcripts(path: &Path) -> Result<Vec<Transcript>> {
    parse_transcripts(&read_text(path)?).map_err(|(line, msg)| Error::Config {
        path: path.to_path_buf(),
        msg: format!("line {line}: {msg}"),
    })
}

pub fn format_transcripts<'a>(items: impl IntoIterator<Item = &'a Transcript>) -> String {
    let mut s = String::new();
    for t in items {
        s.push_str(&t.id);
        s.push('\t');
        s.push_str(&t.words.join(" "));
        s.push('\n');
    }
    s
}

/// `<id>.am` files of a directory, sorted by id.
pub fn list_am_tables(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "am") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}
