//! Acoustic scoring contract and synthetic scorers.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::lm::{SymbolId, Vocab};
use crate::{Error, Result};

/// One input to decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub id: String,
}

impl Utterance {
    pub fn new(id: impl Into<String>) -> Self {
        Utterance { id: id.into() }
    }
}

/// Scores the next subword given the input and the prefix decoded so far.
///
/// `ys` starts with `<sos>`; the returned vector is indexed by the scorer's
/// vocabulary and holds finite values or `-inf`.
pub trait AmScorer: Send + Sync {
    fn vocab(&self) -> &Vocab;
    fn score(&self, x: &Utterance, ys: &[SymbolId]) -> Vec<f64>;
}

impl<T: AmScorer + ?Sized> AmScorer for &T {
    fn vocab(&self) -> &Vocab {
        (**self).vocab()
    }

    fn score(&self, x: &Utterance, ys: &[SymbolId]) -> Vec<f64> {
        (**self).score(x, ys)
    }
}

/// Fixed score matrix: row `t` scores the `t`-th output position. Prefixes
/// longer than the table reuse the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct TableAm {
    vocab: Vocab,
    rows: Vec<Vec<f64>>,
}

impl TableAm {
    pub fn new(vocab: Vocab, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::MalformedAmTable {
                line: 0,
                msg: "table has no rows".into(),
            });
        }
        if let Some(i) = rows.iter().position(|r| r.len() != vocab.len()) {
            return Err(Error::MalformedAmTable {
                line: i + 1,
                msg: format!(
                    "row has {} values, vocabulary has {}",
                    rows[i].len(),
                    vocab.len()
                ),
            });
        }
        if rows
            .iter()
            .flatten()
            .any(|v| v.is_nan() || *v == f64::INFINITY)
        {
            return Err(Error::MalformedAmTable {
                line: 0,
                msg: "scores must be finite or -inf".into(),
            });
        }
        Ok(TableAm { vocab, rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Parses `am-table v1`, a vocabulary line, then one row per line.
    ///
    /// Columns may list the vocabulary in any order; symbols of the
    /// canonical vocabulary missing from the header score `-inf`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::MalformedAmTable {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, "am-table v1")) => {}
            Some((n, _)) => return Err(bad(n, "expected `am-table v1` header")),
            None => return Err(bad(1, "empty file")),
        }
        let (vn, header) = lines
            .next()
            .ok_or_else(|| bad(2, "missing vocabulary line"))?;
        let columns: Vec<&str> = header.split_whitespace().collect();
        let vocab = Vocab::new(&columns);
        let mut seen = vec![false; vocab.len()];
        let mut map = Vec::with_capacity(columns.len());
        for c in &columns {
            let id = vocab.id(c).expect("vocab built from columns") as usize;
            if core::mem::replace(&mut seen[id], true) {
                return Err(bad(vn, &format!("duplicate vocabulary entry {c}")));
            }
            map.push(id);
        }
        let mut rows = Vec::new();
        for (n, line) in lines {
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| bad(n, &format!("bad score {v:?}")))
                })
                .collect::<Result<_>>()?;
            if values.len() != columns.len() {
                return Err(bad(
                    n,
                    &format!(
                        "row has {} values, header has {}",
                        values.len(),
                        columns.len()
                    ),
                ));
            }
            let mut row = vec![f64::NEG_INFINITY; vocab.len()];
            for (v, &id) in values.into_iter().zip(&map) {
                row[id] = v;
            }
            rows.push(row);
        }
        Self::new(vocab, rows)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("am-table v1\n");
        s.push_str(&self.vocab.symbols().join(" "));
        s.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
        s
    }
}

impl AmScorer for TableAm {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn score(&self, _x: &Utterance, ys: &[SymbolId]) -> Vec<f64> {
        let t = ys.len().saturating_sub(1).min(self.rows.len() - 1);
        self.rows[t].clone()
    }
}

/// Scores 0 for the next reference unit (`<eos>` once the reference is
/// used up) and `mismatch_penalty` for everything else. Off-reference
/// prefixes get the penalty everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleAm {
    vocab: Vocab,
    reference: Vec<SymbolId>,
    mismatch_penalty: f64,
}

impl OracleAm {
    pub fn new<S: AsRef<str>>(
        vocab: Vocab,
        reference: &[S],
        mismatch_penalty: f64,
    ) -> Result<Self> {
        if mismatch_penalty.is_nan() || mismatch_penalty >= 0.0 {
            return Err(Error::InvalidConfig(
                "mismatch penalty must be negative".into(),
            ));
        }
        let reference = reference
            .iter()
            .map(|s| vocab.id_or_unk(s.as_ref()))
            .collect();
        Ok(OracleAm {
            vocab,
            reference,
            mismatch_penalty,
        })
    }

    pub fn reference(&self) -> &[SymbolId] {
        &self.reference
    }
}

impl AmScorer for OracleAm {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn score(&self, _x: &Utterance, ys: &[SymbolId]) -> Vec<f64> {
        let mut out = vec![self.mismatch_penalty; self.vocab.len()];
        let prefix = ys.get(1..).unwrap_or(&[]);
        let on_track = ys.first() == Some(&Vocab::SOS)
            && prefix.len() <= self.reference.len()
            && self.reference.starts_with(prefix);
        if on_track {
            let next = self
                .reference
                .get(prefix.len())
                .copied()
                .unwrap_or(Vocab::EOS);
            out[next as usize] = 0.0;
        }
        out
    }
}
