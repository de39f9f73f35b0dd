//! ARPA text format. Files store log10 values; conversion to natural logs
//! happens here and nowhere else.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::LN_10;
use core::fmt::Write as _;

use super::{LanguageModel, NGramLm, SymbolId, Vocab};
use crate::symbols::{EOS, SOS};
use crate::{Error, Result};

/// Words, log10 probability, optional log10 back-off weight.
type ArpaEntry = (Vec<String>, f64, Option<f64>);

const ARPA_SOS: &str = "<s>";
const ARPA_EOS: &str = "</s>";
const LOG10_FLOOR: f64 = -99.0;

fn to_arpa_name(sym: &str) -> &str {
    match sym {
        SOS => ARPA_SOS,
        EOS => ARPA_EOS,
        other => other,
    }
}

fn from_arpa_name(sym: &str) -> &str {
    match sym {
        ARPA_SOS => SOS,
        ARPA_EOS => EOS,
        other => other,
    }
}

fn to_log10(ln: f64) -> f64 {
    if ln == f64::NEG_INFINITY {
        LOG10_FLOOR
    } else {
        ln / LN_10
    }
}

fn from_log10(l10: f64) -> f64 {
    if l10 <= LOG10_FLOOR {
        f64::NEG_INFINITY
    } else {
        l10 * LN_10
    }
}

impl NGramLm {
    pub fn write_arpa(&self) -> String {
        let vocab = self.vocab();
        let mut out = String::from("\\data\\\n");
        for n in 1..=self.order() {
            let _ = writeln!(out, "ngram {}={}", n, self.gram_count(n));
        }
        let name = |ids: &[SymbolId]| -> String {
            ids.iter()
                .map(|&id| to_arpa_name(vocab.symbol(id)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let line = |out: &mut String, logp: f64, gram: &[SymbolId]| {
            let _ = write!(out, "{}\t{}", to_log10(logp), name(gram));
            if gram.len() < self.order() {
                if let Some(bow) = self.backoff_weight(gram) {
                    let _ = write!(out, "\t{}", to_log10(bow));
                }
            }
            out.push('\n');
        };
        out.push_str("\n\\1-grams:\n");
        for (id, &logp) in self.unigram().iter().enumerate() {
            line(&mut out, logp, &[id as SymbolId]);
        }
        for (i, level) in self.higher().iter().enumerate() {
            let _ = write!(out, "\n\\{}-grams:\n", i + 2);
            for (ctx, next) in level {
                for (&w, &logp) in next {
                    let mut gram = ctx.clone();
                    gram.push(w);
                    line(&mut out, logp, &gram);
                }
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    pub fn read_arpa(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::MalformedArpa {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

        // preamble up to \data\
        loop {
            match lines.next() {
                Some((_, "\\data\\")) => break,
                Some(_) => continue,
                None => return Err(bad(text.lines().count(), "missing \\data\\ section")),
            }
        }
        let mut declared: Vec<usize> = Vec::new();
        let mut pending = None;
        for (n, line) in lines.by_ref() {
            if line.is_empty() {
                continue;
            }
            if let Some(spec) = line.strip_prefix("ngram ") {
                let (order, count) = spec
                    .split_once('=')
                    .ok_or_else(|| bad(n, "bad ngram count line"))?;
                let order: usize = order
                    .trim()
                    .parse()
                    .map_err(|_| bad(n, "bad ngram order"))?;
                let count: usize = count
                    .trim()
                    .parse()
                    .map_err(|_| bad(n, "bad ngram count"))?;
                if order != declared.len() + 1 {
                    return Err(bad(n, "ngram counts out of order"));
                }
                declared.push(count);
            } else {
                pending = Some((n, line));
                break;
            }
        }
        if declared.is_empty() {
            return Err(bad(pending.map_or(1, |(n, _)| n), "empty \\data\\ section"));
        }
        let order = declared.len();

        // raw entries: (gram as names, logp, bow)
        let mut entries: Vec<Vec<ArpaEntry>> = alloc::vec![Vec::new(); order];
        let mut section: Option<usize> = None;
        let mut ended = false;
        let rest = pending.into_iter().chain(lines);
        for (n, line) in rest {
            if line.is_empty() {
                continue;
            }
            if ended {
                return Err(bad(n, "content after \\end\\"));
            }
            if line.starts_with('\\') {
                if line == "\\end\\" {
                    ended = true;
                    continue;
                }
                let order_n = line
                    .strip_prefix('\\')
                    .and_then(|l| l.strip_suffix("-grams:"))
                    .and_then(|l| l.parse::<usize>().ok())
                    .filter(|&o| o >= 1 && o <= order)
                    .ok_or_else(|| bad(n, &format!("unknown section {line}")))?;
                section = Some(order_n);
                continue;
            }
            let sec = section.ok_or_else(|| bad(n, "entry outside any n-gram section"))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != sec + 1 && fields.len() != sec + 2 {
                return Err(bad(n, "wrong number of fields"));
            }
            let logp: f64 = fields[0].parse().map_err(|_| bad(n, "bad probability"))?;
            let gram = fields[1..=sec]
                .iter()
                .map(|s| from_arpa_name(s).to_string())
                .collect();
            let bow = match fields.get(sec + 1) {
                Some(b) => Some(
                    b.parse::<f64>()
                        .map_err(|_| bad(n, "bad back-off weight"))?,
                ),
                None => None,
            };
            entries[sec - 1].push((gram, from_log10(logp), bow.map(from_log10)));
        }
        if !ended {
            return Err(bad(text.lines().count(), "missing \\end\\"));
        }
        for (i, (got, want)) in entries.iter().map(Vec::len).zip(&declared).enumerate() {
            if got != *want {
                return Err(bad(
                    1,
                    &format!(
                        "header declares {want} {}-grams but {got} were found",
                        i + 1
                    ),
                ));
            }
        }

        let vocab = Vocab::new(entries[0].iter().map(|(g, _, _)| g[0].as_str()));
        let ids = |gram: &[String]| -> Vec<SymbolId> {
            gram.iter().map(|s| vocab.id_or_unk(s)).collect()
        };
        let mut unigram = alloc::vec![f64::NEG_INFINITY; vocab.len()];
        let mut backoff = BTreeMap::new();
        let mut higher: Vec<BTreeMap<Vec<SymbolId>, BTreeMap<SymbolId, f64>>> =
            alloc::vec![BTreeMap::new(); order - 1];
        for (level, list) in entries.iter().enumerate() {
            for (gram, logp, bow) in list {
                let gram = ids(gram);
                if level == 0 {
                    unigram[gram[0] as usize] = *logp;
                } else {
                    let (ctx, w) = gram.split_at(level);
                    higher[level - 1]
                        .entry(ctx.to_vec())
                        .or_default()
                        .insert(w[0], *logp);
                }
                if let Some(b) = bow {
                    backoff.insert(gram, *b);
                }
            }
        }
        Ok(NGramLm::from_tables(order, vocab, unigram, higher, backoff))
    }
}
