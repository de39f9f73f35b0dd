//! Byte pair encoding over phone or character sequences.
//!
//! Every word starts with a unit carrying the boundary marker (`_` by
//! default), so a subword sequence splits into words without any other
//! delimiter. Merged units are spelled by joining their parts with the
//! model's joiner: empty for single-character tokens, `+` by default for
//! phones (`_HH+IY`), so that `N`+`G` never collides with the phone `NG`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::lexicon::Lexicon;
use crate::symbols::{self, DEFAULT_MARKER, UNK};
use crate::{Error, Result};

/// What a BPE system is built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitMode {
    /// Pronunciations looked up in a lexicon.
    Phone,
    /// Spellings, one token per character.
    Char,
}

impl UnitMode {
    /// Joiner used for merged units unless overridden.
    pub fn default_joiner(self) -> &'static str {
        match self {
            UnitMode::Phone => "+",
            UnitMode::Char => "",
        }
    }

    /// The base-token sequence of `word` under this mode, if known.
    pub fn word_tokens(self, word: &str, lexicon: Option<&Lexicon>) -> Option<Vec<String>> {
        match self {
            UnitMode::Phone => lexicon?.pronunciation(word).map(<[String]>::to_vec),
            UnitMode::Char => Some(spell(word)),
        }
    }
}

impl core::str::FromStr for UnitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phone" => Ok(UnitMode::Phone),
            "char" => Ok(UnitMode::Char),
            other => Err(Error::InvalidConfig(format!("unknown unit mode {other:?}"))),
        }
    }
}

/// Lowercased character tokens of a word.
pub fn spell(word: &str) -> Vec<String> {
    word.chars()
        .flat_map(char::to_lowercase)
        .map(String::from)
        .collect()
}

/// A trained BPE model: base vocabulary plus ordered merges.
#[derive(Debug, Clone, PartialEq)]
pub struct BpeModel {
    marker: char,
    joiner: String,
    base: BTreeSet<String>,
    merges: Vec<(String, String)>,
    // unit spelling -> marked base tokens it covers
    units: BTreeMap<String, Vec<String>>,
    max_len: usize,
}

impl BpeModel {
    /// Learns `vocab_size - |base|` merges from a list of words.
    ///
    /// Each element of `words` is one word occurrence given as its token
    /// sequence. Pairs are counted within words only; the most frequent pair
    /// is merged first, ties going to the lexicographically smallest
    /// `(left, right)`. Training stops early once no pair occurs twice.
    pub fn train<W, T>(words: W, vocab_size: usize, marker: char, joiner: &str) -> Result<Self>
    where
        W: IntoIterator,
        W::Item: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        validate_marker_joiner(marker, joiner)?;
        let mut interner = Interner::default();
        let mut types: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        let mut base = BTreeSet::new();
        for word in words {
            let mut seq = Vec::new();
            for (i, tok) in word.into_iter().enumerate() {
                let tok = tok.as_ref();
                validate_token(tok, marker, joiner)?;
                let marked = if i == 0 {
                    mark(marker, tok)
                } else {
                    tok.to_string()
                };
                base.insert(marked.clone());
                seq.push(interner.intern(&marked));
            }
            if seq.is_empty() {
                return Err(Error::InvalidToken(String::new()));
            }
            *types.entry(seq).or_insert(0) += 1;
        }
        if types.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        check_joiner_unambiguous(&base, marker, joiner)?;
        if vocab_size < base.len() {
            return Err(Error::InvalidVocabSize {
                requested: vocab_size,
                base: base.len(),
            });
        }

        let mut words: Vec<(Vec<u32>, usize)> = types.into_iter().collect();
        let mut known: BTreeSet<String> = base.clone();
        let mut merges = Vec::new();
        while base.len() + merges.len() < vocab_size {
            let mut counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
            for (seq, n) in &words {
                for pair in seq.windows(2) {
                    *counts.entry((pair[0], pair[1])).or_insert(0) += n;
                }
            }
            let best = counts
                .into_iter()
                .filter(|&(_, n)| n >= 2)
                .min_by(|(a, na), (b, nb)| {
                    nb.cmp(na).then_with(|| {
                        (interner.get(a.0), interner.get(a.1))
                            .cmp(&(interner.get(b.0), interner.get(b.1)))
                    })
                });
            let Some(((left, right), _)) = best else {
                break;
            };
            let merged = format!("{}{}{}", interner.get(left), joiner, interner.get(right));
            let merged_id = interner.intern(&merged);
            for (seq, _) in words.iter_mut() {
                apply_merge(seq, left, right, merged_id);
            }
            // A unit reached through a different pair order is a respelling
            // of an existing unit; it shortens the corpus but adds nothing.
            if known.insert(merged) {
                merges.push((
                    interner.get(left).to_string(),
                    interner.get(right).to_string(),
                ));
            }
        }
        Self::from_parts(marker, joiner, base, merges)
    }

    /// Assembles a model from its serialized parts, checking every merge
    /// operand is producible from earlier units.
    pub fn from_parts<I, S>(
        marker: char,
        joiner: &str,
        base: I,
        merges: Vec<(String, String)>,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        validate_marker_joiner(marker, joiner)?;
        let base: BTreeSet<String> = base.into_iter().map(Into::into).collect();
        let mut units = BTreeMap::new();
        for tok in &base {
            let bare = tok.strip_prefix(marker).unwrap_or(tok);
            validate_token(bare, marker, joiner)?;
            units.insert(tok.clone(), alloc::vec![tok.clone()]);
        }
        check_joiner_unambiguous(&base, marker, joiner)?;
        let mut max_len = 1;
        for (left, right) in &merges {
            let (Some(l), Some(r)) = (units.get(left), units.get(right)) else {
                return Err(Error::InvalidToken(format!(
                    "merge ({left}, {right}) uses an unknown unit"
                )));
            };
            if r[0].starts_with(marker) {
                return Err(Error::InvalidToken(format!(
                    "merge ({left}, {right}) crosses a word boundary"
                )));
            }
            let mut seq = l.clone();
            seq.extend(r.iter().cloned());
            max_len = max_len.max(seq.len());
            let merged = format!("{left}{joiner}{right}");
            if units.insert(merged.clone(), seq).is_some() {
                return Err(Error::InvalidToken(format!(
                    "merge ({left}, {right}) duplicates unit {merged}"
                )));
            }
        }
        Ok(BpeModel {
            marker,
            joiner: joiner.to_string(),
            base,
            merges,
            units,
            max_len,
        })
    }

    pub fn marker(&self) -> char {
        self.marker
    }

    pub fn joiner(&self) -> &str {
        &self.joiner
    }

    pub fn base_vocab(&self) -> &BTreeSet<String> {
        &self.base
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// `|base| + |merges|`.
    pub fn vocab_size(&self) -> usize {
        self.units.len()
    }

    /// All subword units in lexicographic order (`<unk>` excluded).
    pub fn vocab(&self) -> impl Iterator<Item = &str> + '_ {
        self.units.keys().map(String::as_str)
    }

    pub fn contains(&self, unit: &str) -> bool {
        self.units.contains_key(unit)
    }

    /// Marked base tokens covered by `unit`.
    pub fn unit_tokens(&self, unit: &str) -> Option<&[String]> {
        self.units.get(unit).map(Vec::as_slice)
    }

    /// Greedy longest-match decomposition of one word.
    ///
    /// The marker is attached to the first token; tokens outside the base
    /// vocabulary come out as `<unk>`.
    pub fn encode_word<T: AsRef<str>>(&self, tokens: &[T]) -> Vec<String> {
        let marked: Vec<String> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if i == 0 {
                    mark(self.marker, t.as_ref())
                } else {
                    t.as_ref().to_string()
                }
            })
            .collect();
        let mut out = Vec::new();
        let mut i = 0;
        let mut candidate = String::new();
        while i < marked.len() {
            if !self.base.contains(&marked[i]) {
                out.push(UNK.to_string());
                i += 1;
                continue;
            }
            let longest = (1..=self.max_len.min(marked.len() - i)).rev().find(|&len| {
                candidate.clear();
                for (j, tok) in marked[i..i + len].iter().enumerate() {
                    if j > 0 {
                        candidate.push_str(&self.joiner);
                    }
                    candidate.push_str(tok);
                }
                self.units.contains_key(&candidate)
            });
            // len 1 always matches: the token is in the base vocabulary
            let len = longest.unwrap_or(1);
            let unit = marked[i..i + len].join(&self.joiner);
            out.push(unit);
            i += len;
        }
        out
    }

    /// Splits a subword sequence back into per-word base-token sequences.
    pub fn decode_tokens<T: AsRef<str>>(&self, units: &[T]) -> Result<Vec<Vec<String>>> {
        let mut words: Vec<Vec<String>> = Vec::new();
        for unit in units {
            let unit = unit.as_ref();
            if unit == UNK {
                match words.last_mut() {
                    Some(w) => w.push(UNK.to_string()),
                    None => words.push(alloc::vec![UNK.to_string()]),
                }
                continue;
            }
            let seq = self
                .units
                .get(unit)
                .ok_or_else(|| Error::MalformedSequence(format!("unknown unit {unit:?}")))?;
            if let Some(first) = seq[0].strip_prefix(self.marker) {
                let mut word = alloc::vec![first.to_string()];
                word.extend(seq[1..].iter().cloned());
                words.push(word);
            } else {
                match words.last_mut() {
                    Some(w) => w.extend(seq.iter().cloned()),
                    None => {
                        return Err(Error::MalformedSequence(format!(
                            "sequence starts with non-initial unit {unit:?}"
                        )))
                    }
                }
            }
        }
        Ok(words)
    }

    /// Serializes to the `bpe-model v1` text format.
    pub fn to_text(&self) -> String {
        let mut s = format!("bpe-model v1 marker={}", self.marker);
        if !self.joiner.is_empty() {
            let _ = write!(s, " joiner={}", self.joiner);
        }
        s.push_str("\nbase:\n");
        for tok in &self.base {
            s.push_str(tok);
            s.push('\n');
        }
        s.push_str("merges:\n");
        for (l, r) in &self.merges {
            let _ = writeln!(s, "{l}\t{r}");
        }
        s
    }

    /// Parses the `bpe-model v1` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::MalformedModel {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("bpe-model") || fields.next() != Some("v1") {
            return Err(bad(1, "expected `bpe-model v1` header"));
        }
        let mut marker = None;
        let mut joiner = String::new();
        for field in fields {
            if let Some(m) = field.strip_prefix("marker=") {
                let mut chars = m.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => marker = Some(c),
                    _ => return Err(bad(1, "marker must be a single character")),
                }
            } else if let Some(j) = field.strip_prefix("joiner=") {
                joiner = j.to_string();
            } else {
                return Err(bad(1, "unknown header field"));
            }
        }
        let marker = marker.ok_or_else(|| bad(1, "missing marker"))?;
        match lines.next() {
            Some((_, "base:")) => {}
            Some((n, _)) => return Err(bad(n, "expected `base:`")),
            None => return Err(bad(2, "expected `base:`")),
        }
        let mut base = Vec::new();
        let mut saw_merges = false;
        for (n, line) in lines.by_ref() {
            if line == "merges:" {
                saw_merges = true;
                break;
            }
            if line.is_empty() || line.contains(char::is_whitespace) {
                return Err(bad(n, "base token must be non-empty without whitespace"));
            }
            base.push(line.to_string());
        }
        if !saw_merges {
            return Err(bad(text.lines().count(), "missing `merges:` section"));
        }
        let mut merges = Vec::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let (l, r) = line
                .split_once('\t')
                .ok_or_else(|| bad(n, "merge must be `left<TAB>right`"))?;
            merges.push((l.to_string(), r.to_string()));
        }
        Self::from_parts(marker, &joiner, base, merges)
    }
}

/// Encodes a sentence of words into one subword sequence.
///
/// Phone mode maps each word through `lexicon`; char mode spells words
/// directly. Words without a pronunciation become a single `<unk>`.
pub fn encode_corpus<W: AsRef<str>>(
    words: &[W],
    lexicon: Option<&Lexicon>,
    model: &BpeModel,
    mode: UnitMode,
) -> Vec<String> {
    let mut out = Vec::new();
    for word in words {
        let word = word.as_ref().to_lowercase();
        match mode.word_tokens(&word, lexicon) {
            Some(tokens) if !tokens.is_empty() => out.extend(model.encode_word(&tokens)),
            _ => out.push(UNK.to_string()),
        }
    }
    out
}

/// Default-marker convenience wrapper around [`BpeModel::train`].
pub fn train_merges<W, T>(words: W, vocab_size: usize, mode: UnitMode) -> Result<BpeModel>
where
    W: IntoIterator,
    W::Item: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    BpeModel::train(words, vocab_size, DEFAULT_MARKER, mode.default_joiner())
}

fn mark(marker: char, tok: &str) -> String {
    let mut s = String::with_capacity(tok.len() + marker.len_utf8());
    s.push(marker);
    s.push_str(tok);
    s
}

fn validate_marker_joiner(marker: char, joiner: &str) -> Result<()> {
    if marker.is_whitespace() {
        return Err(Error::InvalidConfig("marker must not be whitespace".into()));
    }
    if joiner.contains(char::is_whitespace) || joiner.contains(marker) {
        return Err(Error::InvalidConfig(format!("invalid joiner {joiner:?}")));
    }
    Ok(())
}

fn validate_token(tok: &str, marker: char, joiner: &str) -> Result<()> {
    if tok.is_empty()
        || tok.contains(char::is_whitespace)
        || tok.contains(marker)
        || (!joiner.is_empty() && tok.contains(joiner))
        || symbols::is_reserved(tok)
    {
        return Err(Error::InvalidToken(tok.to_string()));
    }
    Ok(())
}

// With an empty joiner, spellings of merged units are only unambiguous
// when every base token is a single character.
fn check_joiner_unambiguous(base: &BTreeSet<String>, marker: char, joiner: &str) -> Result<()> {
    if joiner.is_empty() {
        if let Some(tok) = base
            .iter()
            .find(|t| t.strip_prefix(marker).unwrap_or(t).chars().count() != 1)
        {
            return Err(Error::InvalidConfig(format!(
                "empty joiner requires single-character tokens, found {tok:?}"
            )));
        }
    }
    Ok(())
}

fn apply_merge(seq: &mut Vec<u32>, left: u32, right: u32, merged: u32) {
    let mut out = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && seq[i] == left && seq[i + 1] == right {
            out.push(merged);
            i += 2;
        } else {
            out.push(seq[i]);
            i += 1;
        }
    }
    *seq = out;
}

#[derive(Default)]
struct Interner {
    ids: BTreeMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }

    fn get(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn words(ws: &[&[&str]]) -> Vec<Vec<String>> {
        ws.iter()
            .map(|w| w.iter().map(|t| t.to_string()).collect())
            .collect()
    }

    #[test]
    fn first_merge_is_most_frequent_pair() {
        let corpus = words(&[&["a", "b"], &["a", "b", "c"]]);
        let m = BpeModel::train(&corpus, 4, '_', " ").unwrap_err();
        // space joiners are rejected
        assert!(matches!(m, Error::InvalidConfig(_)));
        let m = BpeModel::train(&corpus, 4, '_', "").unwrap();
        assert_eq!(m.base_vocab().len(), 3);
        assert_eq!(m.merges(), &[("_a".to_string(), "b".to_string())]);
        assert_eq!(m.vocab_size(), 4);
    }

    #[test]
    fn zero_merges_when_k_equals_base() {
        let corpus = words(&[&["a", "b"], &["a", "b", "c"]]);
        let m = BpeModel::train(&corpus, 3, '_', "").unwrap();
        assert!(m.merges().is_empty());
        assert_eq!(m.encode_word(&["a", "b", "c"]), vec!["_a", "b", "c"]);
    }

    #[test]
    fn early_stop_when_all_pairs_are_singletons() {
        let corpus = words(&[&["a", "b"], &["c", "d"]]);
        let m = BpeModel::train(&corpus, 100, '_', "").unwrap();
        assert!(m.merges().is_empty());
    }

    #[test]
    fn ties_break_lexicographically() {
        // ("_x","y") and ("_p","q") both occur twice
        let corpus = words(&[&["x", "y"], &["x", "y"], &["p", "q"], &["p", "q"]]);
        let m = BpeModel::train(&corpus, 5, '_', "").unwrap();
        assert_eq!(m.merges()[0], ("_p".to_string(), "q".to_string()));
    }

    #[test]
    fn train_errors() {
        let empty: Vec<Vec<String>> = vec![];
        assert_eq!(
            BpeModel::train(&empty, 3, '_', "").unwrap_err(),
            Error::EmptyCorpus
        );
        let corpus = words(&[&["a", "b"]]);
        assert_eq!(
            BpeModel::train(&corpus, 1, '_', "").unwrap_err(),
            Error::InvalidVocabSize {
                requested: 1,
                base: 2
            }
        );
        let phones = words(&[&["HH", "IY"]]);
        assert!(matches!(
            BpeModel::train(&phones, 2, '_', "").unwrap_err(),
            Error::InvalidConfig(_)
        ));
    }

    #[test]
    fn longest_match_wins() {
        let m = BpeModel::from_parts('_', "+", ["_a", "b", "c"], vec![("_a".into(), "b".into())])
            .unwrap();
        assert_eq!(m.encode_word(&["a", "b", "c"]), vec!["_a+b", "c"]);
        assert_eq!(
            m.decode_tokens(&["_a+b", "c"]).unwrap(),
            vec![vec!["a", "b", "c"]]
        );
    }

    #[test]
    fn identity_and_unknown() {
        let m = BpeModel::from_parts('_', "", ["_x"], vec![]).unwrap();
        assert_eq!(m.encode_word(&["x"]), vec!["_x"]);
        assert_eq!(m.encode_word(&["q"]), vec![UNK]);
        assert_eq!(m.decode_tokens(&["_x"]).unwrap(), vec![vec!["x"]]);
    }

    #[test]
    fn decode_splits_words() {
        let m = BpeModel::from_parts('_', "", ["_a", "_b"], vec![]).unwrap();
        assert_eq!(
            m.decode_tokens(&["_a", "_b"]).unwrap(),
            vec![vec!["a"], vec!["b"]]
        );
        let m = BpeModel::from_parts('_', "", ["_a", "b"], vec![]).unwrap();
        assert!(matches!(
            m.decode_tokens(&["b", "_a"]),
            Err(Error::MalformedSequence(_))
        ));
        assert!(matches!(
            m.decode_tokens(&["_zz"]),
            Err(Error::MalformedSequence(_))
        ));
    }

    #[test]
    fn corpus_encoding() {
        let lex = Lexicon::parse("hi HH IY\nthere DH EH R\n").unwrap();
        let prons: Vec<Vec<String>> = lex.iter().map(|(_, p)| p.to_vec()).collect();
        let m = BpeModel::train(&prons, 5, '_', "+").unwrap();
        assert!(m.merges().is_empty());
        assert_eq!(
            encode_corpus(&["hi"], Some(&lex), &m, UnitMode::Phone),
            vec!["_HH", "IY"]
        );
        assert_eq!(
            encode_corpus(&["zebra"], Some(&lex), &m, UnitMode::Phone),
            vec![UNK]
        );
        assert_eq!(
            encode_corpus(&["hi", "there"], Some(&lex), &m, UnitMode::Phone),
            vec!["_HH", "IY", "_DH", "EH", "R"]
        );
        let c = BpeModel::train(vec![spell("ab")], 2, '_', "").unwrap();
        assert_eq!(
            encode_corpus(&["AB"], None, &c, UnitMode::Char),
            vec!["_a", "b"]
        );
    }

    #[test]
    fn text_format_round_trip() {
        let corpus = words(&[&["HH", "IY"], &["HH", "IY"], &["HH", "AY"], &["HH", "AY"]]);
        let m = BpeModel::train(&corpus, 6, '_', "+").unwrap();
        let text = m.to_text();
        assert!(text.starts_with("bpe-model v1 marker=_ joiner=+\nbase:\n"));
        assert_eq!(BpeModel::parse(&text).unwrap(), m);
        assert!(matches!(
            BpeModel::parse("bpe v1\n"),
            Err(Error::MalformedModel { .. })
        ));
        assert!(BpeModel::parse("bpe-model v1 marker=_\nbase:\n_a\nmerges:\n_a\tzz\n").is_err());
    }

    #[test]
    fn respelled_units_are_not_recorded() {
        // "_a a" then ("_a a","a") and ("_a","a a") can both reach "_aaa"
        let corpus = words(&[
            &["a", "a", "a"],
            &["a", "a", "a"],
            &["b", "a", "a"],
            &["b", "a", "a"],
        ]);
        let m = BpeModel::train(&corpus, 20, '_', "").unwrap();
        assert_eq!(m.vocab_size(), m.base_vocab().len() + m.merges().len());
        let units: BTreeSet<_> = m.vocab().collect();
        assert_eq!(units.len(), m.vocab_size());
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
        let tok = prop::sample::select(vec!["AA", "B", "K", "NG", "N", "G", "IY", "S"]);
        prop::collection::vec(
            prop::collection::vec(tok.prop_map(String::from), 1..6),
            1..30,
        )
    }

    proptest! {
        #[test]
        fn round_trip_and_determinism(corpus in corpus_strategy(), extra in 0usize..30) {
            let base: BTreeSet<String> = corpus.iter().flat_map(|w| {
                w.iter().enumerate().map(|(i, t)| if i == 0 { mark('_', t) } else { t.clone() })
            }).collect();
            let m = BpeModel::train(&corpus, base.len() + extra, '_', "+").unwrap();
            for w in &corpus {
                let enc = m.encode_word(w);
                prop_assert_eq!(&enc, &m.encode_word(w));
                prop_assert!(enc[0].starts_with('_'));
                prop_assert!(enc[1..].iter().all(|u| !u.starts_with('_')));
                prop_assert_eq!(m.decode_tokens(&enc).unwrap(), vec![w.clone()]);
            }
        }

        #[test]
        fn merges_form_prefixes(corpus in corpus_strategy(), k1 in 0usize..10, k2 in 0usize..10) {
            let base = BpeModel::train(&corpus, usize::MAX, '_', "+").unwrap().base_vocab().len();
            let (lo, hi) = (k1.min(k2), k1.max(k2));
            let a = BpeModel::train(&corpus, base + lo, '_', "+").unwrap();
            let b = BpeModel::train(&corpus, base + hi, '_', "+").unwrap();
            prop_assert!(b.merges().starts_with(a.merges()));
        }

        #[test]
        fn encoded_units_stay_in_vocab(corpus in corpus_strategy(), extra in 0usize..20) {
            let base = BpeModel::train(&corpus, usize::MAX, '_', "+").unwrap().base_vocab().len();
            let m = BpeModel::train(&corpus, base + extra, '_', "+").unwrap();
            let produced: BTreeSet<String> = corpus.iter().flat_map(|w| m.encode_word(w)).collect();
            prop_assert!(produced.len() <= m.vocab_size() + 1);
            prop_assert!(produced.iter().all(|u| m.contains(u)));
        }
    }
}
