//! Pronunciation dictionary and the prefix tree compiled from it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::subword::{BpeModel, UnitMode};
use crate::symbols::UNK;
use crate::{Error, Result};

/// Word → pronunciation, one pronunciation per word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    /// Parses cmudict-style text: `word PH1 PH2 ...` per line.
    ///
    /// Words are lowercased and phones uppercased. The first pronunciation
    /// listed for a word wins; `word(2)` alternates and later duplicates are
    /// ignored. Lines starting with `;` or `#` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with(';') || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let word = fields.next().unwrap_or_default();
            let phones: Vec<String> = fields.map(str::to_uppercase).collect();
            if phones.is_empty() {
                return Err(Error::MalformedEntry {
                    line: i + 1,
                    text: line.to_string(),
                });
            }
            let word = strip_alternate(word).to_lowercase();
            entries.entry(word).or_insert(phones);
        }
        if entries.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        Ok(Lexicon { entries })
    }

    pub fn from_entries<I, W, P>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (W, P)>,
        W: AsRef<str>,
        P: IntoIterator,
        P::Item: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (i, (word, pron)) in entries.into_iter().enumerate() {
            let word = word.as_ref().to_lowercase();
            let pron: Vec<String> = pron
                .into_iter()
                .map(|p| p.as_ref().to_uppercase())
                .collect();
            if pron.is_empty() {
                return Err(Error::MalformedEntry {
                    line: i + 1,
                    text: word,
                });
            }
            map.entry(word).or_insert(pron);
        }
        if map.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        Ok(Lexicon { entries: map })
    }

    pub fn pronunciation(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in word order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> + '_ {
        self.entries.iter().map(|(w, p)| (w.as_str(), p.as_slice()))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.keys().map(String::as_str)
    }
}

fn strip_alternate(word: &str) -> &str {
    if let Some(open) = word.rfind('(') {
        let inner = &word[open + 1..];
        if let Some(digits) = inner.strip_suffix(')') {
            if open > 0 && !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return &word[..open];
            }
        }
    }
    word
}

/// Index of a node inside a [`PrefixTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);
}

#[derive(Debug, Clone, Default)]
struct TreeNode {
    children: BTreeMap<String, NodeId>,
    words: Vec<String>,
}

/// Trie over subword units; a node lists every word whose decomposition
/// ends there (several, for homophones).
#[derive(Debug, Clone)]
pub struct PrefixTree {
    nodes: Vec<TreeNode>,
    inventory: BTreeSet<String>,
    marker: char,
    skipped: Vec<String>,
}

impl PrefixTree {
    /// Compiles `lexicon` through `model`.
    ///
    /// Words whose decomposition contains `<unk>` (a phone or character the
    /// model never saw) are left out and listed in [`PrefixTree::skipped`].
    pub fn build(lexicon: &Lexicon, model: &BpeModel, mode: UnitMode) -> Self {
        let mut tree = PrefixTree {
            nodes: alloc::vec![TreeNode::default()],
            inventory: BTreeSet::new(),
            marker: model.marker(),
            skipped: Vec::new(),
        };
        for (word, pron) in lexicon.iter() {
            let tokens = match mode {
                UnitMode::Phone => pron.to_vec(),
                UnitMode::Char => crate::subword::spell(word),
            };
            let path = model.encode_word(&tokens);
            if path.iter().any(|u| u == UNK) {
                tree.skipped.push(word.to_string());
                continue;
            }
            tree.insert(&path, word);
        }
        for node in &mut tree.nodes {
            node.words.sort();
            node.words.dedup();
        }
        tree
    }

    fn insert(&mut self, path: &[String], word: &str) {
        let mut node = NodeId::ROOT;
        for unit in path {
            self.inventory.insert(unit.clone());
            node = match self.nodes[node.0 as usize].children.get(unit) {
                Some(&child) => child,
                None => {
                    let child = NodeId(self.nodes.len() as u32);
                    self.nodes.push(TreeNode::default());
                    self.nodes[node.0 as usize]
                        .children
                        .insert(unit.clone(), child);
                    child
                }
            };
        }
        self.nodes[node.0 as usize].words.push(word.to_string());
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn marker(&self) -> char {
        self.marker
    }

    /// The child reached by accepting `unit`, if any.
    pub fn branch(&self, node: NodeId, unit: &str) -> Option<NodeId> {
        self.nodes[node.0 as usize].children.get(unit).copied()
    }

    /// Units branching out of `node`, sorted.
    pub fn node_tokens(&self, node: NodeId) -> impl Iterator<Item = &str> + '_ {
        self.nodes[node.0 as usize]
            .children
            .keys()
            .map(String::as_str)
    }

    /// Words completed at `node`, sorted.
    pub fn node_words(&self, node: NodeId) -> &[String] {
        &self.nodes[node.0 as usize].words
    }

    /// Every unit used on some edge.
    pub fn token_inventory(&self) -> &BTreeSet<String> {
        &self.inventory
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn skipped(&self) -> &[String] {
        &self.skipped
    }

    /// Follows `path` from the root.
    pub fn walk<T: AsRef<str>>(&self, path: &[T]) -> Option<NodeId> {
        path.iter()
            .try_fold(self.root(), |n, u| self.branch(n, u.as_ref()))
    }

    /// Depth-first iterator over `(depth, edge unit)` pairs.
    pub fn edges(&self) -> Vec<(usize, &str)> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![(NodeId::ROOT, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            for (unit, &child) in &self.nodes[node.0 as usize].children {
                out.push((depth + 1, unit.as_str()));
                stack.push((child, depth + 1));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn no_merge_model(lex: &Lexicon) -> BpeModel {
        let prons: Vec<Vec<String>> = lex.iter().map(|(_, p)| p.to_vec()).collect();
        let base = BpeModel::train(&prons, usize::MAX, '_', "+")
            .unwrap()
            .base_vocab()
            .len();
        BpeModel::train(&prons, base, '_', "+").unwrap()
    }

    #[test]
    fn load_homophones_and_first_pronunciation() {
        let lex = Lexicon::parse("hi HH IY\nhigh HH IY").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.pronunciation("hi"), lex.pronunciation("high"));
        let lex = Lexicon::parse("read R EH D\nread R IY D").unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.pronunciation("read").unwrap(), ["R", "EH", "D"]);
    }

    #[test]
    fn load_cmudict_conventions() {
        let text = ";;; comment\n# another\nREAD  r eh d\nREAD(2)  R IY D\n\nlive(1) L IH V\n";
        let lex = Lexicon::parse(text).unwrap();
        assert_eq!(lex.pronunciation("read").unwrap(), ["R", "EH", "D"]);
        assert_eq!(lex.pronunciation("live").unwrap(), ["L", "IH", "V"]);
        assert_eq!(
            Lexicon::parse("(2) AH")
                .unwrap()
                .words()
                .collect::<Vec<_>>(),
            ["(2)"]
        );
    }

    #[test]
    fn load_errors() {
        assert_eq!(
            Lexicon::parse("ok OW K\nword\n").unwrap_err(),
            Error::MalformedEntry {
                line: 2,
                text: "word".into()
            }
        );
        assert_eq!(Lexicon::parse("").unwrap_err(), Error::EmptyLexicon);
        assert_eq!(
            Lexicon::parse(";;; only comments\n").unwrap_err(),
            Error::EmptyLexicon
        );
    }

    #[test]
    fn homophones_share_a_node() {
        let lex = Lexicon::parse("hi HH IY\nhigh HH IY").unwrap();
        let tree = PrefixTree::build(&lex, &no_merge_model(&lex), UnitMode::Phone);
        let hh = tree.branch(tree.root(), "_HH").unwrap();
        assert_eq!(tree.node_tokens(hh).collect::<Vec<_>>(), ["IY"]);
        let iy = tree.branch(hh, "IY").unwrap();
        assert_eq!(tree.node_words(iy), ["hi", "high"]);
        assert!(tree.branch(tree.root(), "_ZZ").is_none());
        assert!(tree.node_words(tree.root()).is_empty());
        assert_eq!(tree.node_count(), 3);
    }

    #[test]
    fn node_tokens_sorted() {
        let lex = Lexicon::parse("hi HH IY\na AH").unwrap();
        let tree = PrefixTree::build(&lex, &no_merge_model(&lex), UnitMode::Phone);
        assert_eq!(
            tree.node_tokens(tree.root()).collect::<Vec<_>>(),
            ["_AH", "_HH"]
        );
        let a = tree.branch(tree.root(), "_AH").unwrap();
        assert_eq!(tree.node_words(a), ["a"]);
    }

    #[test]
    fn oov_phone_word_is_skipped() {
        let train = Lexicon::parse("a AH").unwrap();
        let model = no_merge_model(&train);
        let lex = Lexicon::parse("a AH\nzoo Z UW").unwrap();
        let tree = PrefixTree::build(&lex, &model, UnitMode::Phone);
        assert_eq!(tree.skipped(), ["zoo"]);
        assert_eq!(tree.node_tokens(tree.root()).collect::<Vec<_>>(), ["_AH"]);
    }

    #[test]
    fn merged_units_and_marker_discipline() {
        let lex =
            Lexicon::parse("hi HH IY\nhigh HH IY\nhid HH IH D\nhit HH IH T\nit IH T").unwrap();
        let prons: Vec<Vec<String>> = lex.iter().map(|(_, p)| p.to_vec()).collect();
        let model = BpeModel::train(&prons, 10, '_', "+").unwrap();
        let tree = PrefixTree::build(&lex, &model, UnitMode::Phone);
        for (word, pron) in lex.iter() {
            let node = tree.walk(&model.encode_word(pron)).unwrap();
            assert!(tree.node_words(node).iter().any(|w| w == word));
        }
        for (depth, unit) in tree.edges() {
            assert_eq!(unit.starts_with('_'), depth == 1, "{unit} at depth {depth}");
        }
        let bound = 1 + lex
            .iter()
            .map(|(_, p)| model.encode_word(p).len())
            .sum::<usize>();
        assert!(tree.node_count() <= bound);
    }

    #[test]
    fn char_tree_spells_words() {
        let lex = Lexicon::parse("hi HH IY\nhigh HH IY").unwrap();
        let spellings = vec![crate::subword::spell("hi"), crate::subword::spell("high")];
        let model = BpeModel::train(&spellings, 100, '_', "").unwrap();
        let tree = PrefixTree::build(&lex, &model, UnitMode::Char);
        let hi = tree
            .walk(&model.encode_word(&crate::subword::spell("hi")))
            .unwrap();
        let high = tree
            .walk(&model.encode_word(&crate::subword::spell("high")))
            .unwrap();
        assert_ne!(hi, high);
        assert_eq!(tree.node_words(hi), ["hi"]);
        assert_eq!(tree.node_words(high), ["high"]);
    }
}
