//! Annotated corpus data model.
//!
//! A corpus is a legend (tagset with card numbers, phrase categories with
//! colors, an optional start category) plus a list of constituency trees.
//! The text format is a small header followed by Penn-style labeled
//! bracketing; see `docs/corpus-format.md` for the grammar.

mod parse;
mod write;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::parse_corpus;
pub use write::serialize_corpus;

/// Maximum number of phrase categories a corpus legend may declare.
pub const MAX_CATEGORIES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PosTag {
    pub name: String,
    /// Number printed at the foot of grammar-game cards.
    pub number: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhraseCategory {
    pub name: String,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub pos: String,
}

/// A constituency tree. Internal nodes carry a phrase category, preterminals
/// carry a POS tag and exactly one token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tree {
    Node { label: String, children: Vec<Tree> },
    Leaf { tag: String, surface: String },
}

impl Tree {
    pub fn node(label: impl Into<String>, children: Vec<Tree>) -> Self {
        Tree::Node {
            label: label.into(),
            children,
        }
    }

    pub fn leaf(tag: impl Into<String>, surface: impl Into<String>) -> Self {
        Tree::Leaf {
            tag: tag.into(),
            surface: surface.into(),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Tree::Node { label, .. } => label,
            Tree::Leaf { tag, .. } => tag,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Tree::Leaf { .. })
    }

    /// Left-to-right leaf sequence.
    pub fn tokens(&self) -> Vec<Token> {
        let mut out = Vec::new();
        self.collect_tokens(&mut out);
        out
    }

    fn collect_tokens(&self, out: &mut Vec<Token>) {
        match self {
            Tree::Leaf { tag, surface } => out.push(Token {
                surface: surface.clone(),
                pos: tag.clone(),
            }),
            Tree::Node { children, .. } => {
                for child in children {
                    child.collect_tokens(out);
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Tree::Leaf { .. } => 1,
            Tree::Node { children, .. } => children.iter().map(Tree::leaf_count).sum(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Tree::Leaf { .. } => 1,
            Tree::Node { children, .. } => 1 + children.iter().map(Tree::node_count).sum::<usize>(),
        }
    }

    /// Nesting of constituents; a leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Tree::Leaf { .. } => 0,
            Tree::Node { children, .. } => 1 + children.iter().map(Tree::depth).max().unwrap_or(0),
        }
    }

    /// Same tree with every leaf surface passed through `f`.
    pub fn map_surfaces<E>(
        &self,
        f: &mut impl FnMut(&str) -> Result<String, E>,
    ) -> Result<Tree, E> {
        Ok(match self {
            Tree::Leaf { tag, surface } => Tree::Leaf {
                tag: tag.clone(),
                surface: f(surface)?,
            },
            Tree::Node { label, children } => Tree::Node {
                label: label.clone(),
                children: children
                    .iter()
                    .map(|c| c.map_surfaces(f))
                    .collect::<Result<_, E>>()?,
            },
        })
    }

    /// Visits every internal node with its token span `[start, end)`.
    pub fn for_each_constituent(&self, mut f: impl FnMut(&str, usize, usize, usize)) {
        self.walk_spans(0, 0, &mut f);
    }

    fn walk_spans(
        &self,
        start: usize,
        depth: usize,
        f: &mut impl FnMut(&str, usize, usize, usize),
    ) -> usize {
        match self {
            Tree::Leaf { .. } => start + 1,
            Tree::Node { label, children } => {
                let mut pos = start;
                for child in children {
                    pos = child.walk_spans(pos, depth + 1, f);
                }
                f(label, start, pos, depth);
                pos
            }
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf { tag, surface } => write!(f, "({tag} {surface})"),
            Tree::Node { label, children } => {
                write!(f, "({label}")?;
                for child in children {
                    write!(f, " {child}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    /// 1-based position in the corpus.
    pub id: usize,
    pub tree: Tree,
}

impl AnnotatedSentence {
    pub fn tokens(&self) -> Vec<Token> {
        self.tree.tokens()
    }

    pub fn surfaces(&self) -> Vec<String> {
        self.tokens().into_iter().map(|t| t.surface).collect()
    }

    /// Sentence text with single spaces between tokens.
    pub fn text(&self) -> String {
        self.surfaces().join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedCorpus {
    pub language: String,
    /// Designated root category; when absent, every root must agree.
    pub start: Option<String>,
    pub tagset: Vec<PosTag>,
    pub categories: Vec<PhraseCategory>,
    pub sentences: Vec<AnnotatedSentence>,
}

impl AnnotatedCorpus {
    /// An empty corpus over the default legend.
    pub fn empty() -> Self {
        AnnotatedCorpus {
            language: DEFAULT_LANGUAGE.to_string(),
            start: None,
            tagset: default_tagset(),
            categories: default_categories(),
            sentences: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn tag(&self, name: &str) -> Option<&PosTag> {
        self.tagset.iter().find(|t| t.name == name)
    }

    pub fn category(&self, name: &str) -> Option<&PhraseCategory> {
        self.categories.iter().find(|c| c.name == name)
    }

    pub fn is_tag(&self, name: &str) -> bool {
        self.tag(name).is_some()
    }

    pub fn is_category(&self, name: &str) -> bool {
        self.category(name).is_some()
    }

    /// Distinct case-folded word types in first-occurrence order.
    pub fn lexicon(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for sentence in &self.sentences {
            for token in sentence.tokens() {
                let folded = token.surface.to_lowercase();
                if seen.insert(folded.clone()) {
                    out.push(folded);
                }
            }
        }
        out
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tree.leaf_count()).sum()
    }

    /// Checks every invariant the parser guarantees. Useful for corpora
    /// assembled in code.
    pub fn validate(&self) -> Result<(), CorpusError> {
        validate_legend(self)?;
        for (i, sentence) in self.sentences.iter().enumerate() {
            if sentence.id != i + 1 {
                return Err(CorpusError::Invalid(format!(
                    "sentence ids must be dense from 1; found {} at position {}",
                    sentence.id,
                    i + 1
                )));
            }
            check_tree(self, &sentence.tree, true)?;
        }
        Ok(())
    }
}

/// Leaf sequence of every sentence, in corpus order.
pub fn tokens_of(corpus: &AnnotatedCorpus) -> Vec<Vec<String>> {
    corpus
        .sentences
        .iter()
        .map(AnnotatedSentence::surfaces)
        .collect()
}

pub const DEFAULT_LANGUAGE: &str = "und";

pub fn default_tagset() -> Vec<PosTag> {
    ["ART", "N", "V", "PREP", "ADJ", "ADV", "PRON", "CONJ"]
        .iter()
        .zip(1..)
        .map(|(name, number)| PosTag {
            name: name.to_string(),
            number,
        })
        .collect()
}

pub fn default_categories() -> Vec<PhraseCategory> {
    [
        ("S", "crimson"),
        ("NP", "royalblue"),
        ("VP", "seagreen"),
        ("PP", "goldenrod"),
        ("SC", "mediumpurple"),
    ]
    .iter()
    .map(|(name, color)| PhraseCategory {
        name: name.to_string(),
        color: color.to_string(),
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unknown POS tag `{name}`")]
    UnknownTag {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("{line}:{column}: unknown phrase category `{name}`")]
    UnknownCategory {
        name: String,
        line: usize,
        column: usize,
    },
    /// A constituent mixing bare tokens with sub-constituents cannot be
    /// read as a contiguous span of child constituents.
    #[error("{line}:{column}: constituent `{label}` is not a contiguous sequence of constituents")]
    Discontinuous {
        label: String,
        line: usize,
        column: usize,
    },
    #[error("invalid legend: {0}")]
    Legend(String),
    #[error("invalid corpus: {0}")]
    Invalid(String),
}

pub(crate) fn is_reserved_char(c: char) -> bool {
    c.is_whitespace() || c == '(' || c == ')'
}

pub(crate) fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| is_reserved_char(c) || c == ':' || c == '=' || c == '#' || c == '/')
}

pub(crate) fn validate_legend(corpus: &AnnotatedCorpus) -> Result<(), CorpusError> {
    let legend = |m: String| Err(CorpusError::Legend(m));
    if corpus.categories.len() > MAX_CATEGORIES {
        return legend(format!(
            "{} phrase categories declared, at most {MAX_CATEGORIES} allowed",
            corpus.categories.len()
        ));
    }
    let mut names = BTreeSet::new();
    let mut numbers = BTreeSet::new();
    for tag in &corpus.tagset {
        if !valid_name(&tag.name) {
            return legend(format!("invalid tag name `{}`", tag.name));
        }
        if tag.number == 0 {
            return legend(format!("tag `{}` must have a positive number", tag.name));
        }
        if !names.insert(tag.name.as_str()) {
            return legend(format!("duplicate name `{}`", tag.name));
        }
        if !numbers.insert(tag.number) {
            return legend(format!("duplicate tag number {}", tag.number));
        }
    }
    let mut colors = BTreeSet::new();
    for cat in &corpus.categories {
        if !valid_name(&cat.name) {
            return legend(format!("invalid category name `{}`", cat.name));
        }
        if !names.insert(cat.name.as_str()) {
            return legend(format!("duplicate name `{}`", cat.name));
        }
        if cat.color.is_empty() || !colors.insert(cat.color.as_str()) {
            return legend(format!("category `{}` needs a unique color", cat.name));
        }
    }
    if let Some(start) = &corpus.start {
        if !corpus.is_category(start) {
            return legend(format!("start symbol `{start}` is not a declared category"));
        }
    }
    Ok(())
}

fn check_tree(corpus: &AnnotatedCorpus, tree: &Tree, root: bool) -> Result<(), CorpusError> {
    let invalid = |m: String| Err(CorpusError::Invalid(m));
    match tree {
        Tree::Leaf { tag, surface } => {
            if root {
                return invalid(format!("sentence root `{tag}` must be a phrase category"));
            }
            if !corpus.is_tag(tag) {
                return invalid(format!("unknown POS tag `{tag}`"));
            }
            if surface.is_empty() || surface.chars().any(is_reserved_char) {
                return invalid(format!("invalid token surface `{surface}`"));
            }
        }
        Tree::Node { label, children } => {
            if !corpus.is_category(label) {
                return invalid(format!("unknown phrase category `{label}`"));
            }
            if children.is_empty() {
                return invalid(format!("constituent `{label}` has no children"));
            }
            if root {
                if let Some(start) = &corpus.start {
                    if start != label {
                        return invalid(format!(
                            "sentence root `{label}` is not the start category `{start}`"
                        ));
                    }
                }
            }
            for child in children {
                check_tree(corpus, child, false)?;
            }
        }
    }
    Ok(())
}
