//! Attested phrase-structure grammars.
//!
//! [`extract_grammar`] collects every local tree of an annotated corpus as a
//! rewrite rule. The same rule set then decides whether a tagged token
//! sequence reduces to the start category ([`reduce`], a CKY chart over the
//! binarized rules) and builds new sentences top-down ([`generate`]).

mod binarize;
mod chart;
mod generate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedCorpus, PhraseCategory, PosTag, Token, Tree};

pub use binarize::{binarize, BinaryGrammar, BinarySymbol};
pub use chart::{PartialPiece, PARSE_LIMIT};
pub use generate::{generate, GenerateOptions, RuleWeighting};

/// Longest right-hand side accepted by default.
pub const DEFAULT_MAX_RHS: usize = 6;

/// A grammar symbol: a phrase category or a POS tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Category(String),
    Tag(String),
}

impl Label {
    pub fn name(&self) -> &str {
        match self {
            Label::Category(n) | Label::Tag(n) => n,
        }
    }

    pub fn is_tag(&self) -> bool {
        matches!(self, Label::Tag(_))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `lhs = rhs...`, the rule printed on a workshop "=" card.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<Label>,
}

impl Rule {
    pub fn new(lhs: impl Into<String>, rhs: Vec<Label>) -> Self {
        Rule {
            lhs: lhs.into(),
            rhs,
        }
    }

    /// Parses `LHS = A B C` against a corpus legend.
    pub fn parse(text: &str, legend: &AnnotatedCorpus) -> Result<Rule, GrammarError> {
        let malformed = |m: &str| GrammarError::MalformedRule(format!("{m}: `{}`", text.trim()));
        let (lhs, rhs) = text
            .split_once('=')
            .ok_or_else(|| malformed("missing `=`"))?;
        let lhs = lhs.trim();
        if lhs.is_empty() || lhs.split_whitespace().count() != 1 {
            return Err(malformed("left-hand side must be one category"));
        }
        if !legend.is_category(lhs) {
            return Err(GrammarError::UnknownSymbol(lhs.to_string()));
        }
        let rhs = rhs
            .split_whitespace()
            .map(|name| resolve(legend, name))
            .collect::<Result<Vec<_>, _>>()?;
        let rule = Rule::new(lhs, rhs);
        rule.check(DEFAULT_MAX_RHS)?;
        Ok(rule)
    }

    fn check(&self, max_rhs: usize) -> Result<(), GrammarError> {
        if self.rhs.is_empty() {
            return Err(GrammarError::MalformedRule(format!(
                "`{}` has an empty right-hand side",
                self.lhs
            )));
        }
        if self.rhs.len() > max_rhs {
            return Err(GrammarError::RuleTooLong {
                rule: self.to_string(),
                bound: max_rhs,
            });
        }
        if let [Label::Category(only)] = self.rhs.as_slice() {
            if *only == self.lhs {
                return Err(GrammarError::UnitSelfLoop(self.lhs.clone()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} =", self.lhs)?;
        for sym in &self.rhs {
            write!(f, " {sym}")?;
        }
        Ok(())
    }
}

fn resolve(legend: &AnnotatedCorpus, name: &str) -> Result<Label, GrammarError> {
    if legend.is_category(name) {
        Ok(Label::Category(name.to_string()))
    } else if legend.is_tag(name) {
        Ok(Label::Tag(name.to_string()))
    } else {
        Err(GrammarError::UnknownSymbol(name.to_string()))
    }
}

/// Whether reduction accepts surfaces never seen with their tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconMode {
    /// Any surface is admitted under a known tag.
    #[default]
    Open,
    /// Only attested `(tag, surface)` pairs are admitted.
    Closed,
}

impl std::str::FromStr for LexiconMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" => Ok(LexiconMode::Open),
            "closed" => Ok(LexiconMode::Closed),
            other => Err(format!("unknown lexicon mode `{other}` (open|closed)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("cannot extract a grammar from an empty corpus")]
    EmptyCorpus,
    #[error("sentence {sentence} is rooted in `{found}`, expected `{expected}`")]
    InconsistentRoot {
        sentence: usize,
        expected: String,
        found: String,
    },
    #[error("rule `{rule}` is longer than {bound} symbols")]
    RuleTooLong { rule: String, bound: usize },
    #[error("unit self-loop `{0} = {0}`")]
    UnitSelfLoop(String),
    #[error("malformed rule: {0}")]
    MalformedRule(String),
    #[error("symbol `{0}` is not declared by the legend")]
    UnknownSymbol(String),
    #[error("token `{surface}` tagged `{tag}` is not admissible: {reason}")]
    InadmissibleToken {
        surface: String,
        tag: String,
        reason: String,
    },
    #[error("start category `{0}` cannot derive any sentence")]
    Unproductive(String),
    #[error("generation exceeded its depth or size budget on all {attempts} attempts")]
    DepthExceeded { attempts: usize },
    #[error("deck cannot supply the required cards after {attempts} attempts; short of: {}", .missing.join(", "))]
    DeckInfeasible {
        attempts: usize,
        missing: Vec<String>,
    },
}

/// Attested rules plus the words seen under each tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    start: String,
    /// Sorted and deduplicated; positions are rule ids.
    rules: Vec<Rule>,
    /// Occurrences of each rule in the source corpus.
    frequencies: Vec<u64>,
    lexicon: BTreeMap<String, BTreeSet<String>>,
    tagset: Vec<PosTag>,
    categories: Vec<PhraseCategory>,
    pub lexicon_mode: LexiconMode,
}

/// Every local tree of every sentence as a rule; every leaf as a lexicon
/// entry. The start category is the corpus's declared start, or the common
/// root of all sentences.
pub fn extract_grammar(corpus: &AnnotatedCorpus) -> Result<Grammar, GrammarError> {
    extract_grammar_bounded(corpus, DEFAULT_MAX_RHS)
}

pub fn extract_grammar_bounded(
    corpus: &AnnotatedCorpus,
    max_rhs: usize,
) -> Result<Grammar, GrammarError> {
    let first = corpus.sentences.first().ok_or(GrammarError::EmptyCorpus)?;
    let start = corpus
        .start
        .clone()
        .unwrap_or_else(|| first.tree.label().to_string());

    let mut counts: BTreeMap<Rule, u64> = BTreeMap::new();
    let mut lexicon: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for sentence in &corpus.sentences {
        if sentence.tree.label() != start || sentence.tree.is_leaf() {
            return Err(GrammarError::InconsistentRoot {
                sentence: sentence.id,
                expected: start,
                found: sentence.tree.label().to_string(),
            });
        }
        collect_local_trees(&sentence.tree, &mut counts, &mut lexicon);
    }
    for rule in counts.keys() {
        rule.check(max_rhs)?;
    }
    let (rules, frequencies) = counts.into_iter().unzip();
    Ok(Grammar {
        start,
        rules,
        frequencies,
        lexicon,
        tagset: corpus.tagset.clone(),
        categories: corpus.categories.clone(),
        lexicon_mode: LexiconMode::default(),
    })
}

fn collect_local_trees(
    tree: &Tree,
    counts: &mut BTreeMap<Rule, u64>,
    lexicon: &mut BTreeMap<String, BTreeSet<String>>,
) {
    match tree {
        Tree::Leaf { tag, surface } => {
            lexicon
                .entry(tag.clone())
                .or_default()
                .insert(surface.clone());
        }
        Tree::Node { label, children } => {
            let rhs = children
                .iter()
                .map(|c| match c {
                    Tree::Leaf { tag, .. } => Label::Tag(tag.clone()),
                    Tree::Node { label, .. } => Label::Category(label.clone()),
                })
                .collect();
            *counts.entry(Rule::new(label.clone(), rhs)).or_default() += 1;
            for child in children {
                collect_local_trees(child, counts, lexicon);
            }
        }
    }
}

impl Grammar {
    /// Assembles a grammar from explicit parts, checking that every symbol is
    /// in the legend. Duplicate rules collapse.
    pub fn from_parts(
        start: impl Into<String>,
        rules: impl IntoIterator<Item = Rule>,
        lexicon: BTreeMap<String, BTreeSet<String>>,
        tagset: Vec<PosTag>,
        categories: Vec<PhraseCategory>,
    ) -> Result<Grammar, GrammarError> {
        let start = start.into();
        let is_cat = |n: &str| categories.iter().any(|c| c.name == n);
        let is_tag = |n: &str| tagset.iter().any(|t| t.name == n);
        if !is_cat(&start) {
            return Err(GrammarError::UnknownSymbol(start));
        }
        let mut counts: BTreeMap<Rule, u64> = BTreeMap::new();
        for rule in rules {
            rule.check(DEFAULT_MAX_RHS)?;
            if !is_cat(&rule.lhs) {
                return Err(GrammarError::UnknownSymbol(rule.lhs));
            }
            for sym in &rule.rhs {
                let ok = match sym {
                    Label::Category(n) => is_cat(n),
                    Label::Tag(n) => is_tag(n),
                };
                if !ok {
                    return Err(GrammarError::UnknownSymbol(sym.name().to_string()));
                }
            }
            *counts.entry(rule).or_default() += 1;
        }
        if let Some(tag) = lexicon.keys().find(|t| !is_tag(t)) {
            return Err(GrammarError::UnknownSymbol(tag.clone()));
        }
        let (rules, frequencies) = counts.into_iter().unzip();
        Ok(Grammar {
            start,
            rules,
            frequencies,
            lexicon,
            tagset,
            categories,
            lexicon_mode: LexiconMode::default(),
        })
    }

    pub fn with_lexicon_mode(mut self, mode: LexiconMode) -> Self {
        self.lexicon_mode = mode;
        self
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule_set(&self) -> BTreeSet<Rule> {
        self.rules.iter().cloned().collect()
    }

    pub fn frequency(&self, rule: &Rule) -> u64 {
        self.rules
            .binary_search(rule)
            .map(|i| self.frequencies[i])
            .unwrap_or(0)
    }

    pub(crate) fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    pub fn lexicon(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.lexicon
    }

    pub fn tagset(&self) -> &[PosTag] {
        &self.tagset
    }

    pub fn categories(&self) -> &[PhraseCategory] {
        &self.categories
    }

    pub fn rules_for<'a>(&'a self, lhs: &'a str) -> impl Iterator<Item = (usize, &'a Rule)> + 'a {
        self.rules
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.lhs == lhs)
    }

    /// Rule lines `LHS = RHS...` then lexicon lines `POS : surface`, both
    /// sorted.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut lines: Vec<String> = self.rules.iter().map(Rule::to_string).collect();
        lines.sort();
        for line in lines {
            let _ = writeln!(out, "{line}");
        }
        for (tag, words) in &self.lexicon {
            for word in words {
                let _ = writeln!(out, "{tag} : {word}");
            }
        }
        out
    }

    fn check_tokens(&self, tokens: &[Token]) -> Result<(), GrammarError> {
        for token in tokens {
            let inadmissible = |reason: &str| GrammarError::InadmissibleToken {
                surface: token.surface.clone(),
                tag: token.pos.clone(),
                reason: reason.to_string(),
            };
            if !self.tagset.iter().any(|t| t.name == token.pos) {
                return Err(inadmissible("tag is not in the tagset"));
            }
            if self.lexicon_mode == LexiconMode::Closed
                && !self
                    .lexicon
                    .get(&token.pos)
                    .is_some_and(|words| words.contains(&token.surface))
            {
                return Err(inadmissible(
                    "pair is not attested and the lexicon is closed",
                ));
            }
        }
        Ok(())
    }

    /// Fewest rule applications, ties broken by the lexicographically
    /// smallest rule trace. `None` when the tokens do not reduce.
    pub fn reduce(&self, tokens: &[Token]) -> Result<Option<Derivation>, GrammarError> {
        self.check_tokens(tokens)?;
        Ok(chart::Chart::build(&binarize(self), tokens).best(self))
    }

    /// Up to `limit` distinct parse trees rooted in the start category.
    pub fn parses(&self, tokens: &[Token], limit: usize) -> Result<Vec<Tree>, GrammarError> {
        self.check_tokens(tokens)?;
        let binary = binarize(self);
        Ok(chart::Chart::build(&binary, tokens).all_parses(limit))
    }

    /// Shortest cover of the tokens by reduced constituents, for reporting
    /// how far a failed reduction got.
    pub fn best_partial(&self, tokens: &[Token]) -> Result<Vec<PartialPiece>, GrammarError> {
        self.check_tokens(tokens)?;
        let binary = binarize(self);
        Ok(chart::Chart::build(&binary, tokens).partial_cover())
    }
}

/// Reduces `tokens` to the start category, see [`Grammar::reduce`].
pub fn reduce(grammar: &Grammar, tokens: &[Token]) -> Result<Option<Derivation>, GrammarError> {
    grammar.reduce(tokens)
}

/// A parse tree with the rules that built it, in leftmost-derivation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derivation {
    pub tree: Tree,
    pub rule_trace: Vec<Rule>,
}

impl Derivation {
    pub fn tokens(&self) -> Vec<Token> {
        self.tree.tokens()
    }

    /// Rebuilds the tree by replaying the trace from `start`, always
    /// expanding the leftmost unexpanded category, then filling leaves with
    /// this derivation's tokens.
    pub fn replay(&self, start: &str) -> Option<Tree> {
        let mut trace = self.rule_trace.iter();
        let mut leaves = self.tokens().into_iter();
        let tree = expand_leftmost(&Label::Category(start.to_string()), &mut trace, &mut leaves)?;
        (trace.next().is_none() && leaves.next().is_none()).then_some(tree)
    }

    pub fn sentence(&self) -> String {
        self.tokens()
            .into_iter()
            .map(|t| t.surface)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn expand_leftmost<'a>(
    label: &Label,
    trace: &mut impl Iterator<Item = &'a Rule>,
    leaves: &mut impl Iterator<Item = Token>,
) -> Option<Tree> {
    match label {
        Label::Tag(tag) => {
            let token = leaves.next()?;
            (token.pos == *tag).then(|| Tree::leaf(tag.clone(), token.surface))
        }
        Label::Category(cat) => {
            let rule = trace.next()?;
            if rule.lhs != *cat {
                return None;
            }
            let children = rule
                .rhs
                .iter()
                .map(|sym| expand_leftmost(sym, trace, leaves))
                .collect::<Option<Vec<_>>>()?;
            Some(Tree::node(cat.clone(), children))
        }
    }
}
