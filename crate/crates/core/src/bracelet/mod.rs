//! The bracelet method: thread word cards so that every adjacent pair,
//! including the sentence-initial and (optionally) sentence-final boundary,
//! is attested in the corpus.
//!
//! [`BigramModel`] keeps exact integer counts; probabilities are read out in
//! any [`Probability`] type, so the same model can report `f64` or exact
//! fractions.

mod deck;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::marker::PhantomData;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::corpus::AnnotatedCorpus;
use crate::scalar::Probability;

pub use deck::Deck;

/// Largest deck [`enumerate_bracelets`] accepts by default.
pub const DEFAULT_DECK_BOUND: usize = 10;

/// A bigram endpoint: a word or one of the sentence boundaries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Start,
    Word(String),
    End,
}

impl Symbol {
    pub fn word(w: impl Into<String>) -> Self {
        Symbol::Word(w.into())
    }

    pub fn as_word(&self) -> Option<&str> {
        match self {
            Symbol::Word(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Start => f.write_str("<s>"),
            Symbol::Word(w) => f.write_str(w),
            Symbol::End => f.write_str("</s>"),
        }
    }
}

impl Serialize for Symbol {
    fn serialize<Se: Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(match s.as_str() {
            "<s>" => Symbol::Start,
            "</s>" => Symbol::End,
            _ => Symbol::Word(s),
        })
    }
}

/// Whether a complete bracelet must also end on an attested final word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    #[default]
    EndRequired,
    EndOptional,
}

impl BoundaryPolicy {
    pub fn requires_end(self) -> bool {
        self == BoundaryPolicy::EndRequired
    }
}

impl std::str::FromStr for BoundaryPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "end-required" => Ok(BoundaryPolicy::EndRequired),
            "end-optional" => Ok(BoundaryPolicy::EndOptional),
            other => Err(format!(
                "unknown boundary policy `{other}` (end-required|end-optional)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BraceletError {
    #[error("cannot train a bigram model on an empty corpus")]
    EmptyCorpus,
    #[error("token sequence is empty")]
    EmptySequence,
    #[error("deck is empty")]
    EmptyDeck,
    #[error("out-of-vocabulary tokens: {}", .0.join(", "))]
    OutOfVocabulary(Vec<String>),
    #[error("deck of {size} cards exceeds the enumeration bound of {bound}")]
    DeckTooLarge { size: usize, bound: usize },
}

/// Boundary-aware bigram counts with no smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramModel<S = f64> {
    vocabulary: BTreeSet<String>,
    rows: BTreeMap<Symbol, BTreeMap<Symbol, u64>>,
    totals: BTreeMap<Symbol, u64>,
    sentences: u64,
    scalar: PhantomData<fn() -> S>,
}

impl<S: Probability> BigramModel<S> {
    /// Counts every sentence's leaf sequence with one START and one END.
    pub fn train(corpus: &AnnotatedCorpus) -> Result<Self, BraceletError> {
        Self::from_sequences(corpus.sentences.iter().map(|s| s.surfaces()))
    }

    pub fn from_sequences<I, T, W>(sentences: I) -> Result<Self, BraceletError>
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = W>,
        W: AsRef<str>,
    {
        let mut model = BigramModel {
            vocabulary: BTreeSet::new(),
            rows: BTreeMap::new(),
            totals: BTreeMap::new(),
            sentences: 0,
            scalar: PhantomData,
        };
        for sentence in sentences {
            let mut prev = Symbol::Start;
            let mut empty = true;
            for word in sentence {
                let word = word.as_ref().to_string();
                model.vocabulary.insert(word.clone());
                let next = Symbol::Word(word);
                model.bump(prev, next.clone());
                prev = next;
                empty = false;
            }
            if empty {
                continue;
            }
            model.bump(prev, Symbol::End);
            model.sentences += 1;
        }
        if model.sentences == 0 {
            return Err(BraceletError::EmptyCorpus);
        }
        Ok(model)
    }

    fn bump(&mut self, left: Symbol, right: Symbol) {
        *self.totals.entry(left.clone()).or_default() += 1;
        *self.rows.entry(left).or_default().entry(right).or_default() += 1;
    }

    /// Same counts, different probability type.
    pub fn with_scalar<T: Probability>(&self) -> BigramModel<T> {
        BigramModel {
            vocabulary: self.vocabulary.clone(),
            rows: self.rows.clone(),
            totals: self.totals.clone(),
            sentences: self.sentences,
            scalar: PhantomData,
        }
    }

    pub fn vocabulary(&self) -> &BTreeSet<String> {
        &self.vocabulary
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocabulary.contains(word)
    }

    pub fn sentence_count(&self) -> u64 {
        self.sentences
    }

    pub fn count(&self, left: &Symbol, right: &Symbol) -> u64 {
        self.rows
            .get(left)
            .and_then(|r| r.get(right))
            .copied()
            .unwrap_or(0)
    }

    /// Total mass leaving `left`.
    pub fn row_total(&self, left: &Symbol) -> u64 {
        self.totals.get(left).copied().unwrap_or(0)
    }

    pub fn row(&self, left: &Symbol) -> impl Iterator<Item = (&Symbol, u64)> {
        self.rows
            .get(left)
            .into_iter()
            .flat_map(|r| r.iter().map(|(k, v)| (k, *v)))
    }

    /// `P(right | left)`; zero for an empty row.
    pub fn probability(&self, left: &Symbol, right: &Symbol) -> S {
        match self.row_total(left) {
            0 => S::zero(),
            total => S::from_ratio(self.count(left, right), total),
        }
    }

    /// Every `(left, right, count)` triple, sorted with `<s>` rows first and
    /// `</s>` columns last.
    pub fn entries(&self) -> impl Iterator<Item = (&Symbol, &Symbol, u64)> {
        self.rows
            .iter()
            .flat_map(|(l, row)| row.iter().map(move |(r, c)| (l, r, *c)))
    }

    /// `left<TAB>right<TAB>count` lines in [`BigramModel::entries`] order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (l, r, c) in self.entries() {
            let _ = writeln!(out, "{l}\t{r}\t{c}");
        }
        out
    }

    fn check_vocabulary<'a, I: IntoIterator<Item = &'a str>>(
        &self,
        words: I,
    ) -> Result<(), BraceletError> {
        let mut missing: Vec<String> = Vec::new();
        for w in words {
            if !self.contains(w) && !missing.iter().any(|m| m == w) {
                missing.push(w.to_string());
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(BraceletError::OutOfVocabulary(missing))
        }
    }
}

/// One scored transition of a bracelet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step<S> {
    pub from: Symbol,
    pub to: Symbol,
    pub count: u64,
    pub probability: S,
}

/// A candidate ordering and its verdict. Step 0 is `<s>` → first card; step
/// `k` joins card `k` to card `k + 1` (1-based); under
/// [`BoundaryPolicy::EndRequired`] the last step reaches `</s>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BraceletSentence<S> {
    pub tokens: Vec<String>,
    pub valid: bool,
    pub steps: Vec<Step<S>>,
    /// Index of the first unattested step.
    pub first_failure: Option<usize>,
}

/// Scores `tokens` transition by transition.
pub fn validate_sequence<S: Probability, W: AsRef<str>>(
    model: &BigramModel<S>,
    tokens: &[W],
    policy: BoundaryPolicy,
) -> Result<BraceletSentence<S>, BraceletError> {
    if tokens.is_empty() {
        return Err(BraceletError::EmptySequence);
    }
    model.check_vocabulary(tokens.iter().map(AsRef::as_ref))?;
    Ok(score(
        model,
        tokens.iter().map(|t| t.as_ref().to_string()).collect(),
        policy,
    ))
}

fn score<S: Probability>(
    model: &BigramModel<S>,
    tokens: Vec<String>,
    policy: BoundaryPolicy,
) -> BraceletSentence<S> {
    let mut path: Vec<Symbol> = Vec::with_capacity(tokens.len() + 2);
    path.push(Symbol::Start);
    path.extend(tokens.iter().cloned().map(Symbol::Word));
    if policy.requires_end() {
        path.push(Symbol::End);
    }
    let steps: Vec<Step<S>> = path
        .windows(2)
        .map(|pair| Step {
            from: pair[0].clone(),
            to: pair[1].clone(),
            count: model.count(&pair[0], &pair[1]),
            probability: model.probability(&pair[0], &pair[1]),
        })
        .collect();
    let first_failure = steps.iter().position(|s| s.count == 0);
    BraceletSentence {
        valid: first_failure.is_none() && !tokens.is_empty(),
        tokens,
        steps,
        first_failure,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion<S> {
    pub token: String,
    pub count: u64,
    pub probability: S,
}

/// Cards from `remaining` that can follow `prefix`, most probable first,
/// ties broken by the card's surface. Probabilities are the model's row
/// probabilities, not renormalized over the deck.
///
/// Under [`BoundaryPolicy::EndRequired`], when a single card is left it is
/// only suggested if it can also close the sentence.
pub fn suggest_next<S: Probability, W: AsRef<str>>(
    model: &BigramModel<S>,
    prefix: &[W],
    remaining: &Deck,
    policy: BoundaryPolicy,
) -> Result<Vec<Suggestion<S>>, BraceletError> {
    model.check_vocabulary(prefix.iter().map(AsRef::as_ref).chain(remaining.distinct()))?;
    let left = prefix
        .last()
        .map_or(Symbol::Start, |w| Symbol::word(w.as_ref()));
    let closing = policy.requires_end() && remaining.len() == 1;
    let mut out: Vec<Suggestion<S>> = remaining
        .distinct()
        .filter_map(|card| {
            let right = Symbol::word(card);
            let count = model.count(&left, &right);
            if count == 0 || (closing && model.count(&right, &Symbol::End) == 0) {
                return None;
            }
            Some(Suggestion {
                token: card.to_string(),
                count,
                probability: model.probability(&left, &right),
            })
        })
        .collect();
    // same row, so ordering by count is ordering by probability
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.token.cmp(&b.token)));
    Ok(out)
}

/// Every ordering of the whole deck that validates, in lexicographic order.
pub fn enumerate_bracelets<S: Probability>(
    model: &BigramModel<S>,
    deck: &Deck,
    policy: BoundaryPolicy,
) -> Result<Vec<Vec<String>>, BraceletError> {
    enumerate_bracelets_bounded(model, deck, policy, DEFAULT_DECK_BOUND)
}

pub fn enumerate_bracelets_bounded<S: Probability>(
    model: &BigramModel<S>,
    deck: &Deck,
    policy: BoundaryPolicy,
    bound: usize,
) -> Result<Vec<Vec<String>>, BraceletError> {
    if deck.is_empty() {
        return Err(BraceletError::EmptyDeck);
    }
    if deck.len() > bound {
        return Err(BraceletError::DeckTooLarge {
            size: deck.len(),
            bound,
        });
    }
    model.check_vocabulary(deck.distinct())?;

    let mut counts: Vec<(String, usize)> = deck.counts().map(|(w, n)| (w.to_string(), n)).collect();
    let mut path = Vec::with_capacity(deck.len());
    let mut out = Vec::new();
    thread(
        model,
        &Symbol::Start,
        &mut counts,
        &mut path,
        deck.len(),
        policy,
        &mut out,
    );
    Ok(out)
}

fn thread<S: Probability>(
    model: &BigramModel<S>,
    last: &Symbol,
    counts: &mut [(String, usize)],
    path: &mut Vec<String>,
    total: usize,
    policy: BoundaryPolicy,
    out: &mut Vec<Vec<String>>,
) {
    if path.len() == total {
        if !policy.requires_end() || model.count(last, &Symbol::End) > 0 {
            out.push(path.clone());
        }
        return;
    }
    for i in 0..counts.len() {
        if counts[i].1 == 0 {
            continue;
        }
        let next = Symbol::word(counts[i].0.as_str());
        if model.count(last, &next) == 0 {
            continue;
        }
        counts[i].1 -= 1;
        path.push(counts[i].0.clone());
        thread(model, &next, counts, path, total, policy, out);
        path.pop();
        counts[i].1 += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkOutcome {
    /// Reached `</s>`.
    Completed,
    /// No attested successor among the remaining cards.
    DeadEnd,
    /// Hit `max_len` on a word that cannot end a sentence.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated<S> {
    pub sentence: BraceletSentence<S>,
    pub outcome: WalkOutcome,
}

/// Random walk from `<s>`, drawing successors in proportion to their
/// counts. With a deck, word successors are limited to unused cards.
/// Stuck or truncated walks come back scored, not as errors.
pub fn generate_sentence<S: Probability, R: Rng + ?Sized>(
    model: &BigramModel<S>,
    deck: Option<&Deck>,
    rng: &mut R,
    policy: BoundaryPolicy,
    max_len: usize,
) -> Generated<S> {
    let mut remaining = deck.cloned();
    let mut tokens: Vec<String> = Vec::new();
    let mut current = Symbol::Start;
    let outcome = loop {
        let at_limit = tokens.len() >= max_len;
        let candidates: Vec<(&Symbol, u64)> = model
            .row(&current)
            .filter(|(next, _)| match next {
                Symbol::End => true,
                Symbol::Word(w) => !at_limit && remaining.as_ref().is_none_or(|d| d.count(w) > 0),
                Symbol::Start => false,
            })
            .collect();
        if candidates.is_empty() {
            break if at_limit {
                WalkOutcome::Truncated
            } else {
                WalkOutcome::DeadEnd
            };
        }
        let weights =
            WeightedIndex::new(candidates.iter().map(|(_, c)| *c)).expect("positive counts");
        let next = candidates[weights.sample(rng)].0.clone();
        match next {
            Symbol::Word(w) => {
                if let Some(d) = remaining.as_mut() {
                    d.take(&w);
                }
                tokens.push(w.clone());
                current = Symbol::Word(w);
            }
            _ => break WalkOutcome::Completed,
        }
    };
    Generated {
        sentence: score(model, tokens, policy),
        outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use num_rational::Ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const S1: [&str; 6] = ["il", "mio", "cane", "è", "nel", "giardino"];

    fn f1() -> BigramModel<f64> {
        BigramModel::train(&fixtures::f1()).unwrap()
    }

    fn w(s: &str) -> Symbol {
        Symbol::word(s)
    }

    #[test]
    fn single_sentence_counts() {
        let model = BigramModel::<f64>::from_sequences([S1]).unwrap();
        assert_eq!(model.count(&Symbol::Start, &w("il")), 1);
        assert_eq!(model.count(&w("il"), &w("mio")), 1);
        assert_eq!(model.count(&w("giardino"), &Symbol::End), 1);
        assert_eq!(model.entries().count(), 7);
        assert!(model.entries().all(|(_, _, c)| c == 1));
    }

    #[test]
    fn f1_counts() {
        let model = f1();
        assert_eq!(model.count(&Symbol::Start, &w("il")), 3);
        assert_eq!(model.count(&w("nel"), &w("giardino")), 3);
        assert_eq!(model.count(&w("è"), &w("nel")), 2);
        assert_eq!(model.sentence_count(), 3);
    }

    #[test]
    fn empty_corpus_rejected() {
        let corpus = crate::corpus::AnnotatedCorpus::empty();
        assert_eq!(
            BigramModel::<f64>::train(&corpus).unwrap_err(),
            BraceletError::EmptyCorpus
        );
    }

    #[test]
    fn exact_row_probabilities() {
        let model: BigramModel<Ratio<u64>> = f1().with_scalar();
        assert_eq!(model.probability(&w("il"), &w("mio")), Ratio::new(1, 3));
        assert_eq!(
            model.probability(&Symbol::Start, &w("il")),
            Ratio::new(1, 1)
        );
        assert_eq!(model.probability(&w("zzz"), &w("il")), Ratio::new(0, 1));
    }

    #[test]
    fn validation_verdicts() {
        let model = f1();
        let v = validate_sequence(&model, &S1, BoundaryPolicy::EndRequired).unwrap();
        assert!(v.valid);
        assert_eq!(v.steps.len(), 7);
        assert_eq!(v.steps[6].to, Symbol::End);

        let bad = ["mio", "il", "cane", "è", "nel", "giardino"];
        let v = validate_sequence(&model, &bad, BoundaryPolicy::EndRequired).unwrap();
        assert!(!v.valid);
        assert_eq!(v.first_failure, Some(0));

        let v = validate_sequence(&model, &["il"], BoundaryPolicy::EndOptional).unwrap();
        assert!(v.valid);
        assert_eq!(v.steps.len(), 1);
        let v = validate_sequence(&model, &["il"], BoundaryPolicy::EndRequired).unwrap();
        assert!(!v.valid);
        assert_eq!(v.first_failure, Some(1));
    }

    #[test]
    fn validation_errors() {
        let model = f1();
        let empty: [&str; 0] = [];
        assert_eq!(
            validate_sequence(&model, &empty, BoundaryPolicy::EndOptional).unwrap_err(),
            BraceletError::EmptySequence
        );
        assert_eq!(
            validate_sequence(
                &model,
                &["il", "topo", "il", "re"],
                BoundaryPolicy::EndOptional
            )
            .unwrap_err(),
            BraceletError::OutOfVocabulary(vec!["topo".into(), "re".into()])
        );
    }

    #[test]
    fn suggestions_follow_row_probabilities() {
        let model = f1();
        let deck = Deck::from_tokens(S1);
        let first =
            suggest_next(&model, &[] as &[&str], &deck, BoundaryPolicy::EndRequired).unwrap();
        assert_eq!(first.len(), 1);
        assert_eq!((first[0].token.as_str(), first[0].probability), ("il", 1.0));

        let next = suggest_next(&model, &["il"], &deck, BoundaryPolicy::EndRequired).unwrap();
        let tokens: Vec<_> = next.iter().map(|s| s.token.as_str()).collect();
        assert_eq!(tokens, vec!["cane", "mio"]);
        assert!(next
            .iter()
            .all(|s| (s.probability - 1.0 / 3.0).abs() < 1e-12));

        let dead = suggest_next(
            &model,
            &["giardino"],
            &Deck::from_tokens(["il", "cane"]),
            BoundaryPolicy::EndOptional,
        )
        .unwrap();
        assert!(dead.is_empty());
    }

    #[test]
    fn last_card_must_close_under_end_required() {
        let model = f1();
        let prefix = ["il", "mio", "cane", "è", "nel"];
        let deck = Deck::from_tokens(["giardino"]);
        assert_eq!(
            suggest_next(&model, &prefix, &deck, BoundaryPolicy::EndRequired)
                .unwrap()
                .len(),
            1
        );
        let prefix = ["il", "cane", "nel", "giardino"];
        let deck = Deck::from_tokens(["è"]);
        assert!(
            suggest_next(&model, &prefix, &deck, BoundaryPolicy::EndRequired)
                .unwrap()
                .is_empty()
        );
        assert_eq!(
            suggest_next(&model, &prefix, &deck, BoundaryPolicy::EndOptional)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn enumeration_of_single_chain() {
        let model = BigramModel::<f64>::from_sequences([S1]).unwrap();
        let found =
            enumerate_bracelets(&model, &Deck::from_tokens(S1), BoundaryPolicy::EndRequired)
                .unwrap();
        assert_eq!(
            found,
            vec![S1.iter().map(|s| s.to_string()).collect::<Vec<_>>()]
        );
    }

    #[test]
    fn enumeration_errors_and_unreachable_cards() {
        let model = f1();
        let big = Deck::from_tokens(std::iter::repeat_n("il", 11));
        assert_eq!(
            enumerate_bracelets(&model, &big, BoundaryPolicy::EndRequired).unwrap_err(),
            BraceletError::DeckTooLarge {
                size: 11,
                bound: 10
            }
        );
        assert_eq!(
            enumerate_bracelets(&model, &Deck::default(), BoundaryPolicy::EndRequired).unwrap_err(),
            BraceletError::EmptyDeck
        );
        // "gatto" has no successor among the other cards and never starts a sentence
        let deck = Deck::from_tokens(["gatto", "mio"]);
        assert!(
            enumerate_bracelets(&model, &deck, BoundaryPolicy::EndOptional)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn generation_on_a_chain_is_deterministic() {
        let model = BigramModel::<f64>::from_sequences([S1]).unwrap();
        let deck = Deck::from_tokens(S1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let g = generate_sentence(
                &model,
                Some(&deck),
                &mut rng,
                BoundaryPolicy::EndRequired,
                20,
            );
            assert_eq!(g.outcome, WalkOutcome::Completed);
            assert!(g.sentence.valid);
            assert_eq!(g.sentence.tokens, S1);
        }
    }

    #[test]
    fn truncated_walk_is_flagged() {
        let model = f1();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = generate_sentence(&model, None, &mut rng, BoundaryPolicy::EndRequired, 1);
        // every sentence starts with "il", which never ends one
        assert_eq!(g.sentence.tokens, vec!["il"]);
        assert_eq!(g.outcome, WalkOutcome::Truncated);
        assert!(!g.sentence.valid);
        assert_eq!(g.sentence.first_failure, Some(1));
    }

    #[test]
    fn dump_is_sorted_tsv() {
        let model = BigramModel::<f64>::from_sequences([["a", "b"]]).unwrap();
        assert_eq!(model.dump(), "<s>\ta\t1\na\tb\t1\nb\t</s>\t1\n");
    }

    #[test]
    fn symbol_serde_round_trip() {
        for sym in [Symbol::Start, Symbol::End, w("cane")] {
            let json = serde_json::to_string(&sym).unwrap();
            assert_eq!(serde_json::from_str::<Symbol>(&json).unwrap(), sym);
        }
        assert_eq!(serde_json::to_string(&Symbol::Start).unwrap(), "\"<s>\"");
    }
}
