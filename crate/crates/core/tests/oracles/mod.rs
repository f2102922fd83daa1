//! Reference implementations used as test oracles. Each one is written
//! from the definitions directly and shares no code with the library paths
//! it checks.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use glossa_core::corpus::{AnnotatedCorpus, PhraseCategory, PosTag, Tree};
use glossa_core::grammar::{Grammar, Label, Rule};
use glossa_core::masking::{PhonotacticProfile, SlotKind};
use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use regex::Regex;

pub const START: &str = "<s>";
pub const END: &str = "</s>";

/// Anchored regex accepting exactly the strings the profile can spell.
pub fn phonotactic_regex(profile: &PhonotacticProfile) -> Regex {
    let alternation = |items: &BTreeSet<String>, optional: bool| {
        let mut parts: Vec<String> = items
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| regex::escape(s))
            .collect();
        parts.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        let may_be_empty = optional || items.iter().any(String::is_empty) || parts.is_empty();
        format!(
            "(?:{}){}",
            parts.join("|"),
            if may_be_empty { "?" } else { "" }
        )
    };
    let syllables: Vec<String> = profile
        .templates
        .iter()
        .map(|t| {
            t.slots
                .iter()
                .map(|slot| {
                    let items = match slot.kind {
                        SlotKind::Onset => &profile.onsets,
                        SlotKind::Nucleus => &profile.nuclei,
                        SlotKind::Coda => &profile.codas,
                    };
                    alternation(items, slot.optional)
                })
                .collect::<String>()
        })
        .collect();
    let pattern = format!(
        "^(?:{}){{{},{}}}$",
        syllables.join("|"),
        profile.min_syllables,
        profile.max_syllables
    );
    Regex::new(&pattern).expect("oracle pattern compiles")
}

/// Bigram counts over sentences padded with boundary markers.
pub fn count_bigrams(sentences: &[Vec<String>]) -> HashMap<(String, String), u64> {
    let mut counts = HashMap::new();
    for sentence in sentences {
        let padded: Vec<&str> = std::iter::once(START)
            .chain(sentence.iter().map(String::as_str))
            .chain(std::iter::once(END))
            .collect();
        for pair in padded.windows(2) {
            *counts
                .entry((pair[0].to_string(), pair[1].to_string()))
                .or_insert(0) += 1;
        }
    }
    counts
}

pub fn attested(counts: &HashMap<(String, String), u64>, left: &str, right: &str) -> bool {
    counts
        .get(&(left.to_string(), right.to_string()))
        .copied()
        .unwrap_or(0)
        > 0
}

/// The bracelet rule read off the definition: attested start, attested
/// joins, and an attested end when required.
pub fn bracelet_valid(
    counts: &HashMap<(String, String), u64>,
    tokens: &[String],
    end_required: bool,
) -> bool {
    let Some(first) = tokens.first() else {
        return false;
    };
    attested(counts, START, first)
        && tokens.windows(2).all(|w| attested(counts, &w[0], &w[1]))
        && (!end_required || attested(counts, tokens.last().unwrap(), END))
}

/// Every distinct ordering of `deck` that passes [`bracelet_valid`].
pub fn brute_force_bracelets(
    counts: &HashMap<(String, String), u64>,
    deck: &[String],
    end_required: bool,
) -> BTreeSet<Vec<String>> {
    deck.iter()
        .cloned()
        .permutations(deck.len())
        .filter(|p| bracelet_valid(counts, p, end_required))
        .collect()
}

/// `P(right | left)` as a float from raw counts.
pub fn conditional(counts: &HashMap<(String, String), u64>, left: &str, right: &str) -> f64 {
    let row: u64 = counts
        .iter()
        .filter(|((l, _), _)| l == left)
        .map(|(_, c)| c)
        .sum();
    if row == 0 {
        return 0.0;
    }
    counts
        .get(&(left.to_string(), right.to_string()))
        .copied()
        .unwrap_or(0) as f64
        / row as f64
}

/// Distinct local trees of a corpus, written `LHS -> A B C`.
pub fn local_trees(corpus: &AnnotatedCorpus) -> BTreeSet<String> {
    fn walk(tree: &Tree, out: &mut BTreeSet<String>) {
        if let Tree::Node { label, children } = tree {
            let rhs: Vec<&str> = children.iter().map(Tree::label).collect();
            out.insert(format!("{label} -> {}", rhs.join(" ")));
            for child in children {
                walk(child, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    for s in &corpus.sentences {
        walk(&s.tree, &mut out);
    }
    out
}

/// Whether `start` derives the tag string, by exhaustive leftmost
/// derivation over sentential forms. Rules never shrink a form, so forms
/// longer than the input are pruned; visited forms cut unit cycles.
pub fn derives(rules: &[Rule], start: &str, tags: &[String]) -> bool {
    #[derive(Clone, PartialEq, Eq, Hash)]
    enum Sym {
        Cat(String),
        Tag(String),
    }
    let mut by_lhs: HashMap<&str, Vec<Vec<Sym>>> = HashMap::new();
    for rule in rules {
        by_lhs.entry(rule.lhs.as_str()).or_default().push(
            rule.rhs
                .iter()
                .map(|l| match l {
                    Label::Category(c) => Sym::Cat(c.clone()),
                    Label::Tag(t) => Sym::Tag(t.clone()),
                })
                .collect(),
        );
    }
    let mut seen: HashSet<Vec<Sym>> = HashSet::new();
    let mut stack = vec![vec![Sym::Cat(start.to_string())]];
    while let Some(form) = stack.pop() {
        if form.len() > tags.len() || !seen.insert(form.clone()) {
            continue;
        }
        let Some(pos) = form.iter().position(|s| matches!(s, Sym::Cat(_))) else {
            let yields: Vec<&String> = form
                .iter()
                .map(|s| match s {
                    Sym::Tag(t) => t,
                    Sym::Cat(_) => unreachable!(),
                })
                .collect();
            if yields.len() == tags.len() && yields.iter().zip(tags).all(|(a, b)| *a == b) {
                return true;
            }
            continue;
        };
        // the terminal prefix is final under leftmost expansion
        let prefix_ok = form[..pos]
            .iter()
            .zip(tags)
            .all(|(s, t)| matches!(s, Sym::Tag(x) if x == t));
        if !prefix_ok {
            continue;
        }
        let Sym::Cat(cat) = &form[pos] else {
            unreachable!()
        };
        for rhs in by_lhs.get(cat.as_str()).into_iter().flatten() {
            let mut next = form[..pos].to_vec();
            next.extend(rhs.iter().cloned());
            next.extend(form[pos + 1..].iter().cloned());
            stack.push(next);
        }
    }
    false
}

/// A random grammar over categories `C0..` (start `C0`) and tags `T0..`,
/// each tag with a single word `tN`.
pub fn random_grammar<R: Rng>(rng: &mut R, max_rhs: usize) -> Grammar {
    let n_cats = rng.gen_range(1..=4);
    let n_tags = rng.gen_range(1..=3);
    let cats: Vec<String> = (0..n_cats).map(|i| format!("C{i}")).collect();
    let tags: Vec<String> = (0..n_tags).map(|i| format!("T{i}")).collect();
    let n_rules = rng.gen_range(1..=8);
    let mut rules = Vec::new();
    while rules.len() < n_rules {
        let lhs = cats.choose(rng).unwrap().clone();
        let len = rng.gen_range(1..=max_rhs);
        let rhs: Vec<Label> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.55) {
                    Label::Tag(tags.choose(rng).unwrap().clone())
                } else {
                    Label::Category(cats.choose(rng).unwrap().clone())
                }
            })
            .collect();
        if rhs == [Label::Category(lhs.clone())] {
            continue;
        }
        rules.push(Rule::new(lhs, rhs));
    }
    let lexicon: BTreeMap<String, BTreeSet<String>> = tags
        .iter()
        .map(|t| (t.clone(), [t.to_lowercase()].into()))
        .collect();
    let tagset = tags
        .iter()
        .enumerate()
        .map(|(i, t)| PosTag {
            name: t.clone(),
            number: i as u32 + 1,
        })
        .collect();
    let categories = cats
        .iter()
        .enumerate()
        .map(|(i, c)| PhraseCategory {
            name: c.clone(),
            color: format!("c{i}"),
        })
        .collect();
    Grammar::from_parts("C0", rules, lexicon, tagset, categories)
        .expect("random grammar is legend-resident")
}

/// A deck of up to `max` cards drawn from one or two fixture sentences.
pub fn random_deck<R: Rng>(rng: &mut R, corpus: &AnnotatedCorpus, max: usize) -> Vec<String> {
    let mut pool: Vec<String> = corpus.sentences.choose(rng).unwrap().surfaces();
    if rng.gen_bool(0.3) {
        pool.extend(corpus.sentences.choose(rng).unwrap().surfaces());
    }
    let size = rng.gen_range(1..=max.min(pool.len()));
    if rng.gen_bool(0.5) {
        // a contiguous stretch keeps many decks solvable
        let from = rng.gen_range(0..=pool.len() - size);
        pool[from..from + size].to_vec()
    } else {
        pool.shuffle(rng);
        pool.truncate(size);
        pool
    }
}
