//! Top-down leftmost generation.
//!
//! A rule is applicable when every right-hand symbol can still finish
//! within the remaining depth and leaf budget, so an attempt only fails when
//! a deck runs out of a needed card.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Derivation, Grammar, GrammarError, Label, Rule};
use crate::corpus::{Token, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleWeighting {
    #[default]
    Uniform,
    /// Proportional to how often the rule occurs in the source corpus.
    Frequency,
}

impl std::str::FromStr for RuleWeighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(RuleWeighting::Uniform),
            "frequency" => Ok(RuleWeighting::Frequency),
            other => Err(format!(
                "unknown rule weighting `{other}` (uniform|frequency)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateOptions {
    /// Deepest category nesting allowed; the start category is level 1.
    pub max_depth: usize,
    pub retries: usize,
    /// Upper bound on sentence length.
    pub max_leaves: usize,
    pub weighting: RuleWeighting,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            max_depth: 12,
            retries: 50,
            max_leaves: 48,
            weighting: RuleWeighting::Uniform,
        }
    }
}

const UNREACHABLE: usize = usize::MAX;

/// Least depth and least leaf count each category needs to finish, given
/// which tags can be filled.
struct Bounds {
    depth: BTreeMap<String, usize>,
    leaves: BTreeMap<String, usize>,
}

impl Bounds {
    fn compute(grammar: &Grammar, fillable: &BTreeSet<String>) -> Self {
        let mut depth: BTreeMap<String, usize> = BTreeMap::new();
        let mut leaves: BTreeMap<String, usize> = BTreeMap::new();
        loop {
            let mut changed = false;
            for rule in grammar.rules() {
                let mut d = 0usize;
                let mut l = 0usize;
                let mut ok = true;
                for sym in &rule.rhs {
                    match sym {
                        Label::Tag(t) if fillable.contains(t) => l += 1,
                        Label::Tag(_) => ok = false,
                        Label::Category(c) => match (depth.get(c), leaves.get(c)) {
                            (Some(&cd), Some(&cl)) => {
                                d = d.max(cd);
                                l += cl;
                            }
                            _ => ok = false,
                        },
                    }
                }
                if !ok {
                    continue;
                }
                let d = d + 1;
                if depth.get(&rule.lhs).is_none_or(|&cur| d < cur) {
                    depth.insert(rule.lhs.clone(), d);
                    changed = true;
                }
                if leaves.get(&rule.lhs).is_none_or(|&cur| l < cur) {
                    leaves.insert(rule.lhs.clone(), l);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Bounds { depth, leaves }
    }

    fn depth_of(&self, sym: &Label, fillable: &BTreeSet<String>) -> usize {
        match sym {
            Label::Tag(t) if fillable.contains(t) => 0,
            Label::Tag(_) => UNREACHABLE,
            Label::Category(c) => self.depth.get(c).copied().unwrap_or(UNREACHABLE),
        }
    }

    fn leaves_of(&self, sym: &Label, fillable: &BTreeSet<String>) -> usize {
        match sym {
            Label::Tag(t) if fillable.contains(t) => 1,
            Label::Tag(_) => UNREACHABLE,
            Label::Category(c) => self.leaves.get(c).copied().unwrap_or(UNREACHABLE),
        }
    }
}

enum Leaves {
    Lexicon,
    /// Remaining surfaces per tag, in deck order.
    Deck(BTreeMap<String, Vec<String>>),
}

struct Attempt<'a, R: Rng + ?Sized> {
    grammar: &'a Grammar,
    bounds: &'a Bounds,
    fillable: &'a BTreeSet<String>,
    options: &'a GenerateOptions,
    max_leaves: usize,
    rng: &'a mut R,
    leaves: Leaves,
    used: usize,
    trace: Vec<Rule>,
    short: Vec<String>,
}

impl<R: Rng + ?Sized> Attempt<'_, R> {
    /// Expands `cat` at nesting `level`, with `reserved` leaves owed to
    /// symbols still pending to the right.
    fn expand(&mut self, cat: &str, level: usize, reserved: usize) -> Option<Tree> {
        let remaining = self.options.max_depth - level;
        let candidates: Vec<(usize, &Rule)> = self
            .grammar
            .rules_for(cat)
            .filter(|(_, rule)| {
                let mut need = 0usize;
                for sym in &rule.rhs {
                    if self.bounds.depth_of(sym, self.fillable) > remaining {
                        return false;
                    }
                    need += self.bounds.leaves_of(sym, self.fillable);
                }
                self.used + need + reserved <= self.max_leaves
            })
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let (_, rule) = match self.options.weighting {
            RuleWeighting::Uniform => candidates[self.rng.gen_range(0..candidates.len())],
            RuleWeighting::Frequency => {
                let freq = self.grammar.frequencies();
                let total: u64 = candidates.iter().map(|(i, _)| freq[*i].max(1)).sum();
                let mut pick = self.rng.gen_range(0..total);
                *candidates
                    .iter()
                    .find(|(i, _)| {
                        let w = freq[*i].max(1);
                        if pick < w {
                            true
                        } else {
                            pick -= w;
                            false
                        }
                    })
                    .expect("pick is below the total weight")
            }
        };
        self.trace.push(rule.clone());

        let owed: Vec<usize> = rule
            .rhs
            .iter()
            .map(|s| self.bounds.leaves_of(s, self.fillable))
            .collect();
        let mut children = Vec::with_capacity(rule.rhs.len());
        for (i, sym) in rule.rhs.iter().enumerate() {
            let right: usize = owed[i + 1..].iter().sum();
            let child = match sym {
                Label::Tag(tag) => self.fill(tag)?,
                Label::Category(c) => self.expand(c, level + 1, reserved + right)?,
            };
            children.push(child);
        }
        Some(Tree::node(cat, children))
    }

    fn fill(&mut self, tag: &str) -> Option<Tree> {
        let surface = match &mut self.leaves {
            Leaves::Lexicon => {
                let words = self.grammar.lexicon().get(tag)?;
                let i = self.rng.gen_range(0..words.len());
                words.iter().nth(i)?.clone()
            }
            Leaves::Deck(cards) => match cards.get_mut(tag).filter(|c| !c.is_empty()) {
                Some(cards) => {
                    let i = self.rng.gen_range(0..cards.len());
                    cards.remove(i)
                }
                None => {
                    self.short.push(tag.to_string());
                    return None;
                }
            },
        };
        self.used += 1;
        Some(Tree::leaf(tag, surface))
    }
}

/// Draws one sentence from `grammar`. With a deck, leaves come from its
/// cards, each used at most once; otherwise from the lexicon.
pub fn generate<R: Rng + ?Sized>(
    grammar: &Grammar,
    rng: &mut R,
    deck: Option<&[Token]>,
    options: &GenerateOptions,
) -> Result<Derivation, GrammarError> {
    let fillable: BTreeSet<String> = match deck {
        None => grammar
            .lexicon()
            .iter()
            .filter(|(_, words)| !words.is_empty())
            .map(|(tag, _)| tag.clone())
            .collect(),
        Some(cards) => cards.iter().map(|t| t.pos.clone()).collect(),
    };
    let bounds = Bounds::compute(grammar, &fillable);
    let start = grammar.start();
    let Some(&min_depth) = bounds.depth.get(start) else {
        return Err(match deck {
            None => GrammarError::Unproductive(start.to_string()),
            Some(_) => GrammarError::DeckInfeasible {
                attempts: 0,
                missing: missing_tags(grammar, &fillable),
            },
        });
    };
    let max_leaves = deck.map_or(options.max_leaves, |d| d.len().min(options.max_leaves));
    if min_depth > options.max_depth || bounds.leaves[start] > max_leaves {
        return Err(match deck {
            Some(_) if bounds.leaves[start] > max_leaves => GrammarError::DeckInfeasible {
                attempts: 0,
                missing: Vec::new(),
            },
            _ => GrammarError::DepthExceeded { attempts: 0 },
        });
    }

    let mut short = BTreeSet::new();
    let attempts = options.retries.max(1);
    for _ in 0..attempts {
        let leaves = match deck {
            None => Leaves::Lexicon,
            Some(cards) => {
                let mut by_tag: BTreeMap<String, Vec<String>> = BTreeMap::new();
                for card in cards {
                    by_tag
                        .entry(card.pos.clone())
                        .or_default()
                        .push(card.surface.clone());
                }
                Leaves::Deck(by_tag)
            }
        };
        let mut attempt = Attempt {
            grammar,
            bounds: &bounds,
            fillable: &fillable,
            options,
            max_leaves,
            rng: &mut *rng,
            leaves,
            used: 0,
            trace: Vec::new(),
            short: Vec::new(),
        };
        if let Some(tree) = attempt.expand(start, 1, 0) {
            return Ok(Derivation {
                tree,
                rule_trace: attempt.trace,
            });
        }
        short.extend(attempt.short);
    }
    Err(match deck {
        Some(_) => GrammarError::DeckInfeasible {
            attempts,
            missing: short.into_iter().collect(),
        },
        None => GrammarError::DepthExceeded { attempts },
    })
}

/// Tags that occur in some rule but cannot be filled.
fn missing_tags(grammar: &Grammar, fillable: &BTreeSet<String>) -> Vec<String> {
    grammar
        .rules()
        .iter()
        .flat_map(|r| r.rhs.iter())
        .filter_map(|s| match s {
            Label::Tag(t) if !fillable.contains(t) => Some(t.clone()),
            _ => None,
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}
