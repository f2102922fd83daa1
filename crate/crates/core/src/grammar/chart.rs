//! CKY chart over a binarized grammar with unary closure.
//!
//! Each cell keeps, per symbol, the cheapest derivation: fewest source-rule
//! applications, then the lexicographically smallest rule trace. A trace
//! has one entry per source-rule application, so equal-cost traces have
//! equal length and the per-cell choice composes into the global optimum.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::binarize::{BinaryGrammar, BinarySymbol, SymbolId};
use super::{Derivation, Grammar, Label};
use crate::corpus::{Token, Tree};

/// Cap on parses returned by [`Grammar::parses`].
pub const PARSE_LIMIT: usize = 100;

/// One constituent of a partial reduction, over tokens `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialPiece {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy)]
enum Back {
    Leaf,
    Binary { rule: usize, split: usize },
    Unary { rule: usize },
}

#[derive(Debug, Clone)]
struct Entry {
    cost: u32,
    trace: Vec<u32>,
    back: Back,
}

impl Entry {
    fn better_than(&self, other: &Entry) -> bool {
        match self.cost.cmp(&other.cost) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.trace < other.trace,
        }
    }
}

pub(crate) struct Chart<'g> {
    grammar: &'g BinaryGrammar,
    tokens: Vec<Token>,
    n: usize,
    cells: Vec<Vec<Option<Entry>>>,
    by_left: Vec<Vec<usize>>,
}

impl<'g> Chart<'g> {
    pub fn build(grammar: &'g BinaryGrammar, tokens: &[Token]) -> Self {
        let n = tokens.len();
        let symbols = grammar.symbol_count();
        let mut by_left = vec![Vec::new(); symbols];
        for (i, rule) in grammar.binary.iter().enumerate() {
            by_left[rule.left].push(i);
        }
        let mut chart = Chart {
            grammar,
            tokens: tokens.to_vec(),
            n,
            cells: vec![vec![None; symbols]; (n + 1) * (n + 1)],
            by_left,
        };

        for (i, token) in tokens.iter().enumerate() {
            let tag = BinarySymbol::Label(Label::Tag(token.pos.clone()));
            if let Some(id) = grammar.id(&tag) {
                let cell = chart.at(i, i + 1);
                chart.cells[cell][id] = Some(Entry {
                    cost: 0,
                    trace: Vec::new(),
                    back: Back::Leaf,
                });
            }
            chart.close_unary(i, i + 1);
        }

        for len in 2..=n {
            for i in 0..=n - len {
                let j = i + len;
                let target = chart.at(i, j);
                let mut built = std::mem::take(&mut chart.cells[target]);
                for k in i + 1..j {
                    let (left_cell, right_cell) = (chart.at(i, k), chart.at(k, j));
                    for b in 0..symbols {
                        let Some(left) = &chart.cells[left_cell][b] else {
                            continue;
                        };
                        for &r in &chart.by_left[b] {
                            let rule = &grammar.binary[r];
                            let Some(right) = &chart.cells[right_cell][rule.right] else {
                                continue;
                            };
                            let mut trace =
                                Vec::with_capacity(left.trace.len() + right.trace.len() + 1);
                            if rule.top {
                                trace.push(rule.origin as u32);
                            }
                            trace.extend_from_slice(&left.trace);
                            trace.extend_from_slice(&right.trace);
                            let candidate = Entry {
                                cost: left.cost + right.cost + u32::from(rule.top),
                                trace,
                                back: Back::Binary { rule: r, split: k },
                            };
                            let slot = &mut built[rule.lhs];
                            if slot.as_ref().is_none_or(|cur| candidate.better_than(cur)) {
                                *slot = Some(candidate);
                            }
                        }
                    }
                }
                chart.cells[target] = built;
                chart.close_unary(i, j);
            }
        }
        chart
    }

    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    fn close_unary(&mut self, i: usize, j: usize) {
        let cell = self.at(i, j);
        loop {
            let mut changed = false;
            for (r, rule) in self.grammar.unary.iter().enumerate() {
                let Some(child) = &self.cells[cell][rule.child] else {
                    continue;
                };
                let mut trace = Vec::with_capacity(child.trace.len() + 1);
                trace.push(rule.origin as u32);
                trace.extend_from_slice(&child.trace);
                let candidate = Entry {
                    cost: child.cost + 1,
                    trace,
                    back: Back::Unary { rule: r },
                };
                if self.cells[cell][rule.lhs]
                    .as_ref()
                    .is_none_or(|cur| candidate.better_than(cur))
                {
                    self.cells[cell][rule.lhs] = Some(candidate);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn entry(&self, i: usize, j: usize, sym: SymbolId) -> Option<&Entry> {
        self.cells[self.at(i, j)][sym].as_ref()
    }

    pub fn best(&self, source: &Grammar) -> Option<Derivation> {
        if self.n == 0 {
            return None;
        }
        let root = self.entry(0, self.n, self.grammar.start)?;
        let mut built = self.build_best(0, self.n, self.grammar.start);
        debug_assert_eq!(built.len(), 1);
        Some(Derivation {
            tree: built.pop()?,
            rule_trace: root
                .trace
                .iter()
                .map(|&r| source.rules()[r as usize].clone())
                .collect(),
        })
    }

    /// Trees for `sym` over `[i, j)`; an intermediate yields the sibling
    /// sequence it stands for.
    fn build_best(&self, i: usize, j: usize, sym: SymbolId) -> Vec<Tree> {
        let entry = self
            .entry(i, j, sym)
            .expect("backpointer targets a filled cell");
        let children = match entry.back {
            Back::Leaf => {
                let token = &self.tokens[i];
                return vec![Tree::leaf(token.pos.clone(), token.surface.clone())];
            }
            Back::Binary { rule, split } => {
                let rule = &self.grammar.binary[rule];
                let mut kids = self.build_best(i, split, rule.left);
                kids.extend(self.build_best(split, j, rule.right));
                kids
            }
            Back::Unary { rule } => self.build_best(i, j, self.grammar.unary[rule].child),
        };
        self.wrap(sym, children)
    }

    fn wrap(&self, sym: SymbolId, children: Vec<Tree>) -> Vec<Tree> {
        match self.grammar.symbol(sym) {
            BinarySymbol::Label(label) => vec![Tree::node(label.name(), children)],
            BinarySymbol::Intermediate { .. } => children,
        }
    }

    pub fn all_parses(&self, limit: usize) -> Vec<Tree> {
        if self.n == 0 || self.entry(0, self.n, self.grammar.start).is_none() {
            return Vec::new();
        }
        let mut stack = Vec::new();
        self.enumerate(0, self.n, self.grammar.start, &mut stack, limit)
            .into_iter()
            .filter_map(|mut alt| (alt.len() == 1).then(|| alt.pop()).flatten())
            .collect()
    }

    /// Alternatives for `sym` over `[i, j)`, each a sibling sequence.
    /// `unary_stack` holds the symbols already on the current unary chain
    /// over this span, which cuts unary cycles.
    fn enumerate(
        &self,
        i: usize,
        j: usize,
        sym: SymbolId,
        unary_stack: &mut Vec<SymbolId>,
        limit: usize,
    ) -> Vec<Vec<Tree>> {
        let mut out: Vec<Vec<Tree>> = Vec::new();
        if self.entry(i, j, sym).is_none() {
            return out;
        }
        if j == i + 1 {
            let token = &self.tokens[i];
            if *self.grammar.symbol(sym) == BinarySymbol::Label(Label::Tag(token.pos.clone())) {
                out.push(vec![Tree::leaf(token.pos.clone(), token.surface.clone())]);
            }
        }
        for rule in self.grammar.binary.iter().filter(|r| r.lhs == sym) {
            for k in i + 1..j {
                if out.len() >= limit {
                    return out;
                }
                if self.entry(i, k, rule.left).is_none() || self.entry(k, j, rule.right).is_none() {
                    continue;
                }
                let lefts = self.enumerate(i, k, rule.left, &mut Vec::new(), limit);
                let rights = self.enumerate(k, j, rule.right, &mut Vec::new(), limit);
                for l in &lefts {
                    for r in &rights {
                        if out.len() >= limit {
                            return out;
                        }
                        let mut kids = l.clone();
                        kids.extend(r.iter().cloned());
                        out.push(self.wrap(sym, kids));
                    }
                }
            }
        }
        unary_stack.push(sym);
        for rule in self.grammar.unary.iter().filter(|r| r.lhs == sym) {
            if unary_stack.contains(&rule.child) {
                continue;
            }
            for alt in self.enumerate(i, j, rule.child, unary_stack, limit) {
                if out.len() >= limit {
                    break;
                }
                out.push(self.wrap(sym, alt));
            }
        }
        unary_stack.pop();
        out
    }

    pub fn partial_cover(&self) -> Vec<PartialPiece> {
        let n = self.n;
        // best[j] = (pieces, previous boundary, label) for the prefix [0, j)
        let mut best: Vec<Option<(usize, usize, String)>> = vec![None; n + 1];
        best[0] = Some((0, 0, String::new()));
        for j in 1..=n {
            for i in 0..j {
                let Some((pieces, _, _)) = &best[i] else {
                    continue;
                };
                let Some(label) = self.top_label(i, j) else {
                    continue;
                };
                let cand = pieces + 1;
                if best[j].as_ref().is_none_or(|(p, _, _)| cand < *p) {
                    best[j] = Some((cand, i, label));
                }
            }
        }
        let mut out = Vec::new();
        let mut j = n;
        while j > 0 {
            let Some((_, i, label)) = best[j].clone() else {
                return Vec::new();
            };
            out.push(PartialPiece {
                label,
                start: i,
                end: j,
            });
            j = i;
        }
        out.reverse();
        out
    }

    /// Most reduced label over `[i, j)`: the start category, else the
    /// category built with the most rule applications, else a tag.
    fn top_label(&self, i: usize, j: usize) -> Option<String> {
        let cell = &self.cells[self.at(i, j)];
        if cell[self.grammar.start].is_some() {
            return self.label_name(self.grammar.start);
        }
        let mut best: Option<(u32, bool, SymbolId)> = None;
        for (sym, entry) in cell.iter().enumerate() {
            let Some(entry) = entry else { continue };
            let is_cat = match self.grammar.symbol(sym) {
                BinarySymbol::Label(Label::Category(_)) => true,
                BinarySymbol::Label(Label::Tag(_)) => false,
                BinarySymbol::Intermediate { .. } => continue,
            };
            let key = (entry.cost, is_cat, sym);
            if best.is_none_or(|(c, k, _)| (is_cat, entry.cost) > (k, c)) {
                best = Some(key);
            }
        }
        best.and_then(|(_, _, sym)| self.label_name(sym))
    }

    fn label_name(&self, sym: SymbolId) -> Option<String> {
        match self.grammar.symbol(sym) {
            BinarySymbol::Label(l) => Some(l.name().to_string()),
            BinarySymbol::Intermediate { .. } => None,
        }
    }
}
