//! Right-factoring of n-ary rules into binary and unary pieces.

use std::collections::HashMap;

use super::{Grammar, Label};

pub(crate) type SymbolId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BinarySymbol {
    Label(Label),
    /// Remainder of rule `rule` from right-hand-side position `position` on.
    Intermediate {
        rule: usize,
        position: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BinaryRule {
    pub lhs: SymbolId,
    pub left: SymbolId,
    pub right: SymbolId,
    /// Source rule in the original grammar.
    pub origin: usize,
    /// True for the piece whose left-hand side is the source rule's own
    /// category; exactly one per source rule.
    pub top: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct UnaryRule {
    pub lhs: SymbolId,
    pub child: SymbolId,
    pub origin: usize,
}

/// The binarized grammar with a map back to source rules.
#[derive(Debug, Clone)]
pub struct BinaryGrammar {
    symbols: Vec<BinarySymbol>,
    index: HashMap<BinarySymbol, SymbolId>,
    pub(crate) binary: Vec<BinaryRule>,
    pub(crate) unary: Vec<UnaryRule>,
    pub(crate) start: SymbolId,
}

/// `A = X1 X2 ... Xn` with `n > 2` becomes `A = X1 @1`, `@1 = X2 @2`, ...,
/// `@(n-2) = X(n-1) Xn`, with fresh intermediates per source rule so every
/// binary derivation maps back to exactly one source derivation.
pub fn binarize(grammar: &Grammar) -> BinaryGrammar {
    let mut g = BinaryGrammar {
        symbols: Vec::new(),
        index: HashMap::new(),
        binary: Vec::new(),
        unary: Vec::new(),
        start: 0,
    };
    g.start = g.intern(BinarySymbol::Label(Label::Category(
        grammar.start().to_string(),
    )));
    for tag in grammar.tagset() {
        g.intern(BinarySymbol::Label(Label::Tag(tag.name.clone())));
    }

    for (origin, rule) in grammar.rules().iter().enumerate() {
        let lhs = g.intern(BinarySymbol::Label(Label::Category(rule.lhs.clone())));
        let rhs: Vec<SymbolId> = rule
            .rhs
            .iter()
            .map(|s| g.intern(BinarySymbol::Label(s.clone())))
            .collect();
        match rhs.as_slice() {
            [child] => g.unary.push(UnaryRule {
                lhs,
                child: *child,
                origin,
            }),
            [left, right] => g.binary.push(BinaryRule {
                lhs,
                left: *left,
                right: *right,
                origin,
                top: true,
            }),
            _ => {
                let n = rhs.len();
                let mut parent = lhs;
                for position in 1..n - 1 {
                    let rest = g.intern(BinarySymbol::Intermediate {
                        rule: origin,
                        position,
                    });
                    g.binary.push(BinaryRule {
                        lhs: parent,
                        left: rhs[position - 1],
                        right: rest,
                        origin,
                        top: position == 1,
                    });
                    parent = rest;
                }
                g.binary.push(BinaryRule {
                    lhs: parent,
                    left: rhs[n - 2],
                    right: rhs[n - 1],
                    origin,
                    top: false,
                });
            }
        }
    }
    g
}

impl BinaryGrammar {
    fn intern(&mut self, sym: BinarySymbol) -> SymbolId {
        if let Some(&id) = self.index.get(&sym) {
            return id;
        }
        let id = self.symbols.len();
        self.symbols.push(sym.clone());
        self.index.insert(sym, id);
        id
    }

    pub(crate) fn id(&self, sym: &BinarySymbol) -> Option<SymbolId> {
        self.index.get(sym).copied()
    }

    pub(crate) fn symbol(&self, id: SymbolId) -> &BinarySymbol {
        &self.symbols[id]
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn binary_rule_count(&self) -> usize {
        self.binary.len()
    }

    pub fn unary_rule_count(&self) -> usize {
        self.unary.len()
    }

    pub fn intermediate_count(&self) -> usize {
        self.symbols
            .iter()
            .filter(|s| matches!(s, BinarySymbol::Intermediate { .. }))
            .count()
    }
}
