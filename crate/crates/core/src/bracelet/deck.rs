use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A multiset of word cards. Each card is consumed once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Deck {
    cards: BTreeMap<String, usize>,
    len: usize,
}

impl Deck {
    pub fn from_tokens<I, W>(tokens: I) -> Self
    where
        I: IntoIterator<Item = W>,
        W: AsRef<str>,
    {
        let mut deck = Deck::default();
        for t in tokens {
            deck.put(t.as_ref());
        }
        deck
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count(&self, card: &str) -> usize {
        self.cards.get(card).copied().unwrap_or(0)
    }

    pub fn put(&mut self, card: &str) {
        *self.cards.entry(card.to_string()).or_default() += 1;
        self.len += 1;
    }

    /// Removes one copy of `card`; false when none is left.
    pub fn take(&mut self, card: &str) -> bool {
        match self.cards.get_mut(card) {
            Some(n) => {
                *n -= 1;
                if *n == 0 {
                    self.cards.remove(card);
                }
                self.len -= 1;
                true
            }
            None => false,
        }
    }

    /// Distinct cards in sorted order.
    pub fn distinct(&self) -> impl Iterator<Item = &str> {
        self.cards.keys().map(String::as_str)
    }

    pub fn counts(&self) -> impl Iterator<Item = (&str, usize)> {
        self.cards.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// All cards with repetition, sorted.
    pub fn cards(&self) -> Vec<String> {
        self.cards
            .iter()
            .flat_map(|(k, n)| std::iter::repeat_n(k.clone(), *n))
            .collect()
    }

    /// Whether `tokens` can be laid out from this deck.
    pub fn contains_all<W: AsRef<str>>(&self, tokens: &[W]) -> bool {
        self.without(tokens).is_some()
    }

    /// The deck left after laying out `tokens`, if they all fit.
    pub fn without<W: AsRef<str>>(&self, tokens: &[W]) -> Option<Deck> {
        let mut rest = self.clone();
        tokens.iter().all(|t| rest.take(t.as_ref())).then_some(rest)
    }

    /// Cards in `tokens` that the deck cannot supply.
    pub fn missing<W: AsRef<str>>(&self, tokens: &[W]) -> Vec<String> {
        let mut rest = self.clone();
        tokens
            .iter()
            .filter(|t| !rest.take(t.as_ref()))
            .map(|t| t.as_ref().to_string())
            .collect()
    }
}

impl<W: AsRef<str>> FromIterator<W> for Deck {
    fn from_iter<I: IntoIterator<Item = W>>(iter: I) -> Self {
        Deck::from_tokens(iter)
    }
}

impl Serialize for Deck {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.cards().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Deck {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Deck::from_tokens(Vec::<String>::deserialize(deserializer)?))
    }
}
