//! The mystery language: a word-type level mask over a corpus and its inverse.
//!
//! Every case-folded word type gets exactly one mask token, so repeated
//! words stay repeated and bigram statistics survive masking. Masks are
//! either symbol strings (a per-character cipher) or pseudo-words drawn from
//! a [`PhonotacticProfile`].

mod phonotactics;
mod symbols;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{is_reserved_char, AnnotatedCorpus, AnnotatedSentence};

pub use phonotactics::{
    generate_nonword, PhonotacticProfile, Slot, SlotKind, SyllableTemplate, REJECTION_CAP,
};
pub use symbols::{default_alphabet, validate_alphabet, DEFAULT_ALPHABET};

/// Language tag carried by masked corpora.
pub const MYSTERY_LANGUAGE: &str = "x-mystery";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    Symbols,
    NonWords,
}

impl fmt::Display for MaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskMode::Symbols => "symbols",
            MaskMode::NonWords => "nonwords",
        })
    }
}

impl FromStr for MaskMode {
    type Err = MaskingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "symbols" => Ok(MaskMode::Symbols),
            "nonwords" | "non-words" => Ok(MaskMode::NonWords),
            other => Err(MaskingError::Table {
                line: 0,
                message: format!("unknown mask mode `{other}`"),
            }),
        }
    }
}

/// Mode plus the inventory it draws from.
#[derive(Debug, Clone, PartialEq)]
pub enum MaskConfig {
    Symbols(Vec<char>),
    NonWords(PhonotacticProfile),
}

impl MaskConfig {
    pub fn mode(&self) -> MaskMode {
        match self {
            MaskConfig::Symbols(_) => MaskMode::Symbols,
            MaskConfig::NonWords(_) => MaskMode::NonWords,
        }
    }

    pub fn digest(&self) -> String {
        match self {
            MaskConfig::Symbols(alphabet) => symbols::alphabet_digest(alphabet),
            MaskConfig::NonWords(profile) => profile.digest(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskingError {
    #[error("profile cannot produce a fresh non-word for `{word}` after {attempts} draws ({assigned} words already masked)")]
    CapacityExceeded {
        word: String,
        attempts: usize,
        assigned: usize,
    },
    #[error("symbol alphabet too small: {needed} source characters, {available} symbols")]
    AlphabetTooSmall { needed: usize, available: usize },
    #[error("invalid phonotactic profile: {0}")]
    InvalidProfile(String),
    #[error("invalid symbol alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("no mask for word `{0}`")]
    MissingMapping(String),
    #[error("unknown mask token `{0}`")]
    UnknownMask(String),
    #[error("masking table line {line}: {message}")]
    Table { line: usize, message: String },
}

/// Bijection between source word types and mask tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskingTable {
    pub mode: MaskMode,
    pub seed: u64,
    /// Language of the unmasked corpus, restored on reveal.
    pub source_language: String,
    /// Digest of the profile or alphabet used to build the table.
    pub config_digest: String,
    pub profile: Option<PhonotacticProfile>,
    pub symbol_alphabet: Option<Vec<char>>,
    forward: BTreeMap<String, String>,
    inverse: BTreeMap<String, String>,
}

/// Builds the table for `corpus`. Words are masked in lexicon
/// (first-occurrence) order from a ChaCha stream seeded with `seed`, so the
/// result depends only on the corpus, the seed and the config.
pub fn build_masking_table(
    corpus: &AnnotatedCorpus,
    seed: u64,
    config: &MaskConfig,
) -> Result<MaskingTable, MaskingError> {
    let lexicon = corpus.lexicon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forward = BTreeMap::new();

    match config {
        MaskConfig::Symbols(alphabet) => {
            let cipher = symbols::build_cipher(&lexicon, alphabet, &mut rng)?;
            for word in &lexicon {
                let mask = symbols::encipher(word, &cipher).expect("cipher covers the lexicon");
                forward.insert(word.clone(), mask);
            }
        }
        MaskConfig::NonWords(profile) => {
            profile.validate()?;
            let sources: BTreeSet<&str> = lexicon.iter().map(String::as_str).collect();
            let mut used = BTreeSet::new();
            for word in &lexicon {
                let mut attempts = 0;
                let mask = loop {
                    if attempts >= REJECTION_CAP {
                        return Err(MaskingError::CapacityExceeded {
                            word: word.clone(),
                            attempts,
                            assigned: used.len(),
                        });
                    }
                    attempts += 1;
                    let candidate = profile.sample(&mut rng);
                    if !used.contains(&candidate)
                        && !sources.contains(candidate.as_str())
                        && !profile.is_blocked(&candidate)
                    {
                        break candidate;
                    }
                };
                used.insert(mask.clone());
                forward.insert(word.clone(), mask);
            }
        }
    }

    let inverse = forward
        .iter()
        .map(|(k, v)| (v.clone(), k.clone()))
        .collect();
    Ok(MaskingTable {
        mode: config.mode(),
        seed,
        source_language: corpus.language.clone(),
        config_digest: config.digest(),
        profile: match config {
            MaskConfig::NonWords(p) => Some(p.clone()),
            MaskConfig::Symbols(_) => None,
        },
        symbol_alphabet: match config {
            MaskConfig::Symbols(a) => Some(a.clone()),
            MaskConfig::NonWords(_) => None,
        },
        forward,
        inverse,
    })
}

impl MaskingTable {
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Mask of a source word, case-folded before lookup.
    pub fn mask_of(&self, word: &str) -> Option<&str> {
        self.forward.get(&word.to_lowercase()).map(String::as_str)
    }

    /// Canonical lowercase source word behind a mask.
    pub fn source_of(&self, mask: &str) -> Option<&str> {
        self.inverse.get(mask).map(String::as_str)
    }

    /// `(source, mask)` pairs sorted by source.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.forward.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.forward.keys().map(String::as_str)
    }

    pub fn masks(&self) -> impl Iterator<Item = &str> {
        self.inverse.keys().map(String::as_str)
    }

    pub fn mask_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<String>, MaskingError> {
        tokens
            .iter()
            .map(|t| {
                self.mask_of(t.as_ref())
                    .map(str::to_string)
                    .ok_or_else(|| MaskingError::MissingMapping(t.as_ref().to_string()))
            })
            .collect()
    }

    /// Tab-separated dump: a `#` header (mode, seed, language, config
    /// digest) then `source<TAB>mask` lines sorted by source.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# mode: {}", self.mode);
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# language: {}", self.source_language);
        let _ = writeln!(out, "# config: {}", self.config_digest);
        for (source, mask) in &self.forward {
            let _ = writeln!(out, "{source}\t{mask}");
        }
        out
    }

    /// Reads a table written by [`MaskingTable::to_tsv`]. The profile or
    /// alphabet itself is not stored; only its digest comes back.
    pub fn from_tsv(text: &str) -> Result<Self, MaskingError> {
        let mut mode = None;
        let mut seed = None;
        let mut language = None;
        let mut digest = String::new();
        let mut forward = BTreeMap::new();
        let mut inverse = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| MaskingError::Table {
                line: line_no,
                message,
            };
            if let Some(meta) = line.strip_prefix('#') {
                let Some((key, value)) = meta.split_once(':') else {
                    continue;
                };
                let value = value.trim();
                match key.trim() {
                    "mode" => {
                        mode = Some(
                            value
                                .parse::<MaskMode>()
                                .map_err(|_| err(format!("unknown mode `{value}`")))?,
                        )
                    }
                    "seed" => {
                        seed = Some(
                            value
                                .parse::<u64>()
                                .map_err(|_| err(format!("bad seed `{value}`")))?,
                        )
                    }
                    "language" => language = Some(value.to_string()),
                    "config" => digest = value.to_string(),
                    _ => {}
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let Some((source, mask)) = line.split_once('\t') else {
                return Err(err("expected `source<TAB>mask`".into()));
            };
            if source.is_empty() || mask.is_empty() || mask.chars().any(is_reserved_char) {
                return Err(err("empty or malformed entry".into()));
            }
            if forward
                .insert(source.to_string(), mask.to_string())
                .is_some()
            {
                return Err(err(format!("duplicate source `{source}`")));
            }
            if inverse
                .insert(mask.to_string(), source.to_string())
                .is_some()
            {
                return Err(err(format!("mask `{mask}` is assigned twice")));
            }
        }
        Ok(MaskingTable {
            mode: mode.ok_or_else(|| MaskingError::Table {
                line: 0,
                message: "missing mode header".into(),
            })?,
            seed: seed.ok_or_else(|| MaskingError::Table {
                line: 0,
                message: "missing seed header".into(),
            })?,
            source_language: language
                .unwrap_or_else(|| crate::corpus::DEFAULT_LANGUAGE.to_string()),
            config_digest: digest,
            profile: None,
            symbol_alphabet: None,
            forward,
            inverse,
        })
    }
}

/// Replaces every leaf surface by its mask; annotation is untouched.
pub fn mask_corpus(
    corpus: &AnnotatedCorpus,
    table: &MaskingTable,
) -> Result<AnnotatedCorpus, MaskingError> {
    let sentences = corpus
        .sentences
        .iter()
        .map(|s| {
            let tree = s.tree.map_surfaces(&mut |w| {
                table
                    .mask_of(w)
                    .map(str::to_string)
                    .ok_or_else(|| MaskingError::MissingMapping(w.to_string()))
            })?;
            Ok(AnnotatedSentence { id: s.id, tree })
        })
        .collect::<Result<_, MaskingError>>()?;
    Ok(AnnotatedCorpus {
        language: MYSTERY_LANGUAGE.to_string(),
        sentences,
        ..corpus.clone()
    })
}

/// Inverse of [`mask_corpus`]; surfaces come back in canonical lowercase.
pub fn unmask_corpus(
    masked: &AnnotatedCorpus,
    table: &MaskingTable,
) -> Result<AnnotatedCorpus, MaskingError> {
    let sentences = masked
        .sentences
        .iter()
        .map(|s| {
            let tree = s.tree.map_surfaces(&mut |m| {
                table
                    .source_of(m)
                    .map(str::to_string)
                    .ok_or_else(|| MaskingError::UnknownMask(m.to_string()))
            })?;
            Ok(AnnotatedSentence { id: s.id, tree })
        })
        .collect::<Result<_, MaskingError>>()?;
    Ok(AnnotatedCorpus {
        language: table.source_language.clone(),
        sentences,
        ..masked.clone()
    })
}

/// Per-token inverse mapping, e.g. for a sentence built from masked cards.
pub fn unmask_tokens<S: AsRef<str>>(
    tokens: &[S],
    table: &MaskingTable,
) -> Result<Vec<String>, MaskingError> {
    tokens
        .iter()
        .map(|t| {
            table
                .source_of(t.as_ref())
                .map(str::to_string)
                .ok_or_else(|| MaskingError::UnknownMask(t.as_ref().to_string()))
        })
        .collect()
}
