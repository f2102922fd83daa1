//! Corpora and word lists bundled with the crate.

use std::collections::BTreeSet;

use crate::corpus::{parse_corpus, AnnotatedCorpus};

/// Sixty-sentence Snow White retelling, annotated with the default legend.
pub const SNOW_WHITE: &str = include_str!("../fixtures/snow-white.corpus");
/// Three short sentences about a dog, a cat and a garden.
pub const F1: &str = include_str!("../fixtures/f1.corpus");
/// "lo specchio rispose a la regina", bracketing only.
pub const MIRROR: &str = include_str!("../fixtures/mirror.corpus");
/// Restaurant menus: first course, second course, dessert.
pub const MENU: &str = include_str!("../fixtures/menu.corpus");
/// Common Italian words, whitespace separated, `#` comments.
pub const ITALIAN_BLOCKLIST: &str = include_str!("../fixtures/italian-blocklist.txt");

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["snow-white", "f1", "mirror", "menu"];

pub fn builtin_source(name: &str) -> Option<&'static str> {
    match name {
        "snow-white" => Some(SNOW_WHITE),
        "f1" => Some(F1),
        "mirror" => Some(MIRROR),
        "menu" => Some(MENU),
        _ => None,
    }
}

/// Parses one of the bundled corpora by name.
pub fn builtin(name: &str) -> Option<AnnotatedCorpus> {
    builtin_source(name).map(|src| parse_corpus(src).expect("bundled corpus parses"))
}

pub fn snow_white() -> AnnotatedCorpus {
    parse_corpus(SNOW_WHITE).expect("bundled corpus parses")
}

pub fn f1() -> AnnotatedCorpus {
    parse_corpus(F1).expect("bundled corpus parses")
}

pub fn mirror() -> AnnotatedCorpus {
    parse_corpus(MIRROR).expect("bundled corpus parses")
}

pub fn menu() -> AnnotatedCorpus {
    parse_corpus(MENU).expect("bundled corpus parses")
}

/// Parses a whitespace separated word list with `#` line comments.
pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(str::to_lowercase)
        .collect()
}

pub fn italian_blocklist() -> BTreeSet<String> {
    parse_word_list(ITALIAN_BLOCKLIST)
}
