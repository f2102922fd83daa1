//! Character-level substitution into a symbol alphabet.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use sha2::{Digest, Sha256};

use super::MaskingError;

/// Geometric and astronomical glyphs. None is a letter, whitespace or bracket.
pub const DEFAULT_ALPHABET: &str = "☉☽☿♀♁♂♃♄♅♆♇★☆✦✧◆◇■□▲△▼▽●○◐◑◒◓⬟⬠⬡✶✷✸✹✺❖✚✜✢✣✤✥◈◉◎⊕⊗⊙⌘⚲⚴⚵";

pub fn default_alphabet() -> Vec<char> {
    DEFAULT_ALPHABET.chars().collect()
}

pub fn validate_alphabet(alphabet: &[char]) -> Result<(), MaskingError> {
    let distinct: BTreeSet<char> = alphabet.iter().copied().collect();
    if distinct.len() != alphabet.len() {
        return Err(MaskingError::InvalidAlphabet(
            "symbols must be distinct".into(),
        ));
    }
    if let Some(c) = alphabet
        .iter()
        .find(|c| crate::corpus::is_reserved_char(**c))
    {
        return Err(MaskingError::InvalidAlphabet(format!(
            "symbol {c:?} is reserved"
        )));
    }
    Ok(())
}

/// Assigns each source character a distinct symbol. The alphabet is shuffled
/// by `rng` and handed out in sorted source-character order.
pub fn build_cipher<R: Rng + ?Sized>(
    words: &[String],
    alphabet: &[char],
    rng: &mut R,
) -> Result<BTreeMap<char, char>, MaskingError> {
    validate_alphabet(alphabet)?;
    let inventory: BTreeSet<char> = words.iter().flat_map(|w| w.chars()).collect();
    if inventory.len() > alphabet.len() {
        return Err(MaskingError::AlphabetTooSmall {
            needed: inventory.len(),
            available: alphabet.len(),
        });
    }
    let mut shuffled = alphabet.to_vec();
    shuffled.shuffle(rng);
    Ok(inventory.into_iter().zip(shuffled).collect())
}

pub fn encipher(word: &str, cipher: &BTreeMap<char, char>) -> Option<String> {
    word.chars().map(|c| cipher.get(&c).copied()).collect()
}

pub fn alphabet_digest(alphabet: &[char]) -> String {
    let text: String = alphabet.iter().collect();
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}
