//! Pseudo-word generation from syllable templates.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::MaskingError;

/// Rejections allowed per word before sampling gives up.
pub const REJECTION_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotKind {
    Onset,
    Nucleus,
    Coda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub kind: SlotKind,
    pub optional: bool,
}

/// Ordered slots of one syllable shape, written as a string over `O`, `N`
/// and `C` with `?` marking an optional slot: `"O?NC?"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SyllableTemplate {
    pub slots: Vec<Slot>,
}

impl FromStr for SyllableTemplate {
    type Err = MaskingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut slots: Vec<Slot> = Vec::new();
        for c in s.chars() {
            let kind = match c.to_ascii_uppercase() {
                'O' => SlotKind::Onset,
                'N' => SlotKind::Nucleus,
                'C' => SlotKind::Coda,
                '?' => {
                    match slots.last_mut() {
                        Some(slot) if !slot.optional => slot.optional = true,
                        _ => {
                            return Err(MaskingError::InvalidProfile(format!(
                                "misplaced `?` in template `{s}`"
                            )))
                        }
                    }
                    continue;
                }
                other => {
                    return Err(MaskingError::InvalidProfile(format!(
                        "unknown slot `{other}` in template `{s}`"
                    )))
                }
            };
            slots.push(Slot {
                kind,
                optional: false,
            });
        }
        if slots.is_empty() {
            return Err(MaskingError::InvalidProfile(
                "empty syllable template".into(),
            ));
        }
        Ok(SyllableTemplate { slots })
    }
}

impl TryFrom<String> for SyllableTemplate {
    type Error = MaskingError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<SyllableTemplate> for String {
    fn from(t: SyllableTemplate) -> Self {
        t.to_string()
    }
}

impl fmt::Display for SyllableTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for slot in &self.slots {
            let c = match slot.kind {
                SlotKind::Onset => 'O',
                SlotKind::Nucleus => 'N',
                SlotKind::Coda => 'C',
            };
            write!(f, "{c}")?;
            if slot.optional {
                write!(f, "?")?;
            }
        }
        Ok(())
    }
}

/// Inventory of sound segments and syllable shapes. An empty string in
/// `onsets` or `codas` stands for an empty slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhonotacticProfile {
    pub onsets: BTreeSet<String>,
    pub nuclei: BTreeSet<String>,
    #[serde(default)]
    pub codas: BTreeSet<String>,
    pub templates: Vec<SyllableTemplate>,
    pub min_syllables: u32,
    pub max_syllables: u32,
    /// Real words that must never be produced.
    #[serde(default)]
    pub blocklist: BTreeSet<String>,
}

impl PhonotacticProfile {
    /// Italian-like defaults with the bundled Italian blocklist.
    pub fn italian() -> Self {
        let set = |items: &[&str]| items.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        PhonotacticProfile {
            onsets: set(&[
                "p", "t", "k", "b", "d", "g", "f", "s", "m", "n", "l", "r", "v", "z", "pr", "tr",
                "kr", "br", "dr", "gr", "fr", "st", "sp",
            ]),
            nuclei: set(&["a", "e", "i", "o", "u"]),
            codas: set(&["", "n", "r", "l", "s"]),
            templates: vec!["ONC".parse().expect("static template")],
            min_syllables: 2,
            max_syllables: 4,
            blocklist: crate::fixtures::italian_blocklist(),
        }
    }

    pub fn validate(&self) -> Result<(), MaskingError> {
        let bad = |m: &str| Err(MaskingError::InvalidProfile(m.to_string()));
        if self.nuclei.is_empty() || self.nuclei.contains("") {
            return bad("nuclei must be non-empty strings");
        }
        if self.min_syllables == 0 || self.min_syllables > self.max_syllables {
            return bad("syllable bounds must satisfy 1 <= min <= max");
        }
        if self.templates.is_empty() {
            return bad("at least one syllable template is required");
        }
        for template in &self.templates {
            if !template
                .slots
                .iter()
                .any(|s| s.kind == SlotKind::Nucleus && !s.optional)
            {
                return bad("every template needs a required nucleus");
            }
            for slot in &template.slots {
                if !slot.optional && self.inventory(slot.kind).is_empty() {
                    return bad("a required slot has an empty inventory");
                }
            }
        }
        let segments = self.onsets.iter().chain(&self.nuclei).chain(&self.codas);
        if segments
            .flat_map(|s| s.chars())
            .any(crate::corpus::is_reserved_char)
        {
            return bad("segments may not contain whitespace or brackets");
        }
        Ok(())
    }

    fn inventory(&self, kind: SlotKind) -> &BTreeSet<String> {
        match kind {
            SlotKind::Onset => &self.onsets,
            SlotKind::Nucleus => &self.nuclei,
            SlotKind::Coda => &self.codas,
        }
    }

    /// Whether `word` splits into `min..=max` syllables that each fill some
    /// template. Blocklist membership is not part of this check.
    pub fn matches(&self, word: &str) -> bool {
        let len = word.len();
        let max = self.max_syllables as usize;
        // reach[pos] = set of syllable counts that end exactly at byte `pos`
        let mut reach = vec![vec![false; max + 1]; len + 1];
        reach[0][0] = true;
        for pos in 0..len {
            for count in 0..max {
                if !reach[pos][count] {
                    continue;
                }
                for template in &self.templates {
                    let mut ends = Vec::new();
                    self.match_slots(word, pos, &template.slots, &mut ends);
                    for end in ends {
                        if end > pos {
                            reach[end][count + 1] = true;
                        }
                    }
                }
            }
        }
        (self.min_syllables as usize..=max).any(|c| reach[len][c])
    }

    fn match_slots(&self, word: &str, pos: usize, slots: &[Slot], ends: &mut Vec<usize>) {
        let Some((slot, rest)) = slots.split_first() else {
            ends.push(pos);
            return;
        };
        if slot.optional {
            self.match_slots(word, pos, rest, ends);
        }
        for segment in self.inventory(slot.kind) {
            if word[pos..].starts_with(segment.as_str()) {
                self.match_slots(word, pos + segment.len(), rest, ends);
            }
        }
    }

    pub fn is_blocked(&self, word: &str) -> bool {
        self.blocklist.contains(&word.to_lowercase())
    }

    /// Draws one string from the profile without consulting the blocklist.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let syllables = rng.gen_range(self.min_syllables..=self.max_syllables);
        let mut word = String::new();
        for _ in 0..syllables {
            let template = self
                .templates
                .choose(rng)
                .expect("validated profile has templates");
            for slot in &template.slots {
                if slot.optional && !rng.gen_bool(0.5) {
                    continue;
                }
                let inventory: Vec<&String> = self.inventory(slot.kind).iter().collect();
                if let Some(segment) = inventory.choose(rng) {
                    word.push_str(segment);
                }
            }
        }
        word
    }

    /// Short hex digest of the canonical profile, blocklist included.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("profile serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hex::encode(&hash[..8])
    }
}

/// Draws a pseudo-word, redrawing while it lands on the blocklist. Only a
/// profile whose entire sample space is blocklisted can return a blocked
/// word, after [`REJECTION_CAP`] draws.
pub fn generate_nonword<R: Rng + ?Sized>(profile: &PhonotacticProfile, rng: &mut R) -> String {
    let mut word = profile.sample(rng);
    for _ in 0..REJECTION_CAP {
        if !profile.is_blocked(&word) {
            break;
        }
        word = profile.sample(rng);
    }
    word
}
