//! Printable workshop materials: corpus sheets, word-card decks, rule cards
//! and reveal overlays, as self-contained HTML pages with inline SVG.
//!
//! Sheets and overlays share [`layout::paginate`], a fixed monospace grid,
//! so every clear word of an overlay sits exactly over its masked position.

pub mod layout;
mod render;

use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedCorpus, AnnotatedSentence};
use crate::grammar::Grammar;
use crate::masking::{mask_corpus, MaskingError, MaskingTable};

pub use layout::{paginate, PageLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Visibility {
    /// Words only.
    #[default]
    #[serde(rename = "none")]
    None,
    /// Words with their POS tags.
    #[serde(rename = "pos")]
    Pos,
    /// Tags plus colored constituent bands.
    #[serde(rename = "pos+constituents")]
    PosConstituents,
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Visibility::None => "none",
            Visibility::Pos => "pos",
            Visibility::PosConstituents => "pos+constituents",
        })
    }
}

impl FromStr for Visibility {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Visibility::None),
            "pos" => Ok(Visibility::Pos),
            "pos+constituents" => Ok(Visibility::PosConstituents),
            other => Err(format!(
                "unknown visibility `{other}` (none|pos|pos+constituents)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SheetSpec {
    pub sentences_per_page: usize,
    pub visibility: Visibility,
    /// `A3`, `A4`, `Letter` or `Tabloid`, always landscape.
    pub page_size: String,
}

impl Default for SheetSpec {
    fn default() -> Self {
        SheetSpec {
            sentences_per_page: 12,
            visibility: Visibility::None,
            page_size: "A3".to_string(),
        }
    }
}

impl SheetSpec {
    pub fn validate(&self) -> Result<(), MaterialsError> {
        if self.sentences_per_page == 0 {
            return Err(MaterialsError::Spec(
                "sentences per page must be positive".into(),
            ));
        }
        if layout::page_size(&self.page_size).is_none() {
            return Err(MaterialsError::PageSize(self.page_size.clone()));
        }
        Ok(())
    }
}

/// One printed word card.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardSpec {
    pub surface: String,
    /// Set on grammar-game decks only.
    pub pos_number: Option<u32>,
    pub deck_id: String,
    /// Card template id, emitted as a CSS class.
    pub style: String,
}

pub const BRACELET_STYLE: &str = "bracelet";
pub const GRAMMAR_STYLE: &str = "grammar";

impl CardSpec {
    /// Bracelet-game cards for one sentence, without POS numbers.
    pub fn bracelet_deck(sentence: &AnnotatedSentence, deck_id: &str) -> Vec<CardSpec> {
        sentence
            .surfaces()
            .into_iter()
            .map(|surface| CardSpec {
                surface,
                pos_number: None,
                deck_id: deck_id.to_string(),
                style: BRACELET_STYLE.to_string(),
            })
            .collect()
    }

    /// Grammar-game cards for one sentence, numbered from the corpus tagset.
    pub fn grammar_deck(
        corpus: &AnnotatedCorpus,
        sentence: &AnnotatedSentence,
        deck_id: &str,
    ) -> Vec<CardSpec> {
        sentence
            .tokens()
            .into_iter()
            .map(|t| CardSpec {
                pos_number: corpus.tag(&t.pos).map(|tag| tag.number),
                surface: t.surface,
                deck_id: deck_id.to_string(),
                style: GRAMMAR_STYLE.to_string(),
            })
            .collect()
    }
}

/// A rendered file: stable name plus HTML text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Document {
    pub name: String,
    pub content: String,
}

#[derive(Debug, Error)]
pub enum MaterialsError {
    #[error("invalid sheet spec: {0}")]
    Spec(String),
    #[error("unknown page size `{0}` (A3|A4|Letter|Tabloid)")]
    PageSize(String),
    #[error("a deck needs at least one card")]
    EmptyDeck,
    #[error("deck `{0}` mixes numbered and unnumbered cards")]
    MixedDeck(String),
    #[error("deck id `{0}` must be non-empty and use only letters, digits, `-` or `_`")]
    DeckId(String),
    #[error("overlay layout differs from the sheet layout on page {page}")]
    LayoutMismatch { page: usize },
    #[error(transparent)]
    Masking(#[from] MaskingError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
}

/// One `sheet-NN.html` per page; sentences appear once each in id order.
pub fn render_corpus_sheets(
    corpus: &AnnotatedCorpus,
    spec: &SheetSpec,
) -> Result<Vec<Document>, MaterialsError> {
    let pages = paginate(corpus, spec)?;
    Ok(pages
        .iter()
        .map(|page| Document {
            name: format!("sheet-{:02}.html", page.number),
            content: render::sheet_page(corpus, page, spec),
        })
        .collect())
}

/// One `deck-<id>.html` per deck id, in order of first appearance; cards
/// keep their input order.
pub fn render_deck(cards: &[CardSpec]) -> Result<Vec<Document>, MaterialsError> {
    if cards.is_empty() {
        return Err(MaterialsError::EmptyDeck);
    }
    let mut decks: Vec<(&str, Vec<&CardSpec>)> = Vec::new();
    for card in cards {
        match decks.iter_mut().find(|(id, _)| *id == card.deck_id) {
            Some((_, list)) => list.push(card),
            None => decks.push((&card.deck_id, vec![card])),
        }
    }
    decks
        .into_iter()
        .map(|(id, list)| {
            let valid_id = !id.is_empty()
                && id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
            if !valid_id {
                return Err(MaterialsError::DeckId(id.to_string()));
            }
            let numbered = list.iter().filter(|c| c.pos_number.is_some()).count();
            if numbered != 0 && numbered != list.len() {
                return Err(MaterialsError::MixedDeck(id.to_string()));
            }
            Ok(Document {
                name: format!("deck-{id}.html"),
                content: render::deck(id, &list),
            })
        })
        .collect()
}

/// The "=" rule cards, one per attested rule in dump order.
pub fn render_rule_cards(grammar: &Grammar) -> Document {
    Document {
        name: "rules.html".to_string(),
        content: render::rule_cards(grammar),
    }
}

/// One `overlay-NN.html` per sheet page of the masked corpus. `corpus` is
/// the clear corpus; each clear word is printed at its masked position.
pub fn render_reveal_overlay(
    corpus: &AnnotatedCorpus,
    table: &MaskingTable,
    spec: &SheetSpec,
) -> Result<Vec<Document>, MaterialsError> {
    let masked = mask_corpus(corpus, table)?;
    let sheet = paginate(&masked, spec)?;
    let overlay = paginate(corpus, spec)?;
    check_alignment(&sheet, &overlay)?;
    Ok(overlay
        .iter()
        .map(|page| Document {
            name: format!("overlay-{:02}.html", page.number),
            content: render::overlay_page(corpus, &masked, page),
        })
        .collect())
}

/// Fails unless both layouts have the same pages with identical grids.
pub fn check_alignment(sheet: &[PageLayout], overlay: &[PageLayout]) -> Result<(), MaterialsError> {
    if sheet.len() != overlay.len() {
        return Err(MaterialsError::LayoutMismatch {
            page: sheet.len().min(overlay.len()) + 1,
        });
    }
    for (s, o) in sheet.iter().zip(overlay) {
        if s.grid() != o.grid() {
            return Err(MaterialsError::LayoutMismatch { page: s.number });
        }
    }
    Ok(())
}

/// Writes documents into `dir`, creating it if needed.
pub fn write_documents(dir: &Path, documents: &[Document]) -> Result<(), MaterialsError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| MaterialsError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for doc in documents {
        let path = dir.join(&doc.name);
        std::fs::write(&path, &doc.content).map_err(io_err(&path))?;
    }
    Ok(())
}
