//! Fixed-grid pagination shared by corpus sheets and reveal overlays.
//!
//! Positions depend only on sentence lengths and tree shapes, never on the
//! surfaces, so a masked sheet and its clear overlay land on the same grid.

use serde::Serialize;

use super::{MaterialsError, SheetSpec, Visibility};
use crate::corpus::AnnotatedCorpus;

/// Grid metrics in millimetres.
pub const MARGIN: f64 = 15.0;
pub const ID_COLUMN: f64 = 14.0;
pub const CELL_WIDTH: f64 = 30.0;
pub const FONT_SIZE: f64 = 5.0;
/// Advance of one monospace glyph at [`FONT_SIZE`].
pub const GLYPH_WIDTH: f64 = FONT_SIZE * 0.6;
pub const WORD_LINE: f64 = 9.0;
pub const TAG_LINE: f64 = 5.0;
pub const BAND: f64 = 3.5;
pub const SENTENCE_GAP: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PageSize {
    pub width: f64,
    pub height: f64,
}

/// Landscape dimensions for a page size id.
pub fn page_size(id: &str) -> Option<PageSize> {
    let (width, height) = match id.to_ascii_uppercase().as_str() {
        "A3" => (420.0, 297.0),
        "A4" => (297.0, 210.0),
        "LETTER" => (279.4, 215.9),
        "TABLOID" => (431.8, 279.4),
        _ => return None,
    };
    Some(PageSize { width, height })
}

/// One token's slot on the page.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub sentence: usize,
    pub index: usize,
    pub x: f64,
    /// Baseline of the word.
    pub y: f64,
}

/// A constituent drawn as a colored band under part of one grid line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    pub sentence: usize,
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageLayout {
    pub number: usize,
    pub size: PageSize,
    /// Drawing height; exceeds the page height when rows overflow, and the
    /// page then scales down uniformly.
    pub height: f64,
    /// Sentence id with the baseline of its first line.
    pub rows: Vec<(usize, f64)>,
    pub cells: Vec<Cell>,
    pub bands: Vec<Band>,
}

impl PageLayout {
    /// Positional grid `(sentence, index, x, y)` for alignment checks.
    pub fn grid(&self) -> Vec<(usize, usize, f64, f64)> {
        self.cells
            .iter()
            .map(|c| (c.sentence, c.index, c.x, c.y))
            .collect()
    }
}

pub fn columns(size: PageSize) -> usize {
    (((size.width - 2.0 * MARGIN - ID_COLUMN) / CELL_WIDTH).floor() as usize).max(1)
}

pub fn paginate(
    corpus: &AnnotatedCorpus,
    spec: &SheetSpec,
) -> Result<Vec<PageLayout>, MaterialsError> {
    spec.validate()?;
    let size = page_size(&spec.page_size)
        .ok_or_else(|| MaterialsError::PageSize(spec.page_size.clone()))?;
    let cols = columns(size);
    let mut pages = Vec::new();
    for (n, chunk) in corpus.sentences.chunks(spec.sentences_per_page).enumerate() {
        let mut page = PageLayout {
            number: n + 1,
            size,
            height: size.height,
            rows: Vec::new(),
            cells: Vec::new(),
            bands: Vec::new(),
        };
        let mut top = MARGIN;
        for sentence in chunk {
            let len = sentence.tree.leaf_count();
            let lines = len.div_ceil(cols).max(1);
            let bands = match spec.visibility {
                Visibility::PosConstituents => sentence.tree.depth(),
                _ => 0,
            };
            let tags = if spec.visibility == Visibility::None {
                0.0
            } else {
                TAG_LINE
            };
            let line_height = WORD_LINE + tags + bands as f64 * BAND;
            let baseline = |line: usize| top + line as f64 * line_height + FONT_SIZE * 1.2;
            let x_of = |i: usize| MARGIN + ID_COLUMN + (i % cols) as f64 * CELL_WIDTH;

            page.rows.push((sentence.id, baseline(0)));
            for i in 0..len {
                page.cells.push(Cell {
                    sentence: sentence.id,
                    index: i,
                    x: x_of(i),
                    y: baseline(i / cols),
                });
            }
            if bands > 0 {
                sentence
                    .tree
                    .for_each_constituent(|label, start, end, depth| {
                        // split spans that wrap across grid lines
                        let mut s = start;
                        while s < end {
                            let line = s / cols;
                            let e = end.min((line + 1) * cols);
                            page.bands.push(Band {
                                sentence: sentence.id,
                                label: label.to_string(),
                                x: x_of(s),
                                y: top
                                    + line as f64 * line_height
                                    + WORD_LINE
                                    + tags
                                    + depth as f64 * BAND,
                                width: (e - s) as f64 * CELL_WIDTH,
                            });
                            s = e;
                        }
                    });
            }
            top += lines as f64 * line_height + SENTENCE_GAP;
        }
        page.height = size.height.max(top + MARGIN);
        pages.push(page);
    }
    Ok(pages)
}
