use std::fmt::Write;

use super::layout::{self, PageLayout, CELL_WIDTH, FONT_SIZE, GLYPH_WIDTH, MARGIN, TAG_LINE};
use super::{CardSpec, SheetSpec, Visibility};
use crate::corpus::{AnnotatedCorpus, Token};
use crate::grammar::Grammar;

const CARD_WIDTH: f64 = 60.0;
const CARD_HEIGHT: f64 = 40.0;
const CARD_GAP: f64 = 8.0;
const CARD_COLUMNS: usize = 4;
const CARD_ROWS: usize = 6;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn html(title: &str, lang: &str, page: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html lang=\"{lang}\">\n<head>\n<meta charset=\"utf-8\">\n<title>{title}</title>\n<style>\n\
         @page {{ size: {page} landscape; margin: 0; }}\n\
         body {{ margin: 0; }}\n\
         svg {{ display: block; page-break-after: always; }}\n\
         text {{ font-family: \"DejaVu Sans Mono\", monospace; }}\n\
         .tag, .sid, .masked {{ fill: #555; }}\n\
         </style>\n</head>\n<body>\n{body}</body>\n</html>\n",
        title = escape(title),
        lang = escape(lang),
        page = escape(page),
    )
}

fn svg_open(out: &mut String, width: f64, height: f64, view_height: f64) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}mm\" height=\"{}mm\" viewBox=\"0 0 {} {}\">",
        num(width),
        num(height),
        num(width),
        num(view_height)
    );
}

/// A word in its grid cell; long words are squeezed to the cell width.
fn word(out: &mut String, class: &str, sentence: usize, index: usize, x: f64, y: f64, text: &str) {
    let room = CELL_WIDTH - 2.0;
    let fit = if text.chars().count() as f64 * GLYPH_WIDTH > room {
        format!(
            " textLength=\"{}\" lengthAdjust=\"spacingAndGlyphs\"",
            num(room)
        )
    } else {
        String::new()
    };
    let _ = writeln!(
        out,
        "<text class=\"{class}\" data-s=\"{sentence}\" data-i=\"{index}\" x=\"{}\" y=\"{}\" font-size=\"{}\"{fit}>{}</text>",
        num(x),
        num(y),
        num(FONT_SIZE),
        escape(text)
    );
}

fn sentence_ids(out: &mut String, page: &PageLayout) {
    for (id, y) in &page.rows {
        let _ = writeln!(
            out,
            "<text class=\"sid\" x=\"{}\" y=\"{}\" font-size=\"{}\">{id}</text>",
            num(MARGIN),
            num(*y),
            num(FONT_SIZE * 0.7)
        );
    }
}

fn tokens_by_cell(corpus: &AnnotatedCorpus, page: &PageLayout) -> Vec<Token> {
    let mut out = Vec::with_capacity(page.cells.len());
    let mut current: Option<(usize, Vec<Token>)> = None;
    for cell in &page.cells {
        if current.as_ref().is_none_or(|(id, _)| *id != cell.sentence) {
            let sentence = corpus
                .sentences
                .iter()
                .find(|s| s.id == cell.sentence)
                .expect("layout cells come from the corpus");
            current = Some((cell.sentence, sentence.tokens()));
        }
        let (_, tokens) = current.as_ref().expect("set above");
        out.push(tokens[cell.index].clone());
    }
    out
}

pub(super) fn sheet_page(corpus: &AnnotatedCorpus, page: &PageLayout, spec: &SheetSpec) -> String {
    let mut body = String::new();
    svg_open(&mut body, page.size.width, page.size.height, page.height);
    sentence_ids(&mut body, page);
    let tokens = tokens_by_cell(corpus, page);
    for (cell, token) in page.cells.iter().zip(&tokens) {
        word(
            &mut body,
            "w",
            cell.sentence,
            cell.index,
            cell.x,
            cell.y,
            &token.surface,
        );
        if spec.visibility != Visibility::None {
            let number = corpus.tag(&token.pos).map(|t| t.number).unwrap_or(0);
            let _ = writeln!(
                body,
                "<text class=\"tag\" x=\"{}\" y=\"{}\" font-size=\"{}\">{} {number}</text>",
                num(cell.x),
                num(cell.y + TAG_LINE),
                num(FONT_SIZE * 0.6),
                escape(&token.pos)
            );
        }
    }
    for band in &page.bands {
        let color = corpus
            .category(&band.label)
            .map_or("gray", |c| c.color.as_str());
        let _ = writeln!(
            body,
            "<rect class=\"constituent\" data-s=\"{}\" data-label=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
            band.sentence,
            escape(&band.label),
            num(band.x + 0.5),
            num(band.y),
            num(band.width - 1.0),
            num(layout::BAND - 0.8),
            escape(color)
        );
    }
    body.push_str("</svg>\n");
    html(
        &format!("Corpus sheet {}", page.number),
        &corpus.language,
        &spec.page_size,
        &body,
    )
}

/// Clear words above the masked words they cover.
pub(super) fn overlay_page(
    clear: &AnnotatedCorpus,
    masked: &AnnotatedCorpus,
    page: &PageLayout,
) -> String {
    let mut body = String::new();
    svg_open(&mut body, page.size.width, page.size.height, page.height);
    sentence_ids(&mut body, page);
    let clear_tokens = tokens_by_cell(clear, page);
    let masked_tokens = tokens_by_cell(masked, page);
    for ((cell, c), m) in page.cells.iter().zip(&clear_tokens).zip(&masked_tokens) {
        word(
            &mut body,
            "clear",
            cell.sentence,
            cell.index,
            cell.x,
            cell.y - FONT_SIZE * 0.9,
            &c.surface,
        );
        word(
            &mut body,
            "masked",
            cell.sentence,
            cell.index,
            cell.x,
            cell.y,
            &m.surface,
        );
    }
    body.push_str("</svg>\n");
    let page_size = layout_page_id(page);
    html(
        &format!("Reveal overlay {}", page.number),
        &clear.language,
        page_size,
        &body,
    )
}

fn layout_page_id(page: &PageLayout) -> &'static str {
    ["A3", "A4", "Letter", "Tabloid"]
        .into_iter()
        .find(|id| layout::page_size(id) == Some(page.size))
        .unwrap_or("A3")
}

fn card_sheets<T>(
    items: &[T],
    class: &str,
    mut draw: impl FnMut(&mut String, &T, f64, f64),
) -> String {
    let per_page = CARD_COLUMNS * CARD_ROWS;
    let width =
        2.0 * MARGIN + CARD_COLUMNS as f64 * CARD_WIDTH + (CARD_COLUMNS - 1) as f64 * CARD_GAP;
    let height = 2.0 * MARGIN + CARD_ROWS as f64 * CARD_HEIGHT + (CARD_ROWS - 1) as f64 * CARD_GAP;
    let mut body = String::new();
    for chunk in items.chunks(per_page) {
        svg_open(&mut body, width, height, height);
        for (i, item) in chunk.iter().enumerate() {
            let x = MARGIN + (i % CARD_COLUMNS) as f64 * (CARD_WIDTH + CARD_GAP);
            let y = MARGIN + (i / CARD_COLUMNS) as f64 * (CARD_HEIGHT + CARD_GAP);
            let _ = writeln!(body, "<g class=\"card {class}\">");
            let _ = writeln!(
                body,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" rx=\"3\" fill=\"none\" stroke=\"black\" stroke-width=\"0.4\"/>",
                num(x),
                num(y),
                num(CARD_WIDTH),
                num(CARD_HEIGHT)
            );
            draw(&mut body, item, x, y);
            body.push_str("</g>\n");
        }
        body.push_str("</svg>\n");
    }
    body
}

fn centered(out: &mut String, class: &str, x: f64, y: f64, size: f64, text: &str) {
    let room = CARD_WIDTH - 6.0;
    let fit = if text.chars().count() as f64 * size * 0.6 > room {
        format!(
            " textLength=\"{}\" lengthAdjust=\"spacingAndGlyphs\"",
            num(room)
        )
    } else {
        String::new()
    };
    let _ = writeln!(
        out,
        "<text class=\"{class}\" x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"middle\"{fit}>{}</text>",
        num(x + CARD_WIDTH / 2.0),
        num(y),
        num(size),
        escape(text)
    );
}

pub(super) fn deck(id: &str, cards: &[&CardSpec]) -> String {
    let style = cards
        .first()
        .map_or("bracelet", |c| c.style.as_str())
        .to_string();
    let body = card_sheets(
        cards,
        &format!("card-{}", escape(&style)),
        |out, card, x, y| {
            centered(
                out,
                "surface",
                x,
                y + CARD_HEIGHT / 2.0 + 2.5,
                8.0,
                &card.surface,
            );
            if let Some(n) = card.pos_number {
                centered(
                    out,
                    "pos-number",
                    x,
                    y + CARD_HEIGHT - 4.0,
                    5.0,
                    &n.to_string(),
                );
            }
        },
    );
    html(&format!("Deck {id}"), "und", "A4", &body)
}

pub(super) fn rule_cards(grammar: &Grammar) -> String {
    let mut rules: Vec<String> = grammar.rules().iter().map(ToString::to_string).collect();
    rules.sort();
    let body = card_sheets(&rules, "card-rule", |out, rule, x, y| {
        centered(out, "rule", x, y + CARD_HEIGHT / 2.0 + 2.0, 6.0, rule);
    });
    html("Rule cards", "und", "A4", &body)
}
