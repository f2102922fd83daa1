use std::fmt::Write;

use super::AnnotatedCorpus;

/// Writes the full legend header followed by one bracketed tree per line.
pub fn serialize_corpus(corpus: &AnnotatedCorpus) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "language: {}", corpus.language);
    if let Some(start) = &corpus.start {
        let _ = writeln!(out, "start: {start}");
    }
    out.push_str("tagset:\n");
    for tag in &corpus.tagset {
        let _ = writeln!(out, "  {}: {}", tag.name, tag.number);
    }
    out.push_str("categories:\n");
    for cat in &corpus.categories {
        let _ = writeln!(out, "  {}: {}", cat.name, cat.color);
    }
    out.push_str("---\n");
    for sentence in &corpus.sentences {
        let _ = writeln!(out, "{}", sentence.tree);
    }
    out
}
