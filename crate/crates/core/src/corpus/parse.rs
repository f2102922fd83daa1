use super::{
    default_categories, default_tagset, validate_legend, AnnotatedCorpus, AnnotatedSentence,
    CorpusError, PhraseCategory, PosTag, Tree, DEFAULT_LANGUAGE,
};

/// Parses a corpus document: optional legend header, `---`, bracketed trees.
///
/// A document with no `---` line is all body when its first meaningful
/// character is `(`, and all header otherwise. Missing legend sections fall
/// back to the default tagset and categories.
pub fn parse_corpus(text: &str) -> Result<AnnotatedCorpus, CorpusError> {
    let lines: Vec<&str> = text.lines().collect();
    let separator = lines.iter().position(|l| l.trim() == "---");
    let (header_lines, body_start) = match separator {
        Some(i) => (&lines[..i], i + 1),
        None => {
            let first = lines
                .iter()
                .map(|l| l.trim())
                .find(|l| !l.is_empty() && !l.starts_with('#'));
            match first {
                Some(l) if l.starts_with('(') => (&lines[..0], 0),
                _ => (&lines[..], lines.len()),
            }
        }
    };

    let mut corpus = parse_header(header_lines)?;
    validate_legend(&corpus)?;

    let body: Vec<&str> = lines[body_start..].to_vec();
    let mut lexer = Lexer::new(&body, body_start);
    let mut id = 0;
    while let Some(tok) = lexer.next()? {
        match tok.kind {
            Lexeme::Open => {
                let tree = parse_tree(&mut lexer, &corpus, tok.line, tok.column)?;
                let Tree::Node { label, .. } = &tree else {
                    return Err(syntax(
                        tok.line,
                        tok.column,
                        "a sentence must be rooted in a phrase category",
                    ));
                };
                if let Some(start) = &corpus.start {
                    if label != start {
                        return Err(syntax(
                            tok.line,
                            tok.column,
                            format!("sentence root `{label}` is not the start category `{start}`"),
                        ));
                    }
                }
                id += 1;
                corpus.sentences.push(AnnotatedSentence { id, tree });
            }
            Lexeme::Close => return Err(syntax(tok.line, tok.column, "unbalanced `)`")),
            Lexeme::Atom(a) => {
                return Err(syntax(
                    tok.line,
                    tok.column,
                    format!("unexpected `{a}` outside a sentence"),
                ))
            }
        }
    }
    Ok(corpus)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Tagset,
    Categories,
}

fn parse_header(lines: &[&str]) -> Result<AnnotatedCorpus, CorpusError> {
    let mut language = None;
    let mut start = None;
    let mut tagset: Option<Vec<PosTag>> = None;
    let mut categories: Option<Vec<PhraseCategory>> = None;
    let mut section = Section::None;

    for (i, raw) in lines.iter().enumerate() {
        let line_no = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indent = raw.len() - raw.trim_start().len();
        let Some((key, value)) = trimmed.split_once(':') else {
            return Err(syntax(line_no, indent + 1, "expected `key: value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        let colon = raw.find(':').unwrap_or(0);
        let value_col = colon + 2 + (raw[colon + 1..].len() - raw[colon + 1..].trim_start().len());

        if indent > 0 {
            match section {
                Section::Tagset => {
                    let number = value.parse::<u32>().map_err(|_| {
                        syntax(
                            line_no,
                            value_col,
                            format!("tag number `{value}` is not a positive integer"),
                        )
                    })?;
                    tagset.get_or_insert_with(Vec::new).push(PosTag {
                        name: key.to_string(),
                        number,
                    });
                }
                Section::Categories => {
                    categories
                        .get_or_insert_with(Vec::new)
                        .push(PhraseCategory {
                            name: key.to_string(),
                            color: value.to_string(),
                        })
                }
                Section::None => {
                    return Err(syntax(
                        line_no,
                        indent + 1,
                        "indented entry outside a legend section",
                    ))
                }
            }
            continue;
        }

        section = Section::None;
        match key {
            "language" => language = Some(value.to_string()),
            "start" => start = Some(value.to_string()),
            "tagset" | "categories" if !value.is_empty() => {
                return Err(syntax(
                    line_no,
                    value_col,
                    format!("`{key}` entries go on indented lines"),
                ))
            }
            "tagset" => {
                section = Section::Tagset;
                tagset.get_or_insert_with(Vec::new);
            }
            "categories" => {
                section = Section::Categories;
                categories.get_or_insert_with(Vec::new);
            }
            other => return Err(syntax(line_no, 1, format!("unknown header key `{other}`"))),
        }
    }

    Ok(AnnotatedCorpus {
        language: language.unwrap_or_else(|| DEFAULT_LANGUAGE.to_string()),
        start: start.filter(|s| !s.is_empty()),
        tagset: tagset.unwrap_or_else(default_tagset),
        categories: categories.unwrap_or_else(default_categories),
        sentences: Vec::new(),
    })
}

fn parse_tree(
    lexer: &mut Lexer,
    corpus: &AnnotatedCorpus,
    line: usize,
    column: usize,
) -> Result<Tree, CorpusError> {
    let label_tok = lexer.expect_some(line, column)?;
    let label = match label_tok.kind {
        Lexeme::Atom(a) => a,
        _ => {
            return Err(syntax(
                label_tok.line,
                label_tok.column,
                "expected a label after `(`",
            ))
        }
    };
    let (label_line, label_col) = (label_tok.line, label_tok.column);

    let mut children = Vec::new();
    let mut surface: Option<String> = None;
    loop {
        let tok = lexer.expect_some(line, column)?;
        match tok.kind {
            Lexeme::Close => break,
            Lexeme::Open => {
                if surface.is_some() {
                    return Err(CorpusError::Discontinuous {
                        label,
                        line: tok.line,
                        column: tok.column,
                    });
                }
                children.push(parse_tree(lexer, corpus, tok.line, tok.column)?);
            }
            Lexeme::Atom(a) => {
                if !children.is_empty() {
                    return Err(CorpusError::Discontinuous {
                        label,
                        line: tok.line,
                        column: tok.column,
                    });
                }
                if surface.is_some() {
                    return Err(syntax(
                        tok.line,
                        tok.column,
                        format!("preterminal `{label}` holds more than one token"),
                    ));
                }
                surface = Some(a);
            }
        }
    }

    match surface {
        Some(surface) => {
            if corpus.is_tag(&label) {
                Ok(Tree::Leaf {
                    tag: label,
                    surface,
                })
            } else if corpus.is_category(&label) {
                Err(syntax(
                    label_line,
                    label_col,
                    format!("phrase category `{label}` cannot dominate a bare token"),
                ))
            } else {
                Err(CorpusError::UnknownTag {
                    name: label,
                    line: label_line,
                    column: label_col,
                })
            }
        }
        None if children.is_empty() => Err(syntax(
            label_line,
            label_col,
            format!("empty constituent `{label}`"),
        )),
        None => {
            if corpus.is_category(&label) {
                Ok(Tree::Node { label, children })
            } else if corpus.is_tag(&label) {
                Err(syntax(
                    label_line,
                    label_col,
                    format!("POS tag `{label}` cannot dominate constituents"),
                ))
            } else {
                Err(CorpusError::UnknownCategory {
                    name: label,
                    line: label_line,
                    column: label_col,
                })
            }
        }
    }
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

enum Lexeme {
    Open,
    Close,
    Atom(String),
}

struct Lexed {
    kind: Lexeme,
    line: usize,
    column: usize,
}

/// Character-level tokenizer over the body lines, reporting 1-based
/// document positions.
struct Lexer<'a> {
    lines: &'a [&'a str],
    line_offset: usize,
    line: usize,
    chars: Vec<char>,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(lines: &'a [&'a str], line_offset: usize) -> Self {
        let chars = lines
            .first()
            .map(|l| l.chars().collect())
            .unwrap_or_default();
        Lexer {
            lines,
            line_offset,
            line: 0,
            chars,
            pos: 0,
        }
    }

    fn next(&mut self) -> Result<Option<Lexed>, CorpusError> {
        loop {
            if self.line >= self.lines.len() {
                return Ok(None);
            }
            while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
                self.pos += 1;
            }
            if self.pos >= self.chars.len() {
                self.line += 1;
                self.pos = 0;
                self.chars = self
                    .lines
                    .get(self.line)
                    .map(|l| l.chars().collect())
                    .unwrap_or_default();
                continue;
            }
            let line = self.line + self.line_offset + 1;
            let column = self.pos + 1;
            let c = self.chars[self.pos];
            let kind = match c {
                '(' => {
                    self.pos += 1;
                    Lexeme::Open
                }
                ')' => {
                    self.pos += 1;
                    Lexeme::Close
                }
                _ => {
                    let begin = self.pos;
                    while self.pos < self.chars.len()
                        && !super::is_reserved_char(self.chars[self.pos])
                    {
                        self.pos += 1;
                    }
                    Lexeme::Atom(self.chars[begin..self.pos].iter().collect())
                }
            };
            return Ok(Some(Lexed { kind, line, column }));
        }
    }

    fn expect_some(&mut self, open_line: usize, open_column: usize) -> Result<Lexed, CorpusError> {
        self.next()?
            .ok_or_else(|| syntax(open_line, open_column, "unclosed `(` at end of document"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokens_of;

    const MIRROR: &str =
        "(S (NP (ART lo) (N specchio)) (VP (V rispose) (PP (PREP a) (NP (ART la) (N regina)))))";

    #[test]
    fn bare_bracketing_uses_default_legend() {
        let corpus = parse_corpus(MIRROR).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.sentences[0].id, 1);
        assert_eq!(
            tokens_of(&corpus),
            vec![vec!["lo", "specchio", "rispose", "a", "la", "regina"]]
        );
        assert_eq!(corpus.tagset.len(), 8);
    }

    #[test]
    fn legend_only_document_is_empty_corpus() {
        let doc = "language: it\ntagset:\n  N: 2\n  V: 3\ncategories:\n  S: red\n";
        let corpus = parse_corpus(doc).unwrap();
        assert!(corpus.is_empty());
        assert_eq!(corpus.language, "it");
        assert_eq!(corpus.tagset.len(), 2);
        assert_eq!(corpus.categories[0].color, "red");
    }

    #[test]
    fn unknown_category_reported_with_position() {
        let err = parse_corpus("(S (XP (N re)) (VP (V dorme)))").unwrap_err();
        assert_eq!(
            err,
            CorpusError::UnknownCategory {
                name: "XP".into(),
                line: 1,
                column: 5
            }
        );
    }

    #[test]
    fn unknown_tag_reported() {
        let err = parse_corpus("(S (NP (NOUN re)))").unwrap_err();
        assert!(matches!(err, CorpusError::UnknownTag { ref name, .. } if name == "NOUN"));
    }

    #[test]
    fn mixed_constituent_is_discontinuous() {
        let err = parse_corpus("(S (NP lo (N specchio)))").unwrap_err();
        assert!(
            matches!(err, CorpusError::Discontinuous { ref label, line: 1, column: 11 } if label == "NP")
        );
        let err = parse_corpus("(S (NP (N specchio) lo))").unwrap_err();
        assert!(matches!(err, CorpusError::Discontinuous { .. }));
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let doc = "language: it\n---\n(S (NP (N re))\n";
        match parse_corpus(doc).unwrap_err() {
            CorpusError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 1)),
            other => panic!("unexpected {other:?}"),
        }
        match parse_corpus("---\n(S (NP (N re))))").unwrap_err() {
            CorpusError::Syntax { line, column, .. } => assert_eq!((line, column), (2, 16)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_corpus("bogus: 1\n"),
            Err(CorpusError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_corpus("(S)"),
            Err(CorpusError::Syntax { .. })
        ));
        assert!(matches!(
            parse_corpus("(S (N a b))"),
            Err(CorpusError::Syntax { .. })
        ));
        assert!(matches!(
            parse_corpus("(S (NP re))"),
            Err(CorpusError::Syntax { .. })
        ));
        assert!(matches!(
            parse_corpus("(N re)"),
            Err(CorpusError::Syntax { .. })
        ));
    }

    #[test]
    fn start_category_enforced() {
        let doc = "start: S\n---\n(NP (N re))\n";
        let err = parse_corpus(doc).unwrap_err();
        assert!(
            matches!(
                err,
                CorpusError::Syntax {
                    line: 3,
                    column: 1,
                    ..
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn trees_may_span_lines() {
        let doc = "---\n(S\n  (NP (N re))\n  (VP (V dorme)))\n(S (NP (N regina)) (VP (V ride)))";
        let corpus = parse_corpus(doc).unwrap();
        assert_eq!(
            tokens_of(&corpus),
            vec![vec!["re", "dorme"], vec!["regina", "ride"]]
        );
        assert_eq!(corpus.sentences[1].id, 2);
    }

    #[test]
    fn bad_tag_number() {
        assert!(matches!(
            parse_corpus("tagset:\n  N: two\n"),
            Err(CorpusError::Syntax {
                line: 2,
                column: 6,
                ..
            })
        ));
        assert!(matches!(
            parse_corpus("tagset:\n  N: 0\n"),
            Err(CorpusError::Legend(_))
        ));
    }
}
