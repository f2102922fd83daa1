use glossa_core::corpus::{
    default_categories, default_tagset, parse_corpus, serialize_corpus, tokens_of, AnnotatedCorpus,
    AnnotatedSentence, CorpusError, Tree,
};
use glossa_core::fixtures;
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Tree> {
    let tags: Vec<String> = default_tagset().into_iter().map(|t| t.name).collect();
    (prop::sample::select(tags), "[a-zàèéìòù']{1,8}").prop_map(|(tag, word)| Tree::leaf(tag, word))
}

fn category() -> impl Strategy<Value = String> {
    prop::sample::select(
        default_categories()
            .into_iter()
            .map(|c| c.name)
            .collect::<Vec<_>>(),
    )
}

fn node() -> impl Strategy<Value = Tree> {
    let inner = leaf().prop_recursive(4, 24, 4, |child| {
        (category(), prop::collection::vec(child, 1..4))
            .prop_map(|(label, children)| Tree::node(label, children))
    });
    (category(), prop::collection::vec(inner, 1..5))
        .prop_map(|(label, children)| Tree::node(label, children))
}

fn corpus() -> impl Strategy<Value = AnnotatedCorpus> {
    (
        prop::collection::vec(node(), 0..6),
        prop::sample::select(vec!["und", "it", "x-mystery"]),
        any::<bool>(),
    )
        .prop_map(|(trees, language, pin_start)| {
            let start = pin_start.then(|| "S".to_string());
            let sentences = trees
                .into_iter()
                .enumerate()
                .map(|(i, tree)| {
                    let tree = match (&start, tree) {
                        (Some(s), Tree::Node { children, .. }) => Tree::node(s.clone(), children),
                        (_, t) => t,
                    };
                    AnnotatedSentence { id: i + 1, tree }
                })
                .collect();
            AnnotatedCorpus {
                language: language.to_string(),
                start,
                sentences,
                ..AnnotatedCorpus::empty()
            }
        })
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(c in corpus()) {
        let text = serialize_corpus(&c);
        let back = parse_corpus(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(serialize_corpus(&back), text);
    }

    #[test]
    fn parsed_labels_are_in_the_legend(c in corpus()) {
        let back = parse_corpus(&serialize_corpus(&c)).unwrap();
        for s in &back.sentences {
            s.tree.for_each_constituent(|label, _, _, _| assert!(back.is_category(label)));
            for t in s.tokens() {
                prop_assert!(back.is_tag(&t.pos));
            }
        }
    }

    #[test]
    fn flattening_restores_the_sentence(c in corpus()) {
        for (i, s) in c.sentences.iter().enumerate() {
            let flat = tokens_of(&c)[i].join(" ");
            prop_assert_eq!(flat, s.text());
        }
    }
}

#[test]
fn fixture_round_trips() {
    for name in fixtures::BUILTIN_NAMES {
        let corpus = fixtures::builtin(name).unwrap();
        let again = parse_corpus(&serialize_corpus(&corpus)).unwrap();
        assert_eq!(again, corpus, "{name}");
    }
}

#[test]
fn snow_white_has_about_sixty_sentences_with_dense_ids() {
    let corpus = fixtures::snow_white();
    assert_eq!(corpus.len(), 60);
    for (i, s) in corpus.sentences.iter().enumerate() {
        assert_eq!(s.id, i + 1);
        assert!(s.tree.leaf_count() >= 1);
    }
    assert!(corpus.categories.len() <= 5);
}

#[test]
fn f1_token_lengths() {
    let lengths: Vec<usize> = tokens_of(&fixtures::f1()).iter().map(Vec::len).collect();
    assert_eq!(lengths, [6, 6, 5]);
}

#[test]
fn mirror_tokens() {
    assert_eq!(
        tokens_of(&fixtures::mirror()),
        vec![vec!["lo", "specchio", "rispose", "a", "la", "regina"]]
    );
}

#[test]
fn legend_only_document_is_empty() {
    let doc = "language: it\ntagset:\n  N: 1\ncategories:\n  S: red\n";
    let corpus = parse_corpus(doc).unwrap();
    assert!(corpus.is_empty());
    assert_eq!(corpus.language, "it");
}

#[test]
fn unknown_category_is_an_error() {
    let err = parse_corpus("(S (XP (N re)))").unwrap_err();
    assert!(
        matches!(err, CorpusError::UnknownCategory { .. }),
        "{err:?}"
    );
}
