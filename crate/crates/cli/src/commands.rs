use std::collections::BTreeMap;
use std::fmt::{Display, Write as _};
use std::path::{Path, PathBuf};

use glossa_core::bracelet::{
    enumerate_bracelets_bounded, generate_sentence, suggest_next, validate_sequence,
    BraceletSentence, Step,
};
use glossa_core::corpus::{parse_corpus, serialize_corpus, Token};
use glossa_core::grammar::{
    extract_grammar_bounded, generate, Derivation, GenerateOptions, Grammar,
};
use glossa_core::masking::{build_masking_table, mask_corpus, PhonotacticProfile};
use glossa_core::materials::{
    render_corpus_sheets, render_deck, render_reveal_overlay, render_rule_cards, write_documents,
    CardSpec, Document, SheetSpec,
};
use glossa_core::{
    fixtures, AnnotatedCorpus, BigramModel, BoundaryPolicy, Deck, ExactModel, MaskConfig, MaskMode,
    Model, Probability,
};
use glossa_server::{mask_config, AppState, CorpusRegistry};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ProjectConfig;
use crate::{
    BraceletCommand, CliError, GrammarCommand, MaskArgs, MaterialsArgs, ModelArgs, ServeArgs,
};

const DEFAULT_BIND: &str = "127.0.0.1:8080";

fn load_corpus(
    config: &ProjectConfig,
    flag: Option<String>,
) -> Result<(String, AnnotatedCorpus), CliError> {
    let spec = flag.or_else(|| config.corpus.clone()).ok_or_else(|| {
        CliError::Usage("no corpus given: pass --corpus or set `corpus` in the config".into())
    })?;
    if let Some(name) = spec.strip_prefix("builtin:") {
        let corpus = fixtures::builtin(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown builtin corpus `{name}` (one of {})",
                fixtures::BUILTIN_NAMES.join(", ")
            ))
        })?;
        return Ok((spec, corpus));
    }
    let text = std::fs::read_to_string(&spec)
        .map_err(|e| CliError::Domain(format!("cannot read {spec}: {e}")))?;
    let corpus = parse_corpus(&text).map_err(|e| CliError::Domain(format!("{spec}: {e}")))?;
    Ok((spec, corpus))
}

fn require_seed(flag: Option<u64>, config: &ProjectConfig) -> Result<u64, CliError> {
    flag.or(config.seed).ok_or_else(|| {
        CliError::Usage(
            "this command is randomized: pass --seed or set `seed` in the config".into(),
        )
    })
}

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// `surface/TAG` pairs; the split is at the last slash.
fn tagged(text: &str) -> Result<Vec<Token>, CliError> {
    text.split_whitespace()
        .map(|item| {
            let (surface, pos) = item
                .rsplit_once('/')
                .filter(|(s, p)| !s.is_empty() && !p.is_empty())
                .ok_or_else(|| {
                    CliError::Usage(format!("`{item}` is not of the form surface/TAG"))
                })?;
            Ok(Token {
                surface: surface.to_lowercase(),
                pos: pos.to_string(),
            })
        })
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

pub fn ingest(
    config: &ProjectConfig,
    corpus: Option<String>,
    as_json: bool,
) -> Result<String, CliError> {
    let (label, corpus) = load_corpus(config, corpus)?;
    let tags: BTreeMap<&str, u32> = corpus
        .tagset
        .iter()
        .map(|t| (t.name.as_str(), t.number))
        .collect();
    let categories: Vec<&str> = corpus.categories.iter().map(|c| c.name.as_str()).collect();
    let types = corpus.lexicon().len();
    if as_json {
        return Ok(to_json(&json!({
            "corpus": label,
            "language": corpus.language,
            "start": corpus.start,
            "sentences": corpus.len(),
            "tokens": corpus.token_count(),
            "word_types": types,
            "tags": tags,
            "categories": categories,
        })));
    }
    let mut out = String::new();
    let _ = writeln!(out, "corpus: {label}");
    let _ = writeln!(out, "language: {}", corpus.language);
    let _ = writeln!(
        out,
        "start: {}",
        corpus.start.as_deref().unwrap_or("(inferred)")
    );
    let _ = writeln!(out, "sentences: {}", corpus.len());
    let _ = writeln!(out, "tokens: {}", corpus.token_count());
    let _ = writeln!(out, "word types: {types}");
    let tag_list: Vec<String> = corpus
        .tagset
        .iter()
        .map(|t| format!("{}={}", t.name, t.number))
        .collect();
    let _ = writeln!(out, "tags: {}", tag_list.join(" "));
    let _ = writeln!(out, "categories: {}", categories.join(" "));
    Ok(out)
}

fn load_profile(path: &Path) -> Result<PhonotacticProfile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Domain(format!("cannot read {}: {e}", path.display())))?;
    let profile: PhonotacticProfile = if path.extension().is_some_and(|x| x == "toml") {
        toml::from_str(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?
    };
    profile.validate().map_err(CliError::domain)?;
    Ok(profile)
}

fn masking(
    config: &ProjectConfig,
    mode: Option<MaskMode>,
    profile: Option<PathBuf>,
) -> Result<MaskConfig, CliError> {
    let mode = mode.or(config.mask_mode).unwrap_or(MaskMode::NonWords);
    match (mode, profile.or_else(|| config.profile.clone())) {
        (MaskMode::NonWords, Some(path)) => Ok(MaskConfig::NonWords(load_profile(&path)?)),
        (MaskMode::Symbols, Some(_)) => Err(CliError::Usage(
            "--profile applies to nonwords masks only".into(),
        )),
        (mode, None) => Ok(mask_config(mode)),
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Domain(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, content)
        .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))
}

pub fn mask(config: &ProjectConfig, a: MaskArgs) -> Result<String, CliError> {
    let (_, corpus) = load_corpus(config, a.corpus.corpus)?;
    let seed = require_seed(a.seed, config)?;
    let mask = masking(config, a.mode, a.profile)?;
    let out = a
        .out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let table = build_masking_table(&corpus, seed, &mask).map_err(CliError::domain)?;
    let masked = mask_corpus(&corpus, &table).map_err(CliError::domain)?;
    let corpus_path = out.join("masked.corpus");
    let table_path = out.join("table.tsv");
    let header = format!(
        "# masked with seed {seed}, mode {}, config {}\n",
        mask.mode(),
        mask.digest()
    );
    write_file(&corpus_path, &(header + &serialize_corpus(&masked)))?;
    write_file(&table_path, &table.to_tsv())?;
    if a.json {
        return Ok(to_json(&json!({
            "seed": seed,
            "mode": mask.mode(),
            "word_types": table.len(),
            "corpus": corpus_path,
            "table": table_path,
        })));
    }
    Ok(format!(
        "masked {} word types ({}, seed {seed})\nwrote {}\nwrote {}\n",
        table.len(),
        mask.mode(),
        corpus_path.display(),
        table_path.display()
    ))
}

struct ModelContext {
    corpus: AnnotatedCorpus,
    policy: BoundaryPolicy,
    exact: bool,
    json: bool,
}

fn model_context(config: &ProjectConfig, a: ModelArgs) -> Result<ModelContext, CliError> {
    let (_, corpus) = load_corpus(config, a.corpus.corpus)?;
    Ok(ModelContext {
        corpus,
        policy: a.policy.or(config.policy).unwrap_or_default(),
        exact: a.exact,
        json: a.json,
    })
}

fn verdict_text<S: Display>(v: &BraceletSentence<S>) -> String {
    let mut out = String::new();
    match v.first_failure {
        None => out.push_str("VALID\n"),
        Some(k) => {
            let s = &v.steps[k];
            let _ = writeln!(
                out,
                "INVALID at step {k}: {} -> {} is unattested",
                s.from, s.to
            );
        }
    }
    for (i, s) in v.steps.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i}\t{}\t{}\t{}\t{}",
            s.from, s.to, s.count, s.probability
        );
    }
    out
}

/// Exact fractions go out as `"n/d"` strings, floats as numbers.
fn shown<S: Probability + Display>(p: &S, exact: bool) -> Value {
    if exact {
        Value::String(p.to_string())
    } else {
        json!(p.to_f64())
    }
}

fn verdict_json<S: Probability + Display>(
    v: BraceletSentence<S>,
    exact: bool,
) -> BraceletSentence<Value> {
    BraceletSentence {
        tokens: v.tokens,
        valid: v.valid,
        first_failure: v.first_failure,
        steps: v
            .steps
            .into_iter()
            .map(|s| Step {
                probability: shown(&s.probability, exact),
                from: s.from,
                to: s.to,
                count: s.count,
            })
            .collect(),
    }
}

fn bracelet_with<S: Probability + Display>(
    model: BigramModel<S>,
    ctx: &ModelContext,
    cmd: BraceletCommand,
    config: &ProjectConfig,
) -> Result<String, CliError> {
    match cmd {
        BraceletCommand::Validate { tokens, .. } => {
            let v =
                validate_sequence(&model, &words(&tokens), ctx.policy).map_err(CliError::domain)?;
            Ok(if ctx.json {
                to_json(&verdict_json(v, ctx.exact))
            } else {
                verdict_text(&v)
            })
        }
        BraceletCommand::Suggest { deck, prefix, .. } => {
            let prefix = words(&prefix);
            let deck = Deck::from_tokens(words(&deck));
            let remaining = deck.without(&prefix).ok_or_else(|| {
                CliError::Domain(format!(
                    "prefix uses cards not in the deck: {}",
                    deck.missing(&prefix).join(", ")
                ))
            })?;
            let got =
                suggest_next(&model, &prefix, &remaining, ctx.policy).map_err(CliError::domain)?;
            if ctx.json {
                let rows: Vec<_> = got
                    .iter()
                    .map(|s| json!({ "token": s.token, "count": s.count, "probability": shown(&s.probability, ctx.exact) }))
                    .collect();
                return Ok(to_json(&rows));
            }
            Ok(got
                .iter()
                .map(|s| format!("{}\t{}\t{}\n", s.token, s.count, s.probability))
                .collect())
        }
        BraceletCommand::Enumerate { deck, bound, .. } => {
            let deck = Deck::from_tokens(words(&deck));
            let all = enumerate_bracelets_bounded(&model, &deck, ctx.policy, bound)
                .map_err(CliError::domain)?;
            if ctx.json {
                return Ok(to_json(&all));
            }
            Ok(all.iter().map(|s| s.join(" ") + "\n").collect())
        }
        BraceletCommand::Generate {
            seed,
            deck,
            max_len,
            ..
        } => {
            let seed = require_seed(seed, config)?;
            let deck = deck.map(|d| Deck::from_tokens(words(&d)));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = generate_sentence(&model, deck.as_ref(), &mut rng, ctx.policy, max_len);
            if ctx.json {
                return Ok(to_json(
                    &json!({ "seed": seed, "outcome": g.outcome, "sentence": verdict_json(g.sentence, ctx.exact) }),
                ));
            }
            Ok(format!(
                "{}\noutcome: {}\nseed: {seed}\n",
                g.sentence.tokens.join(" "),
                serde_json::to_value(g.outcome)
                    .expect("outcome")
                    .as_str()
                    .unwrap_or_default()
            ))
        }
        BraceletCommand::Model { .. } => {
            if ctx.json {
                let rows: Vec<_> = model
                    .entries()
                    .map(|(l, r, c)| json!({ "left": l, "right": r, "count": c }))
                    .collect();
                return Ok(to_json(&rows));
            }
            Ok(model.dump())
        }
    }
}

pub fn bracelet(config: &ProjectConfig, cmd: BraceletCommand) -> Result<String, CliError> {
    let args = match cmd {
        BraceletCommand::Validate { ref model, .. }
        | BraceletCommand::Suggest { ref model, .. }
        | BraceletCommand::Enumerate { ref model, .. }
        | BraceletCommand::Generate { ref model, .. }
        | BraceletCommand::Model { ref model } => ModelArgs {
            corpus: crate::CorpusArg {
                corpus: model.corpus.corpus.clone(),
            },
            policy: model.policy,
            exact: model.exact,
            json: model.json,
        },
    };
    let ctx = model_context(config, args)?;
    if ctx.exact {
        let model = ExactModel::train(&ctx.corpus).map_err(CliError::domain)?;
        bracelet_with(model, &ctx, cmd, config)
    } else {
        let model = Model::train(&ctx.corpus).map_err(CliError::domain)?;
        bracelet_with(model, &ctx, cmd, config)
    }
}

fn grammar_of(
    config: &ProjectConfig,
    args: &crate::GrammarArgs,
    max_rhs: usize,
) -> Result<(AnnotatedCorpus, Grammar), CliError> {
    let (_, corpus) = load_corpus(config, args.corpus.corpus.clone())?;
    let grammar = extract_grammar_bounded(&corpus, max_rhs).map_err(CliError::domain)?;
    let mode = args
        .lexicon_mode
        .or(config.lexicon_mode)
        .unwrap_or_default();
    Ok((corpus, grammar.with_lexicon_mode(mode)))
}

fn derivation_json(d: &Derivation) -> Value {
    let rules: Vec<String> = d.rule_trace.iter().map(ToString::to_string).collect();
    json!({ "rules": rules, "tree": d.tree })
}

pub fn grammar(config: &ProjectConfig, cmd: GrammarCommand) -> Result<String, CliError> {
    match cmd {
        GrammarCommand::Extract {
            grammar: args,
            max_rhs,
        } => {
            let (_, g) = grammar_of(config, &args, max_rhs)?;
            if args.json {
                let rules: Vec<String> = g.rule_set().iter().map(ToString::to_string).collect();
                return Ok(to_json(
                    &json!({ "start": g.start(), "rules": rules, "lexicon": g.lexicon() }),
                ));
            }
            Ok(g.dump())
        }
        GrammarCommand::Check {
            grammar: args,
            tokens,
            sentence,
        } => {
            let (corpus, g) = grammar_of(config, &args, glossa_core::grammar::DEFAULT_MAX_RHS)?;
            let tokens = match (tokens, sentence) {
                (Some(t), _) => tagged(&t)?,
                (None, Some(id)) => corpus
                    .sentences
                    .iter()
                    .find(|s| s.id == id)
                    .ok_or_else(|| CliError::Domain(format!("no sentence with id {id}")))?
                    .tokens(),
                (None, None) => return Err(CliError::Usage("pass --tokens or --sentence".into())),
            };
            let derivation = g.reduce(&tokens).map_err(CliError::domain)?;
            let partial = match derivation {
                Some(_) => Vec::new(),
                None => g.best_partial(&tokens).map_err(CliError::domain)?,
            };
            if args.json {
                return Ok(to_json(&json!({
                    "start": g.start(),
                    "reduces": derivation.is_some(),
                    "derivation": derivation.as_ref().map(derivation_json),
                    "partial": partial,
                })));
            }
            let mut out = String::new();
            match derivation {
                Some(d) => {
                    let _ = writeln!(out, "REDUCES TO {}", g.start());
                    for rule in &d.rule_trace {
                        let _ = writeln!(out, "  {rule}");
                    }
                    let _ = writeln!(out, "{}", d.tree);
                }
                None => {
                    let _ = writeln!(out, "DOES NOT REDUCE TO {}", g.start());
                    let pieces: Vec<String> = partial
                        .iter()
                        .map(|p| format!("{}[{}..{}]", p.label, p.start, p.end))
                        .collect();
                    let _ = writeln!(out, "best cover: {}", pieces.join(" "));
                }
            }
            Ok(out)
        }
        GrammarCommand::Generate {
            grammar: args,
            seed,
            deck,
            max_depth,
            max_leaves,
            weighting,
        } => {
            let seed = require_seed(seed, config)?;
            let (_, g) = grammar_of(config, &args, glossa_core::grammar::DEFAULT_MAX_RHS)?;
            let deck = deck.map(|d| tagged(&d)).transpose()?;
            let defaults = GenerateOptions::default();
            let options = GenerateOptions {
                max_depth: max_depth.unwrap_or(defaults.max_depth),
                max_leaves: max_leaves.unwrap_or(defaults.max_leaves),
                weighting: weighting.unwrap_or(defaults.weighting),
                ..defaults
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = generate(&g, &mut rng, deck.as_deref(), &options).map_err(CliError::domain)?;
            if args.json {
                return Ok(to_json(
                    &json!({ "seed": seed, "sentence": d.sentence(), "derivation": derivation_json(&d) }),
                ));
            }
            let pairs: Vec<String> = d
                .tokens()
                .iter()
                .map(|t| format!("{}/{}", t.surface, t.pos))
                .collect();
            Ok(format!(
                "{}\n{}\n{}\nseed: {seed}\n",
                d.sentence(),
                pairs.join(" "),
                d.tree
            ))
        }
    }
}

pub fn materials(config: &ProjectConfig, a: MaterialsArgs) -> Result<String, CliError> {
    let (label, clear) = load_corpus(config, a.corpus.corpus)?;
    let out = a.out.or_else(|| config.out.clone()).ok_or_else(|| {
        CliError::Usage("no output directory: pass --out or set `out` in the config".into())
    })?;
    let defaults = SheetSpec::default();
    let m = &config.materials;
    let spec = SheetSpec {
        sentences_per_page: a
            .per_page
            .or(m.sentences_per_page)
            .unwrap_or(defaults.sentences_per_page),
        visibility: a.visibility.or(m.visibility).unwrap_or(defaults.visibility),
        page_size: a
            .page_size
            .or_else(|| m.page_size.clone())
            .unwrap_or(defaults.page_size),
    };
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let seed = a.seed.or(config.seed);
    let (corpus, table, mask) = match seed {
        Some(seed) => {
            let mask = masking(config, a.mode, a.profile)?;
            let table = build_masking_table(&clear, seed, &mask).map_err(CliError::domain)?;
            (
                mask_corpus(&clear, &table).map_err(CliError::domain)?,
                Some(table),
                Some(mask),
            )
        }
        None => (clear.clone(), None, None),
    };

    let mut docs: Vec<Document> = render_corpus_sheets(&corpus, &spec).map_err(CliError::domain)?;
    let sentence = |id: usize| {
        corpus
            .sentences
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| CliError::Domain(format!("no sentence with id {id}")))
    };
    let mut cards = Vec::new();
    for id in &a.decks {
        cards.extend(CardSpec::bracelet_deck(
            sentence(*id)?,
            &format!("bracelet-{id}"),
        ));
    }
    for id in &a.grammar_decks {
        cards.extend(CardSpec::grammar_deck(
            &corpus,
            sentence(*id)?,
            &format!("grammar-{id}"),
        ));
    }
    if !cards.is_empty() {
        docs.extend(render_deck(&cards).map_err(CliError::domain)?);
    }
    if !a.no_rules && !corpus.is_empty() {
        let g = extract_grammar_bounded(&corpus, glossa_core::grammar::DEFAULT_MAX_RHS)
            .map_err(CliError::domain)?;
        docs.push(render_rule_cards(&g));
    }
    if let Some(table) = &table {
        docs.extend(render_reveal_overlay(&clear, table, &spec).map_err(CliError::domain)?);
    }
    let files: Vec<&str> = docs.iter().map(|d| d.name.as_str()).collect();
    let manifest = json!({
        "corpus": label,
        "seed": seed,
        "mode": mask.as_ref().map(MaskConfig::mode),
        "config": mask.as_ref().map(MaskConfig::digest),
        "sentences_per_page": spec.sentences_per_page,
        "visibility": spec.visibility,
        "page_size": spec.page_size,
        "files": files,
    });
    docs.push(Document {
        name: "manifest.json".into(),
        content: to_json(&manifest),
    });
    write_documents(&out, &docs).map_err(CliError::domain)?;
    let mut report = String::new();
    for d in &docs {
        let _ = writeln!(report, "wrote {}", out.join(&d.name).display());
    }
    if let Some(seed) = seed {
        let _ = writeln!(report, "seed: {seed}");
    }
    Ok(report)
}

pub fn serve(config: &ProjectConfig, a: ServeArgs) -> Result<String, CliError> {
    let bind = a
        .bind
        .or_else(|| config.bind.clone())
        .unwrap_or_else(|| DEFAULT_BIND.to_string());
    let registry = match a.corpus_dir.or_else(|| config.corpus_dir.clone()) {
        Some(dir) => CorpusRegistry::with_dir(dir),
        None => CorpusRegistry::builtin(),
    };
    let state = match a.data_dir.or_else(|| config.data_dir.clone()) {
        Some(dir) => AppState::persistent(registry, dir).map_err(CliError::domain)?,
        None => AppState::ephemeral(registry),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::domain)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .map_err(|e| CliError::Domain(format!("cannot listen on {bind}: {e}")))?;
        let addr = listener.local_addr().map_err(CliError::domain)?;
        println!(
            "listening on http://{addr} ({} sessions restored)",
            state.session_count()
        );
        glossa_server::serve(listener, state)
            .await
            .map_err(CliError::domain)?;
        Ok(String::new())
    })
}
