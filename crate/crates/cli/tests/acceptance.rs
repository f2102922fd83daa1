//! Acceptance gate. Runs every primary criterion at its stated tolerance and
//! prints one `PASS` or `FAIL` line each; exits non-zero on any failure.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

#[path = "../../server/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use glossa_core::bracelet::{enumerate_bracelets, validate_sequence, Symbol};
use glossa_core::corpus::{tokens_of, Token};
use glossa_core::grammar::{extract_grammar, generate, GenerateOptions, PARSE_LIMIT};
use glossa_core::masking::{build_masking_table, mask_corpus, unmask_corpus, PhonotacticProfile};
use glossa_core::{fixtures, BoundaryPolicy, Deck, MaskConfig, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    if ok {
        Ok(String::new())
    } else {
        Err(detail.into())
    }
}

fn within(limit: Duration, run: impl FnOnce() -> Outcome) -> Outcome {
    let started = Instant::now();
    let result = run()?;
    let took = started.elapsed();
    if took > limit {
        return Err(format!("took {took:.2?}, limit {limit:?}"));
    }
    Ok(format!("{result} in {took:.2?}").trim().to_string())
}

fn masking_round_trip() -> Outcome {
    within(Duration::from_secs(5), || {
        let corpus = fixtures::snow_white();
        let profile = PhonotacticProfile::italian();
        let shape = oracles::phonotactic_regex(&profile);
        let blocklist = fixtures::italian_blocklist();
        let config = MaskConfig::NonWords(profile);
        let lexicon = corpus.lexicon();
        for seed in 0..100u64 {
            let table = build_masking_table(&corpus, seed, &config).map_err(|e| e.to_string())?;
            let masked = mask_corpus(&corpus, &table).map_err(|e| e.to_string())?;
            let back = unmask_corpus(&masked, &table).map_err(|e| e.to_string())?;
            check(back == corpus, format!("seed {seed}: round trip differs"))?;
            let masks: BTreeSet<&str> = table.masks().collect();
            check(
                masks.len() == lexicon.len(),
                format!("seed {seed}: masks collide"),
            )?;
            for word in &lexicon {
                let mask = table
                    .mask_of(word)
                    .ok_or(format!("seed {seed}: {word} unmapped"))?;
                check(
                    shape.is_match(mask),
                    format!("seed {seed}: {mask} breaks the profile"),
                )?;
                check(
                    !blocklist.contains(mask),
                    format!("seed {seed}: {mask} is blocklisted"),
                )?;
            }
        }
        Ok("100 seeds".into())
    })
}

fn self_closure() -> Outcome {
    let mut checked = 0;
    for name in fixtures::BUILTIN_NAMES {
        let corpus = fixtures::builtin(name).unwrap();
        let model = Model::train(&corpus).map_err(|e| e.to_string())?;
        for s in &corpus.sentences {
            let v = validate_sequence(&model, &s.surfaces(), BoundaryPolicy::EndRequired)
                .map_err(|e| e.to_string())?;
            check(v.valid, format!("{name} #{} rejected", s.id))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} sentences"))
}

fn oracle_equivalence() -> Outcome {
    within(Duration::from_secs(30), || {
        let corpus = fixtures::snow_white();
        let model = Model::train(&corpus).map_err(|e| e.to_string())?;
        let counts = oracles::count_bigrams(&tokens_of(&corpus));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..200 {
            let cards = oracles::random_deck(&mut rng, &corpus, 7);
            let end_required = rng.gen_bool(0.5);
            let policy = if end_required {
                BoundaryPolicy::EndRequired
            } else {
                BoundaryPolicy::EndOptional
            };
            let got: BTreeSet<Vec<String>> =
                enumerate_bracelets(&model, &Deck::from_tokens(&cards), policy)
                    .map_err(|e| e.to_string())?
                    .into_iter()
                    .collect();
            let want = oracles::brute_force_bracelets(&counts, &cards, end_required);
            check(
                got == want,
                format!(
                    "deck {i} {cards:?}: {} vs {} orderings",
                    got.len(),
                    want.len()
                ),
            )?;
        }
        Ok("200 decks".into())
    })
}

fn f1_regression() -> Outcome {
    let corpus = fixtures::f1();
    let model = Model::train(&corpus).map_err(|e| e.to_string())?;
    let deck: Vec<String> = ["il", "mio", "cane", "è", "nel", "giardino"]
        .map(String::from)
        .to_vec();
    let got: BTreeSet<Vec<String>> = enumerate_bracelets(
        &model,
        &Deck::from_tokens(&deck),
        BoundaryPolicy::EndRequired,
    )
    .map_err(|e| e.to_string())?
    .into_iter()
    .collect();
    let want =
        oracles::brute_force_bracelets(&oracles::count_bigrams(&tokens_of(&corpus)), &deck, true);
    check(got == want, format!("{got:?} vs {want:?}"))?;
    for line in ["il mio cane è nel giardino", "il cane nel giardino è mio"] {
        let words: Vec<String> = line.split(' ').map(String::from).collect();
        check(got.contains(&words), format!("missing `{line}`"))?;
    }
    Ok(format!("{} orderings", got.len()))
}

fn extraction_completeness() -> Outcome {
    let mut checked = 0;
    for name in fixtures::BUILTIN_NAMES {
        let corpus = fixtures::builtin(name).unwrap();
        let g = extract_grammar(&corpus).map_err(|e| e.to_string())?;
        for s in &corpus.sentences {
            let tokens = s.tokens();
            check(
                g.reduce(&tokens).map_err(|e| e.to_string())?.is_some(),
                format!("{name} #{} does not reduce", s.id),
            )?;
            let parses = g.parses(&tokens, PARSE_LIMIT).map_err(|e| e.to_string())?;
            check(
                parses.contains(&s.tree),
                format!("{name} #{}: own tree missing", s.id),
            )?;
            checked += 1;
        }
    }
    Ok(format!("{checked} sentences"))
}

fn generation_closure() -> Outcome {
    within(Duration::from_secs(10), || {
        let g = extract_grammar(&fixtures::snow_white()).map_err(|e| e.to_string())?;
        let options = GenerateOptions::default();
        for seed in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d =
                generate(&g, &mut rng, None, &options).map_err(|e| format!("seed {seed}: {e}"))?;
            check(
                g.reduce(&d.tokens()).map_err(|e| e.to_string())?.is_some(),
                format!("seed {seed}: `{}` does not reparse", d.sentence()),
            )?;
        }
        Ok("1000 generations".into())
    })
}

fn binarization_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut strings = 0;
    for i in 0..200 {
        let g = oracles::random_grammar(&mut rng, 6);
        let tags: Vec<String> = g.tagset().iter().map(|t| t.name.clone()).collect();
        let mut inputs: Vec<Vec<String>> = (0..10)
            .map(|_| {
                let len = rng.gen_range(1..=8);
                (0..len)
                    .map(|_| tags[rng.gen_range(0..tags.len())].clone())
                    .collect()
            })
            .collect();
        let short = GenerateOptions {
            max_leaves: 8,
            max_depth: 8,
            ..GenerateOptions::default()
        };
        for _ in 0..5 {
            if let Ok(d) = generate(&g, &mut rng, None, &short) {
                inputs.push(d.tokens().into_iter().map(|t| t.pos).collect());
            }
        }
        for input in inputs {
            let tokens: Vec<Token> = input
                .iter()
                .map(|t| Token {
                    surface: t.to_lowercase(),
                    pos: t.clone(),
                })
                .collect();
            let got = g.reduce(&tokens).map_err(|e| e.to_string())?.is_some();
            let want = oracles::derives(g.rules(), g.start(), &input);
            check(
                got == want,
                format!("grammar {i} on {input:?}: chart {got}, oracle {want}"),
            )?;
            strings += 1;
        }
    }
    Ok(format!("200 grammars, {strings} strings"))
}

fn mask_invariance() -> Outcome {
    let clear = fixtures::snow_white();
    let mut compared = 0;
    for (seed, config) in [
        (11, MaskConfig::NonWords(PhonotacticProfile::italian())),
        (
            12,
            MaskConfig::Symbols(glossa_core::masking::default_alphabet()),
        ),
    ] {
        let table = build_masking_table(&clear, seed, &config).map_err(|e| e.to_string())?;
        let masked = mask_corpus(&clear, &table).map_err(|e| e.to_string())?;
        let clear_model = Model::train(&clear).map_err(|e| e.to_string())?;
        let masked_model = Model::train(&masked).map_err(|e| e.to_string())?;
        let image = |s: &Symbol| match s {
            Symbol::Word(w) => Symbol::Word(table.mask_of(w).unwrap_or_default().to_string()),
            other => other.clone(),
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sequences: Vec<Vec<String>> = tokens_of(&clear);
        for _ in 0..200 {
            let mut deck = oracles::random_deck(&mut rng, &clear, 7);
            deck.sort();
            sequences.push(deck);
        }
        for policy in [BoundaryPolicy::EndRequired, BoundaryPolicy::EndOptional] {
            for words in &sequences {
                let a =
                    validate_sequence(&clear_model, words, policy).map_err(|e| e.to_string())?;
                let masked_words = table.mask_tokens(words).map_err(|e| e.to_string())?;
                let b = validate_sequence(&masked_model, &masked_words, policy)
                    .map_err(|e| e.to_string())?;
                check(
                    a.valid == b.valid
                        && a.first_failure == b.first_failure
                        && a.steps.len() == b.steps.len(),
                    format!("verdicts differ on {words:?}"),
                )?;
                for (x, y) in a.steps.iter().zip(&b.steps) {
                    check(
                        image(&x.from) == y.from && image(&x.to) == y.to && x.count == y.count,
                        format!("step {:?} -> {:?} does not map", x.from, x.to),
                    )?;
                    check(
                        (x.probability - y.probability).abs() <= 1e-12,
                        format!("{} vs {}", x.probability, y.probability),
                    )?;
                }
                compared += 1;
            }
        }
        let clear_rules = extract_grammar(&clear)
            .map_err(|e| e.to_string())?
            .rule_set();
        let masked_rules = extract_grammar(&masked)
            .map_err(|e| e.to_string())?
            .rule_set();
        check(clear_rules == masked_rules, "rule sets differ")?;
    }
    Ok(format!("{compared} verdicts"))
}

fn run_twice(dir: &Path, label: &str, args: &[&str]) -> Result<(), String> {
    let mut outputs = Vec::new();
    for round in ["a", "b"] {
        let out_dir = dir.join(format!("{label}-{round}"));
        let uses_out = matches!(args.first(), Some(&"mask") | Some(&"materials"));
        let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        if uses_out {
            full.push("--out".into());
            full.push(out_dir.to_string_lossy().into());
        }
        let run = Command::new(env!("CARGO_BIN_EXE_glossa"))
            .args(&full)
            .output()
            .map_err(|e| e.to_string())?;
        check(
            run.status.success(),
            format!("{label}: {}", String::from_utf8_lossy(&run.stderr)),
        )?;
        let mut files = Vec::new();
        if uses_out {
            let mut names: Vec<_> = std::fs::read_dir(&out_dir)
                .map_err(|e| e.to_string())?
                .map(|e| e.unwrap().path())
                .collect();
            names.sort();
            for p in names {
                files.push((
                    p.file_name().unwrap().to_owned(),
                    std::fs::read(&p).map_err(|e| e.to_string())?,
                ));
            }
        }
        // stdout names the output directory, which differs per round
        let stdout = if uses_out { Vec::new() } else { run.stdout };
        outputs.push((stdout, files));
    }
    check(
        outputs[0] == outputs[1],
        format!("{label}: outputs differ between runs"),
    )?;
    Ok(())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = "builtin:snow-white";
    run_twice(
        dir.path(),
        "mask",
        &["mask", "--corpus", corpus, "--seed", "5"],
    )?;
    run_twice(
        dir.path(),
        "mask-symbols",
        &[
            "mask", "--corpus", corpus, "--seed", "5", "--mode", "symbols",
        ],
    )?;
    run_twice(
        dir.path(),
        "grammar",
        &["grammar", "extract", "--corpus", corpus],
    )?;
    run_twice(
        dir.path(),
        "model",
        &["bracelet", "model", "--corpus", corpus],
    )?;
    run_twice(
        dir.path(),
        "materials",
        &[
            "materials",
            "--corpus",
            corpus,
            "--seed",
            "5",
            "--decks",
            "1,2",
            "--grammar-decks",
            "3",
        ],
    )?;
    Ok("mask, grammar, model, materials".into())
}

fn service_protocol() -> Outcome {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    within(Duration::from_secs(10), || {
        let report = runtime.block_on(common::scripted_session("snow-white", 9));
        check(report.monotone, "phases went backwards")?;
        check(
            report.leaks.is_empty(),
            format!("clear words before reveal: {:?}", report.leaks),
        )?;
        check(
            report.verdicts_checked == 3 && report.verdicts_agree,
            "stored verdicts disagree",
        )?;
        check(report.gap_free, "stream versions have gaps")?;
        check(
            report.revealed_first_line == report.clear_first_line,
            "reveal does not align line 1",
        )?;
        Ok("scripted session".into())
    })
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("masking round-trip", masking_round_trip),
        ("bracelet self-closure", self_closure),
        ("bracelet oracle equivalence", oracle_equivalence),
        ("F1 regression", f1_regression),
        ("grammar extraction completeness", extraction_completeness),
        ("generation closure", generation_closure),
        ("binarization equivalence", binarization_equivalence),
        ("mask-invariance", mask_invariance),
        ("determinism", determinism),
        ("service protocol", service_protocol),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
