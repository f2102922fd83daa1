//! `glossa`: build workshop kits from an annotated corpus and host live
//! sessions.
//!
//! Exit status is 0 on success, 1 on a domain error (bad corpus, unknown
//! token, capacity exhausted, port taken) and 2 on a usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glossa_core::grammar::{LexiconMode, RuleWeighting};
use glossa_core::materials::Visibility;
use glossa_core::{BoundaryPolicy, MaskMode};

use config::ProjectConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    pub fn domain(e: impl std::fmt::Display) -> Self {
        CliError::Domain(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "glossa", version, about = "Mystery-language workshop toolkit")]
struct Cli {
    /// TOML project file; flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a corpus and report its statistics.
    Ingest(IngestArgs),
    /// Mask a corpus into a mystery language.
    Mask(MaskArgs),
    /// Bigram bracelet game.
    #[command(subcommand)]
    Bracelet(BraceletCommand),
    /// Attested-grammar reduction and generation.
    #[command(subcommand)]
    Grammar(GrammarCommand),
    /// Render printable sheets, decks, rule cards and overlays.
    Materials(MaterialsArgs),
    /// Host live sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct CorpusArg {
    /// Corpus file, or `builtin:<name>` (snow-white, f1, mirror, menu).
    #[arg(long, value_name = "PATH")]
    corpus: Option<String>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Same as --corpus.
    path: Option<String>,
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct MaskArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<MaskMode>,
    /// Phonotactic profile (JSON or TOML) for non-word masks.
    #[arg(long, value_name = "FILE")]
    profile: Option<PathBuf>,
    /// Directory for `masked.corpus` and `table.tsv`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long, value_parser = parse_policy)]
    policy: Option<BoundaryPolicy>,
    /// Print probabilities as exact fractions.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum BraceletCommand {
    /// Score a card sequence transition by transition.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        /// Space-separated cards.
        #[arg(long)]
        tokens: String,
    },
    /// Rank the cards that may come next.
    Suggest {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        deck: String,
        #[arg(long, default_value = "")]
        prefix: String,
    },
    /// List every valid ordering of a deck.
    Enumerate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        deck: String,
        /// Largest deck accepted.
        #[arg(long, default_value_t = glossa_core::bracelet::DEFAULT_DECK_BOUND)]
        bound: usize,
    },
    /// Random walk over attested bigrams.
    Generate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        deck: Option<String>,
        #[arg(long, default_value_t = 20)]
        max_len: usize,
    },
    /// Print every bigram count.
    Model {
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Debug, Args)]
struct GrammarArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long, value_parser = parse_lexicon)]
    lexicon_mode: Option<LexiconMode>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum GrammarCommand {
    /// Print the attested rules and lexicon.
    Extract {
        #[command(flatten)]
        grammar: GrammarArgs,
        #[arg(long, default_value_t = glossa_core::grammar::DEFAULT_MAX_RHS)]
        max_rhs: usize,
    },
    /// Reduce a tagged sentence to the start category.
    Check {
        #[command(flatten)]
        grammar: GrammarArgs,
        /// `surface/TAG` pairs, space-separated.
        #[arg(
            long,
            conflicts_with = "sentence",
            required_unless_present = "sentence"
        )]
        tokens: Option<String>,
        /// Check corpus sentence ID instead.
        #[arg(long, value_name = "ID")]
        sentence: Option<usize>,
    },
    /// Expand the start category into a new sentence.
    Generate {
        #[command(flatten)]
        grammar: GrammarArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// `surface/TAG` cards the sentence must draw from.
        #[arg(long)]
        deck: Option<String>,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        max_leaves: Option<usize>,
        #[arg(long, value_parser = parse_weighting)]
        weighting: Option<RuleWeighting>,
    },
}

#[derive(Debug, Args)]
struct MaterialsArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Mask before rendering and add reveal overlays.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<MaskMode>,
    #[arg(long, value_name = "FILE")]
    profile: Option<PathBuf>,
    #[arg(long)]
    per_page: Option<usize>,
    #[arg(long, value_parser = parse_visibility)]
    visibility: Option<Visibility>,
    #[arg(long)]
    page_size: Option<String>,
    /// Sentence ids to print as bracelet decks.
    #[arg(long, value_delimiter = ',', value_name = "IDS")]
    decks: Vec<usize>,
    /// Sentence ids to print as numbered grammar decks.
    #[arg(long, value_delimiter = ',', value_name = "IDS")]
    grammar_decks: Vec<usize>,
    /// Skip the rule-card sheet.
    #[arg(long)]
    no_rules: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Address to listen on.
    #[arg(long)]
    bind: Option<String>,
    /// Directory for session logs; sessions are kept in memory when absent.
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Extra `<name>.corpus` files offered besides the bundled ones.
    #[arg(long, value_name = "DIR")]
    corpus_dir: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<MaskMode, String> {
    s.parse()
        .map_err(|e: glossa_core::masking::MaskingError| e.to_string())
}

fn parse_policy(s: &str) -> Result<BoundaryPolicy, String> {
    s.parse()
}

fn parse_lexicon(s: &str) -> Result<LexiconMode, String> {
    s.parse()
}

fn parse_visibility(s: &str) -> Result<Visibility, String> {
    s.parse()
}

fn parse_weighting(s: &str) -> Result<RuleWeighting, String> {
    s.parse()
}

fn run(cli: Cli) -> Result<String, CliError> {
    let config = match &cli.config {
        Some(path) => ProjectConfig::load(path)?,
        None => ProjectConfig::default(),
    };
    match cli.command {
        Command::Ingest(a) => commands::ingest(&config, a.path.or(a.corpus.corpus), a.json),
        Command::Mask(a) => commands::mask(&config, a),
        Command::Bracelet(c) => commands::bracelet(&config, c),
        Command::Grammar(c) => commands::grammar(&config, c),
        Command::Materials(a) => commands::materials(&config, a),
        Command::Serve(a) => commands::serve(&config, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (CliError::Usage(m) | CliError::Domain(m)) = &e;
            eprintln!("error: {m}");
            ExitCode::from(e.exit_code())
        }
    }
}
