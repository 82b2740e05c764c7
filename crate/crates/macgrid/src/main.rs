//! Batch command-line surface over the library: encode, decode, train, eval,
//! stats, tune, synth, bench.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
//! Option precedence is defaults < config file (`key = value` lines, path in
//! `MACGRID_CONFIG`) < flags, and every run echoes its resolved options and
//! seed into the output header. All randomized paths are seeded, so reruns
//! with identical inputs produce byte-identical outputs (bench timings
//! excepted).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use macgrid::clique::{decode_sentence, DecodeDiagnostics};
use macgrid::codec::{encode_edge_table, encode_segment_table, Threshold};
use macgrid::corpus::{
    corpus_stats, generate_synthetic, parse_inline, write_inline, Corpus, Split, SynthSpec,
};
use macgrid::entity::{Entity, Sentence};
use macgrid::metrics::{full_report, BucketSpec};
use macgrid::scorer::{train, tune_threshold, Scorer, TrainConfig};
use macgrid::tags::{EdgeTag, EdgeTagTable, SegmentTag, SegmentTagTable};

const CONFIG_ENV: &str = "MACGRID_CONFIG";

#[derive(Parser)]
#[command(
    name = "macgrid",
    version,
    about = "Discontinuous NER via grid tagging and maximal-clique decoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode gold annotations into per-sentence tag-table records
    Encode(EncodeArgs),
    /// Decode tag tables or model predictions back into annotations
    Decode(DecodeArgs),
    /// Train a scorer and write a checkpoint
    Train(TrainArgs),
    /// Score a prediction corpus against a gold corpus
    Eval(EvalArgs),
    /// Corpus statistics (sentences, mentions, discontinuous share)
    Stats(StatsArgs),
    /// Pick the decision threshold that maximizes dev F1
    Tune(TuneArgs),
    /// Generate a seeded synthetic corpus
    Synth(SynthArgs),
    /// Measure decoding throughput
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Args)]
struct EncodeArgs {
    /// Input corpus (inline format)
    #[arg(long)]
    input: PathBuf,
    /// Output file; stdout when absent
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Tag-table records produced by `encode`
    #[arg(long, conflicts_with = "model")]
    tables: Option<PathBuf>,
    /// Model checkpoint; predicts grids for the `--input` corpus
    #[arg(long)]
    model: Option<PathBuf>,
    /// Corpus supplying the sentences when `--model` is used
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Probability threshold for converting grids to tags
    #[arg(long)]
    threshold: Option<f64>,
    /// Worker threads for per-sentence fan-out
    #[arg(long)]
    jobs: Option<usize>,
    /// Abort on the first per-record error instead of continuing
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Training corpus
    #[arg(long)]
    input: PathBuf,
    /// Development corpus for per-epoch evaluation and model selection
    #[arg(long)]
    dev: PathBuf,
    /// Checkpoint output path
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    /// Replace CLN fusion with concatenation + linear
    #[arg(long)]
    no_cln: bool,
    /// Drop the inner-token LSTM from segment cells
    #[arg(long)]
    no_inner_lstm: bool,
    /// Drop the segment-length embedding
    #[arg(long)]
    no_length_embedding: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Predictions corpus
    #[arg(long)]
    input: PathBuf,
    /// Gold corpus
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum)]
    report: Option<ReportFormat>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    report: Option<ReportFormat>,
}

#[derive(Args)]
struct TuneArgs {
    /// Development corpus
    #[arg(long)]
    input: PathBuf,
    /// Model checkpoint
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated candidate thresholds; default 0.1..0.9
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    sentences: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    vocab: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    max_mentions: Option<usize>,
    /// Comma-separated entity type names
    #[arg(long)]
    types: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    input: PathBuf,
    /// Optional checkpoint; adds a predict+decode measurement
    #[arg(long)]
    model: Option<PathBuf>,
    /// Timed repetitions after one warmup pass
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encode(args) => cmd_encode(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// `key = value` file named by MACGRID_CONFIG; sits between the built-in
/// defaults and explicit flags.
struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    fn load() -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        if let Ok(path) = std::env::var(CONFIG_ENV) {
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::usage(format!("cannot read config file {path}: {e}")))?;
            for (no, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    CliError::usage(format!("{path}:{}: expected `key = value`", no + 1))
                })?;
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
            let known = [
                "threshold",
                "seed",
                "jobs",
                "epochs",
                "batch_size",
                "learning_rate",
                "dim",
                "max_len",
                "reps",
            ];
            for key in values.keys() {
                if !known.contains(&key.as_str()) {
                    return Err(CliError::usage(format!(
                        "config file {path}: unknown key `{key}`"
                    )));
                }
            }
        }
        Ok(Self { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::usage(format!("config file: bad value `{raw}` for `{key}`"))
            }),
        }
    }
}

fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    if let Some(value) = flag {
        return Ok(value);
    }
    Ok(file.get::<T>(key)?.unwrap_or(default))
}

fn read_corpus(path: &Path) -> Result<Corpus, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_inline(&text).map_err(|e| CliError::runtime(format!("{}:{e}", path.display())))
}

fn read_scorer(path: &Path) -> Result<Scorer, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    Scorer::load(std::io::BufReader::new(file))
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| CliError::runtime(e.to_string()))
        }
    }
}

fn parse_threshold(value: f64) -> Result<Threshold, CliError> {
    Threshold::new(value).map_err(|e| CliError::usage(e.to_string()))
}

fn header(command: &str, entries: &[(&str, String)]) -> String {
    let mut out = format!("# macgrid {command}\n");
    for (key, value) in entries {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    out
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::runtime(e.to_string()))
}

// ---------------------------------------------------------------------------
// Tag-table records (encode output / decode input)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CellRecord {
    i: usize,
    j: usize,
    tags: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TableRecord {
    id: String,
    n: usize,
    tokens: Vec<String>,
    segment_cells: Vec<CellRecord>,
    edge_cells: Vec<CellRecord>,
}

impl TableRecord {
    fn build(sentence: &Sentence, seg: &SegmentTagTable, edge: &EdgeTagTable) -> Self {
        Self {
            id: sentence.id().to_string(),
            n: sentence.len(),
            tokens: sentence.tokens().to_vec(),
            segment_cells: seg
                .cells()
                .map(|(&(i, j), tags)| CellRecord {
                    i,
                    j,
                    tags: tags.iter().map(|t| t.to_string()).collect(),
                })
                .collect(),
            edge_cells: edge
                .cells()
                .map(|(&(i, j), tags)| CellRecord {
                    i,
                    j,
                    tags: tags.iter().map(|t| t.to_string()).collect(),
                })
                .collect(),
        }
    }

    fn tables(&self) -> Result<(Sentence, SegmentTagTable, EdgeTagTable), String> {
        if self.n != self.tokens.len() {
            return Err(format!(
                "record {}: n = {} but {} tokens",
                self.id,
                self.n,
                self.tokens.len()
            ));
        }
        let sentence = Sentence::new(self.id.clone(), self.tokens.clone())
            .map_err(|e| format!("record {}: {e}", self.id))?;
        let mut seg = SegmentTagTable::new(self.n);
        for cell in &self.segment_cells {
            if cell.i > cell.j || cell.j >= self.n {
                return Err(format!(
                    "record {}: segment cell ({},{}) out of range",
                    self.id, cell.i, cell.j
                ));
            }
            for tag in &cell.tags {
                let tag = SegmentTag::parse(tag)
                    .ok_or_else(|| format!("record {}: bad segment tag `{tag}`", self.id))?;
                seg.insert(cell.i, cell.j, tag);
            }
        }
        let mut edge = EdgeTagTable::new(self.n);
        for cell in &self.edge_cells {
            if cell.i >= self.n || cell.j >= self.n {
                return Err(format!(
                    "record {}: edge cell ({},{}) out of range",
                    self.id, cell.i, cell.j
                ));
            }
            for tag in &cell.tags {
                let tag = EdgeTag::parse(tag)
                    .ok_or_else(|| format!("record {}: bad edge tag `{tag}`", self.id))?;
                edge.insert(cell.i, cell.j, tag);
            }
        }
        Ok((sentence, seg, edge))
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_encode(args: EncodeArgs) -> Result<(), CliError> {
    let corpus = read_corpus(&args.input)?;
    let mut out = header("encode", &[("input", args.input.display().to_string())]);
    for (sentence, entities) in corpus.sentences() {
        let seg = encode_segment_table(sentence, entities)
            .map_err(|e| CliError::runtime(e.to_string()))?;
        let edge = encode_edge_table(sentence, entities)
            .map_err(|e| CliError::runtime(e.to_string()))?;
        let record = TableRecord::build(sentence, &seg, &edge);
        out.push_str(
            &serde_json::to_string(&record).map_err(|e| CliError::runtime(e.to_string()))?,
        );
        out.push('\n');
    }
    write_output(args.output.as_deref(), &out)
}

fn cmd_decode(args: DecodeArgs) -> Result<(), CliError> {
    let file = FileConfig::load()?;
    let threshold = parse_threshold(resolve(args.threshold, &file, "threshold", 0.5)?)?;
    let jobs: usize = resolve(args.jobs, &file, "jobs", 1)?;
    let strict = args.strict;

    // Per-sentence outcome, merged in input order.
    type Outcome = Result<(Sentence, Vec<Entity>, DecodeDiagnostics), String>;

    let mut head_entries = vec![
        ("threshold", format!("{}", threshold.value())),
        ("jobs", jobs.to_string()),
        ("strict", strict.to_string()),
    ];
    let outcomes: Vec<Outcome> = if let Some(tables_path) = &args.tables {
        head_entries.insert(0, ("tables", tables_path.display().to_string()));
        let text = fs::read_to_string(tables_path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", tables_path.display())))?;
        let lines: Vec<&str> = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .collect();
        let decode_line = |line: &&str| -> Outcome {
            let record: TableRecord =
                serde_json::from_str(line).map_err(|e| format!("bad record: {e}"))?;
            let (sentence, seg, edge) = record.tables()?;
            let (entities, diagnostics) =
                decode_sentence(&sentence, &seg, &edge).map_err(|e| e.to_string())?;
            Ok((sentence, entities, diagnostics))
        };
        if jobs > 1 {
            use rayon::prelude::*;
            thread_pool(jobs)?.install(|| lines.par_iter().map(decode_line).collect())
        } else {
            lines.iter().map(decode_line).collect()
        }
    } else if let Some(model_path) = &args.model {
        head_entries.insert(0, ("model", model_path.display().to_string()));
        let input = args
            .input
            .as_ref()
            .ok_or_else(|| CliError::usage("--model requires --input for the sentences"))?;
        head_entries.insert(1, ("input", input.display().to_string()));
        let scorer = read_scorer(model_path)?;
        let corpus = read_corpus(input)?;
        let predict = |pair: &(Sentence, Vec<Entity>)| -> Outcome {
            let (sentence, _) = pair;
            let (entities, diagnostics) = scorer
                .predict_entities(sentence, threshold)
                .map_err(|e| e.to_string())?;
            Ok((sentence.clone(), entities, diagnostics))
        };
        if jobs > 1 {
            use rayon::prelude::*;
            thread_pool(jobs)?.install(|| corpus.sentences().par_iter().map(predict).collect())
        } else {
            corpus.sentences().iter().map(predict).collect()
        }
    } else {
        return Err(CliError::usage("decode needs --tables or --model"));
    };

    let mut sentences = Vec::with_capacity(outcomes.len());
    let mut diagnostics = DecodeDiagnostics::default();
    let mut record_errors = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok((sentence, entities, diag)) => {
                diagnostics.merge(&diag);
                sentences.push((sentence, entities));
            }
            Err(message) => {
                if strict {
                    return Err(CliError::runtime(message));
                }
                eprintln!("decode: {message}");
                record_errors += 1;
            }
        }
    }

    // Infer the type inventory from the predictions for the #types header.
    let mut types: Vec<macgrid::entity::EntityType> = sentences
        .iter()
        .flat_map(|(_, es)| es.iter().map(|e| e.etype().clone()))
        .collect();
    types.sort();
    types.dedup();
    let corpus = Corpus::new(sentences, Split::Test, types);

    let mut out = header("decode", &head_entries);
    out.push_str(&write_inline(&corpus));
    eprintln!(
        "decode diagnostics: dropped_fragments={} rejected_cliques={} rejected_without_begin={} record_errors={}",
        diagnostics.dropped_fragments,
        diagnostics.rejected_cliques,
        diagnostics.rejected_without_begin,
        record_errors
    );
    write_output(args.output.as_deref(), &out)
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let file = FileConfig::load()?;
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        dim: resolve(args.dim, &file, "dim", defaults.dim)?,
        max_len: resolve(args.max_len, &file, "max_len", defaults.max_len)?,
        learning_rate: resolve(
            args.learning_rate,
            &file,
            "learning_rate",
            defaults.learning_rate,
        )?,
        epochs: resolve(args.epochs, &file, "epochs", defaults.epochs)?,
        batch_size: resolve(args.batch_size, &file, "batch_size", defaults.batch_size)?,
        seed: resolve(args.seed, &file, "seed", defaults.seed)?,
        use_cln: !args.no_cln,
        use_inner_lstm: !args.no_inner_lstm,
        use_length_embedding: !args.no_length_embedding,
        ..defaults
    };

    let train_corpus = read_corpus(&args.input)?;
    let dev_corpus = read_corpus(&args.dev)?;

    let mut out = header(
        "train",
        &[
            ("input", args.input.display().to_string()),
            ("dev", args.dev.display().to_string()),
            ("output", args.output.display().to_string()),
            ("dim", cfg.dim.to_string()),
            ("max_len", cfg.max_len.to_string()),
            ("learning_rate", format!("{}", cfg.learning_rate)),
            ("beta1", format!("{}", cfg.beta1)),
            ("beta2", format!("{}", cfg.beta2)),
            ("adam_eps", format!("{}", cfg.adam_eps)),
            ("epochs", cfg.epochs.to_string()),
            ("batch_size", cfg.batch_size.to_string()),
            ("seed", cfg.seed.to_string()),
            ("use_cln", cfg.use_cln.to_string()),
            ("use_inner_lstm", cfg.use_inner_lstm.to_string()),
            ("use_length_embedding", cfg.use_length_embedding.to_string()),
        ],
    );

    let outcome =
        train(&train_corpus, &dev_corpus, &cfg).map_err(|e| CliError::runtime(e.to_string()))?;
    for stats in &outcome.log {
        out.push_str(&format!(
            "epoch {} loss {:.6} dev_f1 {:.6}\n",
            stats.epoch, stats.loss, stats.dev_f1
        ));
    }
    let best = &outcome.log[outcome.best_epoch - 1];
    out.push_str(&format!(
        "best epoch {} dev_f1 {:.6}\n",
        outcome.best_epoch, best.dev_f1
    ));

    let ckpt = fs::File::create(&args.output)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", args.output.display())))?;
    outcome
        .scorer
        .save(std::io::BufWriter::new(ckpt))
        .map_err(|e| CliError::runtime(e.to_string()))?;

    write_output(None, &out)
}

#[derive(Serialize)]
struct EvalDocument<'a> {
    config: BTreeMap<&'static str, String>,
    report: &'a macgrid::metrics::EvalReport,
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let format = args.report.unwrap_or(ReportFormat::Text);
    let predictions = read_corpus(&args.input)?;
    let gold = read_corpus(&args.gold)?;
    if predictions.len() != gold.len() {
        return Err(CliError::runtime(format!(
            "prediction corpus has {} sentences, gold has {}",
            predictions.len(),
            gold.len()
        )));
    }
    let report = full_report(
        &predictions.gold(),
        &gold.gold(),
        BucketSpec::INTERVAL_DEFAULT,
        BucketSpec::SPAN_DEFAULT,
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;

    let config_entries = [
        ("input", args.input.display().to_string()),
        ("gold", args.gold.display().to_string()),
    ];
    let out = match format {
        ReportFormat::Text => {
            let mut out = header("eval", &config_entries);
            out.push_str(&report.to_string());
            out
        }
        ReportFormat::Json => {
            let document = EvalDocument {
                config: config_entries
                    .iter()
                    .map(|(k, v)| (*k, v.clone()))
                    .collect(),
                report: &report,
            };
            let mut out = serde_json::to_string_pretty(&document)
                .map_err(|e| CliError::runtime(e.to_string()))?;
            out.push('\n');
            out
        }
    };
    write_output(args.output.as_deref(), &out)
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let format = args.report.unwrap_or(ReportFormat::Text);
    let corpus = read_corpus(&args.input)?;
    let stats = corpus_stats(&corpus);
    let out = match format {
        ReportFormat::Text => {
            let mut out = header("stats", &[("input", args.input.display().to_string())]);
            out.push_str(&stats.to_string());
            out
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(&stats)
                .map_err(|e| CliError::runtime(e.to_string()))?;
            out.push('\n');
            out
        }
    };
    write_output(args.output.as_deref(), &out)
}

fn cmd_tune(args: TuneArgs) -> Result<(), CliError> {
    let grid: Vec<f64> = match &args.grid {
        Some(raw) => raw
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::usage(format!("bad grid value `{v}`")))
            })
            .collect::<Result<_, _>>()?,
        None => TrainConfig::default().threshold_grid,
    };
    let scorer = read_scorer(&args.model)?;
    let dev = read_corpus(&args.input)?;
    let (best, sweep) =
        tune_threshold(&scorer, &dev, &grid).map_err(|e| CliError::runtime(e.to_string()))?;

    let mut out = header(
        "tune",
        &[
            ("input", args.input.display().to_string()),
            ("model", args.model.display().to_string()),
            (
                "grid",
                sweep
                    .iter()
                    .map(|(t, _)| format!("{t}"))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
        ],
    );
    for (threshold, f1) in &sweep {
        out.push_str(&format!("threshold {threshold} f1 {f1:.6}\n"));
    }
    out.push_str(&format!("best_threshold {}\n", best.value()));
    write_output(args.output.as_deref(), &out)
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let file = FileConfig::load()?;
    let seed = resolve(args.seed, &file, "seed", 42)?;
    let mut spec = SynthSpec::standard(args.sentences.unwrap_or(100), seed);
    if let Some(vocab) = args.vocab {
        spec.vocab_size = vocab;
    }
    if let Some(max_len) = args.max_len {
        spec.max_len = max_len;
    }
    if let Some(max_mentions) = args.max_mentions {
        spec.max_mentions_per_sentence = max_mentions;
    }
    if let Some(types) = &args.types {
        spec.types = types.split(',').map(|t| t.trim().to_string()).collect();
    }
    let generated = generate_synthetic(&spec).map_err(|e| CliError::usage(e.to_string()))?;

    let mut out = header(
        "synth",
        &[
            ("sentences", spec.sentence_count.to_string()),
            ("seed", spec.seed.to_string()),
            ("vocab", spec.vocab_size.to_string()),
            ("max_len", spec.max_len.to_string()),
            ("max_mentions", spec.max_mentions_per_sentence.to_string()),
            ("types", spec.types.join(",")),
            ("mentions", generated.stats.mentions.to_string()),
            ("discontinuous", generated.stats.discontinuous.to_string()),
            (
                "patterns",
                generated
                    .stats
                    .pattern_counts
                    .iter()
                    .map(|(k, v)| format!("{k}:{v}"))
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
        ],
    );
    out.push_str(&write_inline(&generated.corpus));
    write_output(args.output.as_deref(), &out)
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let file = FileConfig::load()?;
    let reps: usize = resolve(args.reps, &file, "reps", 3)?.max(1);
    let jobs: usize = resolve(args.jobs, &file, "jobs", 1)?;
    let threshold = parse_threshold(resolve(args.threshold, &file, "threshold", 0.5)?)?;
    let corpus = read_corpus(&args.input)?;
    let count = corpus.len();

    let mut out = header(
        "bench",
        &[
            ("input", args.input.display().to_string()),
            ("sentences", count.to_string()),
            ("reps", reps.to_string()),
            ("jobs", jobs.to_string()),
        ],
    );

    // Decode-only: gold tables are prepared outside the timed region.
    let tables: Vec<(&Sentence, SegmentTagTable, EdgeTagTable)> = corpus
        .sentences()
        .iter()
        .map(|(sentence, entities)| {
            let seg = encode_segment_table(sentence, entities)
                .map_err(|e| CliError::runtime(e.to_string()))?;
            let edge = encode_edge_table(sentence, entities)
                .map_err(|e| CliError::runtime(e.to_string()))?;
            Ok((sentence, seg, edge))
        })
        .collect::<Result<_, CliError>>()?;

    let decode_pass = |jobs: usize| -> Result<usize, CliError> {
        if jobs > 1 {
            use rayon::prelude::*;
            Ok(thread_pool(jobs)?.install(|| {
                tables
                    .par_iter()
                    .map(|(sentence, seg, edge)| {
                        decode_sentence(sentence, seg, edge).expect("aligned").0.len()
                    })
                    .sum()
            }))
        } else {
            let mut total = 0usize;
            for (sentence, seg, edge) in &tables {
                total += decode_sentence(sentence, seg, edge).expect("aligned").0.len();
            }
            Ok(total)
        }
    };

    let time_passes = |label: &str,
                       out: &mut String,
                       f: &dyn Fn() -> Result<usize, CliError>|
     -> Result<(), CliError> {
        f()?; // warmup
        let mut timings = Vec::with_capacity(reps);
        for _ in 0..reps {
            let start = Instant::now();
            f()?;
            timings.push(start.elapsed().as_secs_f64());
        }
        timings.sort_by(f64::total_cmp);
        let median = timings[timings.len() / 2];
        let rate = if median > 0.0 {
            count as f64 / median
        } else {
            0.0
        };
        out.push_str(&format!("{label}_median_s {median:.6}\n"));
        out.push_str(&format!("{label}_sen_per_s {rate:.1}\n"));
        Ok(())
    };

    if count == 0 {
        out.push_str("decode_only_median_s 0.000000\ndecode_only_sen_per_s 0.0\n");
    } else {
        time_passes("decode_only", &mut out, &|| decode_pass(jobs))?;
    }

    if let Some(model_path) = &args.model {
        let scorer = read_scorer(model_path)?;
        let predict_pass = || -> Result<usize, CliError> {
            let mut total = 0usize;
            for (sentence, _) in corpus.sentences() {
                let (entities, _) = scorer
                    .predict_entities(sentence, threshold)
                    .map_err(|e| CliError::runtime(e.to_string()))?;
                total += entities.len();
            }
            Ok(total)
        };
        if count == 0 {
            out.push_str("predict_decode_median_s 0.000000\npredict_decode_sen_per_s 0.0\n");
        } else {
            time_passes("predict_decode", &mut out, &predict_pass)?;
        }
    }

    write_output(None, &out)
}
