//! `spregen`: validate, match, explain, generate and evaluate from the
//! command line.
//!
//! Every flag except the subcommand may also come from a TOML config file
//! (`--config` or `SPREGEN_CONFIG`); flags given on the command line win.
//! Exit status is 0 on success, 1 on data or validation failure and 2 on
//! usage errors.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use spregen_core::explain::{linearize_all, Explainer, SentenceTemplates};
use spregen_core::lang::{parse, validate_pattern, Pattern};
use spregen_core::matcher::{compile, match_window, DomainPolicy, MatcherConfig};
use spregen_core::metrics::{evaluate_run, read_predictions, EvalConfig, RewardWeights, TokenOverlap};
use spregen_core::pipeline::{default_templates, generate_dataset, load_templates, read_tuples, GenerationConfig};
use spregen_core::stream::{adapt_records, load_stream, parse_records, validate_stream, AdapterOptions, PerceptionStream, WindowSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Text,
}

#[derive(Parser, Debug)]
#[command(name = "spregen", version, about = "Quantified spatial regular expressions over perception streams")]
struct Cli {
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true, env = "SPREGEN_CONFIG")]
    config: Option<PathBuf>,
    /// Output format [default: json].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a query against a vocabulary, or a stream file, or both.
    Validate(ValidateArgs),
    /// Print the matches of a query on a stream.
    Match(MatchArgs),
    /// Print explanations and sentences for every match.
    Explain(MatchArgs),
    /// Build a dataset of tuples from streams and templates.
    Generate(GenerateArgs),
    /// Score model responses against a dataset.
    Evaluate(EvaluateArgs),
    /// Convert line-delimited detection records into stream files.
    Adapt(AdaptArgs),
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("q").args(["query", "query_file"]).multiple(false)))]
struct QueryArgs {
    /// Query text.
    #[arg(long)]
    query: Option<String>,
    /// File holding the query text.
    #[arg(long)]
    query_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MatcherArgs {
    /// Quantifier domain: window-wide or anchor-frame.
    #[arg(long)]
    policy: Option<DomainPolicy>,
    /// Keep only matches not contained in another.
    #[arg(long)]
    maximal_only: bool,
    /// Maximum quantifier bindings per window [default: 10000].
    #[arg(long)]
    budget: Option<usize>,
    /// Annotation units per threshold unit [default: 1].
    #[arg(long)]
    distance_scale: Option<f64>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Stream file to validate; its classes form the vocabulary.
    #[arg(long)]
    stream: Option<PathBuf>,
    /// Comma-separated class vocabulary.
    #[arg(long, value_delimiter = ',')]
    vocab: Vec<String>,
}

#[derive(Args, Debug)]
struct MatchArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Stream file.
    #[arg(long)]
    stream: PathBuf,
    /// First frame position of the window [default: 0].
    #[arg(long)]
    offset: Option<usize>,
    /// Window length [default: rest of the stream].
    #[arg(long)]
    length: Option<usize>,
    #[command(flatten)]
    matcher: MatcherArgs,
    /// JSON file overriding sentence templates.
    #[arg(long)]
    sentences: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Glob selecting stream files.
    #[arg(long)]
    streams: Option<String>,
    /// Comma-separated window lengths [default: 1,2,4,6,8,10,12,14,16].
    #[arg(long, value_delimiter = ',')]
    lengths: Vec<usize>,
    /// Windows per length and stream [default: 1].
    #[arg(long)]
    per_length: Option<usize>,
    /// Queries drawn per window [default: all templates].
    #[arg(long)]
    queries_per_window: Option<usize>,
    /// Query template file [default: the shipped templates].
    #[arg(long)]
    templates: Option<PathBuf>,
    /// JSON file overriding sentence templates.
    #[arg(long)]
    sentences: Option<PathBuf>,
    /// Generator seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the generation report [default: stdout].
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    matcher: MatcherArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Line-delimited {"id", "response"} objects.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Dataset file the predictions answer.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// TOML or JSON file of reward weights.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Include per-tuple scores in JSON output.
    #[arg(long)]
    scores: bool,
}

#[derive(Args, Debug)]
struct AdaptArgs {
    /// Line-delimited detection records.
    #[arg(long)]
    records: PathBuf,
    /// Directory receiving one `<stream>.json` per stream.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Keep only the last dot-separated part of each category.
    #[arg(long)]
    strip_category_prefix: bool,
    /// Boxes are `[x, y, width, height]`.
    #[arg(long)]
    xywh: bool,
}

/// Keys accepted in the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    format: Option<Format>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    seed: Option<u64>,
    policy: Option<DomainPolicy>,
    maximal_only: Option<bool>,
    budget: Option<usize>,
    distance_scale: Option<f64>,
    streams: Option<String>,
    lengths: Option<Vec<usize>>,
    per_length: Option<usize>,
    queries_per_window: Option<usize>,
    templates: Option<PathBuf>,
    sentences: Option<PathBuf>,
    report: Option<PathBuf>,
    predictions: Option<PathBuf>,
    gold: Option<PathBuf>,
    weights: Option<PathBuf>,
}

struct Ctx {
    file: FileConfig,
    format: Format,
    out: Option<PathBuf>,
}

impl Ctx {
    fn emit(&self, json: &impl Serialize, text: impl FnOnce() -> String) -> Result<()> {
        let body = match self.format {
            Format::Json => serde_json::to_string_pretty(json)? + "\n",
            Format::Text => text(),
        };
        write_output(self.out.as_deref(), &body)
    }

    fn matcher(&self, a: &MatcherArgs) -> MatcherConfig {
        let d = MatcherConfig::default();
        MatcherConfig {
            policy: a.policy.or(self.file.policy).unwrap_or(d.policy),
            maximal_only: a.maximal_only || self.file.maximal_only.unwrap_or(false),
            budget: a.budget.or(self.file.budget).unwrap_or(d.budget),
            distance_scale: a.distance_scale.or(self.file.distance_scale).unwrap_or(d.distance_scale),
            ..d
        }
    }

    fn sentences(&self, flag: &Option<PathBuf>) -> Result<SentenceTemplates> {
        match flag.as_ref().or(self.file.sentences.as_ref()) {
            Some(p) => Ok(serde_json::from_str(&read(p)?).with_context(|| format!("{}: bad sentence templates", p.display()))?),
            None => Ok(SentenceTemplates::default()),
        }
    }
}

fn write_output(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, body).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn query_text(q: &QueryArgs) -> Result<String> {
    match (&q.query, &q.query_file) {
        (Some(t), _) => Ok(t.clone()),
        (None, Some(p)) => Ok(read(p)?.trim().to_string()),
        (None, None) => bail!("a query is required (--query or --query-file)"),
    }
}

fn parse_query(text: &str) -> Result<Pattern> {
    parse(text).map_err(|e| anyhow!("{e}\n  {text}\n  {:>width$}", "^", width = e.pos + 1))
}

fn window_of(stream: &PerceptionStream, offset: Option<usize>, length: Option<usize>) -> Result<WindowSample> {
    let offset = offset.unwrap_or(0);
    if offset > stream.len() {
        bail!("offset {offset} is past the end of a {}-frame stream", stream.len());
    }
    let length = length.unwrap_or(stream.len() - offset);
    if offset + length > stream.len() {
        bail!("window {offset}+{length} exceeds the {}-frame stream", stream.len());
    }
    Ok(stream.window(offset, length))
}

fn load(path: &Path) -> Result<PerceptionStream> {
    load_stream(path).with_context(|| format!("cannot load stream {}", path.display()))
}

/// Returns whether everything checked was valid.
fn validate(ctx: &Ctx, a: &ValidateArgs) -> Result<bool> {
    #[derive(Serialize)]
    struct Out {
        valid: bool,
        stream: Vec<String>,
        query: Vec<String>,
    }
    let mut out = Out { valid: true, stream: vec![], query: vec![] };
    let mut vocab: BTreeSet<String> = a.vocab.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if let Some(p) = &a.stream {
        let text = read(p)?;
        match serde_json::from_str::<PerceptionStream>(&text) {
            Ok(s) => {
                out.stream = validate_stream(&s).violations.iter().map(|v| v.to_string()).collect();
                vocab.extend(s.class_vocabulary);
            }
            Err(e) => out.stream.push(format!("not a stream document: {e}")),
        }
    }
    if a.query.query.is_some() || a.query.query_file.is_some() {
        let text = query_text(&a.query)?;
        match parse(&text) {
            Ok(p) if vocab.is_empty() => {
                out.query = validate_pattern(&p, &p.classes().into_iter().map(String::from).collect())
                    .iter()
                    .map(|v| v.to_string())
                    .collect()
            }
            Ok(p) => out.query = validate_pattern(&p, &vocab).iter().map(|v| v.to_string()).collect(),
            Err(e) => out.query.push(e.to_string()),
        }
    } else if a.stream.is_none() {
        bail!("nothing to validate: give --query, --query-file or --stream");
    }
    out.valid = out.stream.is_empty() && out.query.is_empty();
    let valid = out.valid;
    ctx.emit(&out, || {
        let mut s = String::new();
        for v in out.stream.iter().map(|v| format!("stream: {v}")).chain(out.query.iter().map(|v| format!("query: {v}"))) {
            s += &v;
            s.push('\n');
        }
        if valid {
            s += "ok\n";
        }
        s
    })?;
    Ok(valid)
}

fn run_match(ctx: &Ctx, a: &MatchArgs, explain: bool) -> Result<()> {
    let pattern = parse_query(&query_text(&a.query)?)?;
    let stream = load(&a.stream)?;
    let window = window_of(&stream, a.offset, a.length)?;
    let config = ctx.matcher(&a.matcher);
    let set = match_window(&compile(&pattern), &window, &config)?;
    if !explain {
        return ctx.emit(&set, || {
            let mut s = String::new();
            for m in &set.matches {
                s += &format!("{}..={}\n", m.start, m.end);
            }
            s + &format!("matched frames: {:?}\n", set.matched_frames)
        });
    }
    let templates = ctx.sentences(&a.sentences)?;
    let mut explainer = Explainer::new(&pattern, &window, &config, &templates);
    let explanations = set.matches.iter().map(|m| explainer.explain(m)).collect::<Result<Vec<_>, _>>()?;
    let sentences = linearize_all(&explanations, &templates);
    #[derive(Serialize)]
    struct Out<'a, E> {
        matched_frames: &'a BTreeSet<usize>,
        explanations: E,
        sentences: &'a [String],
    }
    let out = Out { matched_frames: &set.matched_frames, explanations: &explanations, sentences: &sentences };
    ctx.emit(&out, || sentences.iter().map(|s| format!("{s}\n")).collect())
}

fn generate(ctx: &Ctx, a: &GenerateArgs) -> Result<()> {
    let f = &ctx.file;
    let pattern = a.streams.clone().or_else(|| f.streams.clone()).ok_or_else(|| anyhow!("--streams is required"))?;
    let out = ctx.out.clone().ok_or_else(|| anyhow!("--out is required for generate"))?;
    let templates = match a.templates.as_ref().or(f.templates.as_ref()) {
        Some(p) => load_templates(&read(p)?).with_context(|| format!("bad template file {}", p.display()))?,
        None => default_templates(),
    };
    let mut paths: Vec<PathBuf> = glob::glob(&pattern)
        .with_context(|| format!("bad glob `{pattern}`"))?
        .collect::<Result<_, _>>()?;
    paths.sort();
    if paths.is_empty() {
        bail!("no stream files match `{pattern}`");
    }
    let streams = paths.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
    log::info!("loaded {} streams", streams.len());
    let d = GenerationConfig::default();
    let config = GenerationConfig {
        lengths: if a.lengths.is_empty() { f.lengths.clone().unwrap_or(d.lengths) } else { a.lengths.clone() },
        per_length: a.per_length.or(f.per_length).unwrap_or(d.per_length),
        seed: a.seed.or(f.seed).unwrap_or(d.seed),
        queries_per_window: a.queries_per_window.or(f.queries_per_window),
        matcher: MatcherConfig { witnesses: false, ..ctx.matcher(&a.matcher) },
        sentences: ctx.sentences(&a.sentences)?,
    };
    let report = generate_dataset(&streams, &templates, &config, &out)?;
    log::info!("wrote {} tuples to {}", report.tuples, out.display());
    let body = match ctx.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Text => {
            let mut s = format!("tuples: {} (expected {})\npositives: {}  negatives: {}\n", report.tuples, report.expected, report.positives, report.negatives);
            for (c, n) in &report.per_category {
                s += &format!("  {c:<12}{n}\n");
            }
            for (l, n) in &report.per_length {
                s += &format!("  length {l:<5}{n}\n");
            }
            if let Some(au) = &report.audit {
                s += &format!("audit: {} checked, {} failures\n", au.checked, au.failures.len());
            }
            s
        }
    };
    write_output(a.report.as_deref().or(f.report.as_deref()), &body)
}

fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    let f = &ctx.file;
    let preds = a.predictions.as_ref().or(f.predictions.as_ref()).ok_or_else(|| anyhow!("--predictions is required"))?;
    let gold = a.gold.as_ref().or(f.gold.as_ref()).ok_or_else(|| anyhow!("--gold is required"))?;
    let mut config = EvalConfig::default();
    if let Some(p) = a.weights.as_ref().or(f.weights.as_ref()) {
        let text = read(p)?;
        config.weights = if p.extension().is_some_and(|e| e == "json") {
            serde_json::from_str::<RewardWeights>(&text).with_context(|| format!("bad weights in {}", p.display()))?
        } else {
            toml::from_str::<RewardWeights>(&text).with_context(|| format!("bad weights in {}", p.display()))?
        };
    }
    let predictions = read_predictions(preds)?;
    let gold = read_tuples(gold)?;
    let mut report = evaluate_run(&predictions, &gold, &config, &TokenOverlap);
    if !report.missing.is_empty() {
        log::warn!("{} gold tuples have no prediction; scored as unparseable", report.missing.len());
    }
    if !report.unknown.is_empty() {
        log::warn!("{} predictions have ids not in the gold file", report.unknown.len());
    }
    if !a.scores {
        report.scores.clear();
    }
    ctx.emit(&report, || report.render_text())
}

fn adapt(ctx: &Ctx, a: &AdaptArgs) -> Result<()> {
    let records = parse_records(&read(&a.records)?).with_context(|| format!("in {}", a.records.display()))?;
    let opts = AdapterOptions { strip_category_prefix: a.strip_category_prefix, xywh: a.xywh, ..Default::default() };
    let streams = adapt_records(&records, &opts)?;
    match &a.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            let mut written = Vec::new();
            for s in &streams {
                let path = dir.join(format!("{}.json", s.stream_id.replace(['/', '\\'], "__")));
                fs::write(&path, s.to_json()).with_context(|| format!("cannot write {}", path.display()))?;
                written.push(path.display().to_string());
            }
            ctx.emit(&written, || written.iter().map(|p| format!("{p}\n")).collect())
        }
        None => ctx.emit(&streams, || streams.iter().map(|s| s.to_json() + "\n").collect()),
    }
}

fn run(cli: Cli) -> Result<bool> {
    let file: FileConfig = match &cli.config {
        Some(p) => toml::from_str(&read(p)?).with_context(|| format!("bad config file {}", p.display()))?,
        None => FileConfig::default(),
    };
    if let Some(j) = cli.jobs.or(file.jobs) {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("cannot size the worker pool")?;
    }
    let ctx = Ctx {
        format: cli.format.or(file.format).unwrap_or(Format::Json),
        out: cli.out.clone().or_else(|| file.out.clone()),
        file,
    };
    match &cli.command {
        Command::Validate(a) => return validate(&ctx, a),
        Command::Match(a) => run_match(&ctx, a, false)?,
        Command::Explain(a) => run_match(&ctx, a, true)?,
        Command::Generate(a) => generate(&ctx, a)?,
        Command::Evaluate(a) => evaluate(&ctx, a)?,
        Command::Adapt(a) => adapt(&ctx, a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
