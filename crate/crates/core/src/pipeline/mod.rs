//! Dataset generation: query templates are instantiated per stream, matched
//! and explained on sampled windows, and packaged as line-delimited JSON
//! tuples.

mod template;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use template::{
    default_templates, instantiate_templates, load_templates, Hole, HoleKind, HoleValue, QueryTemplate, DEFAULT_TEMPLATES,
};

use crate::explain::{frame_references, linearize_all, Explainer, SentenceTemplates};
use crate::lang::{parse, Category, ParseError, Query};
use crate::matcher::{compile, match_window, DomainPolicy, MatchError, MatchSet, MatcherConfig};
use crate::stream::{sample_windows, PerceptionStream, SampleError, WindowSample};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("template `{id}`: {message}")]
    Template { id: String, message: String },
    #[error("template `{template}`: hole `{hole}` has no admissible value")]
    EmptyHoleDomain { template: String, hole: String },
    #[error("template `{id}` produced unparseable query `{spre}`: {source}")]
    Parse { id: String, spre: String, source: ParseError },
    #[error("stream `{stream}`: {source}")]
    Sample { stream: String, source: SampleError },
    #[error("query `{query}` on {stream}@{offset}: {source}")]
    Match { query: String, stream: String, offset: usize, source: MatchError },
    #[error("tuple for query `{query}` on {stream}@{offset} failed verification: {reason}")]
    Verification { query: String, stream: String, offset: usize, reason: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Json { path: String, line: usize, message: String },
}

/// Where a tuple came from and how it was matched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleMeta {
    pub template_id: String,
    pub query_id: String,
    pub category: Category,
    pub window_length: usize,
    pub source_stream: String,
    pub offset: usize,
    pub domain_policy: DomainPolicy,
    pub maximal_only: bool,
    pub distance_scale: f64,
    pub seed: u64,
}

/// One training example: query text, query, window, matches and
/// explanation sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetTuple {
    pub schema_version: u32,
    /// Hex digest of the tuple's content.
    pub id: String,
    pub query_nl: String,
    pub query_spre: String,
    pub window: WindowSample,
    /// Inclusive `[start, end]` frame positions.
    pub matches: Vec<(usize, usize)>,
    pub matched_frames: Vec<usize>,
    pub sentences: Vec<String>,
    pub meta: TupleMeta,
}

impl DatasetTuple {
    pub fn matched_frame_set(&self) -> BTreeSet<usize> {
        self.matched_frames.iter().copied().collect()
    }

    fn content_id(&self) -> String {
        let mut probe = self.clone();
        probe.id.clear();
        let bytes = serde_json::to_vec(&probe).expect("tuples serialize");
        hex::encode(&Sha256::digest(&bytes)[..16])
    }
}

/// Mixes a seed with labels into a new seed.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

pub fn package_tuple(
    query: &Query,
    template_id: &str,
    window: &WindowSample,
    set: &MatchSet,
    sentences: Vec<String>,
    config: &MatcherConfig,
    seed: u64,
) -> DatasetTuple {
    let mut t = DatasetTuple {
        schema_version: SCHEMA_VERSION,
        id: String::new(),
        query_nl: query.nl_text.clone(),
        query_spre: query.spre.clone(),
        window: window.clone(),
        matches: set.intervals(),
        matched_frames: set.matched_frames.iter().copied().collect(),
        sentences,
        meta: TupleMeta {
            template_id: template_id.to_string(),
            query_id: query.id.clone(),
            category: query.category,
            window_length: window.len(),
            source_stream: window.source_stream_id.clone(),
            offset: window.offset,
            domain_policy: config.policy,
            maximal_only: config.maximal_only,
            distance_scale: config.distance_scale,
            seed,
        },
    };
    t.id = t.content_id();
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub lengths: Vec<usize>,
    pub per_length: usize,
    pub seed: u64,
    /// Queries drawn per window; `None` uses every template.
    pub queries_per_window: Option<usize>,
    pub matcher: MatcherConfig,
    pub sentences: SentenceTemplates,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            lengths: vec![1, 2, 4, 6, 8, 10, 12, 14, 16],
            per_length: 1,
            seed: 0,
            queries_per_window: None,
            matcher: MatcherConfig { witnesses: false, ..MatcherConfig::default() },
            sentences: SentenceTemplates::default(),
        }
    }
}

impl GenerationConfig {
    pub fn queries_used(&self, templates: usize) -> usize {
        self.queries_per_window.map_or(templates, |q| q.min(templates))
    }

    /// Closed-form tuple count for `streams` streams.
    pub fn expected_count(&self, streams: usize, templates: usize) -> usize {
        streams * self.lengths.len() * self.per_length * self.queries_used(templates)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub tuples: usize,
    pub expected: usize,
    pub streams: usize,
    pub windows: usize,
    pub positives: usize,
    pub negatives: usize,
    pub per_category: BTreeMap<Category, usize>,
    pub per_length: BTreeMap<usize, usize>,
    pub per_template: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditReport>,
}

impl GenerationReport {
    pub fn add(&mut self, t: &DatasetTuple) {
        self.tuples += 1;
        if t.matches.is_empty() {
            self.negatives += 1;
        } else {
            self.positives += 1;
        }
        *self.per_category.entry(t.meta.category).or_default() += 1;
        *self.per_length.entry(t.meta.window_length).or_default() += 1;
        *self.per_template.entry(t.meta.template_id.clone()).or_default() += 1;
    }

    pub fn merge(&mut self, other: GenerationReport) {
        self.tuples += other.tuples;
        self.expected += other.expected;
        self.streams += other.streams;
        self.windows += other.windows;
        self.positives += other.positives;
        self.negatives += other.negatives;
        for (k, v) in other.per_category {
            *self.per_category.entry(k).or_default() += v;
        }
        for (k, v) in other.per_length {
            *self.per_length.entry(k).or_default() += v;
        }
        for (k, v) in other.per_template {
            *self.per_template.entry(k).or_default() += v;
        }
    }
}

fn tuple_for(
    query: &Query,
    template_id: &str,
    window: &WindowSample,
    config: &GenerationConfig,
) -> Result<DatasetTuple, PipelineError> {
    let at = |source| PipelineError::Match {
        query: query.spre.clone(),
        stream: window.source_stream_id.clone(),
        offset: window.offset,
        source,
    };
    let fail = |reason: String| PipelineError::Verification {
        query: query.spre.clone(),
        stream: window.source_stream_id.clone(),
        offset: window.offset,
        reason,
    };
    let cp = compile(&query.pattern);
    let set = match_window(&cp, window, &config.matcher).map_err(at)?;

    // Sentences come from the maximal matches: every matched frame lies in
    // one of them, and contained matches would only repeat their events.
    let mut explainer = Explainer::new(&query.pattern, window, &config.matcher, &config.sentences);
    let mut explanations = Vec::new();
    for m in &set.maximal_only().matches {
        let e = explainer.explain(m).map_err(at)?;
        if !e.is_faithful(window, &config.matcher) {
            return Err(fail(format!("explanation of {}..={} cites a false event", m.start, m.end)));
        }
        explanations.push(e);
    }
    let sentences = linearize_all(&explanations, &config.sentences);
    let cited: BTreeSet<usize> = sentences.iter().flat_map(|s| frame_references(s)).collect();
    if cited != set.matched_frames {
        return Err(fail(format!("sentences cite frames {cited:?} but matched frames are {:?}", set.matched_frames)));
    }
    Ok(package_tuple(query, template_id, window, &set, sentences, &config.matcher, config.seed))
}

/// All tuples for one stream, sorted by id.
pub fn generate_stream(
    stream: &PerceptionStream,
    templates: &[QueryTemplate],
    config: &GenerationConfig,
) -> Result<Vec<DatasetTuple>, PipelineError> {
    let id = stream.stream_id.as_str();
    let queries = instantiate_templates(templates, &stream.class_vocabulary, derive_seed(config.seed, &[id, "queries"]))?;
    let windows = sample_windows(stream, &config.lengths, config.per_length, derive_seed(config.seed, &[id, "windows"]))
        .map_err(|source| PipelineError::Sample { stream: id.to_string(), source })?;
    let q = config.queries_used(queries.len());
    let per_window: Vec<Vec<DatasetTuple>> = windows
        .par_iter()
        .map(|w| {
            let mut chosen: Vec<usize> = if q == queries.len() {
                (0..q).collect()
            } else {
                let seed = derive_seed(config.seed, &[id, &w.length.to_string(), &w.offset.to_string()]);
                index::sample(&mut ChaCha8Rng::seed_from_u64(seed), queries.len(), q).into_vec()
            };
            chosen.sort_unstable();
            chosen.into_iter().map(|i| tuple_for(&queries[i], &templates[i].id, w, config)).collect()
        })
        .collect::<Result<_, _>>()?;
    let mut out: Vec<DatasetTuple> = per_window.into_iter().flatten().collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

/// All tuples for all streams, sorted by id.
pub fn generate_tuples(
    streams: &[PerceptionStream],
    templates: &[QueryTemplate],
    config: &GenerationConfig,
) -> Result<Vec<DatasetTuple>, PipelineError> {
    let parts: Vec<Vec<DatasetTuple>> =
        streams.par_iter().map(|s| generate_stream(s, templates, config)).collect::<Result<_, _>>()?;
    let mut out: Vec<DatasetTuple> = parts.into_iter().flatten().collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

pub fn report_for(tuples: &[DatasetTuple], streams: usize, templates: usize, config: &GenerationConfig) -> GenerationReport {
    let mut r = GenerationReport {
        expected: config.expected_count(streams, templates),
        streams,
        windows: streams * config.lengths.len() * config.per_length,
        ..Default::default()
    };
    for t in tuples {
        r.add(t);
    }
    r
}

/// Generates, writes one tuple per line to `out`, then audits the result.
/// Fails if the count differs from the closed form or the audit finds a
/// mismatch.
pub fn generate_dataset(
    streams: &[PerceptionStream],
    templates: &[QueryTemplate],
    config: &GenerationConfig,
    out: &Path,
) -> Result<GenerationReport, PipelineError> {
    let tuples = generate_tuples(streams, templates, config)?;
    write_tuples(out, &tuples)?;
    let mut report = report_for(&tuples, streams.len(), templates.len(), config);
    let audit = audit(&tuples);
    if report.tuples != report.expected {
        return Err(PipelineError::Verification {
            query: String::new(),
            stream: String::new(),
            offset: 0,
            reason: format!("generated {} tuples, expected {}", report.tuples, report.expected),
        });
    }
    if let Some(f) = audit.failures.first() {
        return Err(PipelineError::Verification {
            query: f.id.clone(),
            stream: String::new(),
            offset: 0,
            reason: format!("audit: {} ({} failures)", f.reason, audit.failures.len()),
        });
    }
    report.audit = Some(audit);
    Ok(report)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.display().to_string(), source }
}

pub fn write_tuples(path: &Path, tuples: &[DatasetTuple]) -> Result<(), PipelineError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for t in tuples {
        serde_json::to_writer(&mut w, t).expect("tuples serialize");
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_tuples(path: &Path) -> Result<Vec<DatasetTuple>, PipelineError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let t = serde_json::from_str(&line).map_err(|e| PipelineError::Json {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(t);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditFailure {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checked: usize,
    pub failures: Vec<AuditFailure>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Re-parses and re-matches one tuple from its stored text.
pub fn audit_tuple(t: &DatasetTuple) -> Result<(), String> {
    let p = parse(&t.query_spre).map_err(|e| format!("query does not parse: {e}"))?;
    let config = MatcherConfig {
        policy: t.meta.domain_policy,
        maximal_only: t.meta.maximal_only,
        distance_scale: t.meta.distance_scale,
        witnesses: false,
        ..MatcherConfig::default()
    };
    let set = match_window(&compile(&p), &t.window, &config).map_err(|e| e.to_string())?;
    if set.intervals() != t.matches {
        return Err(format!("stored matches {:?}, re-match gives {:?}", t.matches, set.intervals()));
    }
    if set.matched_frames != t.matched_frame_set() {
        return Err("matched frames differ".into());
    }
    if t.id != t.content_id() {
        return Err("id does not match content".into());
    }
    Ok(())
}

pub fn audit(tuples: &[DatasetTuple]) -> AuditReport {
    let failures = tuples
        .par_iter()
        .filter_map(|t| audit_tuple(t).err().map(|reason| AuditFailure { id: t.id.clone(), reason }))
        .collect();
    AuditReport { checked: tuples.len(), failures }
}
