use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{frame_f1, parse_response, reward, segment_f1, FrameMetrics, RewardBreakdown, RewardWeights, ResponseFormat, SimilarityScorer};
use crate::lang::Category;
use crate::pipeline::{DatasetTuple, PipelineError};

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub response: String,
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, PipelineError> {
    let io = |source| PipelineError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| PipelineError::Json {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub weights: RewardWeights,
    pub format: ResponseFormat,
    pub segment_threshold: f64,
    /// Length columns of the per-length table.
    pub table_lengths: Vec<usize>,
    /// Lengths averaged in the per-category table.
    pub category_lengths: Vec<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            weights: RewardWeights::default(),
            format: ResponseFormat::default(),
            segment_threshold: 0.5,
            table_lengths: vec![4, 8, 12, 16],
            category_lengths: vec![8, 12, 16],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleScore {
    pub id: String,
    pub length: usize,
    pub category: Category,
    pub parseable: bool,
    pub frame: FrameMetrics,
    pub segment_f1: f64,
    pub segment_map: f64,
    pub reward: RewardBreakdown,
}

/// Averages over a group of tuples; `None` when the group is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub label: String,
    pub n: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1_frame: Option<f64>,
    pub exact_match: Option<f64>,
    pub f1_segment: Option<f64>,
    pub segment_map: Option<f64>,
    pub reward: Option<f64>,
}

impl Bucket {
    fn of(label: String, scores: &[&TupleScore]) -> Bucket {
        let n = scores.len();
        let mean = |f: &dyn Fn(&TupleScore) -> f64| (n > 0).then(|| scores.iter().map(|s| f(s)).sum::<f64>() / n as f64);
        Bucket {
            label,
            n,
            precision: mean(&|s| s.frame.precision),
            recall: mean(&|s| s.frame.recall),
            f1_frame: mean(&|s| s.frame.f1),
            exact_match: mean(&|s| s.frame.exact_match),
            f1_segment: mean(&|s| s.segment_f1),
            segment_map: mean(&|s| s.segment_map),
            reward: mean(&|s| s.reward.total),
        }
    }
}

/// Per-category precision, recall, F1 and EM: the mean over the
/// configured lengths of each length's mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: Category,
    pub n: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub exact_match: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tuples: usize,
    /// Gold ids without a prediction; scored as unparseable.
    pub missing: Vec<String>,
    /// Prediction ids absent from the gold file; ignored.
    pub unknown: Vec<String>,
    pub unparseable: usize,
    /// Configured length columns followed by "Overall" over all tuples.
    pub by_target_length: Vec<Bucket>,
    /// Every length present in the gold file.
    pub by_length: Vec<Bucket>,
    pub by_category: Vec<CategoryRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub scores: Vec<TupleScore>,
}

pub fn evaluate_run(
    predictions: &[PredictionRecord],
    gold: &[DatasetTuple],
    config: &EvalConfig,
    scorer: &dyn SimilarityScorer,
) -> EvalReport {
    let by_id: BTreeMap<&str, &PredictionRecord> = predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    let gold_ids: BTreeSet<&str> = gold.iter().map(|t| t.id.as_str()).collect();
    let unknown = by_id.keys().filter(|id| !gold_ids.contains(*id)).map(|s| s.to_string()).collect();
    let missing = gold.iter().filter(|t| !by_id.contains_key(t.id.as_str())).map(|t| t.id.clone()).collect();

    let scores: Vec<TupleScore> = gold
        .par_iter()
        .map(|t| {
            let raw = by_id.get(t.id.as_str()).map_or("", |p| p.response.as_str());
            let pred = parse_response(&t.id, raw, &config.format);
            let r = reward(&pred, t, &config.weights, scorer);
            let (frame, seg_f1, seg_map) = match &pred.parsed_frames {
                Some(f) => {
                    let g = t.matched_frame_set();
                    let s = segment_f1(f, &g, config.segment_threshold);
                    (frame_f1(f, &g), s.f1, s.map)
                }
                None => (FrameMetrics::ZERO, 0.0, 0.0),
            };
            TupleScore {
                id: t.id.clone(),
                length: t.meta.window_length,
                category: t.meta.category,
                parseable: pred.is_parseable(),
                frame,
                segment_f1: seg_f1,
                segment_map: seg_map,
                reward: r,
            }
        })
        .collect();

    let all: Vec<&TupleScore> = scores.iter().collect();
    let with_len = |l: usize| -> Vec<&TupleScore> { scores.iter().filter(|s| s.length == l).collect() };
    let mut by_target_length: Vec<Bucket> = config.table_lengths.iter().map(|&l| Bucket::of(l.to_string(), &with_len(l))).collect();
    by_target_length.push(Bucket::of("Overall".into(), &all));
    let lengths: BTreeSet<usize> = scores.iter().map(|s| s.length).collect();
    let by_length = lengths.iter().map(|&l| Bucket::of(l.to_string(), &with_len(l))).collect();

    let by_category = Category::ALL
        .iter()
        .map(|&c| {
            let per_len: Vec<Bucket> = config
                .category_lengths
                .iter()
                .map(|&l| {
                    let group: Vec<&TupleScore> = scores.iter().filter(|s| s.category == c && s.length == l).collect();
                    Bucket::of(String::new(), &group)
                })
                .filter(|b| b.n > 0)
                .collect();
            let avg = |f: &dyn Fn(&Bucket) -> Option<f64>| {
                (!per_len.is_empty()).then(|| per_len.iter().filter_map(f).sum::<f64>() / per_len.len() as f64)
            };
            CategoryRow {
                category: c,
                n: per_len.iter().map(|b| b.n).sum(),
                precision: avg(&|b| b.precision),
                recall: avg(&|b| b.recall),
                f1: avg(&|b| b.f1_frame),
                exact_match: avg(&|b| b.exact_match),
            }
        })
        .collect();

    EvalReport {
        tuples: gold.len(),
        missing,
        unknown,
        unparseable: scores.iter().filter(|s| !s.parseable).count(),
        by_target_length,
        by_length,
        by_category,
        scores,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

impl EvalReport {
    /// Aligned plain-text tables.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "tuples: {}  missing: {}  unknown: {}  unparseable: {}\n",
            self.tuples,
            self.missing.len(),
            self.unknown.len(),
            self.unparseable
        );
        let labels: Vec<&str> = self.by_target_length.iter().map(|b| b.label.as_str()).collect();
        let _ = write!(out, "{:<8}", "Metric");
        for l in &labels {
            let _ = write!(out, "{l:>9}");
        }
        out.push('\n');
        let rows: [(&str, fn(&Bucket) -> Option<f64>); 4] = [
            ("F1f", |b| b.f1_frame),
            ("EM", |b| b.exact_match),
            ("F1s", |b| b.f1_segment),
            ("Reward", |b| b.reward),
        ];
        for (name, f) in rows {
            let _ = write!(out, "{name:<8}");
            for b in &self.by_target_length {
                let _ = write!(out, "{:>9}", cell(f(b)));
            }
            out.push('\n');
        }
        out.push('\n');
        let _ = writeln!(out, "{:<12}{:>7}{:>9}{:>9}{:>9}{:>9}", "Category", "n", "P", "R", "F1", "EM");
        for r in &self.by_category {
            let _ = writeln!(
                out,
                "{:<12}{:>7}{:>9}{:>9}{:>9}{:>9}",
                r.category.name(),
                r.n,
                cell(r.precision),
                cell(r.recall),
                cell(r.f1),
                cell(r.exact_match)
            );
        }
        out
    }
}
