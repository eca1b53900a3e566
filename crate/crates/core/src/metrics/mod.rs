//! Scoring of model responses against dataset tuples.

mod report;
mod response;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use report::{evaluate_run, read_predictions, Bucket, CategoryRow, EvalConfig, EvalReport, PredictionRecord, TupleScore};
pub use response::{format_response, parse_response, FormatIssue, Prediction, ResponseFormat};

use crate::explain::frame_references;
use crate::pipeline::DatasetTuple;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact_match: f64,
}

impl FrameMetrics {
    pub const ZERO: FrameMetrics = FrameMetrics { precision: 0.0, recall: 0.0, f1: 0.0, exact_match: 0.0 };
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Set precision, recall and F1. Two empty sets score 1 everywhere; an
/// empty set against a non-empty one scores 0.
pub fn frame_f1(pred: &BTreeSet<usize>, gold: &BTreeSet<usize>) -> FrameMetrics {
    if pred.is_empty() && gold.is_empty() {
        return FrameMetrics { precision: 1.0, recall: 1.0, f1: 1.0, exact_match: 1.0 };
    }
    let hit = pred.intersection(gold).count() as f64;
    let precision = if pred.is_empty() { 0.0 } else { hit / pred.len() as f64 };
    let recall = if gold.is_empty() { 0.0 } else { hit / gold.len() as f64 };
    FrameMetrics { precision, recall, f1: harmonic(precision, recall), exact_match: f64::from(u8::from(pred == gold)) }
}

/// Jaccard index of two frame sets; 1 when both are empty.
pub fn frame_iou(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// Maximal runs of consecutive frames as inclusive intervals.
pub fn segments(frames: &BTreeSet<usize>) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &f in frames {
        match out.last_mut() {
            Some((_, e)) if *e + 1 == f => *e = f,
            _ => out.push((f, f)),
        }
    }
    out
}

pub fn interval_iou(a: (usize, usize), b: (usize, usize)) -> f64 {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    let inter = if hi >= lo { hi - lo + 1 } else { 0 };
    let union = (a.1 - a.0 + 1) + (b.1 - b.0 + 1) - inter;
    inter as f64 / union as f64
}

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn iou_sweep() -> impl Iterator<Item = f64> {
    (0..10).map(|k| 0.5 + 0.05 * k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMetrics {
    pub threshold: f64,
    pub true_positives: usize,
    pub pred_segments: usize,
    pub gold_segments: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean segment precision over the IoU sweep.
    pub map: f64,
}

// Greedy one-to-one pairing in descending IoU; returns the IoUs of the
// chosen pairs.
fn greedy_pairs(pred: &[(usize, usize)], gold: &[(usize, usize)]) -> Vec<f64> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &p) in pred.iter().enumerate() {
        for (j, &g) in gold.iter().enumerate() {
            let iou = interval_iou(p, g);
            if iou > 0.0 {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut used_p, mut used_g) = (vec![false; pred.len()], vec![false; gold.len()]);
    let mut out = Vec::new();
    for (iou, i, j) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            out.push(iou);
        }
    }
    out
}

const EPS: f64 = 1e-9;

/// Segment-level F1 at one IoU threshold plus mAP over the sweep.
pub fn segment_f1(pred: &BTreeSet<usize>, gold: &BTreeSet<usize>, iou_threshold: f64) -> SegmentMetrics {
    let (ps, gs) = (segments(pred), segments(gold));
    if ps.is_empty() && gs.is_empty() {
        return SegmentMetrics {
            threshold: iou_threshold,
            true_positives: 0,
            pred_segments: 0,
            gold_segments: 0,
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
            map: 1.0,
        };
    }
    let ious = greedy_pairs(&ps, &gs);
    let tp_at = |t: f64| ious.iter().filter(|&&iou| iou + EPS >= t).count();
    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let tp = tp_at(iou_threshold);
    let (precision, recall) = (ratio(tp, ps.len()), ratio(tp, gs.len()));
    let map = iou_sweep().map(|t| ratio(tp_at(t), ps.len())).sum::<f64>() / 10.0;
    SegmentMetrics {
        threshold: iou_threshold,
        true_positives: tp,
        pred_segments: ps.len(),
        gold_segments: gs.len(),
        precision,
        recall,
        f1: harmonic(precision, recall),
        map,
    }
}

/// Mean over the IoU sweep of whether the whole predicted frame set
/// reaches that IoU with the gold set.
pub fn frame_map(pred: &BTreeSet<usize>, gold: &BTreeSet<usize>) -> f64 {
    let iou = frame_iou(pred, gold);
    iou_sweep().filter(|&t| iou + EPS >= t).count() as f64 / 10.0
}

/// Similarity of a predicted explanation to the reference sentences, in
/// `[0, 1]`.
pub trait SimilarityScorer: Sync {
    fn score(&self, candidate: &str, reference: &str) -> f64;
}

/// Jaccard overlap of lower-cased alphanumeric tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenOverlap;

impl SimilarityScorer for TokenOverlap {
    fn score(&self, candidate: &str, reference: &str) -> f64 {
        let tokens = |s: &str| -> BTreeSet<String> {
            s.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
        };
        let (a, b) = (tokens(candidate), tokens(reference));
        let union = a.union(&b).count();
        if union == 0 {
            1.0
        } else {
            a.intersection(&b).count() as f64 / union as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub structure: f64,
    pub matching: f64,
    pub fidelity: f64,
    /// Share of frame mAP (versus exact match) in the match score.
    pub alpha: f64,
    /// Share of frame-reference IoU (versus text similarity) in fidelity.
    pub beta: f64,
    pub length_penalty: f64,
    pub spurious_penalty: f64,
    pub format_penalty: f64,
    /// Responses longer than this many characters are penalized.
    pub max_chars: usize,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            structure: 0.2,
            matching: 0.5,
            fidelity: 0.3,
            alpha: 0.5,
            beta: 0.5,
            length_penalty: 0.1,
            spurious_penalty: 0.1,
            format_penalty: 0.1,
            max_chars: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub structure: f64,
    pub matching: f64,
    pub fidelity: f64,
    pub frame_reference_iou: f64,
    pub similarity: f64,
    pub length_penalty: f64,
    pub spurious_penalty: f64,
    pub format_penalty: f64,
    pub total: f64,
}

/// Frames the explanation of a prediction refers to.
pub fn explanation_frames(pred: &Prediction) -> BTreeSet<usize> {
    pred.parsed_explanation.as_deref().map(frame_references).unwrap_or_default()
}

pub fn reward(pred: &Prediction, gold: &DatasetTuple, weights: &RewardWeights, scorer: &dyn SimilarityScorer) -> RewardBreakdown {
    let gold_frames = gold.matched_frame_set();
    let structure = if pred.is_parseable() && pred.issues.is_empty() { 1.0 } else { 0.0 };
    let matching = match &pred.parsed_frames {
        Some(f) => {
            let em = f64::from(u8::from(*f == gold_frames));
            weights.alpha * frame_map(f, &gold_frames) + (1.0 - weights.alpha) * em
        }
        None => 0.0,
    };
    let (frame_reference_iou, similarity) = match &pred.parsed_explanation {
        Some(text) if pred.is_parseable() => {
            (frame_iou(&frame_references(text), &gold_frames), scorer.score(text, &gold.sentences.join(" ")).clamp(0.0, 1.0))
        }
        _ => (0.0, 0.0),
    };
    let fidelity = weights.beta * frame_reference_iou + (1.0 - weights.beta) * similarity;
    let flag = |on: bool, w: f64| if on { w } else { 0.0 };
    let length_penalty = flag(pred.raw_response.chars().count() > weights.max_chars, weights.length_penalty);
    let spurious_penalty = flag(pred.has_spurious_text(), weights.spurious_penalty);
    let format_penalty = flag(!pred.is_parseable() || !pred.issues.is_empty(), weights.format_penalty);
    let total = (weights.structure * structure + weights.matching * matching + weights.fidelity * fidelity
        - length_penalty
        - spurious_penalty
        - format_penalty)
        .clamp(-1.0, 1.0);
    RewardBreakdown {
        structure,
        matching,
        fidelity,
        frame_reference_iou,
        similarity,
        length_penalty,
        spurious_penalty,
        format_penalty,
        total,
    }
}
