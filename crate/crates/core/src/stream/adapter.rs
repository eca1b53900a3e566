//! Normalizes flat detection exports into [`PerceptionStream`]s.
//!
//! Large driving datasets (nuScenes, Woven Perception) ship annotations as
//! tables keyed by scene, sensor and sample. After projecting them to the
//! image plane, most tooling emits one row per box. This adapter takes such
//! rows, one JSON object per line, and groups them into one stream per
//! `(scene, sensor)` pair. Camera streams of the same scene stay separate.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use super::{BoundingBox, Frame, ObjectAnnotation, PerceptionStream, StreamError};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DetectionRecord {
    pub scene: String,
    #[serde(default)]
    pub sensor: Option<String>,
    pub frame: u64,
    #[serde(default)]
    pub timestamp: Option<f64>,
    #[serde(default, alias = "instance_token", alias = "track_id")]
    pub instance: Option<String>,
    #[serde(alias = "category_name")]
    pub category: String,
    pub bbox: [f64; 4],
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub height: Option<f64>,
    #[serde(default)]
    pub attrs: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, Default)]
pub struct AdapterOptions {
    /// Keep only the last dot-separated component of a category
    /// (`vehicle.car` becomes `car`).
    pub strip_category_prefix: bool,
    /// Explicit renames applied after prefix stripping.
    pub category_map: BTreeMap<String, String>,
    /// Interpret boxes as `[x, y, width, height]`.
    pub xywh: bool,
}

/// Parses line-delimited detection records. Blank lines are skipped.
pub fn parse_records(text: &str) -> Result<Vec<DetectionRecord>, StreamError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| StreamError::Parse {
                line: i + 1,
                column: e.column(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Groups records into validated streams, sorted by stream id.
pub fn adapt_records(records: &[DetectionRecord], opts: &AdapterOptions) -> Result<Vec<PerceptionStream>, StreamError> {
    type FrameRows<'a> = BTreeMap<u64, Vec<&'a DetectionRecord>>;
    let mut grouped: BTreeMap<String, FrameRows> = BTreeMap::new();
    for r in records {
        let id = match &r.sensor {
            Some(sensor) => format!("{}/{}", r.scene, sensor),
            None => r.scene.clone(),
        };
        grouped.entry(id).or_default().entry(r.frame).or_default().push(r);
    }

    let mut streams = Vec::with_capacity(grouped.len());
    for (stream_id, frames) in grouped {
        let mut vocab = BTreeSet::new();
        let frames = frames
            .into_iter()
            .map(|(index, rows)| {
                let timestamp = rows.iter().find_map(|r| r.timestamp);
                let extent = rows.iter().find_map(|r| Some([r.width?, r.height?]));
                let objects = rows
                    .iter()
                    .map(|r| {
                        let class_label = normalize_category(&r.category, opts);
                        vocab.insert(class_label.clone());
                        let [a, b, c, d] = r.bbox;
                        let bbox = if opts.xywh { BoundingBox::new(a, b, a + c, b + d) } else { BoundingBox::new(a, b, c, d) };
                        ObjectAnnotation { track_id: r.instance.clone(), class_label, bbox, attrs: r.attrs.clone() }
                    })
                    .collect();
                Frame { index, timestamp, extent, objects }
            })
            .collect();
        let stream = PerceptionStream { stream_id, class_vocabulary: vocab, frames };
        let report = super::validate_stream(&stream);
        if !report.is_empty() {
            return Err(StreamError::Invalid(report));
        }
        streams.push(stream);
    }
    Ok(streams)
}

fn normalize_category(raw: &str, opts: &AdapterOptions) -> String {
    let base = if opts.strip_category_prefix { raw.rsplit('.').next().unwrap_or(raw) } else { raw };
    opts.category_map.get(base).cloned().unwrap_or_else(|| base.to_string())
}
