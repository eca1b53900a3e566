//! Perception-stream data model.
//!
//! A [`PerceptionStream`] is an ordered list of [`Frame`]s, each holding the
//! class-labelled, optionally tracked, bounding boxes produced by a detector
//! or a human labeller. Streams are loaded from a JSON document, validated,
//! and cut into fixed-length [`WindowSample`]s for matching.

mod adapter;
mod sample;
mod validate;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

pub use adapter::{adapt_records, parse_records, AdapterOptions, DetectionRecord};
pub use sample::{sample_windows, SampleError};
pub use validate::{validate_stream, StreamViolation, ValidationReport, ViolationKind};

/// Axis-aligned closed rectangle in annotation units.
///
/// Serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn is_finite(&self) -> bool {
        self.x_min.is_finite() && self.y_min.is_finite() && self.x_max.is_finite() && self.y_max.is_finite()
    }

    pub fn is_ordered(&self) -> bool {
        self.x_min <= self.x_max && self.y_min <= self.y_max
    }

    /// Smallest rectangle containing both.
    pub fn hull(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

impl From<[f64; 4]> for BoundingBox {
    fn from(v: [f64; 4]) -> Self {
        BoundingBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.x_min, self.y_min, self.x_max, self.y_max)
    }
}

/// Identity of an object across frames.
///
/// Explicit track ids come from the annotation file. Objects without a track
/// id get a synthetic key `#<frame index>.<object slot>`, so every untracked
/// detection behaves as a track that lives for exactly one frame.
///
/// Ordering is "natural": runs of digits compare numerically, so `"7" < "10"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrackKey(pub String);

impl TrackKey {
    pub fn synthetic(frame_index: u64, slot: usize) -> Self {
        TrackKey(format!("#{frame_index}.{slot}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_synthetic(&self) -> bool {
        self.0.starts_with('#')
    }
}

impl From<&str> for TrackKey {
    fn from(s: &str) -> Self {
        TrackKey(s.to_string())
    }
}

impl From<String> for TrackKey {
    fn from(s: String) -> Self {
        TrackKey(s)
    }
}

impl fmt::Display for TrackKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Ord for TrackKey {
    fn cmp(&self, other: &Self) -> Ordering {
        natural_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for TrackKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a.as_bytes(), b.as_bytes());
    loop {
        match (a.first(), b.first()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let na = a.iter().take_while(|c| c.is_ascii_digit()).count();
                let nb = b.iter().take_while(|c| c.is_ascii_digit()).count();
                let (da, db) = (trim_zeros(&a[..na]), trim_zeros(&b[..nb]));
                let ord = da.len().cmp(&db.len()).then_with(|| da.cmp(db)).then_with(|| na.cmp(&nb));
                if ord != Ordering::Equal {
                    return ord;
                }
                a = &a[na..];
                b = &b[nb..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                a = &a[1..];
                b = &b[1..];
            }
        }
    }
}

fn trim_zeros(d: &[u8]) -> &[u8] {
    let k = d.iter().take_while(|&&c| c == b'0').count();
    &d[k..]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectAnnotation {
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "de_track_id")]
    pub track_id: Option<String>,
    #[serde(rename = "class")]
    pub class_label: String,
    pub bbox: BoundingBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attrs: Option<BTreeMap<String, String>>,
}

impl ObjectAnnotation {
    pub fn new(track_id: Option<&str>, class_label: &str, bbox: BoundingBox) -> Self {
        Self {
            track_id: track_id.map(str::to_string),
            class_label: class_label.to_string(),
            bbox,
            attrs: None,
        }
    }

    /// Track identity of this object, given the index of its frame and its
    /// slot within the frame's object list.
    pub fn track_key(&self, frame_index: u64, slot: usize) -> TrackKey {
        match &self.track_id {
            Some(id) => TrackKey(id.clone()),
            None => TrackKey::synthetic(frame_index, slot),
        }
    }
}

// Track ids are strings in the schema; integer ids from sloppy exporters are
// accepted and stringified.
fn de_track_id<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Str(String),
        Int(i64),
    }
    Ok(Option::<Raw>::deserialize(d)?.map(|r| match r {
        Raw::Str(s) => s,
        Raw::Int(i) => i.to_string(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<f64>,
    /// `(width, height)`; the frame plane is `[0, width] x [0, height]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<[f64; 2]>,
    #[serde(default)]
    pub objects: Vec<ObjectAnnotation>,
}

impl Frame {
    pub fn new(index: u64, objects: Vec<ObjectAnnotation>) -> Self {
        Self { index, timestamp: None, extent: None, objects }
    }

    pub fn extent_box(&self) -> Option<BoundingBox> {
        self.extent.map(|[w, h]| BoundingBox::new(0.0, 0.0, w, h))
    }

    /// Objects paired with their track keys.
    pub fn keyed_objects(&self) -> impl Iterator<Item = (TrackKey, &ObjectAnnotation)> {
        self.objects.iter().enumerate().map(move |(k, o)| (o.track_key(self.index, k), o))
    }

    /// The object of `class` whose track key is `key`, if present.
    pub fn find(&self, class: &str, key: &TrackKey) -> Option<&ObjectAnnotation> {
        self.keyed_objects()
            .find(|(k, o)| o.class_label == class && k == key)
            .map(|(_, o)| o)
    }

    pub fn objects_of<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a ObjectAnnotation> + 'a {
        self.objects.iter().filter(move |o| o.class_label == class)
    }

    /// Tight hull of every box in the frame.
    pub fn boxes_hull(&self) -> Option<BoundingBox> {
        self.objects.iter().map(|o| o.bbox).reduce(|a, b| a.hull(&b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionStream {
    pub stream_id: String,
    pub class_vocabulary: BTreeSet<String>,
    pub frames: Vec<Frame>,
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("duplicate frame index {index}")]
    DuplicateFrameIndex { index: u64 },
    #[error("invalid stream: {0}")]
    Invalid(ValidationReport),
}

impl PerceptionStream {
    pub fn new(stream_id: &str, class_vocabulary: impl IntoIterator<Item = String>, frames: Vec<Frame>) -> Self {
        Self {
            stream_id: stream_id.to_string(),
            class_vocabulary: class_vocabulary.into_iter().collect(),
            frames,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Parses and validates a stream document.
    pub fn from_json(text: &str) -> Result<Self, StreamError> {
        let stream: PerceptionStream = serde_json::from_str(text).map_err(|e| StreamError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let report = validate_stream(&stream);
        if let Some(index) = report.duplicate_frame_index() {
            return Err(StreamError::DuplicateFrameIndex { index });
        }
        if !report.is_empty() {
            return Err(StreamError::Invalid(report));
        }
        Ok(stream)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stream serialization cannot fail")
    }

    /// Tight bounding rectangle of every box in the stream. Used as the
    /// complement universe for frames that carry no extent.
    pub fn default_extent(&self) -> Option<BoundingBox> {
        self.frames.iter().filter_map(Frame::boxes_hull).reduce(|a, b| a.hull(&b))
    }

    /// Contiguous window starting at frame position `offset`.
    ///
    /// Panics if the range is out of bounds.
    pub fn window(&self, offset: usize, length: usize) -> WindowSample {
        let slice = &self.frames[offset..offset + length];
        WindowSample {
            source_stream_id: self.stream_id.clone(),
            offset,
            length,
            source_indices: slice.iter().map(|f| f.index).collect(),
            frames: slice
                .iter()
                .enumerate()
                .map(|(i, f)| Frame { index: i as u64, ..f.clone() })
                .collect(),
            class_vocabulary: self.class_vocabulary.clone(),
            default_extent: self.default_extent(),
        }
    }

    /// The whole stream as one window.
    pub fn as_window(&self) -> WindowSample {
        self.window(0, self.frames.len())
    }
}

/// Reads, parses and validates a stream file.
pub fn load_stream(path: impl AsRef<Path>) -> Result<PerceptionStream, StreamError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| StreamError::Io {
        path: path.display().to_string(),
        source,
    })?;
    PerceptionStream::from_json(&text)
}

/// A contiguous slice of a stream, renumbered to positions `0..length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub source_stream_id: String,
    pub offset: usize,
    pub length: usize,
    pub frames: Vec<Frame>,
    /// Original frame indices, parallel to `frames`.
    pub source_indices: Vec<u64>,
    pub class_vocabulary: BTreeSet<String>,
    /// Complement universe for frames without an extent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_extent: Option<BoundingBox>,
}

impl WindowSample {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Complement universe for the frame at `pos`: its extent (or the
    /// window default) widened to cover every box in the frame.
    pub fn universe(&self, pos: usize) -> BoundingBox {
        let frame = &self.frames[pos];
        let base = frame.extent_box().or(self.default_extent);
        match (base, frame.boxes_hull()) {
            (Some(a), Some(b)) => a.hull(&b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => BoundingBox::new(0.0, 0.0, 0.0, 0.0),
        }
    }

    /// Window built from explicit frames, mostly for tests and fixtures.
    pub fn from_frames(stream_id: &str, frames: Vec<Frame>) -> Self {
        let stream = PerceptionStream {
            stream_id: stream_id.to_string(),
            class_vocabulary: frames
                .iter()
                .flat_map(|f| f.objects.iter().map(|o| o.class_label.clone()))
                .collect(),
            frames,
        };
        stream.as_window()
    }
}
