use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::PerceptionStream;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    EmptyStreamId,
    EmptyClassLabel,
    UnknownClass { label: String },
    NonFiniteBox,
    InvertedBox,
    DuplicateTrackInFrame { track_id: String },
    DuplicateFrameIndex { index: u64 },
    FrameOutOfOrder { previous: u64, index: u64 },
    InvalidExtent,
    NonFiniteTimestamp,
}

/// One invariant violation, located by frame index and object slot when
/// applicable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamViolation {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub object: Option<usize>,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for StreamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(frame) = self.frame {
            write!(f, "frame {frame}")?;
            if let Some(obj) = self.object {
                write!(f, ", object {obj}")?;
            }
            f.write_str(": ")?;
        }
        match &self.kind {
            ViolationKind::EmptyStreamId => f.write_str("stream_id is empty"),
            ViolationKind::EmptyClassLabel => f.write_str("class label is empty"),
            ViolationKind::UnknownClass { label } => write!(f, "class `{label}` is not in the class vocabulary"),
            ViolationKind::NonFiniteBox => f.write_str("bounding box has a non-finite coordinate"),
            ViolationKind::InvertedBox => f.write_str("bounding box has min > max"),
            ViolationKind::DuplicateTrackInFrame { track_id } => write!(f, "track id `{track_id}` appears more than once"),
            ViolationKind::DuplicateFrameIndex { index } => write!(f, "duplicate frame index {index}"),
            ViolationKind::FrameOutOfOrder { previous, index } => {
                write!(f, "frame index {index} follows {previous}; indices must increase")
            }
            ViolationKind::InvalidExtent => f.write_str("extent must be finite and non-negative"),
            ViolationKind::NonFiniteTimestamp => f.write_str("timestamp is not finite"),
        }
    }
}

/// Every invariant violation found in a stream. Empty iff the stream is valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<StreamViolation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn duplicate_frame_index(&self) -> Option<u64> {
        self.violations.iter().find_map(|v| match v.kind {
            ViolationKind::DuplicateFrameIndex { index } => Some(index),
            _ => None,
        })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_stream(stream: &PerceptionStream) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |frame: Option<u64>, object: Option<usize>, kind: ViolationKind| {
        out.push(StreamViolation { frame, object, kind });
    };

    if stream.stream_id.is_empty() {
        push(None, None, ViolationKind::EmptyStreamId);
    }

    let mut seen_indices = HashSet::new();
    let mut previous: Option<u64> = None;
    for frame in &stream.frames {
        let fi = Some(frame.index);
        if !seen_indices.insert(frame.index) {
            push(fi, None, ViolationKind::DuplicateFrameIndex { index: frame.index });
        } else if let Some(prev) = previous {
            if frame.index <= prev {
                push(fi, None, ViolationKind::FrameOutOfOrder { previous: prev, index: frame.index });
            }
        }
        previous = Some(previous.map_or(frame.index, |p| p.max(frame.index)));

        if let Some(ts) = frame.timestamp {
            if !ts.is_finite() {
                push(fi, None, ViolationKind::NonFiniteTimestamp);
            }
        }
        if let Some([w, h]) = frame.extent {
            if !(w.is_finite() && h.is_finite() && w >= 0.0 && h >= 0.0) {
                push(fi, None, ViolationKind::InvalidExtent);
            }
        }

        let mut tracks = HashSet::new();
        for (k, obj) in frame.objects.iter().enumerate() {
            let oi = Some(k);
            if obj.class_label.is_empty() {
                push(fi, oi, ViolationKind::EmptyClassLabel);
            } else if !stream.class_vocabulary.contains(&obj.class_label) {
                push(fi, oi, ViolationKind::UnknownClass { label: obj.class_label.clone() });
            }
            if !obj.bbox.is_finite() {
                push(fi, oi, ViolationKind::NonFiniteBox);
            } else if !obj.bbox.is_ordered() {
                push(fi, oi, ViolationKind::InvertedBox);
            }
            if let Some(id) = &obj.track_id {
                if !tracks.insert(id.as_str()) {
                    push(fi, oi, ViolationKind::DuplicateTrackInFrame { track_id: id.clone() });
                }
            }
        }
    }

    ValidationReport { violations: out }
}
