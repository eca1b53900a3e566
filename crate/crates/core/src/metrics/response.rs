use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Tag names of the expected response layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResponseFormat {
    pub matches_tag: String,
    pub explanation_tag: String,
}

impl Default for ResponseFormat {
    fn default() -> Self {
        ResponseFormat { matches_tag: "matches".into(), explanation_tag: "explanation".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormatIssue {
    MissingTag { tag: String },
    UnclosedTag { tag: String },
    DuplicateTag { tag: String },
    /// The matches element is not a JSON array of frame positions.
    BadFrameList,
}

/// A model response with its parsed parts. Every field other than `id` is
/// a function of `raw_response`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub raw_response: String,
    /// `None` when the response is unparseable.
    pub parsed_frames: Option<BTreeSet<usize>>,
    pub parsed_explanation: Option<String>,
    /// Byte ranges of non-blank text outside the known elements.
    pub spurious_spans: Vec<(usize, usize)>,
    pub issues: Vec<FormatIssue>,
}

impl Prediction {
    pub fn is_parseable(&self) -> bool {
        self.parsed_frames.is_some()
    }

    pub fn has_spurious_text(&self) -> bool {
        !self.spurious_spans.is_empty()
    }
}

fn push_spurious(raw: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let text = &raw[start..end];
    let lead = text.len() - text.trim_start().len();
    let trail = text.len() - text.trim_end().len();
    if lead < text.len() {
        out.push((start + lead, end - trail));
    }
}

fn parse_frames(content: &str) -> Option<BTreeSet<usize>> {
    let values: Vec<serde_json::Value> = serde_json::from_str(content.trim()).ok()?;
    values.iter().map(|v| v.as_u64().and_then(|n| usize::try_from(n).ok())).collect()
}

/// Splits a response into its matches and explanation elements. Never
/// fails; malformed input yields an unparseable prediction.
pub fn parse_response(id: &str, raw: &str, format: &ResponseFormat) -> Prediction {
    let tags = [format.matches_tag.as_str(), format.explanation_tag.as_str()];
    let opens = tags.map(|t| format!("<{t}>"));
    let closes = tags.map(|t| format!("</{t}>"));
    let mut contents: [Option<&str>; 2] = [None, None];
    let mut issues = Vec::new();
    let mut spurious = Vec::new();
    let mut pos = 0;
    loop {
        let next = (0..2).filter_map(|k| raw[pos..].find(&opens[k]).map(|i| (pos + i, k))).min();
        let Some((at, k)) = next else {
            push_spurious(raw, pos, raw.len(), &mut spurious);
            break;
        };
        push_spurious(raw, pos, at, &mut spurious);
        let body = at + opens[k].len();
        let Some(len) = raw[body..].find(&closes[k]) else {
            issues.push(FormatIssue::UnclosedTag { tag: tags[k].to_string() });
            push_spurious(raw, at, raw.len(), &mut spurious);
            break;
        };
        if contents[k].is_some() {
            let issue = FormatIssue::DuplicateTag { tag: tags[k].to_string() };
            if !issues.contains(&issue) {
                issues.push(issue);
            }
        } else {
            contents[k] = Some(&raw[body..body + len]);
        }
        pos = body + len + closes[k].len();
    }
    let parsed_frames = match contents[0] {
        None => {
            issues.push(FormatIssue::MissingTag { tag: tags[0].to_string() });
            None
        }
        Some(c) => {
            let f = parse_frames(c);
            if f.is_none() {
                issues.push(FormatIssue::BadFrameList);
            }
            f
        }
    };
    if contents[1].is_none() {
        issues.push(FormatIssue::MissingTag { tag: tags[1].to_string() });
    }
    Prediction {
        id: id.to_string(),
        raw_response: raw.to_string(),
        parsed_frames,
        parsed_explanation: contents[1].map(|s| s.trim().to_string()),
        spurious_spans: spurious,
        issues,
    }
}

/// The response a perfect model would give.
pub fn format_response(frames: &BTreeSet<usize>, sentences: &[String], format: &ResponseFormat) -> String {
    let list = serde_json::to_string(&frames.iter().collect::<Vec<_>>()).expect("serializable");
    format!(
        "<{m}>{list}</{m}><{e}>{}</{e}>",
        sentences.join(" "),
        m = format.matches_tag,
        e = format.explanation_tag
    )
}
