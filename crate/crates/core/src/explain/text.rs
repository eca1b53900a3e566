use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{EventKind, Explanation, ExplanationEvent, Participant};
use crate::lang::CmpOp;

/// Sentence templates, one per event kind. Slots are written `{name}`;
/// `{frames}` renders as "frame 3" or "frames 3 to 4", `{frames_through}`
/// as "frames 1 through 5".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SentenceTemplates {
    pub presence: String,
    pub class_presence: String,
    pub intersection: String,
    pub distance: String,
    pub vacuous: String,
    pub wildcard: String,
    pub generic: String,
    pub no_match: String,
}

impl Default for SentenceTemplates {
    fn default() -> Self {
        SentenceTemplates {
            presence: "{Subject} is present in {frames_through}.".into(),
            class_presence: "In {frames}, {objects} {is_are} present.".into(),
            intersection: "In {frames}, {left}'s bounding box intersects {right}'s bounding box.".into(),
            distance: "In {frames}, the distance between {left} and {right} is {value} units, {comparison} {threshold}."
                .into(),
            vacuous: "No {plural} are present in {frames}, so the condition holds vacuously.".into(),
            wildcard: "In {frames}, any frame content is allowed.".into(),
            generic: "In {frames}, the condition {formula} holds.".into(),
            no_match: "No frames in the window satisfy the query.".into(),
        }
    }
}

fn name(p: &Participant) -> String {
    format!("{} {}", p.class, p.track_id)
}

fn names(ps: &[Participant]) -> String {
    let v: Vec<String> = ps.iter().map(name).collect();
    match v.len() {
        0 => String::new(),
        1 => v[0].clone(),
        n => format!("{} and {}", v[..n - 1].join(", "), v[n - 1]),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// English plural of a class label.
pub(crate) fn plural(class: &str) -> String {
    match class {
        "person" => "people".into(),
        "child" => "children".into(),
        c if c.ends_with('s') || c.ends_with('x') || c.ends_with("ch") || c.ends_with("sh") => format!("{c}es"),
        c if c.ends_with('y') && !c.ends_with("ay") && !c.ends_with("ey") && !c.ends_with("oy") => {
            format!("{}ies", &c[..c.len() - 1])
        }
        c => format!("{c}s"),
    }
}

pub(crate) fn fmt_number(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round())
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn comparison(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Lt => "less than",
        CmpOp::Le => "at most",
        CmpOp::Gt => "more than",
        CmpOp::Ge => "at least",
    }
}

fn frames_phrase(a: usize, b: usize, joiner: &str) -> String {
    if a == b {
        format!("frame {a}")
    } else {
        format!("frames {a} {joiner} {b}")
    }
}

// Template with every slot but the frame slots filled in.
fn render(e: &ExplanationEvent, t: &SentenceTemplates) -> String {
    let fill = |tpl: &str, slots: &[(&str, String)]| {
        slots.iter().fold(tpl.to_string(), |acc, (k, v)| acc.replace(&format!("{{{k}}}"), v))
    };
    match &e.kind {
        EventKind::Presence { .. } => {
            let subject = names(&e.participants);
            fill(&t.presence, &[("Subject", capitalize(&subject)), ("subject", subject)])
        }
        EventKind::ClassPresence { class } => {
            let objs: Vec<Participant> = e.participants.iter().filter(|p| &p.class == class).cloned().collect();
            let is_are = if objs.len() == 1 { "is" } else { "are" };
            fill(&t.class_presence, &[("objects", names(&objs)), ("is_are", is_are.into()), ("class", class.clone())])
        }
        EventKind::Intersection { left, right } => fill(&t.intersection, &[("left", names(left)), ("right", names(right))]),
        EventKind::Distance { left, right, value, op, threshold } => fill(
            &t.distance,
            &[
                ("left", name(left)),
                ("right", name(right)),
                ("value", fmt_number(*value)),
                ("comparison", comparison(*op).into()),
                ("threshold", fmt_number(*threshold)),
            ],
        ),
        EventKind::Vacuous { class, var } => {
            fill(&t.vacuous, &[("plural", plural(class)), ("class", class.clone()), ("var", var.clone())])
        }
        EventKind::Wildcard => t.wildcard.clone(),
        EventKind::Generic => fill(&t.generic, &[("formula", e.fragment.clone())]),
    }
}

/// Sentences for one explanation. Events with identical wording on
/// consecutive frames are merged into one sentence over the frame range.
pub fn linearize(e: &Explanation, t: &SentenceTemplates) -> Vec<String> {
    let mut groups: Vec<(String, BTreeSet<usize>)> = Vec::new();
    for ev in &e.events {
        let key = render(ev, t);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, frames)) => {
                frames.insert(ev.frame);
            }
            None => groups.push((key, BTreeSet::from([ev.frame]))),
        }
    }
    let mut out: Vec<(usize, usize, String)> = Vec::new();
    for (g, (key, frames)) in groups.iter().enumerate() {
        let frames: Vec<usize> = frames.iter().copied().collect();
        let mut i = 0;
        while i < frames.len() {
            let mut j = i;
            while j + 1 < frames.len() && frames[j + 1] == frames[j] + 1 {
                j += 1;
            }
            let (a, b) = (frames[i], frames[j]);
            let s = key
                .replace("{frames_through}", &frames_phrase(a, b, "through"))
                .replace("{frames}", &frames_phrase(a, b, "to"));
            out.push((a, g, s));
            i = j + 1;
        }
    }
    out.sort_by_key(|&(a, g, _)| (a, g));
    out.into_iter().map(|(_, _, s)| s).collect()
}

/// Sentences for a whole match set: the union of the explanations'
/// sentences without repeats, or the no-match sentence.
pub fn linearize_all(explanations: &[Explanation], t: &SentenceTemplates) -> Vec<String> {
    if explanations.is_empty() {
        return vec![t.no_match.clone()];
    }
    let mut out: Vec<String> = Vec::new();
    for e in explanations {
        for s in &e.sentences {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
    }
    out
}

const MAX_RANGE: usize = 10_000;

/// Frame indices a text refers to: "frame 3", "frames 3 to 4",
/// "frames 1 through 5", "frames 2-4", "frames 1, 3 and 5".
pub fn frame_references(text: &str) -> BTreeSet<usize> {
    static LIST: OnceLock<Regex> = OnceLock::new();
    static ITEM: OnceLock<Regex> = OnceLock::new();
    let list = LIST.get_or_init(|| {
        let item = r"\d+(?:\s*(?:to|through|-|–)\s*\d+)?";
        Regex::new(&format!(r"(?i)\bframes?\s+({item}(?:\s*(?:,\s*and|,|and|&)\s*{item})*)")).expect("valid regex")
    });
    let item = ITEM.get_or_init(|| Regex::new(r"(\d+)(?:\s*(?:to|through|-|–)\s*(\d+))?").expect("valid regex"));
    let mut out = BTreeSet::new();
    for cap in list.captures_iter(text) {
        for it in item.captures_iter(&cap[1]) {
            let Ok(a) = it[1].parse::<usize>() else { continue };
            match it.get(2).map(|m| m.as_str().parse::<usize>()) {
                Some(Err(_)) => {}
                Some(Ok(b)) => {
                    let (lo, hi) = (a.min(b), a.max(b));
                    if hi - lo <= MAX_RANGE {
                        out.extend(lo..=hi);
                    }
                }
                None => {
                    out.insert(a);
                }
            }
        }
    }
    out
}
