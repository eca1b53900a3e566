use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{derive_seed, PipelineError};
use crate::explain::plural;
use crate::explain::fmt_number;
use crate::lang::{is_plain_ident, parse, validate_query, Category, Query};

/// The shipped templates: three per category.
pub const DEFAULT_TEMPLATES: &str = include_str!("templates.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoleKind {
    /// An object class. Defaults to the vocabulary; classes within one
    /// template are always distinct.
    Class,
    /// A frame count or repetition bound.
    Count,
    /// A distance threshold in pixel units.
    Distance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub name: String,
    pub kind: HoleKind,
    /// Allowed values. For class holes these are intersected with the
    /// vocabulary; when absent the whole vocabulary is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<serde_json::Value>>,
}

/// A query with typed holes. `${h}` in either skeleton is replaced by the
/// value of hole `h`; class holes also offer `${h.var}` (a variable named
/// after the class) and `${h.plural}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTemplate {
    pub id: String,
    pub category: Category,
    pub spre: String,
    pub nl: String,
    pub holes: Vec<Hole>,
}

/// A concrete value for a hole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HoleValue {
    Number(f64),
    Class(String),
}

impl HoleValue {
    fn render(&self) -> String {
        match self {
            HoleValue::Number(v) => fmt_number(*v),
            HoleValue::Class(c) => c.clone(),
        }
    }
}

fn hole_ref() -> &'static Regex {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)(?:\.(var|plural))?\}").expect("valid regex"))
}

fn referenced(text: &str) -> BTreeSet<String> {
    hole_ref().captures_iter(text).map(|c| c[1].to_string()).collect()
}

pub fn load_templates(text: &str) -> Result<Vec<QueryTemplate>, PipelineError> {
    let templates: Vec<QueryTemplate> = serde_json::from_str(text).map_err(|e| PipelineError::Template {
        id: String::new(),
        message: e.to_string(),
    })?;
    let mut seen = BTreeSet::new();
    for t in &templates {
        if !seen.insert(t.id.clone()) {
            return Err(PipelineError::Template { id: t.id.clone(), message: "duplicate template id".into() });
        }
        t.check()?;
    }
    Ok(templates)
}

pub fn default_templates() -> Vec<QueryTemplate> {
    load_templates(DEFAULT_TEMPLATES).expect("shipped templates are valid")
}

impl QueryTemplate {
    /// Both skeletons mention exactly the declared holes, and every
    /// hole has a usable domain type.
    pub fn check(&self) -> Result<(), PipelineError> {
        let err = |message: String| PipelineError::Template { id: self.id.clone(), message };
        let declared: BTreeSet<String> = self.holes.iter().map(|h| h.name.clone()).collect();
        if declared.len() != self.holes.len() {
            return Err(err("duplicate hole name".into()));
        }
        let (in_spre, in_nl) = (referenced(&self.spre), referenced(&self.nl));
        if in_spre != declared || in_nl != declared {
            return Err(err(format!(
                "hole sets differ: declared {declared:?}, query {in_spre:?}, text {in_nl:?}"
            )));
        }
        for h in &self.holes {
            for v in h.values.iter().flatten() {
                let ok = match h.kind {
                    HoleKind::Class => v.is_string(),
                    HoleKind::Count => v.as_u64().is_some(),
                    HoleKind::Distance => v.as_f64().is_some_and(|d| d.is_finite() && d >= 0.0),
                };
                if !ok {
                    return Err(err(format!("bad value {v} for hole `{}`", h.name)));
                }
            }
            if h.kind != HoleKind::Class && h.values.is_none() {
                return Err(err(format!("hole `{}` needs explicit values", h.name)));
            }
        }
        Ok(())
    }

    fn domain(&self, h: &Hole, vocab: &BTreeSet<String>, taken: &[String]) -> Vec<HoleValue> {
        match h.kind {
            HoleKind::Class => {
                let base: Vec<String> = match &h.values {
                    Some(vs) => vs.iter().filter_map(|v| v.as_str()).filter(|c| vocab.contains(*c)).map(String::from).collect(),
                    None => vocab.iter().cloned().collect(),
                };
                base.into_iter().filter(|c| !taken.contains(c)).map(HoleValue::Class).collect()
            }
            _ => h.values.iter().flatten().filter_map(|v| v.as_f64()).map(HoleValue::Number).collect(),
        }
    }

    /// Fills the holes with given values. Missing or mistyped values are
    /// errors; the result is parsed and validated against `vocab`.
    pub fn instantiate_with(&self, values: &BTreeMap<String, HoleValue>, vocab: &BTreeSet<String>) -> Result<Query, PipelineError> {
        for h in &self.holes {
            let ok = matches!(
                (h.kind, values.get(&h.name)),
                (HoleKind::Class, Some(HoleValue::Class(_))) | (HoleKind::Count | HoleKind::Distance, Some(HoleValue::Number(_)))
            );
            if !ok {
                return Err(PipelineError::Template { id: self.id.clone(), message: format!("no valid value for hole `{}`", h.name) });
            }
        }

        // Variables take the first letter of their class, suffixed on clashes.
        let mut vars: BTreeMap<&str, String> = BTreeMap::new();
        for h in self.holes.iter().filter(|h| h.kind == HoleKind::Class) {
            let Some(HoleValue::Class(c)) = values.get(&h.name) else { continue };
            let stem = c.chars().find(|ch| ch.is_ascii_alphabetic()).map(|ch| ch.to_ascii_lowercase()).unwrap_or('x');
            let mut var = stem.to_string();
            let mut k = 2;
            while vars.values().any(|v| *v == var) {
                var = format!("{stem}{k}");
                k += 1;
            }
            vars.insert(h.name.as_str(), var);
        }
        let var_names: Vec<&String> = vars.values().collect();

        let fill = |text: &str, in_query: bool| {
            hole_ref()
                .replace_all(text, |c: &regex::Captures| {
                    let v = &values[&c[1]];
                    match (c.get(2).map(|m| m.as_str()), v) {
                        (Some("var"), _) => vars.get(&c[1]).cloned().unwrap_or_default(),
                        (Some("plural"), HoleValue::Class(cl)) => plural(cl),
                        (_, HoleValue::Class(cl)) if in_query && (!is_plain_ident(cl) || var_names.contains(&cl)) => {
                            format!("\"{}\"", cl.replace('\\', "\\\\").replace('"', "\\\""))
                        }
                        _ => v.render(),
                    }
                })
                .into_owned()
        };
        let spre = fill(&self.spre, true);
        let nl_text = fill(&self.nl, false);
        let pattern = parse(&spre).map_err(|source| PipelineError::Parse { id: self.id.clone(), spre: spre.clone(), source })?;
        let id = std::iter::once(self.id.clone())
            .chain(self.holes.iter().map(|h| format!("{}={}", h.name, values[&h.name].render())))
            .collect::<Vec<_>>()
            .join(";");
        let q = Query { id, spre, pattern, nl_text, category: self.category };
        let violations = validate_query(&q, vocab);
        if !violations.is_empty() {
            let message = violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
            return Err(PipelineError::Template { id: self.id.clone(), message });
        }
        Ok(q)
    }

    /// Draws hole values uniformly from their domains with a ChaCha8
    /// stream seeded by `seed` and the template id.
    pub fn instantiate(&self, vocab: &BTreeSet<String>, seed: u64) -> Result<Query, PipelineError> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[&self.id]));
        let mut values = BTreeMap::new();
        let mut taken: Vec<String> = Vec::new();
        for h in &self.holes {
            let domain = self.domain(h, vocab, &taken);
            let v = domain
                .choose(&mut rng)
                .cloned()
                .ok_or_else(|| PipelineError::EmptyHoleDomain { template: self.id.clone(), hole: h.name.clone() })?;
            if let HoleValue::Class(c) = &v {
                taken.push(c.clone());
            }
            values.insert(h.name.clone(), v);
        }
        self.instantiate_with(&values, vocab)
    }
}

/// One query per template, in template order.
pub fn instantiate_templates(templates: &[QueryTemplate], vocab: &BTreeSet<String>, seed: u64) -> Result<Vec<Query>, PipelineError> {
    templates.iter().map(|t| t.instantiate(vocab, seed)).collect()
}
