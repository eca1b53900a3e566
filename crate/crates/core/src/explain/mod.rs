//! Explanations of why a match holds.
//!
//! An explanation is read off one accepting run: every frame consumed by a
//! frame expression yields an [`ExplanationEvent`] naming the objects that
//! make the expression true and any distances involved. Events are then
//! rendered into sentences by slot-filling templates.

mod text;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use text::{frame_references, linearize, linearize_all, SentenceTemplates};
pub(crate) use text::{fmt_number, plural};

use crate::lang::{formula_to_string, CmpOp, Pattern, SpatialFormula, SpatialTerm};
use crate::matcher::{Deriver, FrameStep, Match, MatchError, MatcherConfig};
use crate::spatial::{eval_formula, term_distance, Binding, BoundValue, EvalContext, Rect};
use crate::stream::{BoundingBox, TrackKey, WindowSample};

/// An object cited by an event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub track_id: TrackKey,
    pub class: String,
    pub bbox: BoundingBox,
}

/// A distance predicate evaluated on the event's frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub left: String,
    pub right: String,
    /// `None` when either side was empty.
    pub value: Option<f64>,
    pub op: CmpOp,
    pub threshold: f64,
}

/// How an event reads in prose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// A bound object is present.
    Presence { var: String },
    /// Some object of a class is present.
    ClassPresence { class: String },
    /// Two atoms overlap; participants are split into `left` and `right`.
    Intersection { left: Vec<Participant>, right: Vec<Participant> },
    /// A distance comparison between two atoms, citing the closest pair.
    Distance { left: Participant, right: Participant, value: f64, op: CmpOp, threshold: f64 },
    /// Universal over an empty domain.
    Vacuous { var: String, class: String },
    Wildcard,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationEvent {
    pub frame: usize,
    /// The frame expression, in query syntax.
    pub fragment: String,
    pub formula: SpatialFormula,
    pub binding: BTreeMap<String, BoundValue>,
    pub participants: Vec<Participant>,
    pub quantities: Vec<Quantity>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    #[serde(rename = "match")]
    pub matched: Match,
    pub events: Vec<ExplanationEvent>,
    pub sentences: Vec<String>,
}

impl ExplanationEvent {
    fn binding(&self) -> Binding {
        self.binding.iter().fold(Binding::new(), |b, (v, val)| b.with(v, val.clone()))
    }

    /// Re-evaluates the fragment on the cited frame under the cited
    /// binding.
    pub fn verify(&self, window: &WindowSample, config: &MatcherConfig) -> bool {
        let Some(frame) = window.frames.get(self.frame) else {
            return false;
        };
        let b = self.binding();
        let mut ctx = EvalContext::new(frame, &b, window.universe(self.frame));
        ctx.distance_scale = config.distance_scale;
        eval_formula(&self.formula, &ctx).unwrap_or(false)
    }
}

impl Explanation {
    /// Every cited frame expression re-evaluates true.
    pub fn is_faithful(&self, window: &WindowSample, config: &MatcherConfig) -> bool {
        self.events.iter().all(|e| e.verify(window, config))
    }
}

/// Explains many matches of one pattern on one window, sharing work.
pub struct Explainer<'p, 'w> {
    window: &'w WindowSample,
    config: MatcherConfig,
    deriver: Deriver<'p, 'w>,
    templates: SentenceTemplates,
}

impl<'p, 'w> Explainer<'p, 'w> {
    pub fn new(pattern: &'p Pattern, window: &'w WindowSample, config: &MatcherConfig, templates: &SentenceTemplates) -> Self {
        Explainer {
            window,
            config: config.clone(),
            deriver: Deriver::new(pattern, window, config),
            templates: templates.clone(),
        }
    }

    pub fn explain(&mut self, m: &Match) -> Result<Explanation, MatchError> {
        let d = self.deriver.derive(m.start, m.end)?;
        let mut events = Vec::new();
        for step in d.steps() {
            events.push(self.event(&step)?);
        }
        events.sort_by_key(|e| e.frame);
        let mut e = Explanation { matched: m.clone(), events, sentences: vec![] };
        e.sentences = linearize(&e, &self.templates);
        Ok(e)
    }

    fn event(&self, step: &FrameStep) -> Result<ExplanationEvent, MatchError> {
        let frame = &self.window.frames[step.pos];
        let mut ctx = EvalContext::new(frame, step.binding, self.window.universe(step.pos));
        ctx.distance_scale = self.config.distance_scale;
        let bound: Vec<&str> = step.binding.iter().map(|(v, _)| v).collect();
        let f = step.formula;

        let mut quantities = Vec::new();
        collect_quantities(f, &ctx, &bound, &mut quantities)?;
        let mut participants = Vec::new();
        collect_participants(f, &ctx, &mut participants)?;

        let vacuous = f.vars().into_iter().find_map(|v| match step.binding.get(v) {
            Some(BoundValue::Vacuous { class }) => Some((v.to_string(), class.clone())),
            _ => None,
        });
        let kind = if let Some((var, class)) = vacuous {
            participants.clear();
            EventKind::Vacuous { var, class }
        } else {
            classify(f, &ctx)?
        };
        if let EventKind::Intersection { left, right } = &kind {
            participants = left.iter().chain(right).cloned().collect();
        }
        if let EventKind::Distance { left, right, .. } = &kind {
            participants = vec![left.clone(), right.clone()];
        }
        Ok(ExplanationEvent {
            frame: step.pos,
            fragment: format!("[{}]", formula_to_string(f, &bound)),
            formula: f.clone(),
            binding: step.binding.iter().map(|(v, b)| (v.to_string(), b.clone())).collect(),
            participants,
            quantities,
            kind,
        })
    }
}

/// Explanation of one match. Fails if the match cannot be reproduced.
pub fn explain_match(p: &Pattern, window: &WindowSample, m: &Match, config: &MatcherConfig) -> Result<Explanation, MatchError> {
    Explainer::new(p, window, config, &SentenceTemplates::default()).explain(m)
}

fn objects_of(t: &SpatialTerm, ctx: &EvalContext) -> Result<Vec<Participant>, MatchError> {
    Ok(match t {
        SpatialTerm::Class(c) => ctx
            .frame
            .keyed_objects()
            .filter(|(_, o)| &o.class_label == c)
            .map(|(k, o)| Participant { track_id: k, class: c.clone(), bbox: o.bbox })
            .collect(),
        SpatialTerm::Var(v) => ctx
            .bound_object(v)?
            .map(|(k, o)| Participant { track_id: k, class: o.class_label.clone(), bbox: o.bbox })
            .into_iter()
            .collect(),
        _ => Vec::new(),
    })
}

fn is_atom(t: &SpatialTerm) -> bool {
    matches!(t, SpatialTerm::Class(_) | SpatialTerm::Var(_))
}

fn collect_participants(f: &SpatialFormula, ctx: &EvalContext, out: &mut Vec<Participant>) -> Result<(), MatchError> {
    fn term(t: &SpatialTerm, ctx: &EvalContext, out: &mut Vec<Participant>) -> Result<(), MatchError> {
        match t {
            SpatialTerm::Class(_) | SpatialTerm::Var(_) => {
                for p in objects_of(t, ctx)? {
                    if !out.contains(&p) {
                        out.push(p);
                    }
                }
            }
            SpatialTerm::Intersect(a, b) | SpatialTerm::Union(a, b) => {
                term(a, ctx, out)?;
                term(b, ctx, out)?;
            }
            SpatialTerm::Complement(a) => term(a, ctx, out)?,
        }
        Ok(())
    }
    match f {
        SpatialFormula::True => Ok(()),
        SpatialFormula::NonEmpty(t) => term(t, ctx, out),
        SpatialFormula::Dist { left, right, .. } => {
            term(left, ctx, out)?;
            term(right, ctx, out)
        }
        SpatialFormula::And(a, b) | SpatialFormula::Or(a, b) => {
            collect_participants(a, ctx, out)?;
            collect_participants(b, ctx, out)
        }
        SpatialFormula::Not(a) => collect_participants(a, ctx, out),
    }
}

fn collect_quantities(f: &SpatialFormula, ctx: &EvalContext, bound: &[&str], out: &mut Vec<Quantity>) -> Result<(), MatchError> {
    match f {
        SpatialFormula::Dist { left, right, op, threshold } => {
            let value = term_distance(left, right, ctx)?;
            let show = |t: &SpatialTerm| formula_to_string(&SpatialFormula::NonEmpty(t.clone()), bound);
            out.push(Quantity { left: show(left), right: show(right), value, op: *op, threshold: *threshold });
            Ok(())
        }
        SpatialFormula::And(a, b) | SpatialFormula::Or(a, b) => {
            collect_quantities(a, ctx, bound, out)?;
            collect_quantities(b, ctx, bound, out)
        }
        SpatialFormula::Not(a) => collect_quantities(a, ctx, bound, out),
        SpatialFormula::True | SpatialFormula::NonEmpty(_) => Ok(()),
    }
}

fn overlaps(a: &BoundingBox, b: &BoundingBox) -> bool {
    a.x_min <= b.x_max && b.x_min <= a.x_max && a.y_min <= b.y_max && b.y_min <= a.y_max
}

fn classify(f: &SpatialFormula, ctx: &EvalContext) -> Result<EventKind, MatchError> {
    Ok(match f {
        SpatialFormula::True => EventKind::Wildcard,
        SpatialFormula::NonEmpty(SpatialTerm::Var(v)) => EventKind::Presence { var: v.clone() },
        SpatialFormula::NonEmpty(SpatialTerm::Class(c)) => EventKind::ClassPresence { class: c.clone() },
        SpatialFormula::NonEmpty(SpatialTerm::Intersect(a, b)) if is_atom(a) && is_atom(b) => {
            let (la, lb) = (objects_of(a, ctx)?, objects_of(b, ctx)?);
            let left: Vec<Participant> =
                la.iter().filter(|p| lb.iter().any(|q| overlaps(&p.bbox, &q.bbox))).cloned().collect();
            let right: Vec<Participant> =
                lb.iter().filter(|q| la.iter().any(|p| overlaps(&p.bbox, &q.bbox))).cloned().collect();
            if left.is_empty() || right.is_empty() {
                EventKind::Generic
            } else {
                EventKind::Intersection { left, right }
            }
        }
        SpatialFormula::Dist { left, right, op, threshold } if is_atom(left) && is_atom(right) => {
            let (la, lb) = (objects_of(left, ctx)?, objects_of(right, ctx)?);
            let mut best: Option<(f64, &Participant, &Participant)> = None;
            for p in &la {
                for q in &lb {
                    let d = Rect::from(p.bbox).distance(&Rect::from(q.bbox)) * ctx.distance_scale;
                    if best.is_none_or(|(b, _, _)| d < b) {
                        best = Some((d, p, q));
                    }
                }
            }
            match best {
                Some((value, p, q)) => EventKind::Distance {
                    left: p.clone(),
                    right: q.clone(),
                    value,
                    op: *op,
                    threshold: *threshold,
                },
                None => EventKind::Generic,
            }
        }
        _ => EventKind::Generic,
    })
}
