use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::region::{min_region_distance, RegionSet};
use crate::lang::{SpatialFormula, SpatialTerm};
use crate::stream::{BoundingBox, Frame, ObjectAnnotation, TrackKey};

/// What a quantified variable currently denotes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundValue {
    Track { class: String, track: TrackKey },
    /// Universal over an empty domain: every frame expression mentioning
    /// the variable is treated as `true`.
    Vacuous { class: String },
}

impl BoundValue {
    pub fn class(&self) -> &str {
        match self {
            BoundValue::Track { class, .. } | BoundValue::Vacuous { class } => class,
        }
    }

    pub fn track(&self) -> Option<&TrackKey> {
        match self {
            BoundValue::Track { track, .. } => Some(track),
            BoundValue::Vacuous { .. } => None,
        }
    }
}

/// Variable assignment, in binding order (outermost first).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Binding {
    entries: Vec<(String, BoundValue)>,
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&BoundValue> {
        self.entries.iter().rev().find(|(v, _)| v == var).map(|(_, b)| b)
    }

    /// A copy with `var` bound to `value`, replacing any previous binding.
    pub fn with(&self, var: &str, value: BoundValue) -> Binding {
        let mut entries: Vec<_> = self.entries.iter().filter(|(v, _)| v != var).cloned().collect();
        entries.push((var.to_string(), value));
        Binding { entries }
    }

    pub fn track(&self, var: &str, class: &str, track: impl Into<TrackKey>) -> Binding {
        self.with(var, BoundValue::Track { class: class.to_string(), track: track.into() })
    }

    /// Restriction to the listed variables.
    pub fn project(&self, vars: &[String]) -> Binding {
        Binding { entries: self.entries.iter().filter(|(v, _)| vars.contains(v)).cloned().collect() }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BoundValue)> {
        self.entries.iter().map(|(v, b)| (v.as_str(), b))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (v, b)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            match b {
                BoundValue::Track { class, track } => write!(f, "{v}: {class} {track}")?,
                BoundValue::Vacuous { class } => write!(f, "{v}: no {class}")?,
            }
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
}

/// One frame plus the variable binding and complement universe.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub frame: &'a Frame,
    pub binding: &'a Binding,
    pub universe: BoundingBox,
    /// Multiplies region distances before thresholds are compared.
    pub distance_scale: f64,
}

impl<'a> EvalContext<'a> {
    pub fn new(frame: &'a Frame, binding: &'a Binding, universe: BoundingBox) -> Self {
        Self { frame, binding, universe, distance_scale: 1.0 }
    }

    /// Object currently bound to `var`, if it is present in this frame.
    pub fn bound_object(&self, var: &str) -> Result<Option<(TrackKey, &'a ObjectAnnotation)>, EvalError> {
        match self.binding.get(var) {
            None => Err(EvalError::UnboundVariable(var.to_string())),
            Some(BoundValue::Vacuous { .. }) => Ok(None),
            Some(BoundValue::Track { class, track }) => {
                Ok(self.frame.find(class, track).map(|o| (track.clone(), o)))
            }
        }
    }

    fn boxes_of_term(&self, t: &SpatialTerm, out: &mut Vec<BoundingBox>) -> Result<(), EvalError> {
        match t {
            SpatialTerm::Class(c) => out.extend(self.frame.objects_of(c).map(|o| o.bbox)),
            SpatialTerm::Var(v) => out.extend(self.bound_object(v)?.map(|(_, o)| o.bbox)),
            SpatialTerm::Intersect(a, b) | SpatialTerm::Union(a, b) => {
                self.boxes_of_term(a, out)?;
                self.boxes_of_term(b, out)?;
            }
            SpatialTerm::Complement(a) => self.boxes_of_term(a, out)?,
        }
        Ok(())
    }

    fn boxes_of_formula(&self, f: &SpatialFormula, out: &mut Vec<BoundingBox>) -> Result<(), EvalError> {
        match f {
            SpatialFormula::True => Ok(()),
            SpatialFormula::NonEmpty(t) => self.boxes_of_term(t, out),
            SpatialFormula::Dist { left, right, .. } => {
                self.boxes_of_term(left, out)?;
                self.boxes_of_term(right, out)
            }
            SpatialFormula::And(a, b) | SpatialFormula::Or(a, b) => {
                self.boxes_of_formula(a, out)?;
                self.boxes_of_formula(b, out)
            }
            SpatialFormula::Not(a) => self.boxes_of_formula(a, out),
        }
    }

    fn region(&self, t: &SpatialTerm, base: &RegionSet) -> Result<RegionSet, EvalError> {
        Ok(match t {
            SpatialTerm::Class(c) => base.sibling_with_boxes(self.frame.objects_of(c).map(|o| &o.bbox)),
            SpatialTerm::Var(v) => base.sibling_with_boxes(self.bound_object(v)?.map(|(_, o)| &o.bbox)),
            SpatialTerm::Intersect(a, b) => self.region(a, base)?.intersect(&self.region(b, base)?),
            SpatialTerm::Union(a, b) => self.region(a, base)?.union(&self.region(b, base)?),
            SpatialTerm::Complement(a) => self.region(a, base)?.complement(),
        })
    }

    fn formula(&self, f: &SpatialFormula, base: &RegionSet) -> Result<bool, EvalError> {
        Ok(match f {
            SpatialFormula::True => true,
            SpatialFormula::NonEmpty(t) => !self.region(t, base)?.is_empty(),
            SpatialFormula::Dist { left, right, op, threshold } => {
                match min_region_distance(&self.region(left, base)?, &self.region(right, base)?) {
                    Some(d) => op.holds(d * self.distance_scale, *threshold),
                    None => false,
                }
            }
            SpatialFormula::And(a, b) => self.formula(a, base)? && self.formula(b, base)?,
            SpatialFormula::Or(a, b) => self.formula(a, base)? || self.formula(b, base)?,
            SpatialFormula::Not(a) => !self.formula(a, base)?,
        })
    }
}

/// Region denoted by `term` in the context's frame. A variable whose track
/// is absent from the frame denotes the empty region.
pub fn resolve_term(term: &SpatialTerm, ctx: &EvalContext) -> Result<RegionSet, EvalError> {
    let mut boxes = Vec::new();
    ctx.boxes_of_term(term, &mut boxes)?;
    let base = RegionSet::empty_over(ctx.universe, &boxes);
    ctx.region(term, &base)
}

/// Truth of `f` in the context's frame. Any formula mentioning a vacuously
/// bound variable is true.
pub fn eval_formula(f: &SpatialFormula, ctx: &EvalContext) -> Result<bool, EvalError> {
    let mut vacuous = false;
    for v in f.vars() {
        match ctx.binding.get(v) {
            None => return Err(EvalError::UnboundVariable(v.to_string())),
            Some(BoundValue::Vacuous { .. }) => vacuous = true,
            Some(BoundValue::Track { .. }) => {}
        }
    }
    if vacuous {
        return Ok(true);
    }
    let mut boxes = Vec::new();
    ctx.boxes_of_formula(f, &mut boxes)?;
    let base = RegionSet::empty_over(ctx.universe, &boxes);
    ctx.formula(f, &base)
}

/// Scaled minimum distance between two terms, `None` if either is empty.
pub fn term_distance(left: &SpatialTerm, right: &SpatialTerm, ctx: &EvalContext) -> Result<Option<f64>, EvalError> {
    let mut boxes = Vec::new();
    ctx.boxes_of_term(left, &mut boxes)?;
    ctx.boxes_of_term(right, &mut boxes)?;
    let base = RegionSet::empty_over(ctx.universe, &boxes);
    let d = min_region_distance(&ctx.region(left, &base)?, &ctx.region(right, &base)?);
    Ok(d.map(|d| d * ctx.distance_scale))
}
