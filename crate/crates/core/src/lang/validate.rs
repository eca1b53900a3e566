use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::ast::{Pattern, Query, SpatialFormula, SpatialTerm};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryViolationKind {
    UnknownClass { class: String },
    UnboundVariable { var: String },
    Shadowing { var: String },
    NegativeThreshold { threshold: f64 },
    NonFiniteThreshold,
    EmptyNlText,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryViolation {
    #[serde(flatten)]
    pub kind: QueryViolationKind,
}

impl fmt::Display for QueryViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            QueryViolationKind::UnknownClass { class } => write!(f, "unknown class `{class}`"),
            QueryViolationKind::UnboundVariable { var } => write!(f, "unbound variable `{var}`"),
            QueryViolationKind::Shadowing { var } => write!(f, "variable `{var}` shadows an enclosing binder"),
            QueryViolationKind::NegativeThreshold { threshold } => write!(f, "negative distance threshold {threshold}"),
            QueryViolationKind::NonFiniteThreshold => f.write_str("non-finite distance threshold"),
            QueryViolationKind::EmptyNlText => f.write_str("empty natural-language text"),
        }
    }
}

/// Static checks on a pattern: class labels against `vocab`, scoping, and
/// distance thresholds. An empty result means the pattern is valid.
pub fn validate_pattern(p: &Pattern, vocab: &BTreeSet<String>) -> Vec<QueryViolation> {
    let mut out = Vec::new();
    walk(p, vocab, &mut Vec::new(), &mut out);
    out
}

pub fn validate_query(q: &Query, vocab: &BTreeSet<String>) -> Vec<QueryViolation> {
    let mut out = validate_pattern(&q.pattern, vocab);
    if q.nl_text.trim().is_empty() {
        out.push(QueryViolation { kind: QueryViolationKind::EmptyNlText });
    }
    out
}

fn push(out: &mut Vec<QueryViolation>, kind: QueryViolationKind) {
    let v = QueryViolation { kind };
    if !out.contains(&v) {
        out.push(v);
    }
}

fn walk(p: &Pattern, vocab: &BTreeSet<String>, scope: &mut Vec<String>, out: &mut Vec<QueryViolation>) {
    match p {
        Pattern::Frame(f) => formula(f, vocab, scope, out),
        Pattern::Concat(a, b) | Pattern::Alt(a, b) => {
            walk(a, vocab, scope, out);
            walk(b, vocab, scope, out);
        }
        Pattern::Star(a) => walk(a, vocab, scope, out),
        Pattern::Quantified { var, class, body, .. } => {
            if !vocab.contains(class) {
                push(out, QueryViolationKind::UnknownClass { class: class.clone() });
            }
            if scope.contains(var) {
                push(out, QueryViolationKind::Shadowing { var: var.clone() });
            }
            scope.push(var.clone());
            walk(body, vocab, scope, out);
            scope.pop();
        }
    }
}

fn formula(f: &SpatialFormula, vocab: &BTreeSet<String>, scope: &[String], out: &mut Vec<QueryViolation>) {
    match f {
        SpatialFormula::True => {}
        SpatialFormula::NonEmpty(t) => term(t, vocab, scope, out),
        SpatialFormula::Dist { left, right, threshold, .. } => {
            term(left, vocab, scope, out);
            term(right, vocab, scope, out);
            if !threshold.is_finite() {
                push(out, QueryViolationKind::NonFiniteThreshold);
            } else if *threshold < 0.0 {
                push(out, QueryViolationKind::NegativeThreshold { threshold: *threshold });
            }
        }
        SpatialFormula::And(a, b) | SpatialFormula::Or(a, b) => {
            formula(a, vocab, scope, out);
            formula(b, vocab, scope, out);
        }
        SpatialFormula::Not(a) => formula(a, vocab, scope, out),
    }
}

fn term(t: &SpatialTerm, vocab: &BTreeSet<String>, scope: &[String], out: &mut Vec<QueryViolation>) {
    match t {
        SpatialTerm::Class(c) => {
            if !vocab.contains(c) {
                push(out, QueryViolationKind::UnknownClass { class: c.clone() });
            }
        }
        SpatialTerm::Var(v) => {
            if !scope.contains(v) {
                push(out, QueryViolationKind::UnboundVariable { var: v.clone() });
            }
        }
        SpatialTerm::Intersect(a, b) | SpatialTerm::Union(a, b) => {
            term(a, vocab, scope, out);
            term(b, vocab, scope, out);
        }
        SpatialTerm::Complement(a) => term(a, vocab, scope, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, CmpOp};

    fn vocab(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn unknown_class() {
        let r = validate_pattern(&Pattern::class("unicorn"), &vocab(&["car", "bus"]));
        assert_eq!(r, vec![QueryViolation { kind: QueryViolationKind::UnknownClass { class: "unicorn".into() } }]);
    }

    #[test]
    fn same_pedestrian_five_frames_is_valid() {
        let p = parse("exists p <- [pedestrian] . p{5}").unwrap();
        assert!(validate_pattern(&p, &vocab(&["pedestrian", "car"])).is_empty());
    }

    #[test]
    fn shadowing_and_unbound() {
        let p = Pattern::forall("x", "car", Pattern::exists("x", "bus", Pattern::var("x")));
        let r = validate_pattern(&p, &vocab(&["car", "bus"]));
        assert_eq!(r, vec![QueryViolation { kind: QueryViolationKind::Shadowing { var: "x".into() } }]);
        let r = validate_pattern(&Pattern::var("y"), &vocab(&[]));
        assert_eq!(r[0].kind, QueryViolationKind::UnboundVariable { var: "y".into() });
    }

    #[test]
    fn negative_threshold() {
        let f = SpatialFormula::dist(SpatialTerm::class("car"), SpatialTerm::class("car"), CmpOp::Lt, -1.0);
        let r = validate_pattern(&Pattern::Frame(f), &vocab(&["car"]));
        assert_eq!(r[0].kind, QueryViolationKind::NegativeThreshold { threshold: -1.0 });
    }
}
