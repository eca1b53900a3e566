use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A region-valued expression evaluated inside one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpatialTerm {
    /// Union of the boxes of every object of this class.
    Class(String),
    /// Box of the object bound to this variable (empty if it is absent).
    Var(String),
    Intersect(Box<SpatialTerm>, Box<SpatialTerm>),
    Union(Box<SpatialTerm>, Box<SpatialTerm>),
    /// Complement relative to the frame universe.
    Complement(Box<SpatialTerm>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// A boolean condition on one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpatialFormula {
    True,
    NonEmpty(SpatialTerm),
    /// Minimum point-to-point distance between two regions compared
    /// against a threshold in annotation units.
    Dist { left: SpatialTerm, right: SpatialTerm, op: CmpOp, threshold: f64 },
    And(Box<SpatialFormula>, Box<SpatialFormula>),
    Or(Box<SpatialFormula>, Box<SpatialFormula>),
    Not(Box<SpatialFormula>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantifier {
    Exists,
    Forall,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Exists => "exists",
            Quantifier::Forall => "forall",
        }
    }
}

/// Desugared pattern: the six core constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Pattern {
    /// Consumes exactly one frame satisfying the formula.
    Frame(SpatialFormula),
    Concat(Box<Pattern>, Box<Pattern>),
    Alt(Box<Pattern>, Box<Pattern>),
    Star(Box<Pattern>),
    Quantified { quantifier: Quantifier, var: String, class: String, body: Box<Pattern> },
}

impl SpatialTerm {
    pub fn class(name: &str) -> Self {
        SpatialTerm::Class(name.to_string())
    }

    pub fn var(name: &str) -> Self {
        SpatialTerm::Var(name.to_string())
    }

    pub fn intersect(a: SpatialTerm, b: SpatialTerm) -> Self {
        SpatialTerm::Intersect(Box::new(a), Box::new(b))
    }

    pub fn union(a: SpatialTerm, b: SpatialTerm) -> Self {
        SpatialTerm::Union(Box::new(a), Box::new(b))
    }

    pub fn complement(a: SpatialTerm) -> Self {
        SpatialTerm::Complement(Box::new(a))
    }

    pub fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            SpatialTerm::Class(_) => {}
            SpatialTerm::Var(v) => {
                out.insert(v);
            }
            SpatialTerm::Intersect(a, b) | SpatialTerm::Union(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            SpatialTerm::Complement(a) => a.collect_vars(out),
        }
    }

    pub fn collect_classes<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            SpatialTerm::Class(c) => {
                out.insert(c);
            }
            SpatialTerm::Var(_) => {}
            SpatialTerm::Intersect(a, b) | SpatialTerm::Union(a, b) => {
                a.collect_classes(out);
                b.collect_classes(out);
            }
            SpatialTerm::Complement(a) => a.collect_classes(out),
        }
    }
}

impl SpatialFormula {
    pub fn non_empty(t: SpatialTerm) -> Self {
        SpatialFormula::NonEmpty(t)
    }

    pub fn dist(left: SpatialTerm, right: SpatialTerm, op: CmpOp, threshold: f64) -> Self {
        SpatialFormula::Dist { left, right, op, threshold }
    }

    pub fn and(a: SpatialFormula, b: SpatialFormula) -> Self {
        SpatialFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: SpatialFormula, b: SpatialFormula) -> Self {
        SpatialFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: SpatialFormula) -> Self {
        SpatialFormula::Not(Box::new(a))
    }

    /// Variables mentioned anywhere in the formula.
    pub fn vars(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.vars().contains(var)
    }

    pub fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            SpatialFormula::True => {}
            SpatialFormula::NonEmpty(t) => t.collect_vars(out),
            SpatialFormula::Dist { left, right, .. } => {
                left.collect_vars(out);
                right.collect_vars(out);
            }
            SpatialFormula::And(a, b) | SpatialFormula::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            SpatialFormula::Not(a) => a.collect_vars(out),
        }
    }

    pub fn collect_classes<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            SpatialFormula::True => {}
            SpatialFormula::NonEmpty(t) => t.collect_classes(out),
            SpatialFormula::Dist { left, right, .. } => {
                left.collect_classes(out);
                right.collect_classes(out);
            }
            SpatialFormula::And(a, b) | SpatialFormula::Or(a, b) => {
                a.collect_classes(out);
                b.collect_classes(out);
            }
            SpatialFormula::Not(a) => a.collect_classes(out),
        }
    }

    /// Visits every distance threshold.
    pub fn thresholds(&self, out: &mut Vec<f64>) {
        match self {
            SpatialFormula::Dist { threshold, .. } => out.push(*threshold),
            SpatialFormula::And(a, b) | SpatialFormula::Or(a, b) => {
                a.thresholds(out);
                b.thresholds(out);
            }
            SpatialFormula::Not(a) => a.thresholds(out),
            SpatialFormula::True | SpatialFormula::NonEmpty(_) => {}
        }
    }
}

impl Pattern {
    pub fn frame(f: SpatialFormula) -> Self {
        Pattern::Frame(f)
    }

    /// Wildcard frame.
    pub fn any() -> Self {
        Pattern::Frame(SpatialFormula::True)
    }

    /// Presence of a bound variable.
    pub fn var(name: &str) -> Self {
        Pattern::Frame(SpatialFormula::NonEmpty(SpatialTerm::var(name)))
    }

    pub fn class(name: &str) -> Self {
        Pattern::Frame(SpatialFormula::NonEmpty(SpatialTerm::class(name)))
    }

    pub fn concat(a: Pattern, b: Pattern) -> Self {
        Pattern::Concat(Box::new(a), Box::new(b))
    }

    pub fn alt(a: Pattern, b: Pattern) -> Self {
        Pattern::Alt(Box::new(a), Box::new(b))
    }

    pub fn star(a: Pattern) -> Self {
        Pattern::Star(Box::new(a))
    }

    pub fn exists(var: &str, class: &str, body: Pattern) -> Self {
        Pattern::Quantified { quantifier: Quantifier::Exists, var: var.to_string(), class: class.to_string(), body: Box::new(body) }
    }

    pub fn forall(var: &str, class: &str, body: Pattern) -> Self {
        Pattern::Quantified { quantifier: Quantifier::Forall, var: var.to_string(), class: class.to_string(), body: Box::new(body) }
    }

    /// Matches only the empty sequence. There is no dedicated constructor,
    /// so this is the star of an unsatisfiable frame.
    pub fn epsilon() -> Self {
        Pattern::star(Pattern::Frame(SpatialFormula::not(SpatialFormula::True)))
    }

    pub fn is_epsilon(&self) -> bool {
        matches!(self, Pattern::Star(inner) if matches!(&**inner,
            Pattern::Frame(SpatialFormula::Not(f)) if **f == SpatialFormula::True))
    }

    /// Concatenation of `n >= 1` copies.
    pub fn power(&self, n: usize) -> Pattern {
        assert!(n >= 1);
        let mut out = self.clone();
        for _ in 1..n {
            out = Pattern::concat(out, self.clone());
        }
        out
    }

    /// Variables referenced but not bound inside this pattern.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut Vec::new(), &mut out);
        out
    }

    fn free_vars_into(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Pattern::Frame(f) => {
                for v in f.vars() {
                    if !bound.iter().any(|b| b == v) {
                        out.insert(v.to_string());
                    }
                }
            }
            Pattern::Concat(a, b) | Pattern::Alt(a, b) => {
                a.free_vars_into(bound, out);
                b.free_vars_into(bound, out);
            }
            Pattern::Star(a) => a.free_vars_into(bound, out),
            Pattern::Quantified { var, body, .. } => {
                bound.push(var.clone());
                body.free_vars_into(bound, out);
                bound.pop();
            }
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Pattern::Frame(_) => 1,
            Pattern::Concat(a, b) | Pattern::Alt(a, b) => 1 + a.size() + b.size(),
            Pattern::Star(a) => 1 + a.size(),
            Pattern::Quantified { body, .. } => 1 + body.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Pattern::Frame(_) => 1,
            Pattern::Concat(a, b) | Pattern::Alt(a, b) => 1 + a.depth().max(b.depth()),
            Pattern::Star(a) => 1 + a.depth(),
            Pattern::Quantified { body, .. } => 1 + body.depth(),
        }
    }

    /// Deepest chain of nested quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Pattern::Frame(_) => 0,
            Pattern::Concat(a, b) | Pattern::Alt(a, b) => a.quantifier_depth().max(b.quantifier_depth()),
            Pattern::Star(a) => a.quantifier_depth(),
            Pattern::Quantified { body, .. } => 1 + body.quantifier_depth(),
        }
    }

    /// Class labels used in atoms and binders.
    pub fn classes(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_classes(&mut out);
        out
    }

    fn collect_classes<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Pattern::Frame(f) => f.collect_classes(out),
            Pattern::Concat(a, b) | Pattern::Alt(a, b) => {
                a.collect_classes(out);
                b.collect_classes(out);
            }
            Pattern::Star(a) => a.collect_classes(out),
            Pattern::Quantified { class, body, .. } => {
                out.insert(class);
                body.collect_classes(out);
            }
        }
    }

    /// Replaces every frame expression that mentions `var` with the
    /// wildcard frame.
    pub fn substitute_true(&self, var: &str) -> Pattern {
        match self {
            Pattern::Frame(f) if f.mentions(var) => Pattern::any(),
            Pattern::Frame(_) => self.clone(),
            Pattern::Concat(a, b) => Pattern::concat(a.substitute_true(var), b.substitute_true(var)),
            Pattern::Alt(a, b) => Pattern::alt(a.substitute_true(var), b.substitute_true(var)),
            Pattern::Star(a) => Pattern::star(a.substitute_true(var)),
            Pattern::Quantified { quantifier, var: v, class, body } => Pattern::Quantified {
                quantifier: *quantifier,
                var: v.clone(),
                class: class.clone(),
                body: Box::new(body.substitute_true(var)),
            },
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::pretty_print(self))
    }
}

impl fmt::Display for SpatialFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::printer::formula_to_string(self, &[]))
    }
}

/// Query category of the template that produced a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Sequence,
    Spatial,
    Temporal,
    Metric,
    Existential,
}

impl Category {
    pub const ALL: [Category; 5] =
        [Category::Sequence, Category::Spatial, Category::Temporal, Category::Metric, Category::Existential];

    pub fn name(self) -> &'static str {
        match self {
            Category::Sequence => "Sequence",
            Category::Spatial => "Spatial",
            Category::Temporal => "Temporal",
            Category::Metric => "Metric",
            Category::Existential => "Existential",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A pattern paired with its natural-language rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    /// Source text of the pattern as written (with sugar).
    pub spre: String,
    pub pattern: Pattern,
    pub nl_text: String,
    pub category: Category,
}
