use std::collections::HashMap;
use std::rc::Rc;

use serde::Serialize;

use super::domain::{combine_scope, domain_members, WindowIndex};
use super::intervals::IntervalSet;
use super::{MatchError, MatcherConfig, Witness, WitnessValue};
use crate::lang::{Pattern, Quantifier, SpatialFormula};
use crate::spatial::{eval_formula, Binding, BoundValue, EvalContext};
use crate::stream::{TrackKey, WindowSample};

/// One accepting run of a pattern over an interval, as a tree.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Derivation {
    /// A frame expression consumed the frame at `pos`.
    Frame {
        pos: usize,
        formula: SpatialFormula,
        #[serde(skip)]
        binding: Binding,
    },
    /// Consecutive sub-runs, left to right.
    Seq { parts: Vec<Derivation> },
    /// The empty run at `pos`.
    Empty { pos: usize },
    /// A quantifier over `[start, end)`. Existentials have one branch (the
    /// witness); universals have one per domain member, or a single
    /// vacuous branch when the domain is empty.
    Scope {
        quantifier: Quantifier,
        var: String,
        class: String,
        start: usize,
        end: usize,
        domain: Vec<TrackKey>,
        branches: Vec<(BoundValue, Derivation)>,
    },
}

/// A frame consumed along a derivation, with the binding in force.
#[derive(Debug, Clone)]
pub struct FrameStep<'d> {
    pub pos: usize,
    pub formula: &'d SpatialFormula,
    pub binding: &'d Binding,
}

impl Derivation {
    /// Frame leaves in pre-order. Universals contribute one leaf per branch.
    pub fn steps(&self) -> Vec<FrameStep<'_>> {
        let mut out = Vec::new();
        self.collect_steps(&mut out);
        out
    }

    fn collect_steps<'d>(&'d self, out: &mut Vec<FrameStep<'d>>) {
        match self {
            Derivation::Frame { pos, formula, binding } => out.push(FrameStep { pos: *pos, formula, binding }),
            Derivation::Seq { parts } => parts.iter().for_each(|p| p.collect_steps(out)),
            Derivation::Empty { .. } => {}
            Derivation::Scope { branches, .. } => branches.iter().for_each(|(_, d)| d.collect_steps(out)),
        }
    }

    /// First binding of each existential outside universals; universals are
    /// recorded as ranging over their whole class.
    pub fn witness(&self) -> Witness {
        let mut w = Witness::new();
        self.collect_witness(&mut w);
        w
    }

    fn collect_witness(&self, w: &mut Witness) {
        match self {
            Derivation::Frame { .. } | Derivation::Empty { .. } => {}
            Derivation::Seq { parts } => parts.iter().for_each(|p| p.collect_witness(w)),
            Derivation::Scope { quantifier: Quantifier::Forall, var, class, branches, .. } => {
                w.entry(var.clone()).or_insert_with(|| WitnessValue::All { class: class.clone() });
                // Bindings below a universal depend on its value; only
                // nested universals are reported.
                for (_, d) in branches {
                    d.collect_universals(w);
                }
            }
            Derivation::Scope { var, class, branches, .. } => {
                if let Some((BoundValue::Track { track, .. }, d)) = branches.first() {
                    w.entry(var.clone()).or_insert_with(|| WitnessValue::Track { class: class.clone(), track: track.clone() });
                    d.collect_witness(w);
                }
            }
        }
    }

    fn collect_universals(&self, w: &mut Witness) {
        match self {
            Derivation::Frame { .. } | Derivation::Empty { .. } => {}
            Derivation::Seq { parts } => parts.iter().for_each(|p| p.collect_universals(w)),
            Derivation::Scope { quantifier, var, class, branches, .. } => {
                if *quantifier == Quantifier::Forall {
                    w.entry(var.clone()).or_insert_with(|| WitnessValue::All { class: class.clone() });
                }
                for (_, d) in branches {
                    d.collect_universals(w);
                }
            }
        }
    }
}

/// Rebuilds accepting runs from the denotational semantics, choosing
/// deterministically: left alternative first, shortest prefix at each
/// split, smallest track for existentials.
pub struct Deriver<'p, 'w> {
    pattern: &'p Pattern,
    config: MatcherConfig,
    index: WindowIndex<'w>,
    free: HashMap<usize, Rc<Vec<String>>>,
    den_cache: HashMap<(usize, Binding), Rc<IntervalSet>>,
}

fn addr(p: &Pattern) -> usize {
    p as *const Pattern as usize
}

impl<'p, 'w> Deriver<'p, 'w> {
    pub fn new(pattern: &'p Pattern, window: &'w WindowSample, config: &MatcherConfig) -> Self {
        Deriver { pattern, config: config.clone(), index: WindowIndex::new(window), free: HashMap::new(), den_cache: HashMap::new() }
    }

    /// Derivation of the whole pattern over frames `start..=end`.
    pub fn derive(&mut self, start: usize, end: usize) -> Result<Derivation, MatchError> {
        let (s, e) = (start, end + 1);
        if e > self.index.len() || !self.den(self.pattern, &Binding::new())?.contains(s, e) {
            return Err(MatchError::NotReproducible { start, end });
        }
        self.build(self.pattern, &Binding::new(), s, e)
    }

    pub fn witness(&mut self, start: usize, end: usize) -> Result<Witness, MatchError> {
        Ok(self.derive(start, end)?.witness())
    }

    fn free_vars(&mut self, p: &Pattern) -> Rc<Vec<String>> {
        self.free.entry(addr(p)).or_insert_with(|| Rc::new(p.free_vars().into_iter().collect())).clone()
    }

    fn holds(&self, f: &SpatialFormula, pos: usize, b: &Binding) -> Result<bool, MatchError> {
        let mut ctx = EvalContext::new(&self.index.window.frames[pos], b, self.index.universes[pos]);
        ctx.distance_scale = self.config.distance_scale;
        Ok(eval_formula(f, &ctx)?)
    }

    fn den(&mut self, p: &'p Pattern, b: &Binding) -> Result<Rc<IntervalSet>, MatchError> {
        let free = self.free_vars(p);
        let key = (addr(p), b.project(&free));
        if let Some(r) = self.den_cache.get(&key) {
            return Ok(r.clone());
        }
        let b = &key.1;
        let len = self.index.len();
        let r = match p {
            Pattern::Frame(f) => {
                let mut r = IntervalSet::new(len);
                for pos in 0..len {
                    if self.holds(f, pos, b)? {
                        r.insert(pos, pos + 1);
                    }
                }
                r
            }
            Pattern::Concat(x, y) => self.den(x, b)?.compose(&*self.den(y, b)?),
            Pattern::Alt(x, y) => {
                let mut r = (*self.den(x, b)?).clone();
                r.union_with(&*self.den(y, b)?);
                r
            }
            Pattern::Star(x) => self.den(x, b)?.star(),
            Pattern::Quantified { quantifier, var, class, body } => {
                let tracks = self.index.class(class);
                let mut per = Vec::with_capacity(tracks.candidates.len());
                for t in &tracks.candidates {
                    per.push((*self.den(body, &b.track(var, class, t.clone()))?).clone());
                }
                let vac = match quantifier {
                    Quantifier::Forall => Some(self.den(body, &b.with(var, BoundValue::Vacuous { class: class.clone() }))?),
                    Quantifier::Exists => None,
                };
                combine_scope(*quantifier, &tracks, self.config.policy, &per, vac.as_deref())
            }
        };
        let r = Rc::new(r);
        self.den_cache.insert(key, r.clone());
        Ok(r)
    }

    fn build(&mut self, p: &'p Pattern, b: &Binding, s: usize, e: usize) -> Result<Derivation, MatchError> {
        let lost = MatchError::NotReproducible { start: s, end: e.saturating_sub(1) };
        match p {
            Pattern::Frame(f) => Ok(Derivation::Frame { pos: s, formula: f.clone(), binding: b.clone() }),
            Pattern::Concat(x, y) => {
                let (dx, dy) = (self.den(x, b)?, self.den(y, b)?);
                let m = (s..=e).find(|&m| dx.contains(s, m) && dy.contains(m, e)).ok_or(lost)?;
                Ok(seq(self.build(x, b, s, m)?, self.build(y, b, m, e)?))
            }
            Pattern::Alt(x, y) => {
                if self.den(x, b)?.contains(s, e) {
                    self.build(x, b, s, e)
                } else {
                    self.build(y, b, s, e)
                }
            }
            Pattern::Star(x) => {
                if s == e {
                    return Ok(Derivation::Empty { pos: s });
                }
                let (dx, dp) = (self.den(x, b)?, self.den(p, b)?);
                let m = (s + 1..=e).find(|&m| dx.contains(s, m) && dp.contains(m, e)).ok_or(lost)?;
                Ok(seq(self.build(x, b, s, m)?, self.build(p, b, m, e)?))
            }
            Pattern::Quantified { quantifier, var, class, body } => {
                let tracks = self.index.class(class);
                let members = domain_members(&tracks, self.config.policy, s, e);
                let domain: Vec<TrackKey> = members.iter().map(|&k| tracks.candidates[k].clone()).collect();
                let mut branches = Vec::new();
                match quantifier {
                    Quantifier::Exists => {
                        for t in &domain {
                            let bt = b.track(var, class, t.clone());
                            if self.den(body, &bt)?.contains(s, e) {
                                let d = self.build(body, &bt, s, e)?;
                                branches.push((bt.get(var).cloned().expect("just bound"), d));
                                break;
                            }
                        }
                        if branches.is_empty() {
                            return Err(lost);
                        }
                    }
                    Quantifier::Forall => {
                        let values: Vec<BoundValue> = if domain.is_empty() {
                            vec![BoundValue::Vacuous { class: class.clone() }]
                        } else {
                            domain.iter().map(|t| BoundValue::Track { class: class.clone(), track: t.clone() }).collect()
                        };
                        for v in values {
                            let bv = b.with(var, v.clone());
                            if !self.den(body, &bv)?.contains(s, e) {
                                return Err(lost);
                            }
                            branches.push((v, self.build(body, &bv, s, e)?));
                        }
                    }
                }
                Ok(Derivation::Scope { quantifier: *quantifier, var: var.clone(), class: class.clone(), start: s, end: e, domain, branches })
            }
        }
    }
}

fn seq(a: Derivation, b: Derivation) -> Derivation {
    let mut parts = Vec::new();
    for d in [a, b] {
        match d {
            Derivation::Seq { parts: inner } => parts.extend(inner),
            Derivation::Empty { .. } => {}
            other => parts.push(other),
        }
    }
    match parts.len() {
        1 => parts.pop().unwrap(),
        _ => Derivation::Seq { parts },
    }
}
