use std::collections::HashMap;
use std::rc::Rc;

use super::compile::{CompiledPattern, Edge};
use super::domain::{combine_scope, WindowIndex};
use super::intervals::IntervalSet;
use super::{MatchError, MatcherConfig};
use crate::lang::Quantifier;
use crate::spatial::{eval_formula, Binding, BoundValue, EvalContext};
use crate::stream::WindowSample;

/// Simulates compiled automata over one window, enumerating quantifier
/// bindings lazily and caching guard and scope results.
pub(crate) struct Engine<'a> {
    cp: &'a CompiledPattern,
    config: &'a MatcherConfig,
    index: WindowIndex<'a>,
    guard_cache: HashMap<(usize, usize, Binding), bool>,
    scope_cache: HashMap<(usize, Binding), Rc<IntervalSet>>,
    bindings: usize,
}

impl<'a> Engine<'a> {
    pub fn new(cp: &'a CompiledPattern, window: &'a WindowSample, config: &'a MatcherConfig) -> Self {
        Engine {
            cp,
            config,
            index: WindowIndex::new(window),
            guard_cache: HashMap::new(),
            scope_cache: HashMap::new(),
            bindings: 0,
        }
    }

    /// Intervals accepted by the top-level automaton.
    pub fn run(&mut self) -> Result<IntervalSet, MatchError> {
        self.relation(0, &Binding::new())
    }

    fn guard(&mut self, g: usize, pos: usize, binding: &Binding) -> Result<bool, MatchError> {
        let cp = self.cp;
        let guard = &cp.guards[g];
        let key = (g, pos, binding.project(&guard.vars));
        if let Some(&v) = self.guard_cache.get(&key) {
            return Ok(v);
        }
        let frame = &self.index.window.frames[pos];
        let mut ctx = EvalContext::new(frame, &key.2, self.index.universes[pos]);
        ctx.distance_scale = self.config.distance_scale;
        let v = eval_formula(&guard.formula, &ctx)?;
        self.guard_cache.insert(key, v);
        Ok(v)
    }

    fn scope(&mut self, k: usize, binding: &Binding) -> Result<Rc<IntervalSet>, MatchError> {
        let cp = self.cp;
        let scope = &cp.scopes[k];
        let key = (k, binding.project(&scope.free));
        if let Some(r) = self.scope_cache.get(&key) {
            return Ok(r.clone());
        }
        let tracks = self.index.class(&scope.class);
        let mut per_candidate = Vec::with_capacity(tracks.candidates.len());
        for track in &tracks.candidates {
            self.bindings += 1;
            if self.bindings > self.config.budget {
                return Err(MatchError::BudgetExceeded { budget: self.config.budget, chain: scope.chain.join(" . ") });
            }
            let b = key.1.with(&scope.var, BoundValue::Track { class: scope.class.clone(), track: track.clone() });
            per_candidate.push(self.relation(scope.body, &b)?);
        }
        let vacuous = match scope.quantifier {
            Quantifier::Forall => {
                let b = key.1.with(&scope.var, BoundValue::Vacuous { class: scope.class.clone() });
                Some(self.relation(scope.body, &b)?)
            }
            Quantifier::Exists => None,
        };
        let out = Rc::new(combine_scope(scope.quantifier, &tracks, self.config.policy, &per_candidate, vacuous.as_ref()));
        self.scope_cache.insert(key, out.clone());
        Ok(out)
    }

    /// Intervals `[s, e)` along which automaton `n` can run from its start
    /// to its accept state under `binding`.
    fn relation(&mut self, n: usize, binding: &Binding) -> Result<IntervalSet, MatchError> {
        let len = self.index.len();
        let cp = self.cp;
        let nfa = &cp.nfas[n];
        let states = nfa.states.len();
        let mut out = IntervalSet::new(len);
        let mut seen = vec![false; states * (len + 1)];
        let mut stack = Vec::new();
        for s in 0..=len {
            seen.fill(false);
            seen[nfa.start * (len + 1) + s] = true;
            stack.push((nfa.start, s));
            while let Some((q, pos)) = stack.pop() {
                if q == nfa.accept {
                    out.insert(s, pos);
                }
                for &(edge, to) in &nfa.states[q] {
                    match edge {
                        Edge::Epsilon => push(&mut seen, &mut stack, len, to, pos),
                        Edge::Guard(g) => {
                            if pos < len && self.guard(g, pos, binding)? {
                                push(&mut seen, &mut stack, len, to, pos + 1);
                            }
                        }
                        Edge::Scope(k) => {
                            let rel = self.scope(k, binding)?;
                            for e in rel.ends(pos) {
                                push(&mut seen, &mut stack, len, to, e);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn push(seen: &mut [bool], stack: &mut Vec<(usize, usize)>, len: usize, q: usize, pos: usize) {
    let k = q * (len + 1) + pos;
    if !seen[k] {
        seen[k] = true;
        stack.push((q, pos));
    }
}
