use std::fmt;

use crate::lang::{Pattern, Quantifier, SpatialFormula};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Edge {
    Epsilon,
    /// Consumes one frame satisfying `guards[i]`.
    Guard(usize),
    /// Consumes any interval matched by `scopes[i]`.
    Scope(usize),
}

/// Thompson automaton with a single start and a single accept state.
#[derive(Debug, Clone)]
pub(crate) struct Nfa {
    pub states: Vec<Vec<(Edge, usize)>>,
    pub start: usize,
    pub accept: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Guard {
    pub formula: SpatialFormula,
    pub vars: Vec<String>,
}

#[derive(Debug, Clone)]
pub(crate) struct Scope {
    pub quantifier: Quantifier,
    pub var: String,
    pub class: String,
    /// Automaton of the body, an index into `CompiledPattern::nfas`.
    pub body: usize,
    /// Variables free in the quantified pattern; scope results only depend
    /// on their values.
    pub free: Vec<String>,
    /// Quantifier prefix from the outermost binder down to this one.
    pub chain: Vec<String>,
}

/// A pattern compiled to nested automata: one per quantifier body plus the
/// top level (index 0).
#[derive(Debug, Clone)]
pub struct CompiledPattern {
    pub(crate) pattern: Pattern,
    pub(crate) nfas: Vec<Nfa>,
    pub(crate) guards: Vec<Guard>,
    pub(crate) scopes: Vec<Scope>,
}

/// Public view of one quantifier scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopeInfo {
    pub quantifier: Quantifier,
    pub var: String,
    pub class: String,
    pub depth: usize,
}

impl CompiledPattern {
    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    /// Total number of automaton states across all scopes.
    pub fn state_count(&self) -> usize {
        self.nfas.iter().map(|n| n.states.len()).sum()
    }

    pub fn transition_count(&self) -> usize {
        self.nfas.iter().flat_map(|n| &n.states).map(Vec::len).sum()
    }

    /// Quantifier scopes in pre-order.
    pub fn scopes(&self) -> Vec<ScopeInfo> {
        self.scopes
            .iter()
            .map(|s| ScopeInfo {
                quantifier: s.quantifier,
                var: s.var.clone(),
                class: s.class.clone(),
                depth: s.chain.len() - 1,
            })
            .collect()
    }
}

impl fmt::Display for CompiledPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, nfa) in self.nfas.iter().enumerate() {
            writeln!(f, "automaton {k}: start {} accept {}", nfa.start, nfa.accept)?;
            for (q, edges) in nfa.states.iter().enumerate() {
                for (edge, to) in edges {
                    match edge {
                        Edge::Epsilon => writeln!(f, "  {q} -> {to}")?,
                        Edge::Guard(g) => writeln!(f, "  {q} -[{}]-> {to}", self.guards[*g].formula)?,
                        Edge::Scope(s) => writeln!(f, "  {q} -<{}>-> {to}", self.scopes[*s].chain.join(" . "))?,
                    }
                }
            }
        }
        Ok(())
    }
}

/// Thompson construction. Each frame expression becomes one guarded
/// transition; each quantifier becomes a scope transition over the
/// automaton of its body.
pub fn compile(p: &Pattern) -> CompiledPattern {
    let mut cp = CompiledPattern { pattern: p.clone(), nfas: vec![], guards: vec![], scopes: vec![] };
    build_nfa(p, &mut cp, &mut Vec::new());
    cp
}

fn build_nfa(p: &Pattern, cp: &mut CompiledPattern, chain: &mut Vec<String>) -> usize {
    let idx = cp.nfas.len();
    cp.nfas.push(Nfa { states: vec![], start: 0, accept: 0 });
    let mut states = Vec::new();
    let (start, accept) = fragment(p, cp, chain, &mut states);
    cp.nfas[idx] = Nfa { states, start, accept };
    idx
}

fn new_state(states: &mut Vec<Vec<(Edge, usize)>>) -> usize {
    states.push(Vec::new());
    states.len() - 1
}

fn fragment(
    p: &Pattern,
    cp: &mut CompiledPattern,
    chain: &mut Vec<String>,
    states: &mut Vec<Vec<(Edge, usize)>>,
) -> (usize, usize) {
    match p {
        Pattern::Frame(f) => {
            let (s, t) = (new_state(states), new_state(states));
            cp.guards.push(Guard { formula: f.clone(), vars: f.vars().into_iter().map(String::from).collect() });
            states[s].push((Edge::Guard(cp.guards.len() - 1), t));
            (s, t)
        }
        Pattern::Concat(a, b) => {
            let (s1, t1) = fragment(a, cp, chain, states);
            let (s2, t2) = fragment(b, cp, chain, states);
            states[t1].push((Edge::Epsilon, s2));
            (s1, t2)
        }
        Pattern::Alt(a, b) => {
            let s = new_state(states);
            let (s1, t1) = fragment(a, cp, chain, states);
            let (s2, t2) = fragment(b, cp, chain, states);
            let t = new_state(states);
            states[s].extend([(Edge::Epsilon, s1), (Edge::Epsilon, s2)]);
            states[t1].push((Edge::Epsilon, t));
            states[t2].push((Edge::Epsilon, t));
            (s, t)
        }
        Pattern::Star(a) => {
            let s = new_state(states);
            let (s1, t1) = fragment(a, cp, chain, states);
            let t = new_state(states);
            states[s].extend([(Edge::Epsilon, s1), (Edge::Epsilon, t)]);
            states[t1].extend([(Edge::Epsilon, s1), (Edge::Epsilon, t)]);
            (s, t)
        }
        Pattern::Quantified { quantifier, var, class, body } => {
            chain.push(format!("{} {var} <- [{class}]", quantifier.keyword()));
            let scope_idx = cp.scopes.len();
            cp.scopes.push(Scope {
                quantifier: *quantifier,
                var: var.clone(),
                class: class.clone(),
                body: usize::MAX,
                free: p.free_vars().into_iter().collect(),
                chain: chain.clone(),
            });
            let body_idx = build_nfa(body, cp, chain);
            cp.scopes[scope_idx].body = body_idx;
            chain.pop();
            let (s, t) = (new_state(states), new_state(states));
            states[s].push((Edge::Scope(scope_idx), t));
            (s, t)
        }
    }
}
