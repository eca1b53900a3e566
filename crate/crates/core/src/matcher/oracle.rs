//! Reference semantics by direct structural recursion. Deliberately naive:
//! explicit loops over every interval, split point and binding, and vacuous
//! universals handled by rewriting the body instead of a special binding.

use std::collections::BTreeMap;

use super::{quantifier_domain, Match, MatchError, MatchSet, MatcherConfig};
use crate::lang::{Pattern, Quantifier};
use crate::spatial::{eval_formula, Binding, EvalContext};
use crate::stream::WindowSample;

type Rel = Vec<Vec<bool>>;

/// Denotational matcher used as ground truth in differential tests.
/// Returns matches without witnesses.
pub fn brute_force_match(p: &Pattern, window: &WindowSample, config: &MatcherConfig) -> Result<MatchSet, MatchError> {
    let len = window.len();
    if len > config.oracle_max_frames {
        return Err(MatchError::OracleCap { what: "frames", limit: config.oracle_max_frames, actual: len });
    }
    if let Some(n) = window.frames.iter().map(|f| f.objects.len()).max() {
        if n > config.oracle_max_objects {
            return Err(MatchError::OracleCap { what: "objects per frame", limit: config.oracle_max_objects, actual: n });
        }
    }
    let rel = denote(p, &Binding::new(), window, config)?;
    let mut matches = Vec::new();
    for s in 0..len {
        for e in s + 1..=len {
            if rel[s][e] {
                matches.push(Match { start: s, end: e - 1, witness: BTreeMap::new() });
            }
        }
    }
    Ok(MatchSet::new(matches))
}

/// Oracle relation of `p` under a fixed binding, as half-open intervals.
pub fn brute_force_relation(p: &Pattern, binding: &Binding, window: &WindowSample, config: &MatcherConfig) -> Result<Vec<(usize, usize)>, MatchError> {
    let rel = denote(p, binding, window, config)?;
    Ok((0..=window.len()).flat_map(|s| (s..=window.len()).map(move |e| (s, e))).filter(|&(s, e)| rel[s][e]).collect())
}

fn denote(p: &Pattern, b: &Binding, w: &WindowSample, config: &MatcherConfig) -> Result<Rel, MatchError> {
    let len = w.len();
    let mut out = vec![vec![false; len + 1]; len + 1];
    match p {
        Pattern::Frame(f) => {
            for s in 0..len {
                let mut ctx = EvalContext::new(&w.frames[s], b, w.universe(s));
                ctx.distance_scale = config.distance_scale;
                out[s][s + 1] = eval_formula(f, &ctx)?;
            }
        }
        Pattern::Concat(x, y) => {
            let (rx, ry) = (denote(x, b, w, config)?, denote(y, b, w, config)?);
            for s in 0..=len {
                for e in s..=len {
                    out[s][e] = (s..=e).any(|m| rx[s][m] && ry[m][e]);
                }
            }
        }
        Pattern::Alt(x, y) => {
            let (rx, ry) = (denote(x, b, w, config)?, denote(y, b, w, config)?);
            for s in 0..=len {
                for e in s..=len {
                    out[s][e] = rx[s][e] || ry[s][e];
                }
            }
        }
        Pattern::Star(x) => {
            let rx = denote(x, b, w, config)?;
            for (s, row) in out.iter_mut().enumerate() {
                row[s] = true;
            }
            loop {
                let mut changed = false;
                for s in 0..=len {
                    for m in s..=len {
                        if !out[s][m] {
                            continue;
                        }
                        for e in m..=len {
                            if rx[m][e] && !out[s][e] {
                                out[s][e] = true;
                                changed = true;
                            }
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
        }
        Pattern::Quantified { quantifier, var, class, body } => {
            let mut by_track = BTreeMap::new();
            let mut vacuous = None;
            for s in 0..=len {
                for e in s..=len {
                    let domain = quantifier_domain(class, w, config.policy, s..e);
                    let mut holds = |t: &crate::stream::TrackKey| -> Result<bool, MatchError> {
                        if !by_track.contains_key(t) {
                            let r = denote(body, &b.track(var, class, t.clone()), w, config)?;
                            by_track.insert(t.clone(), r);
                        }
                        Ok(by_track[t][s][e])
                    };
                    out[s][e] = match quantifier {
                        Quantifier::Exists => {
                            let mut any = false;
                            for t in &domain {
                                any |= holds(t)?;
                            }
                            any
                        }
                        Quantifier::Forall if domain.is_empty() => {
                            if vacuous.is_none() {
                                vacuous = Some(denote(&body.substitute_true(var), b, w, config)?);
                            }
                            vacuous.as_ref().unwrap()[s][e]
                        }
                        Quantifier::Forall => {
                            let mut all = true;
                            for t in &domain {
                                all &= holds(t)?;
                            }
                            all
                        }
                    };
                }
            }
        }
    }
    Ok(out)
}
