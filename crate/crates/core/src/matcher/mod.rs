//! Matching quantified patterns against windows.
//!
//! Patterns compile to nested Thompson automata whose transitions are
//! guarded by frame formulas. Quantifiers become scope transitions: the
//! body automaton is run once per candidate track and the results are
//! combined per interval according to the quantifier domain.
//!
//! Semantics, over half-open intervals `[s, e)`:
//! - `exists x <- [C] . p` holds iff some track in the domain of `C` on
//!   `[s, e)` makes `p` hold with `x` bound to it;
//! - `forall x <- [C] . p` holds iff every such track does, and, when the
//!   domain is empty, iff `p` holds with every frame expression mentioning
//!   `x` replaced by `true`.
//!
//! Reported matches are the non-empty intervals, as inclusive frame ranges.

mod compile;
mod derive;
mod domain;
mod engine;
mod intervals;
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compile::{compile, CompiledPattern, ScopeInfo};
pub use derive::{Derivation, Deriver, FrameStep};
pub use domain::quantifier_domain;
pub use intervals::IntervalSet;
pub use oracle::{brute_force_match, brute_force_relation};

use crate::spatial::EvalError;
use crate::stream::{PerceptionStream, TrackKey, WindowSample};

/// Which tracks a quantifier ranges over for a candidate interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainPolicy {
    /// Tracks of the class present in any frame of the interval.
    #[default]
    WindowWide,
    /// Tracks of the class present in the first frame of the interval.
    AnchorFrame,
}

impl DomainPolicy {
    pub fn name(self) -> &'static str {
        match self {
            DomainPolicy::WindowWide => "window-wide",
            DomainPolicy::AnchorFrame => "anchor-frame",
        }
    }
}

impl fmt::Display for DomainPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DomainPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "window-wide" => Ok(DomainPolicy::WindowWide),
            "anchor-frame" => Ok(DomainPolicy::AnchorFrame),
            other => Err(format!("unknown domain policy `{other}` (expected window-wide or anchor-frame)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    pub policy: DomainPolicy,
    /// Maximum number of quantifier bindings enumerated per window.
    pub budget: usize,
    /// Drop matches strictly contained in another match.
    pub maximal_only: bool,
    /// Compute a witness binding for every match.
    pub witnesses: bool,
    /// Factor converting annotation units to threshold units.
    pub distance_scale: f64,
    pub oracle_max_frames: usize,
    pub oracle_max_objects: usize,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            policy: DomainPolicy::WindowWide,
            budget: 10_000,
            maximal_only: false,
            witnesses: true,
            distance_scale: 1.0,
            oracle_max_frames: 8,
            oracle_max_objects: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("binding budget of {budget} exceeded while enumerating `{chain}`")]
    BudgetExceeded { budget: usize, chain: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("match of frames {start}..={end} could not be reproduced")]
    NotReproducible { start: usize, end: usize },
    #[error("oracle limit exceeded: {actual} {what} (limit {limit})")]
    OracleCap { what: &'static str, limit: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessValue {
    Track { class: String, track: TrackKey },
    /// A universal variable: every track of the class in the domain.
    All { class: String },
}

pub type Witness = BTreeMap<String, WitnessValue>;

/// An inclusive frame range satisfying the pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Match {
    pub start: usize,
    pub end: usize,
    #[serde(default)]
    pub witness: Witness,
}

impl Match {
    pub fn frames(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn interval(&self) -> (usize, usize) {
        (self.start, self.end)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSet {
    /// Sorted by `(start, end)`, no duplicate intervals.
    pub matches: Vec<Match>,
    pub matched_frames: BTreeSet<usize>,
}

impl MatchSet {
    pub fn new(mut matches: Vec<Match>) -> Self {
        matches.sort();
        matches.dedup_by(|a, b| a.interval() == b.interval());
        let matched_frames = matches.iter().flat_map(Match::frames).collect();
        MatchSet { matches, matched_frames }
    }

    pub fn intervals(&self) -> Vec<(usize, usize)> {
        self.matches.iter().map(Match::interval).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    /// Keeps only matches not strictly contained in another match.
    pub fn maximal_only(&self) -> MatchSet {
        let kept = self
            .matches
            .iter()
            .filter(|m| {
                !self.matches.iter().any(|o| o.interval() != m.interval() && o.start <= m.start && m.end <= o.end)
            })
            .cloned()
            .collect();
        MatchSet::new(kept)
    }

    /// True when `matched_frames` is exactly the union of the intervals.
    pub fn is_consistent(&self) -> bool {
        self.matched_frames == self.matches.iter().flat_map(Match::frames).collect()
    }
}

/// All non-empty intervals of `window` matching the compiled pattern.
pub fn match_window(cp: &CompiledPattern, window: &WindowSample, config: &MatcherConfig) -> Result<MatchSet, MatchError> {
    let rel = engine::Engine::new(cp, window, config).run()?;
    let mut set = MatchSet::new(
        rel.iter()
            .filter(|&(s, e)| e > s)
            .map(|(s, e)| Match { start: s, end: e - 1, witness: Witness::new() })
            .collect(),
    );
    if config.maximal_only {
        set = set.maximal_only();
    }
    if config.witnesses && !set.is_empty() {
        let mut deriver = Deriver::new(&cp.pattern, window, config);
        for m in &mut set.matches {
            m.witness = deriver.witness(m.start, m.end)?;
        }
    }
    Ok(set)
}

/// Matches over a whole stream treated as one window.
pub fn match_stream(cp: &CompiledPattern, stream: &PerceptionStream, config: &MatcherConfig) -> Result<MatchSet, MatchError> {
    match_window(cp, &stream.as_window(), config)
}
