use std::collections::{BTreeSet, HashMap};
use std::ops::Range;

use super::intervals::IntervalSet;
use super::DomainPolicy;
use crate::lang::Quantifier;
use crate::stream::{BoundingBox, TrackKey, WindowSample};

/// Tracks a quantifier over `class` may bind to on the interval `frames`
/// of the window. An empty interval has an empty domain.
pub fn quantifier_domain(class: &str, window: &WindowSample, policy: DomainPolicy, frames: Range<usize>) -> BTreeSet<TrackKey> {
    let tracks_in = |pos: usize| {
        window.frames[pos]
            .keyed_objects()
            .filter(|(_, o)| o.class_label == class)
            .map(|(k, _)| k)
            .collect::<Vec<_>>()
    };
    if frames.is_empty() {
        return BTreeSet::new();
    }
    match policy {
        DomainPolicy::WindowWide => frames.flat_map(tracks_in).collect(),
        DomainPolicy::AnchorFrame => tracks_in(frames.start).into_iter().collect(),
    }
}

/// Every track of one class in a window, with per-frame presence.
#[derive(Debug)]
pub(crate) struct ClassTracks {
    /// Sorted ascending.
    pub candidates: Vec<TrackKey>,
    /// `present[pos][k]`: candidate `k` appears in frame `pos`.
    pub present: Vec<Vec<bool>>,
}

/// Per-window lookups shared by the automaton engine and the derivation
/// builder.
#[derive(Debug)]
pub(crate) struct WindowIndex<'w> {
    pub window: &'w WindowSample,
    pub universes: Vec<BoundingBox>,
    classes: HashMap<String, std::rc::Rc<ClassTracks>>,
}

impl<'w> WindowIndex<'w> {
    pub fn new(window: &'w WindowSample) -> Self {
        let universes = (0..window.len()).map(|p| window.universe(p)).collect();
        WindowIndex { window, universes, classes: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn class(&mut self, class: &str) -> std::rc::Rc<ClassTracks> {
        if let Some(ct) = self.classes.get(class) {
            return ct.clone();
        }
        let per_frame: Vec<BTreeSet<TrackKey>> = self
            .window
            .frames
            .iter()
            .map(|f| f.keyed_objects().filter(|(_, o)| o.class_label == class).map(|(k, _)| k).collect())
            .collect();
        let candidates: Vec<TrackKey> =
            per_frame.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let present = per_frame.iter().map(|set| candidates.iter().map(|c| set.contains(c)).collect()).collect();
        let ct = std::rc::Rc::new(ClassTracks { candidates, present });
        self.classes.insert(class.to_string(), ct.clone());
        ct
    }
}

/// Lifts per-candidate body relations to the relation of the quantified
/// pattern. `vacuous` is the body relation with the variable bound
/// vacuously and is only consulted by universals over empty domains.
pub(crate) fn combine_scope(
    quantifier: Quantifier,
    tracks: &ClassTracks,
    policy: DomainPolicy,
    per_candidate: &[IntervalSet],
    vacuous: Option<&IntervalSet>,
) -> IntervalSet {
    let len = tracks.present.len();
    let n = tracks.candidates.len();
    let mut out = IntervalSet::new(len);
    for s in 0..=len {
        let mut dom = vec![false; n];
        for e in s..=len {
            if e > s {
                match policy {
                    DomainPolicy::WindowWide => {
                        for (d, &p) in dom.iter_mut().zip(&tracks.present[e - 1]) {
                            *d |= p;
                        }
                    }
                    DomainPolicy::AnchorFrame if e == s + 1 => dom.clone_from(&tracks.present[s]),
                    DomainPolicy::AnchorFrame => {}
                }
            }
            let mut members = (0..n).filter(|&k| dom[k]).peekable();
            let holds = match quantifier {
                Quantifier::Exists => members.any(|k| per_candidate[k].contains(s, e)),
                Quantifier::Forall if members.peek().is_none() => vacuous.is_some_and(|v| v.contains(s, e)),
                Quantifier::Forall => members.all(|k| per_candidate[k].contains(s, e)),
            };
            if holds {
                out.insert(s, e);
            }
        }
    }
    out
}

/// Candidate indices in the domain of the interval `[s, e)`.
pub(crate) fn domain_members(tracks: &ClassTracks, policy: DomainPolicy, s: usize, e: usize) -> Vec<usize> {
    let n = tracks.candidates.len();
    if e <= s {
        return Vec::new();
    }
    match policy {
        DomainPolicy::WindowWide => (0..n).filter(|&k| (s..e).any(|p| tracks.present[p][k])).collect(),
        DomainPolicy::AnchorFrame => (0..n).filter(|&k| tracks.present[s][k]).collect(),
    }
}
