//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spregen_core::lang::{CmpOp, Pattern, SpatialFormula, SpatialTerm};
use spregen_core::stream::{BoundingBox, Frame, ObjectAnnotation, PerceptionStream, WindowSample};

pub const CLASSES: [&str; 3] = ["car", "bus", "pedestrian"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_term(r: &mut ChaCha8Rng, depth: usize, vars: &[String]) -> SpatialTerm {
    if depth <= 1 || r.gen_bool(0.4) {
        if !vars.is_empty() && r.gen_bool(0.5) {
            return SpatialTerm::Var(vars.choose(r).unwrap().clone());
        }
        return SpatialTerm::class(CLASSES.choose(r).unwrap());
    }
    match r.gen_range(0..3) {
        0 => SpatialTerm::intersect(random_term(r, depth - 1, vars), random_term(r, depth - 1, vars)),
        1 => SpatialTerm::union(random_term(r, depth - 1, vars), random_term(r, depth - 1, vars)),
        _ => SpatialTerm::complement(random_term(r, depth - 1, vars)),
    }
}

pub fn random_formula(r: &mut ChaCha8Rng, depth: usize, vars: &[String]) -> SpatialFormula {
    if depth <= 1 || r.gen_bool(0.5) {
        return match r.gen_range(0..6) {
            0 => SpatialFormula::True,
            1 => {
                let op = *[CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge].choose(r).unwrap();
                let threshold = *[0.0, 1.0, 2.5, 5.0, 10.0].choose(r).unwrap();
                SpatialFormula::dist(random_term(r, 2, vars), random_term(r, 2, vars), op, threshold)
            }
            _ => SpatialFormula::NonEmpty(random_term(r, 3, vars)),
        };
    }
    match r.gen_range(0..3) {
        0 => SpatialFormula::and(random_formula(r, depth - 1, vars), random_formula(r, depth - 1, vars)),
        1 => SpatialFormula::or(random_formula(r, depth - 1, vars), random_formula(r, depth - 1, vars)),
        _ => SpatialFormula::not(random_formula(r, depth - 1, vars)),
    }
}

/// Random well-scoped pattern of AST depth at most `depth` with at most
/// `max_quant` nested quantifiers.
pub fn random_pattern(r: &mut ChaCha8Rng, depth: usize, max_quant: usize) -> Pattern {
    gen_pattern(r, depth, max_quant, &mut Vec::new())
}

fn gen_pattern(r: &mut ChaCha8Rng, depth: usize, quant_left: usize, vars: &mut Vec<String>) -> Pattern {
    if depth <= 1 || r.gen_bool(0.25) {
        if !vars.is_empty() && r.gen_bool(0.4) {
            return Pattern::var(vars.choose(r).unwrap());
        }
        if r.gen_bool(0.15) {
            return Pattern::any();
        }
        return Pattern::Frame(random_formula(r, 2, vars));
    }
    let choice = r.gen_range(0..if quant_left > 0 { 6 } else { 4 });
    match choice {
        0 => Pattern::concat(gen_pattern(r, depth - 1, quant_left, vars), gen_pattern(r, depth - 1, quant_left, vars)),
        1 => Pattern::alt(gen_pattern(r, depth - 1, quant_left, vars), gen_pattern(r, depth - 1, quant_left, vars)),
        2 => Pattern::star(gen_pattern(r, depth - 1, quant_left, vars)),
        3 => Pattern::concat(gen_pattern(r, depth - 1, quant_left, vars), gen_pattern(r, depth - 1, quant_left, vars)),
        _ => {
            let var = format!("v{}", vars.len());
            let class = CLASSES.choose(r).unwrap();
            vars.push(var.clone());
            let body = gen_pattern(r, depth - 1, quant_left - 1, vars);
            vars.pop();
            if choice == 4 {
                Pattern::exists(&var, class, body)
            } else {
                Pattern::forall(&var, class, body)
            }
        }
    }
}

pub fn random_box(r: &mut ChaCha8Rng, max: i32) -> BoundingBox {
    let (x0, y0) = (r.gen_range(0..max), r.gen_range(0..max));
    let (w, h) = (r.gen_range(0..=max / 2), r.gen_range(0..=max / 2));
    BoundingBox::new(x0 as f64, y0 as f64, (x0 + w).min(max) as f64, (y0 + h).min(max) as f64)
}

/// Window of `len` frames with up to `max_objects` objects per frame drawn
/// from a small pool of tracks; some detections are untracked.
pub fn random_window(r: &mut ChaCha8Rng, len: usize, max_objects: usize) -> WindowSample {
    let frames = (0..len)
        .map(|i| {
            let n = r.gen_range(0..=max_objects);
            let mut ids: Vec<usize> = (1..=5).collect();
            ids.shuffle(r);
            let objects = (0..n)
                .map(|k| {
                    let class = CLASSES[ids[k] % CLASSES.len()];
                    let id = ids[k].to_string();
                    let track = if r.gen_bool(0.85) { Some(id.as_str()) } else { None };
                    ObjectAnnotation::new(track, class, random_box(r, 20))
                })
                .collect();
            Frame::new(i as u64, objects)
        })
        .collect();
    let mut w = WindowSample::from_frames("random", frames);
    w.class_vocabulary = CLASSES.iter().map(|c| c.to_string()).collect();
    w
}

/// Synthetic driving-like stream: tracks persist for random spans and
/// drift across a 1000x600 plane.
pub fn synthetic_stream(seed: u64, id: &str, frames: usize) -> PerceptionStream {
    let mut r = rng(seed);
    struct Track {
        id: String,
        class: &'static str,
        start: usize,
        end: usize,
        pos: (f64, f64),
        vel: (f64, f64),
        size: (f64, f64),
    }
    let n_tracks = r.gen_range(4..10);
    let tracks: Vec<Track> = (0..n_tracks)
        .map(|k| {
            let start = r.gen_range(0..frames);
            let end = (start + r.gen_range(1..frames.max(2))).min(frames);
            Track {
                id: format!("{id}-{k}"),
                class: CLASSES[r.gen_range(0..CLASSES.len())],
                start,
                end,
                pos: (r.gen_range(0.0..900.0), r.gen_range(0.0..500.0)),
                vel: (r.gen_range(-8.0..8.0), r.gen_range(-3.0..3.0)),
                size: (r.gen_range(20.0..120.0), r.gen_range(20.0..100.0)),
            }
        })
        .collect();
    let frames = (0..frames)
        .map(|i| {
            let objects = tracks
                .iter()
                .filter(|t| t.start <= i && i < t.end)
                .map(|t| {
                    let dt = (i - t.start) as f64;
                    let x = (t.pos.0 + t.vel.0 * dt).clamp(0.0, 1000.0 - t.size.0);
                    let y = (t.pos.1 + t.vel.1 * dt).clamp(0.0, 600.0 - t.size.1);
                    ObjectAnnotation::new(Some(&t.id), t.class, BoundingBox::new(x, y, x + t.size.0, y + t.size.1))
                })
                .collect();
            Frame { index: i as u64, timestamp: Some(i as f64 * 0.1), extent: Some([1000.0, 600.0]), objects }
        })
        .collect();
    PerceptionStream::new(id, CLASSES.iter().map(|c| c.to_string()), frames)
}

/// One frame of up to four integer boxes on a `size` x `size` plane.
pub fn random_scene(r: &mut ChaCha8Rng, size: i32) -> Frame {
    let n = r.gen_range(1..=4);
    let objects = (0..n)
        .map(|k| ObjectAnnotation::new(Some(&k.to_string()), CLASSES[r.gen_range(0..CLASSES.len())], random_box(r, size)))
        .collect();
    Frame { index: 0, timestamp: None, extent: Some([size as f64, size as f64]), objects }
}

/// Point membership computed straight from the boxes (closed boxes,
/// complement within the plane).
pub fn point_in(t: &SpatialTerm, frame: &Frame, x: f64, y: f64) -> bool {
    match t {
        SpatialTerm::Class(c) => frame
            .objects
            .iter()
            .any(|o| &o.class_label == c && o.bbox.x_min <= x && x <= o.bbox.x_max && o.bbox.y_min <= y && y <= o.bbox.y_max),
        SpatialTerm::Var(_) => panic!("scene terms are closed"),
        SpatialTerm::Union(a, b) => point_in(a, frame, x, y) || point_in(b, frame, x, y),
        SpatialTerm::Intersect(a, b) => point_in(a, frame, x, y) && point_in(b, frame, x, y),
        SpatialTerm::Complement(a) => !point_in(a, frame, x, y),
    }
}

/// Grid points at `step` spacing covering `[0, size]^2`.
pub fn sample_points(size: i32, step: f64) -> Vec<(f64, f64)> {
    let n = (size as f64 / step).round() as usize;
    (0..=n).flat_map(|i| (0..=n).map(move |j| (i as f64 * step, j as f64 * step))).collect()
}

/// Smallest distance between sampled members of two terms.
pub fn sampled_distance(a: &SpatialTerm, b: &SpatialTerm, frame: &Frame, points: &[(f64, f64)]) -> Option<f64> {
    let pa: Vec<_> = points.iter().filter(|&&(x, y)| point_in(a, frame, x, y)).collect();
    let pb: Vec<_> = points.iter().filter(|&&(x, y)| point_in(b, frame, x, y)).collect();
    let mut best: Option<f64> = None;
    for &&(x0, y0) in &pa {
        for &&(x1, y1) in &pb {
            let d = ((x0 - x1).powi(2) + (y0 - y1).powi(2)).sqrt();
            best = Some(best.map_or(d, |b: f64| b.min(d)));
            if d == 0.0 {
                return best;
            }
        }
    }
    best
}

pub fn complements(t: &SpatialTerm) -> usize {
    match t {
        SpatialTerm::Class(_) | SpatialTerm::Var(_) => 0,
        SpatialTerm::Union(a, b) | SpatialTerm::Intersect(a, b) => complements(a) + complements(b),
        SpatialTerm::Complement(a) => 1 + complements(a),
    }
}
