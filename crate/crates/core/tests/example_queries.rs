//! Golden match sets for hand-built scenes of the motivating queries.
//!
//! The golden files were produced by the denotational oracle and are
//! checked against both the oracle and the automaton. Rewrite them with
//! `SPREGEN_BLESS=1 cargo test --test example_queries -- --ignored`.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use spregen_core::lang::parse;
use spregen_core::matcher::{brute_force_match, compile, match_window, DomainPolicy, MatcherConfig};
use spregen_core::stream::{BoundingBox, Frame, ObjectAnnotation, WindowSample};

#[derive(Debug, Serialize, Deserialize)]
struct Golden {
    name: String,
    query: String,
    policy: DomainPolicy,
    window: WindowSample,
    matches: Vec<(usize, usize)>,
    matched_frames: BTreeSet<usize>,
}

fn obj(track: &str, class: &str, b: [f64; 4]) -> ObjectAnnotation {
    ObjectAnnotation::new(Some(track), class, BoundingBox::from(b))
}

fn window(frames: Vec<Vec<ObjectAnnotation>>, extent: [f64; 2]) -> WindowSample {
    let frames = frames
        .into_iter()
        .enumerate()
        .map(|(i, objects)| Frame { index: i as u64, timestamp: None, extent: Some(extent), objects })
        .collect();
    WindowSample::from_frames("scene", frames)
}

/// Pedestrian 3 in frames 1 to 5; pedestrian 4 in frames 0 to 2 and 4 to 6.
fn same_pedestrian() -> WindowSample {
    let frames = (0..7)
        .map(|i| {
            let mut v = Vec::new();
            if (1..=5).contains(&i) {
                v.push(obj("3", "pedestrian", [10.0 * i as f64, 50.0, 10.0 * i as f64 + 8.0, 70.0]));
            }
            if i != 3 {
                v.push(obj("4", "pedestrian", [300.0, 50.0, 310.0, 70.0]));
            }
            v
        })
        .collect();
    window(frames, [640.0, 480.0])
}

/// Car 7 overlaps bus 2 in frames 3 and 4; car 8 overlaps it in frame 1.
fn car_meets_bus() -> WindowSample {
    let frames = (0..6)
        .map(|i| {
            let car7 = if i == 3 || i == 4 { [95.0, 10.0, 125.0, 30.0] } else { [10.0, 10.0, 40.0, 30.0] };
            let mut v = vec![obj("7", "car", car7), obj("2", "bus", [100.0, 0.0, 180.0, 40.0])];
            if i == 1 {
                v.push(obj("8", "car", [170.0, 30.0, 200.0, 50.0]));
            }
            v
        })
        .collect();
    window(frames, [640.0, 480.0])
}

/// Pedestrian 5 in the far corner; car 1 drives up to it in frame 3; car 2
/// joins far away in frames 4 to 6.
fn cars_far_from_pedestrians() -> WindowSample {
    let frames = (0..7)
        .map(|i| {
            let car1 = if i == 3 { [850.0, 450.0, 890.0, 480.0] } else { [0.0, 0.0, 40.0, 30.0] };
            let mut v = vec![obj("5", "pedestrian", [900.0, 500.0, 920.0, 560.0]), obj("1", "car", car1)];
            if i >= 4 {
                v.push(obj("2", "car", [100.0, 100.0, 140.0, 130.0]));
            }
            v
        })
        .collect();
    window(frames, [1000.0, 600.0])
}

/// Car 1 closes a 50-unit gap to bus 2 at 5 units per frame, touching it
/// from frame 10 on.
fn car_approaches_bus() -> WindowSample {
    let frames = (0..24)
        .map(|i| {
            let gap = (50.0 - 5.0 * i as f64).max(0.0);
            let x1 = 100.0 - gap;
            vec![obj("1", "car", [x1 - 20.0, 0.0, x1, 20.0]), obj("2", "bus", [100.0, 0.0, 130.0, 20.0])]
        })
        .collect();
    window(frames, [1000.0, 600.0])
}

/// Cars 1 and 2 in frames 0 and 1; car 2 leaves and car 3 arrives in
/// frame 2; car 3 alone in frame 3; car 4 joins in frame 4.
fn cars_come_and_go() -> WindowSample {
    let present: [&[&str]; 5] = [&["1", "2"], &["1", "2"], &["1", "3"], &["3"], &["3", "4"]];
    let frames = present
        .iter()
        .map(|ids| ids.iter().map(|id| obj(id, "car", [0.0, 0.0, 10.0, 10.0])).collect())
        .collect();
    window(frames, [100.0, 100.0])
}

fn cases() -> Vec<(&'static str, &'static str, DomainPolicy, WindowSample)> {
    use DomainPolicy::*;
    vec![
        ("same_pedestrian_five_frames", "exists p <- [pedestrian] . p{5}", WindowWide, same_pedestrian()),
        ("car_intersects_bus_two_frames", "exists c <- [car] . exists b <- [bus] . [c & b]{2}", WindowWide, car_meets_bus()),
        ("cars_far_from_pedestrians", "forall c <- [car] . [dist(c, pedestrian) > 500]{3}", WindowWide, cars_far_from_pedestrians()),
        (
            "car_approaches_bus",
            "exists c <- [car] . exists b <- [bus] . [dist(c, b) >= 10] .{0,18} [dist(c, b) <= 1]",
            WindowWide,
            car_approaches_bus(),
        ),
        ("same_car_twice", "exists x <- [car] . x x", WindowWide, cars_come_and_go()),
        ("all_cars_stay_window_wide", "forall x <- [car] . x x", WindowWide, cars_come_and_go()),
        ("all_cars_stay_anchor_frame", "forall x <- [car] . x x", AnchorFrame, cars_come_and_go()),
    ]
}

fn config(policy: DomainPolicy) -> MatcherConfig {
    MatcherConfig { policy, oracle_max_frames: 32, witnesses: false, ..MatcherConfig::default() }
}

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}.json"))
}

fn load(name: &str) -> Golden {
    let text = std::fs::read_to_string(path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    serde_json::from_str(&text).unwrap()
}

#[test]
#[ignore]
fn bless() {
    if std::env::var("SPREGEN_BLESS").is_err() {
        return;
    }
    for (name, query, policy, window) in cases() {
        let p = parse(query).unwrap();
        let set = brute_force_match(&p, &window, &config(policy)).unwrap();
        let g = Golden {
            name: name.into(),
            query: query.into(),
            policy,
            window,
            matches: set.intervals(),
            matched_frames: set.matched_frames,
        };
        std::fs::write(path(name), serde_json::to_string_pretty(&g).unwrap() + "\n").unwrap();
    }
}

#[test]
fn goldens_are_reproduced() {
    for (name, query, policy, window) in cases() {
        let g = load(name);
        assert_eq!((g.query.as_str(), g.policy), (query, policy), "{name}");
        assert_eq!(g.window, window, "{name}: scene changed since the golden was written");
        let p = parse(query).unwrap();
        let auto = match_window(&compile(&p), &g.window, &config(policy)).unwrap();
        let oracle = brute_force_match(&p, &g.window, &config(policy)).unwrap();
        assert_eq!(oracle.intervals(), g.matches, "{name}: oracle");
        assert_eq!(auto.intervals(), g.matches, "{name}: automaton");
        assert_eq!(auto.matched_frames, g.matched_frames, "{name}");
    }
}

#[test]
fn hand_derivable_goldens() {
    assert_eq!(load("same_pedestrian_five_frames").matches, vec![(1, 5)]);
    assert_eq!(load("car_intersects_bus_two_frames").matches, vec![(3, 4)]);
    assert_eq!(load("cars_far_from_pedestrians").matches, vec![(0, 2), (4, 6)]);
    assert_eq!(load("same_car_twice").matches, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
    assert_eq!(load("all_cars_stay_window_wide").matches, vec![(0, 1)]);
    assert_eq!(load("all_cars_stay_anchor_frame").matches, vec![(0, 1), (3, 4)]);

    // Gap >= 10 up to frame 8, touching from frame 10; at most 18 frames
    // between the two events.
    let approach = load("car_approaches_bus");
    let expected: Vec<(usize, usize)> =
        (0..=8).flat_map(|s| (10..24).filter(move |&e| e - s - 1 <= 18).map(move |e| (s, e))).collect();
    assert_eq!(approach.matches, expected);
}
