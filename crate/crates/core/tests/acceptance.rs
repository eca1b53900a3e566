//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use rayon::prelude::*;
use spregen_core::lang::{parse, pretty_print, SpatialTerm};
use spregen_core::matcher::{brute_force_match, compile, match_window, DomainPolicy, MatchError, MatcherConfig};
use spregen_core::metrics::*;
use spregen_core::pipeline::*;
use spregen_core::spatial::{min_region_distance, resolve_term, Binding, EvalContext};
use spregen_core::stream::{BoundingBox, Frame, ObjectAnnotation, PerceptionStream, WindowSample};

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn oracle_equivalence() -> Outcome {
    let cases = 1000u64;
    let mut mismatches = Vec::new();
    let mut skipped = 0;
    for seed in 0..cases {
        let mut r = rng(0xACCE_0000 + seed);
        let p = random_pattern(&mut r, 4, 2);
        let len = r.gen_range(1..=6);
        let w = random_window(&mut r, len, 4);
        let policy = if seed % 2 == 0 { DomainPolicy::WindowWide } else { DomainPolicy::AnchorFrame };
        let config = MatcherConfig { policy, witnesses: false, ..MatcherConfig::default() };
        let auto = match match_window(&compile(&p), &w, &config) {
            Err(MatchError::BudgetExceeded { .. }) => {
                skipped += 1;
                continue;
            }
            other => other.expect("matcher"),
        };
        let oracle = brute_force_match(&p, &w, &config).expect("oracle");
        if auto.intervals() != oracle.intervals() || auto.matched_frames != oracle.matched_frames {
            mismatches.push(format!("seed {seed}: {p}"));
        }
    }
    let compared = cases as usize - skipped;
    ok(
        mismatches.is_empty() && compared >= 1000,
        format!("{compared} pairs compared, {} mismatches, {skipped} over budget{}", mismatches.len(), mismatches.first().map(|m| format!("; first: {m}")).unwrap_or_default()),
    )
}

fn example_fixtures() -> Outcome {
    #[derive(serde::Deserialize)]
    struct Golden {
        query: String,
        policy: DomainPolicy,
        window: WindowSample,
        matches: Vec<(usize, usize)>,
        matched_frames: BTreeSet<usize>,
    }
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let names = [
        "same_pedestrian_five_frames",
        "car_intersects_bus_two_frames",
        "cars_far_from_pedestrians",
        "car_approaches_bus",
        "same_car_twice",
        "all_cars_stay_window_wide",
        "all_cars_stay_anchor_frame",
    ];
    let mut failed = Vec::new();
    for name in names {
        let text = match std::fs::read_to_string(dir.join(format!("{name}.json"))) {
            Ok(t) => t,
            Err(e) => {
                failed.push(format!("{name}: {e}"));
                continue;
            }
        };
        let g: Golden = serde_json::from_str(&text).expect("golden file");
        let config = MatcherConfig { policy: g.policy, witnesses: false, ..MatcherConfig::default() };
        let p = parse(&g.query).expect("golden query parses");
        let set = match_window(&compile(&p), &g.window, &config).expect("match");
        if set.intervals() != g.matches || set.matched_frames != g.matched_frames {
            failed.push(name.to_string());
        }
    }
    ok(failed.is_empty(), format!("{} of {} golden match sets reproduced exactly{}", names.len() - failed.len(), names.len(), if failed.is_empty() { String::new() } else { format!("; failed: {failed:?}") }))
}

fn region_oracle() -> Outcome {
    const SIZE: i32 = 12;
    let points = sample_points(SIZE, 0.5);
    let universe = BoundingBox::new(0.0, 0.0, SIZE as f64, SIZE as f64);
    let mut bad = Vec::new();
    let mut distance_checks = 0;
    for seed in 0..500u64 {
        let mut r = rng(0xB0C5 + seed);
        let frame = random_scene(&mut r, SIZE);
        let a = random_term(&mut r, 3, &[]);
        let mut b = random_term(&mut r, 3, &[]);
        if common::complements(&a) + common::complements(&b) > 1 {
            b = SpatialTerm::class(CLASSES[r.gen_range(0..3)]);
        }
        let binding = Binding::new();
        let ctx = EvalContext::new(&frame, &binding, universe);
        let (ra, rb) = (resolve_term(&a, &ctx).unwrap(), resolve_term(&b, &ctx).unwrap());
        let sampled_nonempty = points.iter().any(|&(x, y)| point_in(&a, &frame, x, y));
        let membership = points.iter().all(|&(x, y)| ra.contains_point(x, y) == point_in(&a, &frame, x, y));
        let nonempty = if ra.area() > 0.0 { sampled_nonempty && !ra.is_empty() } else { !sampled_nonempty || !ra.is_empty() };
        if !membership || !nonempty {
            bad.push(format!("seed {seed}: nonempty/membership"));
            continue;
        }
        let exact = min_region_distance(&ra, &rb);
        match (exact, sampled_distance(&a, &b, &frame, &points)) {
            (Some(d), Some(s)) => {
                distance_checks += 1;
                if !(d <= s + 1e-9 && s - d <= 1.0) {
                    bad.push(format!("seed {seed}: distance exact {d} sampled {s}"));
                }
            }
            (None, Some(_)) => bad.push(format!("seed {seed}: sampled members in an empty region")),
            _ => {}
        }
    }
    ok(bad.is_empty(), format!("500 configurations, {distance_checks} distance comparisons, {} disagreements{}", bad.len(), bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()))
}

fn parser_round_trip() -> Outcome {
    let mut failures = 0;
    for seed in 0..500u64 {
        let p = random_pattern(&mut rng(0x9A55 + seed), 5, 2);
        if parse(&pretty_print(&p)).as_ref() != Ok(&p) {
            failures += 1;
        }
    }
    let mut crashes = 0;
    let mut r = rng(0xF022);
    for _ in 0..10_000 {
        let n = r.gen_range(0..120);
        let bytes: Vec<u8> = (0..n).map(|_| r.gen()).collect();
        let text = String::from_utf8_lossy(&bytes).into_owned();
        if catch_unwind(AssertUnwindSafe(|| {
            let _ = parse(&text);
        }))
        .is_err()
        {
            crashes += 1;
        }
    }
    ok(failures == 0 && crashes == 0, format!("500 round-trips with {failures} failures; 10000 fuzz inputs with {crashes} crashes"))
}

fn pipeline() -> Outcome {
    let templates = default_templates();
    let mut problems = Vec::new();
    for seed in 0..10u64 {
        let mut r = rng(0x9173 + seed);
        let streams: Vec<PerceptionStream> = (0..r.gen_range(1..4)).map(|k| synthetic_stream(seed * 7 + k, &format!("c{seed}-{k}"), 40)).collect();
        let config = GenerationConfig {
            lengths: (0..r.gen_range(1..5)).map(|_| r.gen_range(1..17)).collect::<BTreeSet<_>>().into_iter().collect(),
            per_length: r.gen_range(1..4),
            seed,
            queries_per_window: if r.gen_bool(0.5) { Some(r.gen_range(1..=15)) } else { None },
            ..Default::default()
        };
        let tuples = generate_tuples(&streams, &templates, &config).expect("generation");
        let expected = config.expected_count(streams.len(), templates.len());
        if tuples.len() != expected {
            problems.push(format!("config {seed}: {} tuples, expected {expected}", tuples.len()));
        }
        if !audit(&tuples).is_clean() {
            problems.push(format!("config {seed}: audit failures"));
        }
    }

    // Full-scale run: 9 lengths, 15 templates, 126-frame streams.
    let n_streams = 201;
    let config = GenerationConfig { seed: 2025, ..Default::default() };
    let start = Instant::now();
    let per_stream: Vec<Result<(usize, usize), String>> = (0..n_streams)
        .into_par_iter()
        .map(|k| {
            let s = synthetic_stream(100_000 + k as u64, &format!("synthetic-{k:03}"), 126);
            let tuples = generate_stream(&s, &templates, &config).map_err(|e| e.to_string())?;
            let report = audit(&tuples);
            Ok((tuples.len(), report.checked - report.failures.len()))
        })
        .collect();
    let elapsed = start.elapsed();
    let mut total = 0;
    let mut verified = 0;
    for r in per_stream {
        match r {
            Ok((n, v)) => {
                total += n;
                verified += v;
            }
            Err(e) => problems.push(e),
        }
    }
    let expected = config.expected_count(n_streams, templates.len());
    if total != expected {
        problems.push(format!("large run: {total} tuples, expected {expected}"));
    }
    if verified != total {
        problems.push(format!("large run: {} tuples failed the audit", total - verified));
    }
    if total <= 27_000 {
        problems.push(format!("large run produced only {total} tuples"));
    }
    if elapsed > Duration::from_secs(300) {
        problems.push(format!("large run took {elapsed:.1?}"));
    }
    ok(
        problems.is_empty(),
        format!(
            "10 random configs match the count formula; {n_streams} streams x 9 lengths x 15 templates = {total} tuples, {verified} re-matched identically, {elapsed:.1?}{}",
            problems.first().map(|p| format!("; {p}")).unwrap_or_default()
        ),
    )
}

fn gold_tuple(id: &str, len: usize, frames: &[usize]) -> DatasetTuple {
    let window = WindowSample::from_frames("g", (0..len as u64).map(|i| Frame::new(i, vec![])).collect());
    let set: BTreeSet<usize> = frames.iter().copied().collect();
    DatasetTuple {
        schema_version: SCHEMA_VERSION,
        id: id.into(),
        query_nl: String::new(),
        query_spre: "[car]".into(),
        window,
        matches: segments(&set),
        matched_frames: frames.to_vec(),
        sentences: vec![format!("Car 1 is present in frames {:?}.", frames)],
        meta: TupleMeta {
            template_id: "t".into(),
            query_id: "q".into(),
            category: spregen_core::lang::Category::ALL[len % 5],
            window_length: len,
            source_stream: "g".into(),
            offset: 0,
            domain_policy: DomainPolicy::WindowWide,
            maximal_only: false,
            distance_scale: 1.0,
            seed: 0,
        },
    }
}

fn metrics() -> Outcome {
    let s = |v: &[usize]| v.iter().copied().collect::<BTreeSet<usize>>();
    let f = frame_f1(&s(&[1, 2, 3]), &s(&[2, 3, 4]));
    let mut notes = Vec::new();
    if (f.f1 - 0.667).abs() > 0.001 || f.exact_match != 0.0 {
        notes.push(format!("frame F1 {}", f.f1));
    }
    let both_empty = frame_f1(&s(&[]), &s(&[]));
    let one_empty = frame_f1(&s(&[]), &s(&[1]));
    if both_empty.f1 != 1.0 || both_empty.exact_match != 1.0 || one_empty.f1 != 0.0 || one_empty.exact_match != 0.0 {
        notes.push("empty-set conventions".into());
    }
    let seg = segment_f1(&s(&[1, 2, 3]), &s(&[2, 3, 4]), 0.5);
    if seg.f1 != 1.0 {
        notes.push(format!("segment F1 {}", seg.f1));
    }
    let golds: Vec<DatasetTuple> = [1usize, 2, 4, 6, 8, 10, 12, 14, 16]
        .iter()
        .flat_map(|&l| (0..3).map(move |k| gold_tuple(&format!("{l}-{k}"), l, &(0..l).filter(|f| (f + k) % 3 != 0).collect::<Vec<_>>())))
        .collect();
    let preds: Vec<PredictionRecord> = golds
        .iter()
        .map(|g| PredictionRecord { id: g.id.clone(), response: format_response(&g.matched_frame_set(), &g.sentences, &ResponseFormat::default()) })
        .collect();
    let report = evaluate_run(&preds, &golds, &EvalConfig::default(), &TokenOverlap);
    let cells_ok = report
        .by_target_length
        .iter()
        .all(|b| [b.f1_frame, b.exact_match, b.f1_segment].iter().all(|c| c.map(|v| format!("{v:.3}")) == Some("1.000".into())));
    if !cells_ok {
        notes.push("perfect predictions did not score 1.000 everywhere".into());
    }
    ok(
        notes.is_empty(),
        format!("F1f({{1,2,3}},{{2,3,4}}) = {:.3}; empty/empty = 1, empty/non-empty = 0; F1s([1,3],[2,4]) = {:.1}; perfect run: 1.000 in all {} table cells{}", f.f1, seg.f1, report.by_target_length.len() * 3, notes.first().map(|n| format!("; {n}")).unwrap_or_default()),
    )
}

fn non_reproducibility() -> Outcome {
    let w = RewardWeights::default();
    let fmt = ResponseFormat::default();
    let mut violations = 0;
    for seed in 0..100u64 {
        let mut r = rng(0x4E0 + seed);
        let n = r.gen_range(2..17);
        let gold_frames: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.4)).collect();
        let g = gold_tuple("g", n, &gold_frames);
        let pred: BTreeSet<usize> = (0..n).filter(|_| r.gen_bool(0.4)).collect();
        let text = vec!["In frame 1, car 2 is present.".to_string()];
        let base = reward(&parse_response("g", &format_response(&pred, &text, &fmt), &fmt), &g, &w, &TokenOverlap);
        if let Some(&missing) = gold_frames.iter().find(|f| !pred.contains(f)) {
            let mut more = pred.clone();
            more.insert(missing);
            let after = reward(&parse_response("g", &format_response(&more, &text, &fmt), &fmt), &g, &w, &TokenOverlap);
            if after.matching < base.matching - 1e-12 {
                violations += 1;
            }
        }
        let noisy = format_response(&pred, &text, &fmt) + " Hope this helps!";
        if reward(&parse_response("g", &noisy, &fmt), &g, &w, &TokenOverlap).total > base.total + 1e-12 {
            violations += 1;
        }
    }
    ok(
        violations == 0,
        format!("scores of fine-tuned language models need model training and are not reproduced here; substituted by the property suites and 100 seeded reward perturbations with {violations} monotonicity violations"),
    )
}

fn performance() -> Outcome {
    let mut r = rng(0x9E4F);
    let classes = ["car", "pedestrian"];
    let frames: Vec<Frame> = (0..16)
        .map(|i| {
            let objects = (0..20)
                .map(|k| {
                    let x = (k as f64 * 45.0 + i as f64 * r.gen_range(0.0..4.0)) % 900.0;
                    let y = (k % 5) as f64 * 100.0;
                    ObjectAnnotation::new(Some(&k.to_string()), classes[k % 2], BoundingBox::new(x, y, x + 40.0, y + 60.0))
                })
                .collect();
            Frame { index: i, timestamp: None, extent: Some([1000.0, 600.0]), objects }
        })
        .collect();
    let w = WindowSample::from_frames("perf", frames);
    let queries = [
        "exists c <- [car] . forall p <- [pedestrian] . [dist(c, p) > 5]{3}",
        "exists c <- [car] . exists p <- [pedestrian] . [dist(c, p) >= 10] .{0,8} [dist(c, p) <= 200]",
        "forall c <- [car] . exists p <- [pedestrian] . (c | [c & !p])+",
    ];
    let mut worst = Duration::ZERO;
    let mut errors = Vec::new();
    for q in queries {
        let cp = compile(&parse(q).expect("query"));
        let start = Instant::now();
        if let Err(e) = match_window(&cp, &w, &MatcherConfig::default()) {
            errors.push(format!("{q}: {e}"));
        }
        worst = worst.max(start.elapsed());
    }
    ok(
        errors.is_empty() && worst < Duration::from_secs(1),
        format!("16 frames x 20 objects, nesting 2: slowest of {} queries took {worst:.1?}{}", queries.len(), errors.first().map(|e| format!("; {e}")).unwrap_or_default()),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 8] = [
        ("oracle-equivalence", oracle_equivalence),
        ("example-query-fixtures", example_fixtures),
        ("region-algebra-oracle", region_oracle),
        ("parser-round-trip", parser_round_trip),
        ("dataset-pipeline", pipeline),
        ("metrics", metrics),
        ("explicit-non-reproducibility", non_reproducibility),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let o = catch_unwind(check).unwrap_or_else(|_| ok(false, "panicked"));
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {} [{:.1?}]", if o.pass { "PASS" } else { "FAIL" }, o.detail, start.elapsed());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
