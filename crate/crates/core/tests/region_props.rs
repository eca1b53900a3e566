mod common;

use common::*;
use proptest::prelude::*;
use spregen_core::lang::SpatialTerm;
use spregen_core::spatial::{min_region_distance, resolve_term, Binding, EvalContext, RegionSet};
use spregen_core::stream::{BoundingBox, Frame};

const SIZE: i32 = 12;

fn region(t: &SpatialTerm, frame: &Frame) -> RegionSet {
    let b = Binding::new();
    let ctx = EvalContext::new(frame, &b, BoundingBox::new(0.0, 0.0, SIZE as f64, SIZE as f64));
    resolve_term(t, &ctx).unwrap()
}

fn scene_and_terms(seed: u64) -> (Frame, SpatialTerm, SpatialTerm) {
    let mut r = rng(seed);
    let frame = random_scene(&mut r, SIZE);
    (frame, random_term(&mut r, 3, &[]), random_term(&mut r, 3, &[]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn membership_matches_the_boxes(seed in any::<u64>()) {
        let (frame, a, _) = scene_and_terms(seed);
        let reg = region(&a, &frame);
        for (x, y) in sample_points(SIZE, 0.5) {
            prop_assert_eq!(reg.contains_point(x, y), point_in(&a, &frame, x, y), "{:?} at ({}, {})", a, x, y);
        }
        let sampled = sample_points(SIZE, 0.5).iter().any(|&(x, y)| point_in(&a, &frame, x, y));
        if reg.area() > 0.0 {
            prop_assert!(sampled);
        }
        if sampled {
            prop_assert!(!reg.is_empty());
        }
    }

    #[test]
    fn distance_matches_sampling(seed in any::<u64>()) {
        let (frame, a, b) = scene_and_terms(seed);
        prop_assume!(complements(&a) + complements(&b) <= 1);
        let d = min_region_distance(&region(&a, &frame), &region(&b, &frame));
        let s = sampled_distance(&a, &b, &frame, &sample_points(SIZE, 0.5));
        match (d, s) {
            (Some(d), Some(s)) => prop_assert!(d <= s + 1e-9 && s - d <= 1.0, "{:?} vs {:?}: exact {} sampled {}", a, b, d, s),
            (None, Some(_)) => prop_assert!(false, "sampling found members of an empty region"),
            (Some(_), None) | (None, None) => {}
        }
    }

    #[test]
    fn de_morgan_and_double_complement(seed in any::<u64>()) {
        let (frame, a, b) = scene_and_terms(seed);
        let (ra, rb) = (region(&a, &frame), region(&b, &frame));
        prop_assert_eq!(ra.union(&rb).complement(), ra.complement().intersect(&rb.complement()));
        prop_assert_eq!(ra.intersect(&rb).complement(), ra.complement().union(&rb.complement()));
        prop_assert_eq!(ra.complement().complement(), ra.clone());
        prop_assert_eq!(ra.union(&rb), rb.union(&ra));
        prop_assert!(ra.intersect(&ra.complement()).is_empty());
    }

    #[test]
    fn distance_is_symmetric_and_monotone(seed in any::<u64>()) {
        let (frame, a, b) = scene_and_terms(seed);
        let c = random_term(&mut rng(seed ^ 0x5555), 2, &[]);
        let (ra, rb, rc) = (region(&a, &frame), region(&b, &frame), region(&c, &frame));
        prop_assert_eq!(min_region_distance(&ra, &rb), min_region_distance(&rb, &ra));
        // Growing an operand can only bring it closer.
        if let (Some(d), Some(grown)) = (min_region_distance(&ra, &rb), min_region_distance(&ra.union(&rc), &rb)) {
            prop_assert!(grown <= d + 1e-9);
        }
        if !ra.intersect(&rb).is_empty() {
            prop_assert_eq!(min_region_distance(&ra, &rb), Some(0.0));
        }
    }
}
