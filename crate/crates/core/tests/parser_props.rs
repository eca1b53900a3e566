mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use spregen_core::lang::{parse, pretty_print};

const TOKENS: &[&str] = &[
    "[", "]", "(", ")", "{", "}", ",", ".", "*", "+", "?", "|", "&", "!", "<", "<=", ">", ">=", "<-", "exists", "forall",
    "true", "nonempty", "dist", "and", "or", "not", "car", "bus", "x", "y", "\"a b\"", "0", "3", "2.5", " ",
];

/// Random string built from grammar tokens, so that parses get deep.
pub fn token_soup(seed: u64) -> String {
    let mut r = rng(seed);
    let n = r.gen_range(0..40);
    (0..n).map(|_| *TOKENS.choose(&mut r).unwrap()).collect::<Vec<_>>().join(" ")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let p = random_pattern(&mut rng(seed), 5, 2);
        let text = pretty_print(&p);
        let back = parse(&text);
        prop_assert_eq!(back.as_ref(), Ok(&p), "{}", text);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse(&text);
    }

    #[test]
    fn token_soup_never_panics_and_reprints(seed in any::<u64>()) {
        let text = token_soup(seed);
        if let Ok(p) = parse(&text) {
            prop_assert_eq!(parse(&pretty_print(&p)), Ok(p));
        }
    }
}

#[test]
fn deep_nesting_is_an_error_not_a_crash() {
    let text = format!("{}[car]{}", "(".repeat(100_000), ")".repeat(100_000));
    assert!(parse(&text).is_err());
    let text = format!("[{}car{}]", "!(".repeat(50_000), ")".repeat(50_000));
    assert!(parse(&text).is_err());
}
