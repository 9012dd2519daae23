#[path = "support/dsl_gen.rs"]
mod dsl_gen;

use dsl_gen::valid_spec;
use mt_core::catalog::builtin_catalog;
use mt_core::dsl::{parse_mr, parse_mr_bytes, serialize_mr, validate_mr, ParseError};
use proptest::prelude::*;

#[test]
fn builtins_round_trip() {
    for spec in builtin_catalog().specs() {
        let text = serialize_mr(spec);
        let back = parse_mr(&text).unwrap();
        assert_eq!(&back, spec);
        assert_eq!(serialize_mr(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_valid_specs_round_trip(spec in valid_spec()) {
        let text = serialize_mr(&spec);
        let back = parse_mr(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(serialize_mr(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn arbitrary_bytes_never_crash(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        match parse_mr_bytes(&bytes) {
            Ok(spec) => prop_assert!(validate_mr(&spec).is_empty()),
            Err(ParseError::Syntax(_)) => {}
            Err(ParseError::Validation(d)) => prop_assert!(!d.is_empty()),
        }
    }

    #[test]
    fn mutated_builtins_never_crash(idx in 0usize..6, pos in 0usize..400, byte in any::<u8>(), cut in any::<bool>()) {
        let spec = builtin_catalog().entries[idx].spec.clone();
        let mut bytes = serialize_mr(&spec).into_bytes();
        let pos = pos % bytes.len();
        if cut { bytes.truncate(pos) } else { bytes[pos] = byte }
        let _ = parse_mr_bytes(&bytes);
    }
}
