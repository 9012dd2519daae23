use mt_core::dsl::InputKind;
use mt_core::input::Input;
use mt_core::sut::builtin::{builtin_suts, Kernel, Outcome};
use mt_core::sut::{OracleFlag, Registry, SutOutcome};
use proptest::prelude::*;

fn run<T: mt_core::Scalar>(k: &Kernel<T>, xs: &[T]) -> Outcome<T> {
    match k {
        Kernel::List(f) => f(xs),
        Kernel::Scalar(f) => f(xs[0]),
    }
}

fn list() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec((-10_000i32..10_000).prop_map(|k| k as f64 / 100.0), 0..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn order_insensitive_builtins_ignore_permutation(xs in list(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm = xs.clone();
        perm.shuffle(&mut mt_core::seed::rng(seed));
        let reg = Registry::builtin();
        for sut in reg.list_suts().iter().filter(|s| s.has_flag(OracleFlag::OrderInsensitive)) {
            let t = reg.target(&sut.id, None).unwrap();
            let a = reg.invoke(t, &Input::List(xs.clone())).unwrap();
            let b = reg.invoke(t, &Input::List(perm.clone())).unwrap();
            prop_assert_eq!(a, b, "{}", sut.id);
        }
    }

    #[test]
    fn mutants_fail_exactly_where_parents_fail(xs in list()) {
        for sut in builtin_suts::<f64>() {
            let input: Vec<f64> = if sut.input_kind.is_list() { xs.clone() } else { vec![xs.first().copied().unwrap_or(0.5)] };
            let parent = run(&sut.kernel, &input).is_err();
            for m in &sut.mutants {
                prop_assert_eq!(run(&m.kernel, &input).is_err(), parent, "{}", m.id);
            }
        }
    }

    #[test]
    fn f32_kernels_track_f64(xs in proptest::collection::vec((-100i32..100).prop_map(|k| k as f64 / 4.0), 1..8)) {
        let xs32: Vec<f32> = xs.iter().map(|&x| x as f32).collect();
        for (a, b) in builtin_suts::<f64>().iter().zip(builtin_suts::<f32>()) {
            prop_assert_eq!(a.id, b.id);
            let input: Vec<f64> = if a.input_kind.is_list() { xs.clone() } else { vec![xs[0]] };
            let input32: Vec<f32> = if b.input_kind.is_list() { xs32.clone() } else { vec![xs32[0]] };
            match (run(&a.kernel, &input), run(&b.kernel, &input32)) {
                (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
                    let tol = 1e-3 * x.abs().max(1.0);
                    prop_assert!((x - y as f64).abs() <= tol, "{} {x} {y}", a.id);
                }
                (Ok(_), Ok(_)) => {}
                (Err(e), Err(f)) => prop_assert_eq!(e, f),
                (x, y) => prop_assert!(false, "{}: {x:?} vs {y:?}", a.id),
            }
        }
    }
}

#[test]
fn registry_descriptors_match_kernels() {
    let reg = Registry::builtin();
    let list_suts = reg.list_suts().iter().filter(|s| s.input_kind == InputKind::ListFloat).count();
    assert!(list_suts >= 25);
    for s in reg.list_suts() {
        assert!(!s.mutants.is_empty(), "{}", s.id);
        for m in &s.mutants {
            assert_eq!(m.parent_sut, s.id);
            assert!(m.id.starts_with(&format!("{}_mutant_", s.id)));
            let input = if s.input_kind.is_list() { Input::List(vec![1.0, 2.0]) } else { Input::Scalar(2.0) };
            let out = reg.invoke(reg.target(&s.id, Some(&m.id)).unwrap(), &input).unwrap();
            assert!(matches!(out, SutOutcome::Value(_) | SutOutcome::Failure(_)));
        }
    }
}
