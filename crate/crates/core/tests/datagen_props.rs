use mt_core::datagen::{default_profiles, generate_dataset, stratify, to_jsonl, GenError, GenProfile, SignMix};
use mt_core::dsl::InputKind;
use proptest::prelude::*;

fn sign_mix() -> impl Strategy<Value = SignMix> {
    prop_oneof![Just(SignMix::Any), Just(SignMix::Nonneg), Just(SignMix::Nonpos), Just(SignMix::MixedForced)]
}

fn profile() -> impl Strategy<Value = GenProfile> {
    (1usize..30, 0usize..4, 0usize..8, -50i32..0, 1i32..50, sign_mix(), any::<bool>(), prop::option::of(0u32..4))
        .prop_map(|(n, lo, w, vlo, vhi, sign_mix, dup, decimals)| GenProfile {
            n,
            len_range: [lo, lo + w],
            value_range: [vlo as f64, vhi as f64],
            sign_mix,
            duplicates_allowed: dup,
            decimals,
        })
}

// Grid points available to a profile, counted from its integer endpoints.
fn distinct_values(p: &GenProfile) -> Option<u64> {
    let d = p.decimals?;
    let (lo, hi) = match p.sign_mix {
        SignMix::Nonneg => (0.0, p.value_range[1]),
        SignMix::Nonpos => (p.value_range[0], 0.0),
        _ => (p.value_range[0], p.value_range[1]),
    };
    Some((hi - lo) as u64 * 10u64.pow(d) + 1)
}

fn feasible(p: &GenProfile) -> bool {
    p.duplicates_allowed || distinct_values(p).is_none_or(|k| k >= p.len_range[1] as u64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generation_is_a_function_of_its_inputs(p in profile(), seed in any::<u64>()) {
        prop_assume!(feasible(&p));
        let a = generate_dataset(InputKind::ListFloat, &p, seed).unwrap();
        let b = generate_dataset(InputKind::ListFloat, &p, seed).unwrap();
        prop_assert_eq!(to_jsonl(&a), to_jsonl(&b));
    }

    #[test]
    fn profiles_are_respected(p in profile(), seed in any::<u64>()) {
        let result = generate_dataset(InputKind::ListFloat, &p, seed);
        if !feasible(&p) {
            prop_assert!(matches!(result, Err(GenError::InvalidProfile(_))));
            return Ok(());
        }
        let data = result.unwrap();
        prop_assert_eq!(data.len(), p.n);
        for d in &data {
            let xs = d.values.values();
            prop_assert!(xs.len() >= p.len_range[0] && xs.len() <= p.len_range[1]);
            for &x in xs {
                prop_assert!(x >= p.value_range[0] && x <= p.value_range[1]);
                match p.sign_mix {
                    SignMix::Nonneg => prop_assert!(x >= 0.0),
                    SignMix::Nonpos => prop_assert!(x <= 0.0),
                    _ => {}
                }
            }
            if p.sign_mix == SignMix::MixedForced && xs.len() >= 2 {
                prop_assert!(xs.iter().any(|&x| x > 0.0) && xs.iter().any(|&x| x < 0.0));
            }
            if !p.duplicates_allowed {
                let mut s = xs.to_vec();
                s.sort_by(f64::total_cmp);
                s.dedup();
                prop_assert_eq!(s.len(), xs.len());
            }
        }
    }

    #[test]
    fn strata_are_independent(n in 4usize..40, seed in any::<u64>()) {
        // Appending a stratum does not perturb the earlier ones.
        let profiles = default_profiles(n);
        let full = stratify(InputKind::ListFloat, &profiles, seed).unwrap();
        let prefix = stratify(InputKind::ListFloat, &profiles[..2], seed).unwrap();
        prop_assert_eq!(&full[..prefix.len()], &prefix[..]);
    }
}
