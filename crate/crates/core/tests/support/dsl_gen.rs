//! Proptest strategies for MR specs, shared by the DSL property tests and
//! the acceptance suite.

use mt_core::dsl::{
    validate_mr, BinOp, Comparator, Expr, InputKind, Interval, MrSpec, ParamKind, ParamSpec, Primitive, Relation,
    Tolerance,
};
use proptest::prelude::*;

pub fn number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-1000i32..1000).prop_map(|k| k as f64 / 4.0),
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(1e-300),
    ]
}

pub fn interval(kind: ParamKind) -> impl Strategy<Value = Interval> {
    (-50i32..50, 1i32..50, any::<bool>(), any::<bool>()).prop_map(move |(lo, w, lc, hc)| {
        let (lo, hi) = match kind {
            ParamKind::Int => (lo as f64, (lo + w + 1) as f64),
            ParamKind::Float => (lo as f64 / 2.0, (lo + w) as f64 / 2.0),
        };
        Interval { lo, hi, lo_closed: lc, hi_closed: hc }
    })
}

pub fn expr(params: Vec<String>) -> impl Strategy<Value = Expr> {
    let mut leaves = vec![number().prop_map(Expr::Num).boxed(), Just(Expr::OutS).boxed(), Just(Expr::Len).boxed()];
    if !params.is_empty() {
        leaves.push(proptest::sample::select(params).prop_map(Expr::Param).boxed());
    }
    let leaf = proptest::strategy::Union::new(leaves);
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)],
                inner.clone(),
                inner
            )
                .prop_map(|(op, l, r)| Expr::bin(op, l, r)),
        ]
    })
}

pub fn primitive(kind: InputKind, params: Vec<String>) -> BoxedStrategy<Primitive> {
    let mut options = vec![Just(Primitive::Negate).boxed()];
    if kind.is_list() {
        options.extend([
            Just(Primitive::Permute).boxed(),
            Just(Primitive::Reverse).boxed(),
            Just(Primitive::SortAscending).boxed(),
            Just(Primitive::ExcludeLast).boxed(),
        ]);
    }
    if !params.is_empty() {
        let p = proptest::sample::select(params);
        options.push(p.clone().prop_map(Primitive::Add).boxed());
        options.push(p.clone().prop_map(Primitive::Scale).boxed());
        if kind.is_list() {
            options.push(p.prop_map(Primitive::Include).boxed());
        }
    }
    proptest::strategy::Union::new(options).boxed()
}

/// Random specs that pass validation by construction (plus a final filter
/// for the rare literal-zero divisor).
pub fn valid_spec() -> impl Strategy<Value = MrSpec> {
    let kind = proptest::sample::select(InputKind::ALL.to_vec());
    let names = proptest::sample::subsequence(vec!["c", "k", "v", "alpha", "_w2", "delta_1"], 0..4);
    (kind, names, "[a-z][a-z0-9_-]{0,10}", "[ -~]{0,20}")
        .prop_flat_map(|(kind, names, id, desc)| {
            let params: Vec<BoxedStrategy<ParamSpec>> = names
                .iter()
                .map(|n| {
                    let name = n.to_string();
                    let kinds = if kind.is_int() {
                        Just(ParamKind::Int).boxed()
                    } else {
                        prop_oneof![Just(ParamKind::Int), Just(ParamKind::Float)].boxed()
                    };
                    kinds
                        .prop_flat_map(move |pk| {
                            let name = name.clone();
                            interval(pk).prop_map(move |domain| ParamSpec { name: name.clone(), kind: pk, domain })
                        })
                        .boxed()
                })
                .collect();
            let pnames: Vec<String> = names.iter().map(|s| s.to_string()).collect();
            (
                Just(kind),
                Just(id),
                Just(desc),
                params,
                proptest::collection::vec(primitive(kind, pnames.clone()), 1..5),
                prop_oneof![
                    Just(Comparator::Eq),
                    Just(Comparator::Le),
                    Just(Comparator::Ge),
                    Just(Comparator::Lt),
                    Just(Comparator::Gt)
                ],
                expr(pnames),
                prop_oneof![Just(Tolerance::default()), (0u32..8, 0u32..8).prop_map(|(a, b)| Tolerance {
                    rel: a as f64 * 1e-6,
                    abs: b as f64 * 0.5 + 1e-9,
                })],
            )
        })
        .prop_map(|(kind, id, desc, params, transform, comparator, rhs, tolerance)| MrSpec {
            id,
            description: desc,
            input_kind: kind,
            params,
            transform,
            relation: Relation { comparator, rhs },
            tolerance,
        })
        .prop_filter("valid", |s| validate_mr(s).is_empty())
}
