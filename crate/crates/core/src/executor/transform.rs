use rand::seq::SliceRandom;
use thiserror::Error;

use crate::dsl::BoundMr;
use crate::dsl::BoundPrimitive;
use crate::input::Input;
use crate::scalar::{sorted, Scalar};
use crate::seed::{mix, rng, PERMUTE_STREAM};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("input does not conform to {0}")]
    KindMismatch(crate::dsl::InputKind),
    #[error("{0} applied to an empty list")]
    EmptyListTransform(&'static str),
}

impl TransformError {
    /// Short reason recorded in trial logs.
    pub fn detail(&self) -> &'static str {
        match self {
            TransformError::KindMismatch(_) => "kind-mismatch",
            TransformError::EmptyListTransform(_) => "empty-list-transform",
        }
    }
}

/// Applies the bound transformation in order. `trial_seed` keys the
/// permutation stream, so the same trial always permutes the same way.
pub fn transform_input<T: Scalar>(
    bound: &BoundMr<T>,
    input: &Input<T>,
    trial_seed: u64,
) -> Result<Input<T>, TransformError> {
    if !input.conforms(bound.input_kind) {
        return Err(TransformError::KindMismatch(bound.input_kind));
    }
    let mut perm_rng = rng(mix(trial_seed, PERMUTE_STREAM));
    let mut out = input.clone();
    for prim in &bound.transform {
        out = match (prim, out) {
            (BoundPrimitive::Add(c), x) => x.map(|v| v + *c),
            (BoundPrimitive::Scale(k), x) => x.map(|v| v * *k),
            (BoundPrimitive::Negate, x) => x.map(|v| -v),
            (BoundPrimitive::Permute, Input::List(mut xs)) => {
                xs.shuffle(&mut perm_rng);
                Input::List(xs)
            }
            (BoundPrimitive::Reverse, Input::List(mut xs)) => {
                xs.reverse();
                Input::List(xs)
            }
            (BoundPrimitive::SortAscending, Input::List(xs)) => Input::List(sorted(&xs)),
            (BoundPrimitive::Include(v), Input::List(mut xs)) => {
                xs.push(*v);
                Input::List(xs)
            }
            (BoundPrimitive::ExcludeLast, Input::List(mut xs)) => {
                if xs.pop().is_none() {
                    return Err(TransformError::EmptyListTransform("exclude-last"));
                }
                Input::List(xs)
            }
            // List-only primitives on scalar kinds are rejected by validation.
            (_, x @ Input::Scalar(_)) => x,
        };
    }
    Ok(out)
}
