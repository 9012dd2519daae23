use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{BoundMr, Comparator, Tolerance};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Holds,
    Violated,
    Error,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "HOLDS",
            Verdict::Violated => "VIOLATED",
            Verdict::Error => "ERROR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "HOLDS" => Some(Verdict::Holds),
            "VIOLATED" => Some(Verdict::Violated),
            "ERROR" => Some(Verdict::Error),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("relation involves a non-finite value")]
pub struct NonFiniteOutput;

/// Compares `out_f` against the already evaluated right-hand side `r`.
///
/// `==` uses a symmetric tolerance band; inequalities get a slack of
/// `max(abs, rel * |r|)` in the satisfying direction only.
pub fn compare<T: Scalar>(cmp: Comparator, out_f: T, r: T, tol: Tolerance) -> Result<bool, NonFiniteOutput> {
    if !out_f.is_finite() || !r.is_finite() {
        return Err(NonFiniteOutput);
    }
    let rel = T::from_f64_lossy(tol.rel);
    let abs = T::from_f64_lossy(tol.abs);
    Ok(match cmp {
        Comparator::Eq => (out_f - r).abs() <= abs.max(rel * out_f.abs().max(r.abs())),
        _ => {
            let slack = abs.max(rel * r.abs());
            match cmp {
                Comparator::Ge => out_f >= r - slack,
                Comparator::Gt => out_f > r - slack,
                Comparator::Le => out_f <= r + slack,
                Comparator::Lt => out_f < r + slack,
                Comparator::Eq => unreachable!(),
            }
        }
    })
}

/// Evaluates `out_f <cmp> rhs(out_s, n)` for a bound MR.
pub fn evaluate_relation<T: Scalar>(bound: &BoundMr<T>, out_s: T, out_f: T, n: usize) -> Result<Verdict, NonFiniteOutput> {
    if !out_s.is_finite() {
        return Err(NonFiniteOutput);
    }
    let r = bound.rhs.eval(out_s, T::from_usize_lossy(n));
    Ok(if compare(bound.comparator, out_f, r, bound.tolerance)? {
        Verdict::Holds
    } else {
        Verdict::Violated
    })
}
