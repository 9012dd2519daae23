use std::collections::BTreeMap;

use thiserror::Error;

use super::{BinOp, Comparator, Expr, InputKind, Interval, MrSpec, ParamKind, Primitive, Tolerance};
use crate::scalar::Scalar;

/// Parameter name to value. Ordered so serialized bindings are stable.
pub type Binding = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BindError {
    #[error("missing value for parameter `{0}`")]
    MissingParam(String),
    #[error("binding names `{0}`, which the MR does not declare")]
    UnknownParam(String),
    #[error("value {value} for `{param}` is outside {interval}")]
    OutOfDomain {
        param: String,
        value: f64,
        interval: Interval,
    },
    #[error("value {value} for int parameter `{param}` is not integral")]
    NotIntegral { param: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundPrimitive<T> {
    Add(T),
    Scale(T),
    Negate,
    Permute,
    Reverse,
    SortAscending,
    Include(T),
    ExcludeLast,
}

/// Relation right-hand side with every parameter replaced by its value.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundExpr<T> {
    Lit(T),
    OutS,
    Len,
    Neg(Box<BoundExpr<T>>),
    Bin(BinOp, Box<BoundExpr<T>>, Box<BoundExpr<T>>),
}

impl<T: Scalar> BoundExpr<T> {
    pub fn eval(&self, out_s: T, n: T) -> T {
        match self {
            BoundExpr::Lit(v) => *v,
            BoundExpr::OutS => out_s,
            BoundExpr::Len => n,
            BoundExpr::Neg(e) => -e.eval(out_s, n),
            BoundExpr::Bin(op, l, r) => {
                let (a, b) = (l.eval(out_s, n), r.eval(out_s, n));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
        }
    }

    fn close(e: &Expr, binding: &Binding) -> Result<Self, BindError> {
        Ok(match e {
            Expr::Num(v) => BoundExpr::Lit(T::from_f64_lossy(*v)),
            Expr::OutS => BoundExpr::OutS,
            Expr::Len => BoundExpr::Len,
            Expr::Param(p) => BoundExpr::Lit(T::from_f64_lossy(
                *binding.get(p).ok_or_else(|| BindError::MissingParam(p.clone()))?,
            )),
            Expr::Neg(inner) => BoundExpr::Neg(Box::new(Self::close(inner, binding)?)),
            Expr::Bin(op, l, r) => BoundExpr::Bin(
                *op,
                Box::new(Self::close(l, binding)?),
                Box::new(Self::close(r, binding)?),
            ),
        })
    }
}

/// An MR closed over concrete parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundMr<T> {
    pub id: String,
    pub input_kind: InputKind,
    pub binding: Binding,
    pub transform: Vec<BoundPrimitive<T>>,
    pub comparator: Comparator,
    pub rhs: BoundExpr<T>,
    pub tolerance: Tolerance,
}

pub fn instantiate_mr<T: Scalar>(spec: &MrSpec, binding: &Binding) -> Result<BoundMr<T>, BindError> {
    if let Some(extra) = binding.keys().find(|k| spec.param(k).is_none()) {
        return Err(BindError::UnknownParam(extra.clone()));
    }
    for p in &spec.params {
        let value = *binding
            .get(&p.name)
            .ok_or_else(|| BindError::MissingParam(p.name.clone()))?;
        if !p.domain.contains(value) {
            return Err(BindError::OutOfDomain {
                param: p.name.clone(),
                value,
                interval: p.domain,
            });
        }
        if p.kind == ParamKind::Int && value.fract() != 0.0 {
            return Err(BindError::NotIntegral {
                param: p.name.clone(),
                value,
            });
        }
    }
    let value = |name: &str| T::from_f64_lossy(binding[name]);
    let transform = spec
        .transform
        .iter()
        .map(|prim| match prim {
            Primitive::Add(p) => BoundPrimitive::Add(value(p)),
            Primitive::Scale(p) => BoundPrimitive::Scale(value(p)),
            Primitive::Include(p) => BoundPrimitive::Include(value(p)),
            Primitive::Negate => BoundPrimitive::Negate,
            Primitive::Permute => BoundPrimitive::Permute,
            Primitive::Reverse => BoundPrimitive::Reverse,
            Primitive::SortAscending => BoundPrimitive::SortAscending,
            Primitive::ExcludeLast => BoundPrimitive::ExcludeLast,
        })
        .collect();
    Ok(BoundMr {
        id: spec.id.clone(),
        input_kind: spec.input_kind,
        binding: binding.clone(),
        transform,
        comparator: spec.relation.comparator,
        rhs: BoundExpr::close(&spec.relation.rhs, binding)?,
        tolerance: spec.tolerance,
    })
}
