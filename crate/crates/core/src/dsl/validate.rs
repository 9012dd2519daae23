use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BinOp, Comparator, Expr, MrSpec, ParamKind, LEN, OUT_F, OUT_S};
use crate::miner::BASE_FEATURES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagCode {
    InvalidId,
    InvalidName,
    ReservedName,
    DuplicateParam,
    UnknownSymbol,
    ListOnlyPrimitive,
    KindMismatch,
    EmptyTransform,
    DivisionByZero,
    NonFiniteLiteral,
    NonFiniteBound,
    InvalidInterval,
    EmptyIntDomain,
    InvalidTolerance,
    ZeroTolerance,
    MissingClause,
    DuplicateClause,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub message: String,
    /// The offending element (parameter name, primitive, clause).
    pub element: String,
}

impl Diagnostic {
    pub fn new(code: DiagCode, message: impl Into<String>, element: impl Into<String>) -> Self {
        Diagnostic {
            code,
            message: message.into(),
            element: element.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

fn valid_mr_id(id: &str) -> bool {
    let mut chars = id.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

fn valid_param_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Checks every structural and semantic invariant of an MR. Empty output
/// means the spec is valid.
pub fn validate_mr(spec: &MrSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !valid_mr_id(&spec.id) {
        out.push(Diagnostic::new(
            DiagCode::InvalidId,
            format!("MR id `{}` must match [a-z][a-z0-9_-]*", spec.id),
            &spec.id,
        ));
    }

    let mut seen = HashSet::new();
    for p in &spec.params {
        if !valid_param_name(&p.name) {
            out.push(Diagnostic::new(
                DiagCode::InvalidName,
                format!("parameter name `{}` is not an identifier", p.name),
                &p.name,
            ));
        }
        if [OUT_F, OUT_S, LEN].contains(&p.name.as_str()) || BASE_FEATURES.contains(&p.name.as_str()) {
            out.push(Diagnostic::new(
                DiagCode::ReservedName,
                format!("parameter name `{}` is reserved", p.name),
                &p.name,
            ));
        }
        if !seen.insert(p.name.as_str()) {
            out.push(Diagnostic::new(
                DiagCode::DuplicateParam,
                format!("parameter `{}` declared more than once", p.name),
                &p.name,
            ));
        }
        let d = p.domain;
        if !d.lo.is_finite() || !d.hi.is_finite() {
            out.push(Diagnostic::new(
                DiagCode::NonFiniteBound,
                format!("domain of `{}` has a non-finite bound", p.name),
                &p.name,
            ));
        } else if d.lo >= d.hi {
            out.push(Diagnostic::new(
                DiagCode::InvalidInterval,
                format!("domain of `{}` is empty: {} >= {}", p.name, d.lo, d.hi),
                &p.name,
            ));
        } else if p.kind == ParamKind::Int && d.int_bounds().is_none() {
            out.push(Diagnostic::new(
                DiagCode::EmptyIntDomain,
                format!("int parameter `{}` has no integer in {}", p.name, d),
                &p.name,
            ));
        }
    }

    if spec.transform.is_empty() {
        out.push(Diagnostic::new(DiagCode::EmptyTransform, "transform has no primitives", "follow"));
    }
    for prim in &spec.transform {
        if prim.is_list_only() && !spec.input_kind.is_list() {
            out.push(Diagnostic::new(
                DiagCode::ListOnlyPrimitive,
                format!("`{}` needs a list input, MR input is {}", prim.name(), spec.input_kind),
                prim.name(),
            ));
        }
        if let Some(name) = prim.param() {
            match spec.param(name) {
                None => out.push(Diagnostic::new(
                    DiagCode::UnknownSymbol,
                    format!("`{}({name})` references an undeclared parameter", prim.name()),
                    name,
                )),
                Some(p) if spec.input_kind.is_int() && p.kind == ParamKind::Float => {
                    out.push(Diagnostic::new(
                        DiagCode::KindMismatch,
                        format!(
                            "`{}({name})` with a float parameter turns {} input into floats",
                            prim.name(),
                            spec.input_kind
                        ),
                        name,
                    ))
                }
                Some(_) => {}
            }
        }
    }

    check_expr(spec, &spec.relation.rhs, &mut out);

    let tol = spec.tolerance;
    if !(tol.rel.is_finite() && tol.abs.is_finite() && tol.rel >= 0.0 && tol.abs >= 0.0) {
        out.push(Diagnostic::new(
            DiagCode::InvalidTolerance,
            format!("tolerances must be finite and nonnegative (rel {}, abs {})", tol.rel, tol.abs),
            "tol",
        ));
    } else if spec.relation.comparator == Comparator::Eq
        && !spec.input_kind.is_int()
        && tol.rel == 0.0
        && tol.abs == 0.0
    {
        out.push(Diagnostic::new(
            DiagCode::ZeroTolerance,
            "`==` over floats needs a positive rel or abs tolerance",
            "tol",
        ));
    }
    out
}

fn check_expr(spec: &MrSpec, e: &Expr, out: &mut Vec<Diagnostic>) {
    match e {
        Expr::Num(v) => {
            if !v.is_finite() {
                out.push(Diagnostic::new(DiagCode::NonFiniteLiteral, "literal is not finite", v.to_string()));
            }
        }
        Expr::OutS | Expr::Len => {}
        Expr::Param(p) => {
            if spec.param(p).is_none() {
                out.push(Diagnostic::new(
                    DiagCode::UnknownSymbol,
                    format!("relation references undeclared symbol `{p}`"),
                    p,
                ));
            }
        }
        Expr::Neg(inner) => check_expr(spec, inner, out),
        Expr::Bin(op, l, r) => {
            check_expr(spec, l, out);
            check_expr(spec, r, out);
            if *op == BinOp::Div && matches!(**r, Expr::Num(v) if v == 0.0) {
                out.push(Diagnostic::new(DiagCode::DivisionByZero, "division by literal zero", "/"));
            }
        }
    }
}
