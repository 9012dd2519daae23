//! Machine-readable metamorphic relation language.
//!
//! An MR is written as a block of line clauses:
//!
//! ```text
//! mr additive {
//!   input: list-float;
//!   param c: float in (0.0, 10.0];
//!   follow: add(c);
//!   expect: out_f >= out_s;
//!   tol: rel 1e-9 abs 1e-12;
//! }
//! ```
//!
//! [`parse_mr`] yields a validated [`MrSpec`]; [`serialize_mr`] writes the
//! canonical form back out; [`instantiate_mr`] closes a spec over concrete
//! parameter values.

mod bind;
mod parse;
mod serialize;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use bind::{instantiate_mr, BindError, Binding, BoundExpr, BoundMr, BoundPrimitive};
pub use parse::{parse_mr, parse_mr_bytes, ParseError, SyntaxError};
pub use serialize::{format_number, serialize_mr};
pub use validate::{validate_mr, DiagCode, Diagnostic};

/// Symbol for the follow-up output; always the left side of a relation.
pub const OUT_F: &str = "out_f";
/// Symbol for the source output.
pub const OUT_S: &str = "out_s";
/// Symbol for the length of the source input.
pub const LEN: &str = "n";

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    ScalarInt,
    ScalarFloat,
    ListInt,
    ListFloat,
}

impl InputKind {
    pub const ALL: [InputKind; 4] = [
        InputKind::ScalarInt,
        InputKind::ScalarFloat,
        InputKind::ListInt,
        InputKind::ListFloat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InputKind::ScalarInt => "scalar-int",
            InputKind::ScalarFloat => "scalar-float",
            InputKind::ListInt => "list-int",
            InputKind::ListFloat => "list-float",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_list(self) -> bool {
        matches!(self, InputKind::ListInt | InputKind::ListFloat)
    }

    pub fn is_int(self) -> bool {
        matches!(self, InputKind::ScalarInt | InputKind::ListInt)
    }
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Int,
    Float,
}

impl ParamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamKind::Int => "int",
            ParamKind::Float => "float",
        }
    }
}

/// Interval with explicit open/closed flags on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lo_closed { v >= self.lo } else { v > self.lo };
        let below = if self.hi_closed { v <= self.hi } else { v < self.hi };
        above && below
    }

    /// Smallest and largest integers inside the interval, if any.
    pub fn int_bounds(&self) -> Option<(i64, i64)> {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return None;
        }
        let mut lo = self.lo.ceil();
        if !self.lo_closed && lo == self.lo {
            lo += 1.0;
        }
        let mut hi = self.hi.floor();
        if !self.hi_closed && hi == self.hi {
            hi -= 1.0;
        }
        if lo > hi || lo.abs() > 9.0e15 || hi.abs() > 9.0e15 {
            return None;
        }
        Some((lo as i64, hi as i64))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            format_number(self.lo),
            format_number(self.hi),
            if self.hi_closed { ']' } else { ')' },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub domain: Interval,
}

/// One step of the input transformation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "op", content = "param")]
pub enum Primitive {
    Add(String),
    Scale(String),
    Negate,
    Permute,
    Reverse,
    SortAscending,
    Include(String),
    ExcludeLast,
}

impl Primitive {
    pub fn name(&self) -> &'static str {
        match self {
            Primitive::Add(_) => "add",
            Primitive::Scale(_) => "scale",
            Primitive::Negate => "negate",
            Primitive::Permute => "permute",
            Primitive::Reverse => "reverse",
            Primitive::SortAscending => "sort-ascending",
            Primitive::Include(_) => "include",
            Primitive::ExcludeLast => "exclude-last",
        }
    }

    pub fn param(&self) -> Option<&str> {
        match self {
            Primitive::Add(p) | Primitive::Scale(p) | Primitive::Include(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_list_only(&self) -> bool {
        matches!(
            self,
            Primitive::Permute
                | Primitive::Reverse
                | Primitive::SortAscending
                | Primitive::Include(_)
                | Primitive::ExcludeLast
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
}

impl Comparator {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Eq => "==",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Lt => "<",
            Comparator::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
}

impl BinOp {
    pub fn as_char(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Right-hand side of a relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Num(f64),
    OutS,
    Len,
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    /// Parameter names referenced, in first-occurrence order.
    pub fn params(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Param(p) => {
                if !out.contains(&p.as_str()) {
                    out.push(p);
                }
            }
            Expr::Neg(e) => e.collect_params(out),
            Expr::Bin(_, l, r) => {
                l.collect_params(out);
                r.collect_params(out);
            }
            Expr::Num(_) | Expr::OutS | Expr::Len => {}
        }
    }
}

/// `out_f <cmp> rhs`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub comparator: Comparator,
    pub rhs: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: DEFAULT_REL_TOL,
            abs: DEFAULT_ABS_TOL,
        }
    }
}

/// A metamorphic relation: input transformation plus expected output relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrSpec {
    pub id: String,
    /// Free text, written as an optional `desc: "...";` clause.
    pub description: String,
    pub input_kind: InputKind,
    pub params: Vec<ParamSpec>,
    pub transform: Vec<Primitive>,
    pub relation: Relation,
    pub tolerance: Tolerance,
}

impl MrSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}
