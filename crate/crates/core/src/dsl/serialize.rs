use std::fmt::Write;

use super::{Expr, MrSpec, OUT_F};

/// Shortest representation that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:?}")
}

/// Canonical text form: one clause per line, two-space indent, normalized
/// numbers, minimal parentheses. Whitespace in the original source does not
/// survive a parse, so equal specs always serialize identically.
pub fn serialize_mr(spec: &MrSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mr {} {{", spec.id);
    if !spec.description.is_empty() {
        let escaped = spec
            .description
            .replace('\\', "\\\\")
            .replace('"', "\\\"")
            .replace('\n', "\\n");
        let _ = writeln!(s, "  desc: \"{escaped}\";");
    }
    let _ = writeln!(s, "  input: {};", spec.input_kind);
    for p in &spec.params {
        let _ = writeln!(s, "  param {}: {} in {};", p.name, p.kind.as_str(), p.domain);
    }
    let prims: Vec<String> = spec
        .transform
        .iter()
        .map(|p| match p.param() {
            Some(arg) => format!("{}({arg})", p.name()),
            None => p.name().to_string(),
        })
        .collect();
    let _ = writeln!(s, "  follow: {};", prims.join(", "));
    let _ = writeln!(
        s,
        "  expect: {OUT_F} {} {};",
        spec.relation.comparator.as_str(),
        expr_to_string(&spec.relation.rhs)
    );
    let _ = writeln!(
        s,
        "  tol: rel {} abs {};",
        format_number(spec.tolerance.rel),
        format_number(spec.tolerance.abs)
    );
    s.push_str("}\n");
    s
}

pub(crate) fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn write_expr(e: &Expr, s: &mut String) {
    match e {
        Expr::Num(v) => s.push_str(&format_number(*v)),
        Expr::OutS => s.push_str(super::OUT_S),
        Expr::Len => s.push_str(super::LEN),
        Expr::Param(p) => s.push_str(p),
        Expr::Neg(inner) => {
            s.push('-');
            // `-1.0` would read back as a negative literal, not a negation.
            let paren = matches!(**inner, Expr::Bin(..) | Expr::Num(_));
            write_maybe_paren(inner, paren, s);
        }
        Expr::Bin(op, l, r) => {
            let prec = op.precedence();
            let lp = matches!(**l, Expr::Bin(lop, ..) if lop.precedence() < prec);
            let rp = matches!(**r, Expr::Bin(rop, ..) if rop.precedence() <= prec);
            write_maybe_paren(l, lp, s);
            let _ = write!(s, " {} ", op.as_char());
            write_maybe_paren(r, rp, s);
        }
    }
}

fn write_maybe_paren(e: &Expr, paren: bool, s: &mut String) {
    if paren {
        s.push('(');
        write_expr(e, s);
        s.push(')');
    } else {
        write_expr(e, s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_mr, BinOp};

    #[test]
    fn canonical_additive() {
        let spec = parse_mr(
            "mr additive { input: list-float; param c: float in (0.0, 10.0]; follow: add(c); expect: out_f >= out_s; tol: rel 1e-9 abs 1e-12; }",
        )
        .unwrap();
        let text = serialize_mr(&spec);
        assert_eq!(
            text,
            "mr additive {\n  input: list-float;\n  param c: float in (0.0, 10.0];\n  follow: add(c);\n  expect: out_f >= out_s;\n  tol: rel 1e-9 abs 1e-12;\n}\n"
        );
        assert_eq!(parse_mr(&text).unwrap(), spec);
    }

    #[test]
    fn whitespace_variants_serialize_identically() {
        let a = parse_mr("mr p{input:list-float;follow:permute,reverse;expect:out_f==out_s*1;}").unwrap();
        let b = parse_mr("mr p {\n\tinput : list-float ;\n follow : permute , reverse ;\n expect : out_f == out_s * 1.0 ;\n}").unwrap();
        assert_eq!(serialize_mr(&a), serialize_mr(&b));
    }

    #[test]
    fn parenthesization_preserves_structure() {
        let c = || Expr::Param("c".into());
        let cases = vec![
            Expr::bin(BinOp::Sub, Expr::OutS, Expr::bin(BinOp::Sub, c(), Expr::Len)),
            Expr::bin(BinOp::Mul, Expr::bin(BinOp::Add, Expr::OutS, c()), Expr::Len),
            Expr::bin(BinOp::Div, Expr::OutS, Expr::bin(BinOp::Mul, c(), Expr::Len)),
            Expr::Neg(Box::new(Expr::Num(2.0))),
            Expr::Neg(Box::new(Expr::Num(-2.0))),
            Expr::bin(BinOp::Sub, Expr::OutS, Expr::Num(-1.5)),
            Expr::Neg(Box::new(Expr::Neg(Box::new(c())))),
            Expr::Neg(Box::new(Expr::bin(BinOp::Add, c(), Expr::Len))),
        ];
        for rhs in cases {
            let src = format!(
                "mr e {{ input: list-float; param c: float in [1, 2]; follow: add(c); expect: out_f == {}; }}",
                expr_to_string(&rhs)
            );
            assert_eq!(parse_mr(&src).unwrap().relation.rhs, rhs, "{src}");
        }
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, -0.0, 1.0, 1e-9, 1e-12, 2.5e20, 123456.789, -7.25, f64::MIN_POSITIVE] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }
}
