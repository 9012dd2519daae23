use std::fmt;

use thiserror::Error;

use super::validate::{validate_mr, DiagCode, Diagnostic};
use super::{
    BinOp, Comparator, Expr, InputKind, Interval, MrSpec, ParamKind, ParamSpec, Primitive,
    Relation, Tolerance, LEN, OUT_F, OUT_S,
};

const MAX_NESTING: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    /// Byte offset into the source.
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: expected {}, found {}",
            self.line,
            self.column,
            self.expected.join(" or "),
            self.found
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {0}")]
    Syntax(SyntaxError),
    #[error("invalid MR: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Diagnostic>),
}

impl ParseError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            ParseError::Validation(d) => d,
            ParseError::Syntax(_) => &[],
        }
    }
}

impl From<SyntaxError> for ParseError {
    fn from(e: SyntaxError) -> Self {
        ParseError::Syntax(e)
    }
}

/// Parses arbitrary bytes; invalid UTF-8 is reported as a syntax error at the
/// first offending byte.
pub fn parse_mr_bytes(bytes: &[u8]) -> Result<MrSpec, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_mr(text),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            // The prefix is valid UTF-8 by construction.
            let prefix = std::str::from_utf8(valid).unwrap_or("");
            let (line, column) = line_col(prefix, prefix.len());
            Err(ParseError::Syntax(SyntaxError {
                offset: e.valid_up_to(),
                line,
                column,
                expected: vec!["UTF-8 text".into()],
                found: "invalid UTF-8".into(),
            }))
        }
    }
}

pub fn parse_mr(text: &str) -> Result<MrSpec, ParseError> {
    let raw = Parser::new(text).document()?;
    let spec = raw.assemble()?;
    let diags = validate_mr(&spec);
    if diags.is_empty() {
        Ok(spec)
    } else {
        Err(ParseError::Validation(diags))
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.chars().count(), |i| {
        before[i + 1..].chars().count()
    }) + 1;
    (line, column)
}

#[derive(Default)]
struct RawSpec {
    id: String,
    descs: Vec<String>,
    inputs: Vec<InputKind>,
    params: Vec<ParamSpec>,
    follows: Vec<Vec<Primitive>>,
    expects: Vec<Relation>,
    tols: Vec<Tolerance>,
}

impl RawSpec {
    fn assemble(mut self) -> Result<MrSpec, ParseError> {
        let mut diags = Vec::new();
        let mut single = |name: &str, count: usize| {
            if count == 0 && name != "desc" && name != "tol" {
                diags.push(Diagnostic::new(
                    DiagCode::MissingClause,
                    format!("missing `{name}` clause"),
                    name,
                ));
            } else if count > 1 {
                diags.push(Diagnostic::new(
                    DiagCode::DuplicateClause,
                    format!("`{name}` clause given {count} times"),
                    name,
                ));
            }
        };
        single("desc", self.descs.len());
        single("input", self.inputs.len());
        single("follow", self.follows.len());
        single("expect", self.expects.len());
        single("tol", self.tols.len());
        if !diags.is_empty() {
            return Err(ParseError::Validation(diags));
        }
        Ok(MrSpec {
            id: self.id,
            description: self.descs.pop().unwrap_or_default(),
            input_kind: self.inputs[0],
            params: self.params,
            transform: self.follows.pop().unwrap_or_default(),
            relation: self.expects.pop().expect("checked above"),
            tolerance: self.tols.pop().unwrap_or_default(),
        })
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    depth: usize,
}

type PResult<T> = Result<T, SyntaxError>;

fn is_word_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            pos: 0,
            depth: 0,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn error(&mut self, expected: &[&str]) -> SyntaxError {
        self.skip_ws();
        let found = match self.rest().chars().next() {
            None => "end of input".to_string(),
            Some(_) => {
                let snippet: String = self
                    .rest()
                    .chars()
                    .take_while(|c| !c.is_whitespace())
                    .take(12)
                    .collect();
                format!("`{snippet}`")
            }
        };
        let (line, column) = line_col(self.src, self.pos);
        SyntaxError {
            offset: self.pos,
            line,
            column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        if self.eat(c) {
            Ok(())
        } else {
            let tok = c.to_string();
            Err(self.error(&[&format!("`{tok}`")]))
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    /// `[A-Za-z_][A-Za-z0-9_]*`, optionally with inner hyphens when each
    /// hyphen is followed by a word character.
    fn word(&mut self, hyphens: bool) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let mut chars = rest.char_indices().peekable();
        match chars.next() {
            Some((_, c)) if is_word_start(c) => {}
            _ => return None,
        }
        let mut end = rest.len();
        while let Some((i, c)) = chars.next() {
            if is_word_char(c) {
                continue;
            }
            if hyphens && c == '-' && chars.peek().is_some_and(|&(_, n)| is_word_char(n)) {
                continue;
            }
            end = i;
            break;
        }
        self.pos += end;
        Some(&rest[..end])
    }

    /// MR ids: a word start followed by any run of word characters and hyphens.
    fn mr_id(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        if !rest.chars().next().is_some_and(is_word_start) {
            return None;
        }
        let end = rest
            .char_indices()
            .find(|&(_, c)| !(is_word_char(c) || c == '-'))
            .map_or(rest.len(), |(i, _)| i);
        self.pos += end;
        Some(&rest[..end])
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        let save = self.pos;
        match self.word(true) {
            Some(w) if w == kw => Ok(()),
            _ => {
                self.pos = save;
                Err(self.error(&[&format!("`{kw}`")]))
            }
        }
    }

    fn ident(&mut self, what: &str) -> PResult<&'a str> {
        let save = self.pos;
        self.word(false).ok_or_else(|| {
            self.pos = save;
            self.error(&[what])
        })
    }

    fn unsigned_number(&mut self) -> PResult<f64> {
        self.skip_ws();
        let rest = self.rest();
        let bytes = rest.as_bytes();
        let mut i = 0;
        let digits = |i: &mut usize| {
            let start = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            *i - start
        };
        if digits(&mut i) == 0 {
            return Err(self.error(&["number"]));
        }
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            digits(&mut i);
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if digits(&mut j) > 0 {
                i = j;
            }
        }
        let text = &rest[..i];
        let v = text.parse::<f64>().map_err(|_| self.error(&["number"]))?;
        self.pos += i;
        Ok(v)
    }

    fn signed_number(&mut self) -> PResult<f64> {
        let neg = self.eat('-');
        let v = self.unsigned_number()?;
        Ok(if neg { -v } else { v })
    }

    fn document(&mut self) -> PResult<RawSpec> {
        self.keyword("mr")?;
        let save = self.pos;
        let id = self.mr_id().ok_or_else(|| {
            self.pos = save;
            self.error(&["MR identifier"])
        })?;
        let mut raw = RawSpec {
            id: id.to_string(),
            ..RawSpec::default()
        };
        self.expect('{')?;
        let mut clauses = 0;
        loop {
            if clauses > 0 && self.eat('}') {
                break;
            }
            self.clause(&mut raw)?;
            clauses += 1;
        }
        self.skip_ws();
        if !self.rest().is_empty() {
            return Err(self.error(&["end of input"]));
        }
        Ok(raw)
    }

    fn clause(&mut self, raw: &mut RawSpec) -> PResult<()> {
        const CLAUSES: [&str; 6] = ["`input`", "`param`", "`follow`", "`expect`", "`tol`", "`desc`"];
        let save = self.pos;
        let Some(head) = self.word(false) else {
            let mut expected = CLAUSES.to_vec();
            if raw.inputs.len() + raw.params.len() + raw.follows.len() > 0 {
                expected.push("`}`");
            }
            return Err(self.error(&expected));
        };
        match head {
            "input" => {
                self.expect(':')?;
                let at = self.pos;
                let kind = self.word(true).and_then(InputKind::parse).ok_or_else(|| {
                    self.pos = at;
                    self.error(&["`scalar-int`", "`scalar-float`", "`list-int`", "`list-float`"])
                })?;
                raw.inputs.push(kind);
            }
            "param" => {
                let name = self.ident("parameter name")?.to_string();
                self.expect(':')?;
                let at = self.pos;
                let kind = match self.word(false) {
                    Some("int") => ParamKind::Int,
                    Some("float") => ParamKind::Float,
                    _ => {
                        self.pos = at;
                        return Err(self.error(&["`int`", "`float`"]));
                    }
                };
                self.keyword("in")?;
                let domain = self.interval()?;
                raw.params.push(ParamSpec { name, kind, domain });
            }
            "follow" => {
                self.expect(':')?;
                let mut prims = vec![self.primitive()?];
                while self.eat(',') {
                    prims.push(self.primitive()?);
                }
                raw.follows.push(prims);
            }
            "expect" => {
                self.expect(':')?;
                self.keyword(OUT_F)?;
                let comparator = self.comparator()?;
                let rhs = self.expr()?;
                raw.expects.push(Relation { comparator, rhs });
            }
            "tol" => {
                self.expect(':')?;
                self.keyword("rel")?;
                let rel = self.signed_number()?;
                self.keyword("abs")?;
                let abs = self.signed_number()?;
                raw.tols.push(Tolerance { rel, abs });
            }
            "desc" => {
                self.expect(':')?;
                let s = self.string()?;
                raw.descs.push(s);
            }
            _ => {
                self.pos = save;
                return Err(self.error(&CLAUSES));
            }
        }
        self.expect(';')
    }

    fn string(&mut self) -> PResult<String> {
        self.expect('"')?;
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, '"')) => out.push('"'),
                    Some((_, '\\')) => out.push('\\'),
                    Some((_, 'n')) => out.push('\n'),
                    Some((j, _)) => {
                        self.pos += j;
                        return Err(self.error(&["escape `\\\"`, `\\\\` or `\\n`"]));
                    }
                    None => break,
                },
                c => out.push(c),
            }
        }
        self.pos = self.src.len();
        Err(self.error(&["closing `\"`"]))
    }

    fn interval(&mut self) -> PResult<Interval> {
        let lo_closed = if self.eat('[') {
            true
        } else if self.eat('(') {
            false
        } else {
            return Err(self.error(&["`(`", "`[`"]));
        };
        let lo = self.signed_number()?;
        self.expect(',')?;
        let hi = self.signed_number()?;
        let hi_closed = if self.eat(']') {
            true
        } else if self.eat(')') {
            false
        } else {
            return Err(self.error(&["`)`", "`]`"]));
        };
        Ok(Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        })
    }

    fn primitive(&mut self) -> PResult<Primitive> {
        let save = self.pos;
        let name = self.word(true);
        let with_param = |p: &mut Self, f: fn(String) -> Primitive| -> PResult<Primitive> {
            p.expect('(')?;
            let param = p.ident("parameter name")?.to_string();
            p.expect(')')?;
            Ok(f(param))
        };
        match name {
            Some("add") => with_param(self, Primitive::Add),
            Some("scale") => with_param(self, Primitive::Scale),
            Some("include") => with_param(self, Primitive::Include),
            Some("negate") => Ok(Primitive::Negate),
            Some("permute") => Ok(Primitive::Permute),
            Some("reverse") => Ok(Primitive::Reverse),
            Some("sort-ascending") => Ok(Primitive::SortAscending),
            Some("exclude-last") => Ok(Primitive::ExcludeLast),
            _ => {
                self.pos = save;
                Err(self.error(&[
                    "`add(..)`",
                    "`scale(..)`",
                    "`negate`",
                    "`permute`",
                    "`reverse`",
                    "`sort-ascending`",
                    "`include(..)`",
                    "`exclude-last`",
                ]))
            }
        }
    }

    fn comparator(&mut self) -> PResult<Comparator> {
        for (tok, cmp) in [
            ("==", Comparator::Eq),
            ("<=", Comparator::Le),
            (">=", Comparator::Ge),
            ("<", Comparator::Lt),
            (">", Comparator::Gt),
        ] {
            if self.eat_str(tok) {
                return Ok(cmp);
            }
        }
        Err(self.error(&["`==`", "`<=`", "`>=`", "`<`", "`>`"]))
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        if self.depth >= MAX_NESTING {
            return Err(self.error(&["shallower expression"]));
        }
        self.depth += 1;
        let r = f(self);
        self.depth -= 1;
        r
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat('-') {
            // A literal directly after the sign is a negative literal.
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                return Ok(Expr::Num(-self.unsigned_number()?));
            }
            return self.nested(|p| Ok(Expr::Neg(Box::new(p.unary()?))));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.nested(|p| p.expr())?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => Ok(Expr::Num(self.unsigned_number()?)),
            Some(c) if is_word_start(c) => {
                let w = self.word(false).expect("word start checked");
                Ok(match w {
                    OUT_S => Expr::OutS,
                    LEN => Expr::Len,
                    _ => Expr::Param(w.to_string()),
                })
            }
            _ => Err(self.error(&["number", "symbol", "`(`", "`-`"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ADDITIVE: &str = "mr additive { input: list-float; param c: float in (0.0, 10.0]; follow: add(c); expect: out_f >= out_s; tol: rel 1e-9 abs 1e-12; }";

    #[test]
    fn parses_additive() {
        let spec = parse_mr(ADDITIVE).unwrap();
        assert_eq!(spec.id, "additive");
        assert_eq!(spec.input_kind, InputKind::ListFloat);
        assert_eq!(spec.transform, vec![Primitive::Add("c".into())]);
        assert_eq!(spec.relation.comparator, Comparator::Ge);
        assert_eq!(spec.relation.rhs, Expr::OutS);
        let c = spec.param("c").unwrap();
        assert_eq!(c.kind, ParamKind::Float);
        assert!(!c.domain.lo_closed && c.domain.hi_closed);
        assert_eq!((c.domain.lo, c.domain.hi), (0.0, 10.0));
        assert_eq!(spec.tolerance, Tolerance { rel: 1e-9, abs: 1e-12 });
    }

    #[test]
    fn parses_permutative() {
        let spec = parse_mr(
            "mr permutative { input: list-float; follow: permute; expect: out_f == out_s; tol: rel 1e-9 abs 1e-12; }",
        )
        .unwrap();
        assert_eq!(spec.id, "permutative");
        assert!(spec.params.is_empty());
        assert_eq!(spec.transform, vec![Primitive::Permute]);
    }

    #[test]
    fn list_primitive_on_scalar_rejected() {
        let err = parse_mr(
            "mr bad { input: scalar-float; follow: permute; expect: out_f == out_s; tol: rel 1e-9 abs 1e-12; }",
        )
        .unwrap_err();
        let diags = err.diagnostics();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagCode::ListOnlyPrimitive);
    }

    #[test]
    fn tol_defaults_when_omitted() {
        let spec = parse_mr("mr p { input: list-float; follow: reverse; expect: out_f == out_s; }").unwrap();
        assert_eq!(spec.tolerance, Tolerance::default());
    }

    #[test]
    fn whitespace_between_tokens_is_free() {
        let tight = "mr additive{input:list-float;param c:float in(0.0,10.0];follow:add(c);expect:out_f>=out_s;tol:rel 1e-9 abs 1e-12;}";
        let loose = "mr   additive\n{\n input :\n list-float ;\n param c : float in ( 0.0 , 10.0 ] ;\n follow : add ( c ) ;\n expect : out_f >= out_s ;\n tol : rel 1e-9 abs 1e-12 ;\n}\n";
        assert_eq!(parse_mr(tight).unwrap(), parse_mr(ADDITIVE).unwrap());
        assert_eq!(parse_mr(loose).unwrap(), parse_mr(ADDITIVE).unwrap());
    }

    #[test]
    fn expression_precedence_and_unary() {
        let spec = parse_mr(
            "mr e { input: list-float; param c: float in [1, 2]; follow: add(c); expect: out_f == out_s + n*c - -2 / (c-1.5); }",
        )
        .unwrap();
        let expected = Expr::bin(
            BinOp::Sub,
            Expr::bin(
                BinOp::Add,
                Expr::OutS,
                Expr::bin(BinOp::Mul, Expr::Len, Expr::Param("c".into())),
            ),
            Expr::bin(
                BinOp::Div,
                Expr::Num(-2.0),
                Expr::bin(BinOp::Sub, Expr::Param("c".into()), Expr::Num(1.5)),
            ),
        );
        assert_eq!(spec.relation.rhs, expected);
    }

    #[test]
    fn syntax_error_carries_position_and_expectations() {
        let err = parse_mr("mr x {\n  input: list-float;\n  follow: shuffle;\n}").unwrap_err();
        let ParseError::Syntax(e) = err else { panic!("expected syntax error") };
        assert_eq!((e.line, e.column), (3, 11));
        assert!(e.expected.iter().any(|s| s.contains("permute")));
        assert_eq!(e.found, "`shuffle;`");
    }

    #[test]
    fn missing_and_duplicate_clauses() {
        let err = parse_mr("mr x { input: list-float; input: list-int; follow: negate; }").unwrap_err();
        let codes: Vec<_> = err.diagnostics().iter().map(|d| d.code).collect();
        assert_eq!(codes, vec![DiagCode::DuplicateClause, DiagCode::MissingClause]);
    }

    #[test]
    fn deep_nesting_is_a_syntax_error() {
        let src = format!(
            "mr x {{ input: list-float; follow: negate; expect: out_f == {}out_s{}; }}",
            "(".repeat(10_000),
            ")".repeat(10_000)
        );
        assert!(matches!(parse_mr(&src), Err(ParseError::Syntax(_))));
        let src = format!(
            "mr x {{ input: list-float; follow: negate; expect: out_f == {}out_s; }}",
            "-".repeat(10_000)
        );
        assert!(matches!(parse_mr(&src), Err(ParseError::Syntax(_))));
    }

    #[test]
    fn invalid_utf8_is_syntax_error() {
        let err = parse_mr_bytes(b"mr x \xff").unwrap_err();
        let ParseError::Syntax(e) = err else { panic!() };
        assert_eq!(e.offset, 5);
    }

    #[test]
    fn trailing_garbage_rejected() {
        let src = format!("{ADDITIVE} extra");
        assert!(matches!(parse_mr(&src), Err(ParseError::Syntax(_))));
    }

    #[test]
    fn description_clause_with_escapes() {
        let spec = parse_mr(
            r#"mr d { desc: "say \"hi\"\\ok"; input: list-float; follow: negate; expect: out_f <= out_s; }"#,
        )
        .unwrap();
        assert_eq!(spec.description, "say \"hi\"\\ok");
    }
}
