//! Text syntax for [`FieldExpr`].
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?          exponent must fold to a real constant
//! primary := number | "i" | "rho" | "absx" | "x"N | "y"N
//!          | ("exp" | "log" | "bump") "(" expr ")"
//!          | "pow" "(" expr "," expr ")" | "rho_eps" "(" expr ")"
//!          | "(" expr ")"
//! ```
//!
//! Coordinates are 1-based (`x1` is the first `x` coordinate). Whitespace is
//! ignored. [`format`] produces fully parenthesized text that parses back to
//! the same tree for every tree whose constants are real or exactly `i`.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::fields::{CompiledField, FieldExpr};
use crate::space::GrushinSpace;

/// Location and cause of a parse failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at offset {offset}: {message}{}", expected_suffix(.expected))]
pub struct ParseDiagnostics {
    /// Byte offset into the input.
    pub offset: usize,
    pub expected: Vec<String>,
    pub message: String,
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected {})", expected.join(" or "))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseDiagnostics> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match ch {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent part, e.g. 1e-3
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| ParseDiagnostics {
                    offset: start,
                    expected: vec!["number".into()],
                    message: format!("malformed number `{lit}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let c = text[start..].chars().next().unwrap_or('?');
                return Err(ParseDiagnostics {
                    offset: start,
                    expected: vec![],
                    message: format!("unexpected character `{c}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

type PResult<T> = Result<T, ParseDiagnostics>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump_tok(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str], message: impl Into<String>) -> ParseDiagnostics {
        ParseDiagnostics {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.bump_tok();
            Ok(())
        } else {
            Err(self.error(&[what], format!("found {}", self.peek().describe())))
        }
    }

    fn expr(&mut self) -> PResult<FieldExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump_tok();
                    lhs = lhs + self.term()?;
                }
                Tok::Minus => {
                    self.bump_tok();
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<FieldExpr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump_tok();
                    lhs = lhs * self.unary()?;
                }
                Tok::Slash => {
                    self.bump_tok();
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> PResult<FieldExpr> {
        if *self.peek() == Tok::Minus {
            self.bump_tok();
            // `-2` is a negative literal unless it is the base of a power
            if let Tok::Num(v) = *self.peek() {
                if self.toks[self.pos + 1].0 != Tok::Caret {
                    self.bump_tok();
                    return Ok(FieldExpr::real(-v));
                }
            }
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> PResult<FieldExpr> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump_tok();
        let at = self.offset();
        let exponent = self.unary()?;
        let c = real_constant(&exponent).ok_or_else(|| ParseDiagnostics {
            offset: at,
            expected: vec!["real constant exponent".into()],
            message: format!("exponent `{exponent}` is not a real constant"),
        })?;
        Ok(base.powf(c))
    }

    fn call_arg(&mut self) -> PResult<FieldExpr> {
        self.expect(Tok::LParen, "`(`")?;
        let e = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(e)
    }

    fn primary(&mut self) -> PResult<FieldExpr> {
        let at = self.offset();
        match self.bump_tok() {
            Tok::Num(v) => Ok(FieldExpr::real(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(&name, at),
            Tok::End => Err(ParseDiagnostics {
                offset: at,
                expected: vec!["expression".into()],
                message: "unexpected end of input".into(),
            }),
            t => Err(ParseDiagnostics {
                offset: at,
                expected: vec!["expression".into()],
                message: format!("found {}", t.describe()),
            }),
        }
    }

    fn identifier(&mut self, name: &str, at: usize) -> PResult<FieldExpr> {
        match name {
            "i" => Ok(FieldExpr::i()),
            "rho" => Ok(FieldExpr::rho()),
            "absx" => Ok(FieldExpr::abs_x()),
            "exp" => Ok(self.call_arg()?.exp()),
            "log" => Ok(self.call_arg()?.ln()),
            "bump" => Ok(self.call_arg()?.bump()),
            "rho_eps" => {
                let arg_at = self.offset() + 1;
                let e = self.call_arg()?;
                match real_constant(&e) {
                    Some(eps) if eps > 0.0 => Ok(FieldExpr::rho_eps(eps)),
                    _ => Err(ParseDiagnostics {
                        offset: arg_at,
                        expected: vec!["positive real constant".into()],
                        message: "rho_eps takes a positive constant".into(),
                    }),
                }
            }
            "pow" => {
                self.expect(Tok::LParen, "`(`")?;
                let base = self.expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let exp_at = self.offset();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let c = real_constant(&e).ok_or_else(|| ParseDiagnostics {
                    offset: exp_at,
                    expected: vec!["real constant exponent".into()],
                    message: format!("exponent `{e}` is not a real constant"),
                })?;
                Ok(base.powf(c))
            }
            _ => {
                if let Some(idx) = coordinate_index(name, 'x') {
                    return Ok(FieldExpr::x(idx));
                }
                if let Some(idx) = coordinate_index(name, 'y') {
                    return Ok(FieldExpr::y(idx));
                }
                Err(ParseDiagnostics {
                    offset: at,
                    expected: vec![
                        "x<N>".into(),
                        "y<N>".into(),
                        "rho".into(),
                        "absx".into(),
                        "i".into(),
                        "function".into(),
                    ],
                    message: format!("unknown identifier `{name}`"),
                })
            }
        }
    }
}

/// `x3` -> Some(2); rejects `x0` and non-numeric suffixes.
fn coordinate_index(name: &str, prefix: char) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n: usize = rest.parse().ok()?;
    n.checked_sub(1)
}

/// Folds a coordinate-free expression to a real number.
fn real_constant(e: &FieldExpr) -> Option<f64> {
    if !e.is_constant() {
        return None;
    }
    let space = GrushinSpace::new(1, 0, 0.0).ok()?;
    let v = CompiledField::new(e, &space).ok()?.value(&[0.0]).ok()?;
    (v.im == 0.0 && v.re.is_finite()).then_some(v.re)
}

/// Parses the text syntax into an expression tree.
pub fn parse(text: &str) -> Result<FieldExpr, ParseDiagnostics> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(
            &["operator", "end of input"],
            format!("unexpected {}", p.peek().describe()),
        ));
    }
    Ok(e)
}

/// Canonical, fully parenthesized text of an expression.
pub fn format(f: &FieldExpr) -> String {
    f.to_string()
}

fn fmt_real(v: f64) -> String {
    if v.is_sign_negative() && v != 0.0 {
        format!("(-{})", -v)
    } else {
        format!("{}", v.abs())
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FieldExpr as F;
        match self {
            F::Const(c) => {
                if c.im == 0.0 {
                    f.write_str(&fmt_real(c.re))
                } else if *c == Complex64::new(0.0, 1.0) {
                    f.write_str("i")
                } else {
                    write!(f, "({} + {} * i)", fmt_real(c.re), fmt_real(c.im))
                }
            }
            F::X(i) => write!(f, "x{}", i + 1),
            F::Y(j) => write!(f, "y{}", j + 1),
            F::Rho => f.write_str("rho"),
            F::RhoEps(eps) => write!(f, "rho_eps({})", fmt_real(*eps)),
            F::AbsX => f.write_str("absx"),
            F::Add(a, b) => write!(f, "({a} + {b})"),
            F::Sub(a, b) => write!(f, "({a} - {b})"),
            F::Mul(a, b) => write!(f, "({a} * {b})"),
            F::Div(a, b) => write!(f, "({a} / {b})"),
            F::Neg(a) => match **a {
                F::Const(_) => write!(f, "(-({a}))"),
                _ => write!(f, "(-{a})"),
            },
            F::Pow(a, c) => {
                if c.is_sign_negative() {
                    write!(f, "({a} ^ -{})", -c)
                } else {
                    write!(f, "({a} ^ {c})")
                }
            }
            F::Exp(a) => write!(f, "exp({a})"),
            F::Log(a) => write!(f, "log({a})"),
            F::Bump(a) => write!(f, "bump({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(text: &str) -> Complex64 {
        let e = parse(text).unwrap();
        let s = GrushinSpace::new(1, 0, 0.0).unwrap();
        CompiledField::new(&e, &s).unwrap().value(&[0.0]).unwrap()
    }

    #[test]
    fn parses_leaves_and_calls() {
        assert_eq!(parse("rho").unwrap(), FieldExpr::Rho);
        assert_eq!(parse(" absx ").unwrap(), FieldExpr::AbsX);
        assert_eq!(parse("x2").unwrap(), FieldExpr::X(1));
        assert_eq!(parse("y1").unwrap(), FieldExpr::Y(0));
        assert_eq!(parse("rho_eps(0.01)").unwrap(), FieldExpr::RhoEps(0.01));
    }

    #[test]
    fn structural_example() {
        let got = parse("bump((rho-1.5)/0.5)*exp(i*y1)").unwrap();
        let want = FieldExpr::Mul(
            Box::new(FieldExpr::Bump(Box::new(FieldExpr::Div(
                Box::new(FieldExpr::Sub(Box::new(FieldExpr::Rho), Box::new(FieldExpr::real(1.5)))),
                Box::new(FieldExpr::real(0.5)),
            )))),
            Box::new(FieldExpr::Exp(Box::new(FieldExpr::Mul(
                Box::new(FieldExpr::i()),
                Box::new(FieldExpr::Y(0)),
            )))),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1+2*3"), Complex64::new(7.0, 0.0));
        assert_eq!(ev("2^3^2"), Complex64::new(512.0, 0.0));
        assert_eq!(ev("-2^2"), Complex64::new(-4.0, 0.0));
        assert_eq!(ev("8/2/2"), Complex64::new(2.0, 0.0));
        assert_eq!(ev("1-2-3"), Complex64::new(-4.0, 0.0));
        assert_eq!(ev("2^-1"), Complex64::new(0.5, 0.0));
        assert_eq!(ev("pow(4, 1/2)"), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse("exp(").unwrap_err();
        assert_eq!(e.offset, 4);
        assert_eq!(e.expected, vec!["expression".to_string()]);

        let e = parse("rho + foo").unwrap_err();
        assert_eq!(e.offset, 6);
        assert!(e.message.contains("`foo`"), "{}", e.message);

        let e = parse("x1 ^ y1").unwrap_err();
        assert!(e.message.contains("not a real constant"));
        assert!(parse("x0").is_err());
        assert!(parse("rho rho").is_err());
        assert!(parse("1 $ 2").is_err());
        assert!(parse("(rho").is_err());
    }

    #[test]
    fn format_examples() {
        assert_eq!(format(&FieldExpr::Rho), "rho");
        assert_eq!(format(&(FieldExpr::x(0) + 1.0)), "(x1 + 1)");
        assert_eq!(format(&FieldExpr::x(0).powf(-2.0)), "(x1 ^ -2)");
        assert_eq!(format(&-FieldExpr::real(1.5)), "(-(1.5))");
        assert_eq!(format(&FieldExpr::real(-1.5)), "(-1.5)");
    }

    fn leaf() -> impl Strategy<Value = FieldExpr> {
        prop_oneof![
            (0.0f64..100.0).prop_map(FieldExpr::real),
            (-100.0f64..0.0).prop_map(FieldExpr::real),
            Just(FieldExpr::i()),
            (0usize..3).prop_map(FieldExpr::X),
            (0usize..3).prop_map(FieldExpr::Y),
            Just(FieldExpr::Rho),
            Just(FieldExpr::AbsX),
            (1e-6f64..1.0).prop_map(FieldExpr::RhoEps),
        ]
    }

    fn tree() -> impl Strategy<Value = FieldExpr> {
        leaf().prop_recursive(8, 64, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a / b),
                inner.clone().prop_map(|a| -a),
                (inner.clone(), -5.0f64..5.0).prop_map(|(a, c)| a.powf(c)),
                inner.clone().prop_map(FieldExpr::exp),
                inner.clone().prop_map(FieldExpr::ln),
                inner.prop_map(FieldExpr::bump),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn format_then_parse_is_identity(t in tree()) {
            prop_assert!(t.depth() <= 9);
            let text = format(&t);
            let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
            prop_assert_eq!(back, t);
        }
    }
}
