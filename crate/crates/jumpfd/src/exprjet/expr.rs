//! Scalar-field expression trees: parser, printer, pointwise evaluation.
//!
//! The grammar is conventional infix arithmetic over the variables `x` and
//! `y`, the constant `pi`, decimal literals, the operators `+ - * / ^`
//! (with `^` restricted to nonnegative integer exponents) and the functions
//! `sin`, `cos`, `exp`, `sqrt`. Precedence, from loosest to tightest:
//! `+ -`, then `* /`, then unary `-`, then `^`. Whitespace is ignored.
//!
//! Binary subtraction is represented as `Add(a, Neg(b))`, so the tree uses
//! only one additive node. The printer emits a canonical form for which
//! `parse_expr(print) == original` holds structurally for every tree the
//! parser can produce.

use crate::error::{Error, Result};
use std::fmt;

/// Expression tree for a scalar field over (x, y).
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Literal constant. The parser only produces finite, nonnegative
    /// values; negative literals come out as `Neg(Const(..))`.
    Const(f64),
    /// The constant π.
    Pi,
    /// The coordinate x.
    X,
    /// The coordinate y.
    Y,
    /// Sum. Subtraction is `Add(a, Neg(b))`.
    Add(Box<Expr>, Box<Expr>),
    /// Product.
    Mul(Box<Expr>, Box<Expr>),
    /// Quotient.
    Div(Box<Expr>, Box<Expr>),
    /// Nonnegative integer power.
    Pow(Box<Expr>, u32),
    /// Unary negation.
    Neg(Box<Expr>),
    /// sin of a subexpression.
    Sin(Box<Expr>),
    /// cos of a subexpression.
    Cos(Box<Expr>),
    /// exp of a subexpression.
    Exp(Box<Expr>),
    /// sqrt of a subexpression.
    Sqrt(Box<Expr>),
}

/// Parse expression text into a tree.
///
/// Errors carry the byte offset of the first offending character.
pub fn parse_expr(text: &str) -> Result<Expr> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end_offset: text.len(),
    };
    let expr = parser.parse_sum()?;
    if let Some((offset, tok)) = parser.peek() {
        return Err(parse_err(
            offset,
            format!("unexpected trailing input `{}`", tok.describe()),
        ));
    }
    Ok(expr)
}

/// Evaluate an expression at a point with IEEE double semantics.
///
/// Division by zero and square roots of negative values are reported as
/// domain errors instead of silently producing NaN or infinity.
pub fn eval_expr(e: &Expr, x: f64, y: f64) -> Result<f64> {
    match e {
        Expr::Const(v) => Ok(*v),
        Expr::Pi => Ok(std::f64::consts::PI),
        Expr::X => Ok(x),
        Expr::Y => Ok(y),
        Expr::Add(a, b) => Ok(eval_expr(a, x, y)? + eval_expr(b, x, y)?),
        Expr::Mul(a, b) => Ok(eval_expr(a, x, y)? * eval_expr(b, x, y)?),
        Expr::Div(a, b) => {
            let divisor = eval_expr(b, x, y)?;
            if divisor == 0.0 {
                return Err(Error::domain(format!("division by zero at ({x}, {y})")));
            }
            Ok(eval_expr(a, x, y)? / divisor)
        }
        Expr::Pow(a, k) => Ok(eval_expr(a, x, y)?.powi(*k as i32)),
        Expr::Neg(a) => Ok(-eval_expr(a, x, y)?),
        Expr::Sin(a) => Ok(eval_expr(a, x, y)?.sin()),
        Expr::Cos(a) => Ok(eval_expr(a, x, y)?.cos()),
        Expr::Exp(a) => Ok(eval_expr(a, x, y)?.exp()),
        Expr::Sqrt(a) => {
            let v = eval_expr(a, x, y)?;
            if v < 0.0 {
                return Err(Error::domain(format!(
                    "square root of negative value {v:.6e} at ({x}, {y})"
                )));
            }
            Ok(v.sqrt())
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
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
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("{v}"),
            Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
        }
    }
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => {
                tokens.push((i, Tok::Plus));
                i += 1;
            }
            b'-' => {
                tokens.push((i, Tok::Minus));
                i += 1;
            }
            b'*' => {
                tokens.push((i, Tok::Star));
                i += 1;
            }
            b'/' => {
                tokens.push((i, Tok::Slash));
                i += 1;
            }
            b'^' => {
                tokens.push((i, Tok::Caret));
                i += 1;
            }
            b'(' => {
                tokens.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                tokens.push((i, Tok::RParen));
                i += 1;
            }
            b',' => {
                tokens.push((i, Tok::Comma));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(parse_err(i.min(bytes.len()), "expected digits after `.`"));
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // Optional exponent part: e or E, then an optionally signed
                // integer. Only consumed when digits actually follow, so
                // `2*exp(x)` lexes `exp` as an identifier.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit
                    .parse()
                    .map_err(|_| parse_err(start, format!("invalid number literal `{lit}`")))?;
                tokens.push((start, Tok::Num(value)));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(parse_err(i, format!("unexpected character `{ch}`")));
            }
        }
    }
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser (recursive descent, one function per precedence level)
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    end_offset: usize,
}

impl Parser {
    fn peek(&self) -> Option<(usize, &Tok)> {
        self.tokens.get(self.pos).map(|(o, t)| (*o, t))
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn current_offset(&self) -> usize {
        self.peek().map_or(self.end_offset, |(o, _)| o)
    }

    fn parse_sum(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some((_, Tok::Plus)) => {
                    self.bump();
                    let rhs = self.parse_term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some((_, Tok::Minus)) => {
                    self.bump();
                    let rhs = self.parse_term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(Expr::Neg(Box::new(rhs))));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.peek() {
                Some((_, Tok::Star)) => {
                    self.bump();
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some((_, Tok::Slash)) => {
                    self.bump();
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        if let Some((_, Tok::Minus)) = self.peek() {
            self.bump();
            let inner = self.parse_unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr> {
        let mut base = self.parse_atom()?;
        while let Some((_, Tok::Caret)) = self.peek() {
            self.bump();
            let offset = self.current_offset();
            let exponent = match self.bump() {
                Some((_, Tok::Num(v))) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => {
                    v as u32
                }
                Some((_, tok)) => {
                    return Err(parse_err(
                        offset,
                        format!(
                            "exponent must be a nonnegative integer literal, found `{}`",
                            tok.describe()
                        ),
                    ))
                }
                None => {
                    return Err(parse_err(offset, "expected an exponent after `^`"));
                }
            };
            base = Expr::Pow(Box::new(base), exponent);
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        let offset = self.current_offset();
        match self.bump() {
            Some((_, Tok::Num(v))) => Ok(Expr::Const(v)),
            Some((_, Tok::Ident(name))) => match name.as_str() {
                "x" => Ok(Expr::X),
                "y" => Ok(Expr::Y),
                "pi" => Ok(Expr::Pi),
                "sin" | "cos" | "exp" | "sqrt" => {
                    match self.peek() {
                        Some((_, Tok::LParen)) => {
                            self.bump();
                        }
                        _ => {
                            return Err(parse_err(
                                self.current_offset(),
                                format!("expected `(` after `{name}`"),
                            ))
                        }
                    }
                    let arg = self.parse_sum()?;
                    match self.bump() {
                        Some((_, Tok::RParen)) => {}
                        Some((off, Tok::Comma)) => {
                            return Err(parse_err(
                                off,
                                format!("`{name}` takes exactly one argument"),
                            ))
                        }
                        Some((off, tok)) => {
                            return Err(parse_err(
                                off,
                                format!("expected `)`, found `{}`", tok.describe()),
                            ))
                        }
                        None => {
                            return Err(parse_err(self.end_offset, "expected `)`"));
                        }
                    }
                    let arg = Box::new(arg);
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        "exp" => Expr::Exp(arg),
                        _ => Expr::Sqrt(arg),
                    })
                }
                _ => Err(parse_err(offset, format!("unknown identifier `{name}`"))),
            },
            Some((_, Tok::LParen)) => {
                let inner = self.parse_sum()?;
                match self.bump() {
                    Some((_, Tok::RParen)) => Ok(inner),
                    Some((off, tok)) => Err(parse_err(
                        off,
                        format!("expected `)`, found `{}`", tok.describe()),
                    )),
                    None => Err(parse_err(self.end_offset, "expected `)`")),
                }
            }
            Some((off, tok)) => Err(parse_err(
                off,
                format!("expected an expression, found `{}`", tok.describe()),
            )),
            None => Err(parse_err(self.end_offset, "unexpected end of input")),
        }
    }
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Const(v) => write!(f, "{v}")?,
            Expr::Pi => write!(f, "pi")?,
            Expr::X => write!(f, "x")?,
            Expr::Y => write!(f, "y")?,
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                if let Expr::Neg(inner) = b.as_ref() {
                    write!(f, "-")?;
                    inner.fmt_prec(f, 2)?;
                } else {
                    write!(f, "+")?;
                    b.fmt_prec(f, 2)?;
                }
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Pow(base, k) => {
                base.fmt_prec(f, 5)?;
                write!(f, "^{k}")?;
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 3)?;
            }
            Expr::Sin(a) => {
                write!(f, "sin(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Cos(a) => {
                write!(f, "cos(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Exp(a) => {
                write!(f, "exp(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Sqrt(a) => {
                write!(f, "sqrt(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    #[test]
    fn circle_level_set_tree() {
        let parsed = parse_expr("x^2+y^2-2").unwrap();
        let expected = Expr::Add(
            b(Expr::Add(
                b(Expr::Pow(b(Expr::X), 2)),
                b(Expr::Pow(b(Expr::Y), 2)),
            )),
            b(Expr::Neg(b(Expr::Const(2.0)))),
        );
        assert_eq!(parsed, expected);
    }

    #[test]
    fn benchmark_solution_expression_parses() {
        assert!(parse_expr("10*sin(3.5*x)*(x^4+2*y^4-2)").is_ok());
    }

    #[test]
    fn malformed_call_reports_offset() {
        match parse_expr("sin(+)") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn offsets_point_at_the_problem() {
        let cases = [
            ("x+z", 2),
            ("foo(x)", 0),
            ("x y", 2),
            ("x^-1", 2),
            ("x^2.5", 2),
            ("sin(x,y)", 5),
            ("sin x", 4),
            ("(x+y", 4),
            ("", 0),
            ("x + ", 4),
            ("2 @ 3", 2),
        ];
        for (text, expected) in cases {
            match parse_expr(text) {
                Err(Error::Parse { offset, .. }) => {
                    assert_eq!(offset, expected, "offset mismatch for {text:?}")
                }
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn pointwise_values() {
        let cases = [
            ("x^2+y^2-2", (1.0, 1.0), 0.0),
            ("exp(x-y)", (0.0, 0.0), 1.0),
            ("2*x-y", (1.0, 3.0), -1.0),
            ("pi", (0.0, 0.0), std::f64::consts::PI),
            ("-x^2", (3.0, 0.0), -9.0),
            ("2^3^2", (0.0, 0.0), 64.0),
            ("6/3/2", (0.0, 0.0), 1.0),
            ("1-2-3", (0.0, 0.0), -4.0),
        ];
        for (text, (x, y), expected) in cases {
            let e = parse_expr(text).unwrap();
            assert_eq!(eval_expr(&e, x, y).unwrap(), expected, "value of {text:?}");
        }
    }

    #[test]
    fn domain_errors_are_hard() {
        let e = parse_expr("sqrt(x)").unwrap();
        assert!(eval_expr(&e, -1.0, 0.0).is_err());
        assert_eq!(eval_expr(&e, 0.0, 0.0).unwrap(), 0.0);
        let e = parse_expr("1/x").unwrap();
        assert!(eval_expr(&e, 0.0, 0.0).is_err());
    }

    #[test]
    fn printer_round_trips_structurally() {
        let samples = [
            "x^2+y^2-2",
            "10*sin(3.5*x)*(x^4+2*y^4-2)",
            "(2+cos(x)*cos(y))/10",
            "-x^2",
            "x--y",
            "x/(y*sqrt(2))",
            "exp(x-y)-10",
            "2*pi*x",
            "1/(x^2+1)",
            "x-(y+1)",
            "(x+y)^3",
            "0.5*x^2",
        ];
        for text in samples {
            let tree = parse_expr(text).unwrap();
            let printed = tree.to_string();
            let reparsed = parse_expr(&printed)
                .unwrap_or_else(|e| panic!("reparse of {printed:?} failed: {e}"));
            assert_eq!(reparsed, tree, "round trip for {text:?} via {printed:?}");
        }
    }
}
