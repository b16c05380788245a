//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | factor
//! factor   := base ('^' exponent)?
//! base     := number | ident | '(' expr ')' | func '(' expr ')'
//! exponent := '-' exponent | number | param | '(' constant expression ')'
//! ```
//!
//! Exponents must be constant. Integer literals and their quotients stay
//! exact; anything touching a decimal literal or a named parameter becomes a
//! real exponent.

use super::{Exponent, Func, ScalarExpr, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, start)),
            b'-' => out.push((Tok::Minus, start)),
            b'*' => out.push((Tok::Star, start)),
            b'/' => out.push((Tok::Slash, start)),
            b'^' => out.push((Tok::Caret, start)),
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b'0'..=b'9' | b'.' => {
                let digits = |i: &mut usize| {
                    let s = *i;
                    while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                        *i += 1;
                    }
                    *i - s
                };
                let mut n = digits(&mut i);
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    n += digits(&mut i);
                }
                if n == 0 {
                    return Err(Error::Syntax { offset: start, message: "malformed number".into() });
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        digits(&mut i);
                    }
                }
                out.push((Tok::Num(text[start..i].to_string()), start));
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
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax { offset: start, message: format!("unexpected character '{ch}'") });
            }
        }
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
enum Exact {
    Rat(i64, i64),
    Real(f64),
}

impl Exact {
    fn value(self) -> f64 {
        match self {
            Exact::Rat(p, q) => p as f64 / q as f64,
            Exact::Real(r) => r,
        }
    }

    fn rat(p: i64, q: i64) -> Exact {
        match Exponent::rational(p, q) {
            Exponent::Rational(p, q) => Exact::Rat(p, q),
            Exponent::Real(r) => Exact::Real(r),
        }
    }

    fn neg(self) -> Exact {
        match self {
            Exact::Rat(p, q) => p.checked_neg().map_or(Exact::Real(-self.value()), |p| Exact::Rat(p, q)),
            Exact::Real(r) => Exact::Real(-r),
        }
    }

    fn combine(self, other: Exact, op: Tok) -> Option<Exact> {
        if let (Exact::Rat(a, b), Exact::Rat(c, d)) = (self, other) {
            let r = match op {
                Tok::Plus => a.checked_mul(d).zip(c.checked_mul(b)).and_then(|(x, y)| x.checked_add(y)).zip(b.checked_mul(d)),
                Tok::Minus => a.checked_mul(d).zip(c.checked_mul(b)).and_then(|(x, y)| x.checked_sub(y)).zip(b.checked_mul(d)),
                Tok::Star => a.checked_mul(c).zip(b.checked_mul(d)),
                Tok::Slash => {
                    if c == 0 {
                        return None;
                    }
                    a.checked_mul(d).zip(b.checked_mul(c))
                }
                _ => unreachable!(),
            };
            if let Some((p, q)) = r {
                return Some(Exact::rat(p, q));
            }
        }
        let (x, y) = (self.value(), other.value());
        let v = match op {
            Tok::Plus => x + y,
            Tok::Minus => x - y,
            Tok::Star => x * y,
            Tok::Slash => x / y,
            _ => unreachable!(),
        };
        v.is_finite().then_some(Exact::Real(v))
    }

    fn into_exponent(self) -> Exponent {
        match self {
            Exact::Rat(p, q) => Exponent::rational(p, q),
            Exact::Real(r) => Exponent::Real(r),
        }
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    params: &'a [(&'a str, f64)],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { offset: self.offset(), message: message.into() })
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            self.syntax("expected ')'")
        }
    }

    fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    fn expr(&mut self) -> Result<ScalarExpr> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(ScalarExpr::sum(terms))
    }

    fn term(&mut self) -> Result<ScalarExpr> {
        let mut factors = vec![self.unary()?];
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    factors.push(self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    factors.push(self.unary()?.recip());
                }
                _ => break,
            }
        }
        Ok(ScalarExpr::product(factors))
    }

    fn unary(&mut self) -> Result<ScalarExpr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<ScalarExpr> {
        let base = self.base()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let e = self.const_unary()?.into_exponent();
            return Ok(ScalarExpr::pow(base, e));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<ScalarExpr> {
        let (tok, off) = self.bump();
        match tok {
            Tok::Num(s) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(ScalarExpr::constant(v)),
                _ => Err(Error::Syntax { offset: off, message: format!("bad number '{s}'") }),
            },
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return self.syntax(format!("expected '(' after {name}"));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(ScalarExpr::apply(func, arg));
                }
                match name.as_str() {
                    "x1" => Ok(ScalarExpr::var(Var::X1)),
                    "x2" => Ok(ScalarExpr::var(Var::X2)),
                    "t" => Ok(ScalarExpr::var(Var::T)),
                    _ => match self.param(&name) {
                        Some(v) => Ok(ScalarExpr::constant(v)),
                        None => Err(Error::UnknownIdentifier { name, offset: off }),
                    },
                }
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::End => Err(Error::Syntax { offset: off, message: "unexpected end of input".into() }),
            other => Err(Error::Syntax { offset: off, message: format!("unexpected token {other:?}") }),
        }
    }

    fn const_expr(&mut self) -> Result<Exact> {
        let mut acc = self.const_term()?;
        while matches!(self.peek(), Tok::Plus | Tok::Minus) {
            let (op, off) = self.bump();
            let rhs = self.const_term()?;
            acc = acc.combine(rhs, op).ok_or(Error::Syntax { offset: off, message: "invalid exponent arithmetic".into() })?;
        }
        Ok(acc)
    }

    fn const_term(&mut self) -> Result<Exact> {
        let mut acc = self.const_unary()?;
        while matches!(self.peek(), Tok::Star | Tok::Slash) {
            let (op, off) = self.bump();
            let rhs = self.const_unary()?;
            acc = acc.combine(rhs, op).ok_or(Error::Syntax { offset: off, message: "invalid exponent arithmetic".into() })?;
        }
        Ok(acc)
    }

    fn const_unary(&mut self) -> Result<Exact> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(self.const_unary()?.neg());
        }
        let (tok, off) = self.bump();
        match tok {
            Tok::Num(s) => {
                let exact = !s.contains(['.', 'e', 'E']);
                if exact {
                    if let Ok(n) = s.parse::<i64>() {
                        return Ok(Exact::Rat(n, 1));
                    }
                }
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(Exact::Real(v)),
                    _ => Err(Error::Syntax { offset: off, message: format!("bad number '{s}'") }),
                }
            }
            Tok::Ident(name) => {
                if matches!(name.as_str(), "x1" | "x2" | "t") || Func::from_name(&name).is_some() {
                    return Err(Error::Syntax { offset: off, message: "exponent must be constant".into() });
                }
                self.param(&name).map(Exact::Real).ok_or(Error::UnknownIdentifier { name, offset: off })
            }
            Tok::LParen => {
                let e = self.const_expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::End => Err(Error::Syntax { offset: off, message: "unexpected end of input".into() }),
            other => Err(Error::Syntax { offset: off, message: format!("unexpected token {other:?}") }),
        }
    }
}

/// Parse an expression over `x1`, `x2`, `t` with no named parameters.
pub fn parse_expr(text: &str) -> Result<ScalarExpr> {
    parse_with(text, &[])
}

/// Parse with named real parameters bound to values.
pub fn parse_with(text: &str, params: &[(&str, f64)]) -> Result<ScalarExpr> {
    let mut p = Parser { toks: lex(text)?, pos: 0, params };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.syntax("unexpected trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_examples() {
        let e = parse_expr("exp(x1)*cos(x2)").unwrap();
        assert_eq!(e, ScalarExpr::product(vec![ScalarExpr::x1().exp(), ScalarExpr::x2().cos()]));
        let e = parse_expr("x1*log(x1)").unwrap();
        assert_eq!(e, ScalarExpr::product(vec![ScalarExpr::x1(), ScalarExpr::x1().log()]));
    }

    #[test]
    fn unbalanced_paren_offset() {
        match parse_expr("x1^(1/2") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(parse_expr("x3 + 1"), Err(Error::UnknownIdentifier { offset: 0, .. })));
        assert!(matches!(parse_expr("x1 + @"), Err(Error::Syntax { offset: 5, .. })));
        assert!(matches!(parse_expr("exp x1"), Err(Error::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expr("x1^x2"), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse_expr("x1 x2"), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse_expr(""), Err(Error::Syntax { offset: 0, .. })));
    }

    #[test]
    fn exponent_kinds() {
        assert_eq!(parse_expr("x1^(1/2)").unwrap(), ScalarExpr::pow(ScalarExpr::x1(), Exponent::Rational(1, 2)));
        assert_eq!(parse_expr("x1^(2/4)").unwrap(), ScalarExpr::pow(ScalarExpr::x1(), Exponent::Rational(1, 2)));
        assert_eq!(parse_expr("x1^-1").unwrap(), ScalarExpr::pow(ScalarExpr::x1(), Exponent::Rational(-1, 1)));
        assert_eq!(parse_expr("x1^(0.5)").unwrap(), ScalarExpr::pow(ScalarExpr::x1(), Exponent::Real(0.5)));
        let k = parse_with("x1^(k - 1)", &[("k", 2.5)]).unwrap();
        assert_eq!(k, ScalarExpr::pow(ScalarExpr::x1(), Exponent::Real(1.5)));
    }

    #[test]
    fn render_round_trip_samples() {
        for s in [
            "x1^(1/2)*exp((-2)*x2) + (-3)",
            "(x1 + x2)^(2.5)*log(x1)",
            "arctan(t*x2/(1 + x1))",
            "(-2)^(1/2) + x1",
            "1e-9*x1 + 12345678901234567890*x2",
            "sin(x1)^(-3)",
        ] {
            let e = parse_expr(s).unwrap();
            let back = parse_expr(&e.to_string()).unwrap();
            assert_eq!(e, back, "{s} -> {e}");
        }
    }
}
