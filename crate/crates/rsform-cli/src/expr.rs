//! Polynomial expressions over the Gaussian rationals.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' exponent)?
//! exponent:= integer ('^' exponent)?
//! atom    := number | 'i' | variable | '(' sum ')'
//! ```
//!
//! Numbers are integers or finite decimals. Division is only by nonzero
//! constants. Exponents are nonnegative integer literals, right-associative.
//! Every product is truncated at the document order, so `x^100` with order
//! 12 is silently zero.

use std::fmt;

use num_traits::{One, Zero};
use rsform::{GaussRat, Jet, Mono, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational, String),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(text: &str, line: usize, col0: usize) -> Result<Lexer, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let err = |c: usize, msg: String| ParseError { line, col: col0 + c, msg };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let r: Rational = s.parse().map_err(|e: String| err(start, e))?;
            toks.push((Tok::Num(r, s), start));
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else {
            let t = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => return Err(err(i, format!("unexpected character '{c}'"))),
            };
            toks.push((t, i));
            i += 1;
        }
    }
    toks.push((Tok::End, chars.len()));
    Ok(Lexer { toks })
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [String],
    trunc: u32,
    line: usize,
    col0: usize,
}

type Expr = Jet<GaussRat>;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { line: self.line, col: self.col0 + self.toks[self.pos].1, msg: msg.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn constant(&self, c: GaussRat) -> Expr {
        Jet::constant(self.vars.len(), self.trunc, c)
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        while let Tok::Op(op @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            acc = if op == '+' { acc.add_aligned(&rhs) } else { acc.sub_aligned(&rhs) };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        while let Tok::Op(op @ ('*' | '/')) = *self.peek() {
            self.bump();
            let at = self.pos;
            let rhs = self.unary()?;
            if op == '*' {
                acc = acc.mul_aligned(&rhs);
            } else {
                let c = rhs.constant_term();
                if rhs.len() > usize::from(!c.is_zero()) || c.is_zero() {
                    self.pos = at;
                    return self.err("division is only allowed by a nonzero constant");
                }
                acc = acc.scale(&(GaussRat::one() / c));
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(self.unary()?.neg())
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let at = self.pos;
        let e = self.exponent()?;
        let constant = base.terms().all(|(m, _)| m.degree() == 0);
        if constant && e > 1024 && base.constant_term() != GaussRat::one() && !base.is_zero() {
            self.pos = at;
            return self.err("exponent too large for a constant base");
        }
        Ok(pow(&base, e, self.trunc))
    }

    fn exponent(&mut self) -> Result<u64, ParseError> {
        let e = match self.peek().clone() {
            Tok::Num(r, s) if r.is_integer() && !s.contains('.') => {
                self.bump();
                u64::try_from(r.numer()).or_else(|_| self.err("exponent too large"))?
            }
            Tok::Op('-') => return self.err("negative exponents are not allowed"),
            _ => return self.err("expected a nonnegative integer exponent"),
        };
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let rest = self.exponent()?;
            let v = u32::try_from(rest).ok().and_then(|r| e.checked_pow(r));
            return match v {
                Some(v) => Ok(v),
                None => Ok(u64::MAX),
            };
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(r, _) => {
                self.bump();
                Ok(self.constant(GaussRat::real(r)))
            }
            Tok::Ident(name) => {
                if let Some(k) = self.vars.iter().position(|v| *v == name) {
                    self.bump();
                    Ok(Jet::var(self.vars.len(), self.trunc, k).truncate(self.trunc))
                } else if name == "i" {
                    self.bump();
                    Ok(self.constant(GaussRat::new(Rational::zero(), Rational::one())))
                } else {
                    self.err(format!("unknown variable '{name}'"))
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.sum()?;
                if *self.peek() != Tok::RParen {
                    return self.err("expected ')'");
                }
                self.bump();
                Ok(e)
            }
            Tok::RParen => self.err("unexpected ')'"),
            Tok::Op(c) => self.err(format!("unexpected operator '{c}'")),
            Tok::End => self.err("unexpected end of expression"),
        }
    }
}

fn pow(base: &Expr, e: u64, trunc: u32) -> Expr {
    let nvars = base.nvars();
    if e == 0 {
        return Jet::one(nvars, trunc);
    }
    if base.constant_term().is_zero() && e > u64::from(trunc) {
        return Jet::zero(nvars, trunc);
    }
    let mut acc = Jet::one(nvars, trunc);
    let mut b = base.clone();
    let mut k = e;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc.mul_aligned(&b);
        }
        k >>= 1;
        if k > 0 {
            b = b.mul_aligned(&b);
        }
    }
    acc
}

/// Parses `text` as a jet in `vars` truncated at order `trunc`. Error
/// positions are reported on `line`, with columns offset by `col0`.
pub fn parse_at(text: &str, vars: &[String], trunc: u32, line: usize, col0: usize) -> Result<Expr, ParseError> {
    if vars.iter().any(|v| v == "i") {
        return Err(ParseError { line, col: col0, msg: "'i' is reserved for the imaginary unit".into() });
    }
    let lx = lex(text, line, col0)?;
    let mut p = Parser { toks: lx.toks, pos: 0, vars, trunc, line, col0 };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

pub fn parse_expression(text: &str, vars: &[String], trunc: u32) -> Result<Expr, ParseError> {
    parse_at(text, vars, trunc, 1, 1)
}

/// Parses a constant such as `-3/4+1/2*i`.
pub fn parse_coeff(text: &str) -> Result<GaussRat, ParseError> {
    let j = parse_expression(text, &[String::from("_")], 0)?;
    Ok(j.constant_term())
}

fn rational_text(r: &Rational) -> String {
    r.to_string()
}

fn monomial_text(m: Mono, vars: &[String]) -> String {
    let mut parts = Vec::new();
    for (k, v) in vars.iter().enumerate() {
        match m.exp(k) {
            0 => {}
            1 => parts.push(v.clone()),
            e => parts.push(format!("{v}^{e}")),
        }
    }
    parts.join("*")
}

/// Canonical text of a jet; parsing it back gives the same jet and printing
/// that again gives the same bytes.
pub fn print_jet(j: &Expr, vars: &[String]) -> String {
    let mut out = String::new();
    for (m, c) in j.terms() {
        let mono = monomial_text(m, vars);
        let (neg, mag) = if c.is_real() && c.re.signum_i32() < 0 { (true, c.re.abs()) } else { (false, c.re.clone()) };
        let coeff = if !c.is_real() {
            Some(format!("({c})"))
        } else if mag.is_one() && !mono.is_empty() {
            None
        } else {
            Some(rational_text(&mag))
        };
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        match (coeff, mono.is_empty()) {
            (Some(c), true) => out.push_str(&c),
            (Some(c), false) => {
                out.push_str(&c);
                out.push('*');
                out.push_str(&mono);
            }
            (None, _) => out.push_str(&mono),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn q(n: i64, d: i64) -> GaussRat {
        GaussRat::real(Rational::new(n, d))
    }

    #[test]
    fn sums_and_powers() {
        let j = parse_expression("x + x^3", &xy(), 6).unwrap();
        assert_eq!(j.coeff_of(&[1, 0]), q(1, 1));
        assert_eq!(j.coeff_of(&[3, 0]), q(1, 1));
        assert_eq!(j.len(), 2);
    }

    #[test]
    fn gaussian_coefficients() {
        let j = parse_expression("(1/2)*x*y^2 - i*x", &xy(), 6).unwrap();
        assert_eq!(j.coeff_of(&[1, 2]), q(1, 2));
        assert_eq!(j.coeff_of(&[1, 0]), GaussRat::new(Rational::zero(), Rational::from_integer(-1)));
    }

    #[test]
    fn negative_exponents_are_rejected() {
        let e = parse_expression("x*(1 - x)^-1", &xy(), 6).unwrap_err();
        assert_eq!(e.col, 11);
        assert!(e.msg.contains("negative"));
    }

    #[test]
    fn precedence_and_associativity() {
        let a = parse_expression("-x^2^2 + 2*3 - 4/8", &xy(), 8).unwrap();
        let b = parse_expression("11/2 - x^4", &xy(), 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_expression("0.25*x", &xy(), 3).unwrap().coeff_of(&[1, 0]), q(1, 4));
    }

    #[test]
    fn truncation_is_silent() {
        let j = parse_expression("(x + y)^40 + x^2", &xy(), 3).unwrap();
        assert_eq!(print_jet(&j, &xy()), "x^2");
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_at("x + * y", &xy(), 4, 7, 3).unwrap_err();
        assert_eq!((e.line, e.col), (7, 7));
        assert!(parse_expression("x / y", &xy(), 4).is_err());
        assert!(parse_expression("(x + y", &xy(), 4).is_err());
        assert!(parse_expression("z", &xy(), 4).is_err());
    }

    #[test]
    fn printing_round_trips() {
        for t in ["0", "-x", "3/4 - (1/2-2*i)*x*y + y^3", "-(2*i)*y", "i + x"] {
            let j = parse_expression(t, &xy(), 5).unwrap();
            let p = print_jet(&j, &xy());
            let k = parse_expression(&p, &xy(), 5).unwrap();
            assert_eq!(j, k, "{t} -> {p}");
            assert_eq!(print_jet(&k, &xy()), p);
        }
        assert_eq!(parse_coeff("-3/4+1/2*i").unwrap(), GaussRat::new(Rational::new(-3, 4), Rational::new(1, 2)));
    }
}
