//! Canonical plain-text form of differential polynomials, and a parser
//! accepting a superset of it (parenthesized groups, fractions, signed
//! exponents, arbitrary whitespace).

use num_traits::{One, Signed, Zero};

use crate::diffalg::poly::{Coeff, LaurentMonomial};
use crate::diffalg::{DiffPoly, Indeterminate, ParseError, Symbol};

/// Renders the canonical text form: terms in canonical order joined by
/// ` + ` / ` - `, coefficients of magnitude one omitted, factors joined
/// by `*`, derivative orders as primes up to 2 and `^(k)` beyond,
/// exponents as `^e` when not 1.
pub fn to_text(p: &DiffPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, term) in p.terms().iter().enumerate() {
        let negative = term.coeff.is_negative();
        if i == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        out.push_str(&render_magnitude(term));
    }
    out
}

fn render_magnitude(term: &LaurentMonomial) -> String {
    let mag = term.coeff.abs();
    let mut parts: Vec<String> = Vec::new();
    if !mag.is_one() || term.powers.is_unit() {
        parts.push(render_coeff(&mag));
    }
    for &(ind, exp) in term.powers.factors() {
        if exp == 1 {
            parts.push(ind.to_string());
        } else {
            parts.push(format!("{ind}^{exp}"));
        }
    }
    parts.join("*")
}

fn render_coeff(c: &Coeff) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Parses the canonical text form and its superset. Grammar:
///
/// ```text
/// expr    := [sign] product { (+|-) product }
/// product := power { '*' power }
/// power   := atom [ '^' int ]
/// atom    := number | indet | '(' expr ')'
/// number  := digits [ '/' digits ]
/// indet   := name [ primes | '^(' digits ')' ]
/// ```
///
/// A negative exponent is accepted only on atoms that reduce to a single
/// monomial.
pub fn parse(input: &str) -> Result<DiffPoly, ParseError> {
    let mut p = Parser {
        chars: input.char_indices().collect(),
        pos: 0,
    };
    let expr = p.parse_expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser {
    fn byte_pos(&self) -> usize {
        self.chars.get(self.pos).map_or_else(
            || self.chars.last().map_or(0, |&(b, c)| b + c.len_utf8()),
            |&(b, _)| b,
        )
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.byte_pos(), msg)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn peek_at(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, expected: char) -> Result<(), ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == expected => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(format!("expected `{expected}`"))),
        }
    }

    fn parse_expr(&mut self) -> Result<DiffPoly, ParseError> {
        self.skip_ws();
        let mut negate = false;
        if matches!(self.peek(), Some('-')) {
            self.pos += 1;
            negate = true;
        } else if matches!(self.peek(), Some('+')) {
            self.pos += 1;
        }
        let mut acc = self.parse_product()?;
        if negate {
            acc = -acc;
        }
        loop {
            self.skip_ws();
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    acc = acc + rhs;
                }
                Some('-') => {
                    self.pos += 1;
                    let rhs = self.parse_product()?;
                    acc = acc - rhs;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_product(&mut self) -> Result<DiffPoly, ParseError> {
        let mut acc = self.parse_power()?;
        loop {
            self.skip_ws();
            if matches!(self.peek(), Some('*')) {
                self.pos += 1;
                let rhs = self.parse_power()?;
                acc = acc * rhs;
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_power(&mut self) -> Result<DiffPoly, ParseError> {
        let atom = self.parse_atom()?;
        self.skip_ws();
        if matches!(self.peek(), Some('^')) {
            self.pos += 1;
            let exp = self.parse_signed_int()?;
            return raise(atom, exp).map_err(|msg| self.error(msg));
        }
        Ok(atom)
    }

    fn parse_atom(&mut self) -> Result<DiffPoly, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                self.eat(')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.parse_number(),
            Some(c) if c.is_alphabetic() => self.parse_indet(),
            Some(c) => Err(self.error(format!("unexpected character `{c}`"))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn parse_number(&mut self) -> Result<DiffPoly, ParseError> {
        let numer = self.parse_digits()?;
        if matches!(self.peek(), Some('/')) {
            self.pos += 1;
            let denom = self.parse_digits()?;
            if denom.is_zero() {
                return Err(self.error("zero denominator"));
            }
            return Ok(DiffPoly::constant(Coeff::new(numer, denom)));
        }
        Ok(DiffPoly::constant(Coeff::from_integer(numer)))
    }

    fn parse_digits(&mut self) -> Result<num_bigint::BigInt, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected digits"));
        }
        let text: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
        text.parse()
            .map_err(|_| self.error("integer literal out of range"))
    }

    fn parse_signed_int(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let negative = if matches!(self.peek(), Some('-')) {
            self.pos += 1;
            true
        } else {
            false
        };
        let digits = self.parse_digits()?;
        let value: i32 = digits
            .try_into()
            .map_err(|_| self.error("exponent out of range"))?;
        Ok(if negative { -value } else { value })
    }

    fn parse_indet(&mut self) -> Result<DiffPoly, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_alphabetic()) {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
        let base = Symbol::from_name(&name)
            .map_err(|e| ParseError::new(self.chars[start].0, e.msg().to_string()))?;
        let mut order: u32 = 0;
        if matches!(self.peek(), Some('\'')) {
            while matches!(self.peek(), Some('\'')) {
                self.pos += 1;
                order += 1;
            }
        } else if matches!(self.peek(), Some('^')) && matches!(self.peek_at(1), Some('(')) {
            self.pos += 2;
            let digits = self.parse_digits()?;
            order = digits
                .try_into()
                .map_err(|_| self.error("derivative order out of range"))?;
            match self.bump() {
                Some(')') => {}
                _ => return Err(self.error("expected `)` after derivative order")),
            }
        }
        Ok(DiffPoly::var(Indeterminate::new(base, order)))
    }
}

fn raise(p: DiffPoly, exp: i32) -> Result<DiffPoly, String> {
    if exp >= 0 {
        return Ok(p.powi(exp as u32));
    }
    let term = p
        .as_single_term()
        .ok_or_else(|| "negative exponent on a non-monomial".to_string())?;
    if term.coeff.is_zero() {
        return Err("negative exponent on zero".to_string());
    }
    let inv_coeff = term.coeff.recip();
    let factors: Vec<(Indeterminate, i32)> = term
        .powers
        .factors()
        .iter()
        .map(|&(i, e)| (i, -e))
        .collect();
    Ok(DiffPoly::monomial(inv_coeff, &factors).powi((-exp) as u32))
}
