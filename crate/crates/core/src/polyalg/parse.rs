//! Recursive-descent parser for polynomial systems.
//!
//! Grammar (whitespace ignored everywhere):
//!
//! ```text
//! system := poly (';' poly)*
//! poly   := ['-'] term (('+'|'-') term)*
//! term   := integer ['*' factors] | integer factors | factors
//! factors:= var ['^' power] ('*' var ['^' power])*
//! ```
//!
//! Variable names come from a caller-supplied list; errors carry the byte
//! offset where parsing stopped.

use num_bigint::BigInt;
use num_traits::One;

use super::{Monomial, Poly};
use crate::error::{Error, Result};

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, vars: &'a [&'a str]) -> Self {
        Parser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            vars,
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn parse_system(&mut self) -> Result<Vec<Poly>> {
        let mut polys = vec![self.parse_poly()?];
        while let Some(c) = self.peek() {
            if c == b';' {
                self.pos += 1;
                polys.push(self.parse_poly()?);
            } else {
                return Err(self.error(format!("unexpected character '{}'", c as char)));
            }
        }
        Ok(polys)
    }

    fn parse_poly(&mut self) -> Result<Poly> {
        let mut negative = false;
        if self.peek() == Some(b'-') {
            self.pos += 1;
            negative = true;
        }
        let mut acc = self.signed_term(negative)?;
        while let Some(c) = self.peek() {
            match c {
                b'+' | b'-' => {
                    self.pos += 1;
                    let term = self.signed_term(c == b'-')?;
                    acc = acc.add(&term);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn signed_term(&mut self, negative: bool) -> Result<Poly> {
        let term = self.parse_term()?;
        Ok(if negative { term.neg() } else { term })
    }

    fn parse_term(&mut self) -> Result<Poly> {
        let c = self.peek().ok_or_else(|| self.error("expected a term"))?;
        let mut coeff = BigInt::one();
        let mut saw_integer = false;
        if c.is_ascii_digit() {
            coeff = self.parse_integer()?;
            saw_integer = true;
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                }
                Some(c) if c.is_ascii_alphabetic() => {}
                _ => return Ok(Poly::constant(coeff)),
            }
        }
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => {
                let mono = self.parse_factors()?;
                Ok(Poly::monomial(mono, coeff))
            }
            _ if saw_integer => Err(self.error("expected a variable after '*'")),
            _ => Err(self.error("expected a term")),
        }
    }

    fn parse_integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        self.text[start..self.pos]
            .parse::<BigInt>()
            .map_err(|e| self.error(format!("bad integer: {}", e)))
    }

    fn parse_factors(&mut self) -> Result<Monomial> {
        let mut exps: Vec<u32> = Vec::new();
        loop {
            let idx = self.parse_var()?;
            let power = if self.peek() == Some(b'^') {
                self.pos += 1;
                let p = self.parse_integer()?;
                u32::try_from(p.clone())
                    .map_err(|_| self.error(format!("exponent {} out of range", p)))?
            } else {
                1
            };
            if exps.len() <= idx {
                exps.resize(idx + 1, 0);
            }
            exps[idx] += power;
            match self.peek() {
                Some(b'*') => {
                    // A '*' may be followed by another variable only;
                    // integer factors belong at the front of the term.
                    let save = self.pos;
                    self.pos += 1;
                    match self.peek() {
                        Some(c) if c.is_ascii_alphabetic() => continue,
                        _ => {
                            self.pos = save;
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(Monomial::new(exps))
    }

    fn parse_var(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        if name.is_empty() {
            return Err(self.error("expected a variable"));
        }
        match self.vars.iter().position(|v| *v == name) {
            Some(idx) => Ok(idx),
            None => {
                self.pos = start;
                Err(self.error(format!(
                    "unknown variable '{}' (allowed: {})",
                    name,
                    self.vars.join(", ")
                )))
            }
        }
    }
}

/// Parses a semicolon-separated system over the given variable names
/// (index in the list = variable index in the polynomials).
pub fn parse_system(text: &str, vars: &[&str]) -> Result<Vec<Poly>> {
    let mut parser = Parser::new(text, vars);
    if parser.peek().is_none() {
        return Err(parser.error("empty polynomial system"));
    }
    parser.parse_system()
}

/// Parses a system in the single variable m and enforces the standing
/// hypotheses on input systems: pairwise distinct polynomials, each
/// vanishing at 0.
pub fn parse_poly_system(text: &str) -> Result<Vec<Poly>> {
    let polys = parse_system(text, &["m"])?;
    for p in &polys {
        if !p.vanishes_at_zero() {
            return Err(Error::InvalidArgument(format!(
                "polynomial {} has a non-zero constant term",
                p.render_pet()
            )));
        }
    }
    for (i, p) in polys.iter().enumerate() {
        if polys[..i].contains(p) {
            return Err(Error::InvalidArgument(format!(
                "duplicate polynomial {} in the system",
                p.render_pet()
            )));
        }
    }
    Ok(polys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grammar_examples() {
        let ps = parse_poly_system("m^2").unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].render_pet(), "m^2");

        let ps = parse_poly_system("m^3+2*m; m").unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].render_pet(), "m^3+2*m");
        assert_eq!(ps[1].render_pet(), "m");

        // Implicit '*' between coefficient and variable.
        assert_eq!(parse_poly_system("2m").unwrap()[0].render_pet(), "2*m");
        // Whitespace is free.
        assert_eq!(
            parse_poly_system(" m ^ 2 - m ").unwrap()[0].render_pet(),
            "m^2-m"
        );
        // Like terms collapse.
        assert_eq!(parse_poly_system("m+m").unwrap()[0].render_pet(), "2*m");
        assert_eq!(parse_poly_system("m-m").unwrap()[0], Poly::zero());
    }

    #[test]
    fn standing_hypotheses() {
        assert!(matches!(
            parse_poly_system("m+1"),
            Err(Error::InvalidArgument(ref msg)) if msg.contains("constant term")
        ));
        assert!(matches!(
            parse_poly_system("m; m"),
            Err(Error::InvalidArgument(ref msg)) if msg.contains("duplicate")
        ));
        // Different spellings of the same polynomial are still duplicates.
        assert!(parse_poly_system("2*m; m+m").is_err());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_poly_system("m^") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 2),
            other => panic!("expected parse error, got {:?}", other),
        }
        match parse_poly_system("m+!") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 2),
            other => panic!("expected parse error, got {:?}", other),
        }
        match parse_poly_system("h1") {
            Err(Error::Parse { position, message }) => {
                assert_eq!(position, 0);
                assert!(message.contains("unknown variable"));
            }
            other => panic!("expected parse error, got {:?}", other),
        }
        assert!(parse_poly_system("").is_err());
        assert!(parse_poly_system("m;;m^2").is_err());
        assert!(parse_poly_system("3*").is_err());
    }

    #[test]
    fn multivariate_round_trip_examples() {
        let vars = ["m", "h1", "h2"];
        let p = &parse_system("2*m^2*h1-h2+3*h1*h2", &vars).unwrap()[0];
        let q = &parse_system(&p.render_pet(), &vars).unwrap()[0];
        assert_eq!(p, q);
    }

    fn arb_poly() -> impl Strategy<Value = Poly> {
        proptest::collection::vec((proptest::collection::vec(0u32..4, 0..3), -9i64..10), 0..6)
            .prop_map(|terms| {
                let mut acc = Poly::zero();
                for (exps, coeff) in terms {
                    acc = acc.add(&Poly::monomial(Monomial::new(exps), coeff));
                }
                acc
            })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(p in arb_poly()) {
            let vars = ["m", "h1", "h2"];
            let text = p.render_pet();
            let parsed = parse_system(&text, &vars).unwrap();
            prop_assert_eq!(&parsed[0], &p);
        }
    }
}
