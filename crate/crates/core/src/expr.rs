//! The state expression mini-language shared by the CLI and test fixtures.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! state    := '0' | sterm (('+' | '-') term)*
//! sterm    := ('+' | '-')? term
//! term     := (rational '*')? factor* '|0>'
//! factor   := 'b(' int ',' int ')' pow?
//!           | ('L' | 'e' | 'f' | 'h') '(' int ')' pow?
//!           | 'E(' int (',' int)* ')' pow?
//! pow      := '^' uint
//! rational := int ('/' uint)?
//! ```
//!
//! `^k` means k-fold repetition of the factor. Parsing is construction
//! agnostic; each backend realizes the AST and rejects unknown generators.

use std::fmt;

use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorAst {
    /// `b(i, m)`: Heisenberg component `i`, mode `m`.
    Heis { comp: i64, mode: i64 },
    /// `L(m)`: Virasoro mode.
    Vir { mode: i64 },
    /// `e(m)`, `h(m)`, `f(m)`: affine generator modes.
    Aff { gen: char, mode: i64 },
    /// `E(a1, ..., ad)`: lattice group element.
    Group { vec: Vec<i64> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermAst {
    pub coeff: Rational,
    /// Factors with repetition counts, in source order.
    pub factors: Vec<(FactorAst, u32)>,
    /// 1-based column where the term starts (for error reporting).
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StateAst {
    pub terms: Vec<TermAst>,
}

/// Position-annotated syntax or realization error.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at column {column}: {message}")]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

impl ExprError {
    pub fn new(column: usize, message: impl fmt::Display) -> Self {
        ExprError {
            column,
            message: message.to_string(),
        }
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn col(&self) -> usize {
        self.pos + 1
    }

    fn err(&self, message: impl fmt::Display) -> ExprError {
        ExprError::new(self.col(), message)
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        self.skip_ws();
        match self.peek() {
            Some(b) if b == c => {
                self.pos += 1;
                Ok(())
            }
            Some(b) => Err(self.err(format!("expected '{}', found '{}'", c as char, b as char))),
            None => Err(self.err(format!("expected '{}', found end of input", c as char))),
        }
    }

    fn parse_uint(&mut self) -> Result<u64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a digit"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ExprError::new(start + 1, "integer out of range"))
    }

    fn parse_int(&mut self) -> Result<i64, ExprError> {
        self.skip_ws();
        let negative = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            if self.peek() == Some(b'+') {
                self.pos += 1;
            }
            false
        };
        let mag = self.parse_uint()? as i64;
        Ok(if negative { -mag } else { mag })
    }

    fn parse_rational(&mut self) -> Result<Rational, ExprError> {
        let numer = self.parse_int()?;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let denom = self.parse_uint()?;
            if denom == 0 {
                return Err(self.err("zero denominator"));
            }
            Ok(Rational::new(numer, denom as i64))
        } else {
            Ok(Rational::from(numer))
        }
    }

    fn parse_vacuum(&mut self) -> Result<(), ExprError> {
        self.expect(b'|')?;
        self.expect(b'0')?;
        self.expect(b'>')
    }

    fn parse_factor(&mut self) -> Result<(FactorAst, u32), ExprError> {
        self.skip_ws();
        let name = match self.bump() {
            Some(b) => b as char,
            None => return Err(self.err("expected a factor")),
        };
        let factor = match name {
            'b' => {
                self.expect(b'(')?;
                let comp = self.parse_int()?;
                self.expect(b',')?;
                let mode = self.parse_int()?;
                self.expect(b')')?;
                FactorAst::Heis { comp, mode }
            }
            'L' | 'e' | 'f' | 'h' => {
                self.expect(b'(')?;
                let mode = self.parse_int()?;
                self.expect(b')')?;
                if name == 'L' {
                    FactorAst::Vir { mode }
                } else {
                    FactorAst::Aff { gen: name, mode }
                }
            }
            'E' => {
                self.expect(b'(')?;
                let mut vec = vec![self.parse_int()?];
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(b',') => {
                            self.pos += 1;
                            vec.push(self.parse_int()?);
                        }
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        Some(b) => {
                            return Err(
                                self.err(format!("expected ',' or ')', found '{}'", b as char))
                            )
                        }
                        None => return Err(self.err("expected ',' or ')', found end of input")),
                    }
                }
                FactorAst::Group { vec }
            }
            other => return Err(ExprError::new(self.col() - 1, format!("unknown factor '{other}'"))),
        };
        let mut power = 1u32;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            power = self.parse_uint()? as u32;
        }
        Ok((factor, power))
    }

    fn parse_term(&mut self, sign_negative: bool) -> Result<TermAst, ExprError> {
        self.skip_ws();
        let column = self.col();
        let mut coeff = if matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            let c = self.parse_rational()?;
            self.skip_ws();
            self.expect(b'*')?;
            c
        } else {
            Rational::one()
        };
        if sign_negative {
            coeff = -coeff;
        }
        let mut factors = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'|') => {
                    self.parse_vacuum()?;
                    break;
                }
                Some(_) => factors.push(self.parse_factor()?),
                None => return Err(self.err("expected '|0>'")),
            }
        }
        Ok(TermAst {
            coeff,
            factors,
            column,
        })
    }
}

/// Parses a state expression. The literal `0` denotes the zero state.
pub fn parse(text: &str) -> Result<StateAst, ExprError> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    if p.peek() == Some(b'0') {
        let save = p.pos;
        p.pos += 1;
        p.skip_ws();
        if p.peek().is_none() {
            return Ok(StateAst::default());
        }
        p.pos = save;
    }
    let mut terms = Vec::new();
    let negative = match p.peek() {
        Some(b'-') => {
            p.pos += 1;
            true
        }
        Some(b'+') => {
            p.pos += 1;
            false
        }
        _ => false,
    };
    terms.push(p.parse_term(negative)?);
    loop {
        p.skip_ws();
        match p.peek() {
            None => break,
            Some(b'+') => {
                p.pos += 1;
                terms.push(p.parse_term(false)?);
            }
            Some(b'-') => {
                p.pos += 1;
                terms.push(p.parse_term(true)?);
            }
            Some(b) => return Err(p.err(format!("expected '+', '-' or end of input, found '{}'", b as char))),
        }
    }
    Ok(StateAst { terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn parses_vacuum() {
        let ast = parse("|0>").unwrap();
        assert_eq!(ast.terms.len(), 1);
        assert!(ast.terms[0].factors.is_empty());
        assert_eq!(ast.terms[0].coeff, Rational::one());
    }

    #[test]
    fn parses_mixed_expression() {
        let ast = parse("3/2 * b(1,-1)^2 |0> - E(1,0) |0>").unwrap();
        assert_eq!(ast.terms.len(), 2);
        assert_eq!(ast.terms[0].coeff, rat(3, 2));
        assert_eq!(
            ast.terms[0].factors,
            vec![(FactorAst::Heis { comp: 1, mode: -1 }, 2)]
        );
        assert_eq!(ast.terms[1].coeff, Rational::from(-1));
        assert_eq!(ast.terms[1].factors, vec![(FactorAst::Group { vec: vec![1, 0] }, 1)]);
    }

    #[test]
    fn whitespace_insignificant() {
        let a = parse("1/2*b(1,-1)^2|0>").unwrap();
        let b = parse("  1/2 * b( 1 , -1 ) ^2 |0> ").unwrap();
        assert_eq!(a.terms[0].coeff, b.terms[0].coeff);
        assert_eq!(a.terms[0].factors, b.terms[0].factors);
    }

    #[test]
    fn error_positions() {
        let err = parse("b(1,-1").unwrap_err();
        assert_eq!(err.column, 7);
        let err = parse("b(1,-1 |0>").unwrap_err();
        assert_eq!(err.column, 8);
        let err = parse("q(1)|0>").unwrap_err();
        assert_eq!(err.column, 1);
    }

    #[test]
    fn zero_literal() {
        assert!(parse("0").unwrap().terms.is_empty());
        assert!(parse(" 0 ").unwrap().terms.is_empty());
    }

    #[test]
    fn leading_sign() {
        let ast = parse("-b(1,-1)|0>").unwrap();
        assert_eq!(ast.terms[0].coeff, Rational::from(-1));
        let ast = parse("- 3/2 * L(-2) |0>").unwrap();
        assert_eq!(ast.terms[0].coeff, rat(-3, 2));
    }
}
