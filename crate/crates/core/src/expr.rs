//! Text forms for gains and sector nonlinearities as they appear in scenario
//! files and on the command line.
//!
//! Gain expressions are a coefficient list times an optional trigonometric
//! factor in the scheduling variable:
//!
//! ```text
//! gain  := poly ( '*' trig )?
//! poly  := '[' number ( ',' number )* ']'
//! trig  := ( 'cos' | 'sin' ) ( '(' 'z' ')' )?
//! ```
//!
//! so `[0, 0, 1] * cos(z)` is z²cos(z). Nonlinearities are a family name with
//! an optional argument list, e.g. `zero`, `linear(1)`, `sin2(3, 3)`.

use thiserror::Error;

/// Highest polynomial degree accepted in a gain expression.
pub const MAX_DEGREE: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {ch:?} at byte {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("expected {expected} at byte {pos}")]
    Expected { expected: &'static str, pos: usize },
    #[error("invalid number {text:?}")]
    BadNumber { text: String },
    #[error("polynomial degree {0} exceeds the limit of {MAX_DEGREE}")]
    DegreeTooHigh(usize),
    #[error("unknown name {0:?}")]
    UnknownName(String),
    #[error("{name} takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: &'static str,
        got: usize,
    },
    #[error("trailing input at byte {0}")]
    Trailing(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trig {
    One,
    Cos,
    Sin,
}

/// A parsed gain expression: `(c0 + c1 z + ... + cn z^n) * trig(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTrig {
    pub coeffs: Vec<f64>,
    pub trig: Trig,
}

impl PolyTrig {
    pub fn poly(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    pub fn eval(&self, z: f64) -> f64 {
        let p = self.poly(z);
        match self.trig {
            Trig::One => p,
            Trig::Cos => p * z.cos(),
            Trig::Sin => p * z.sin(),
        }
    }

    /// Canonical text form; parses back to an equal value.
    pub fn render(&self) -> String {
        let cs: Vec<String> = self.coeffs.iter().map(|c| format!("{c:?}")).collect();
        let list = format!("[{}]", cs.join(", "));
        match self.trig {
            Trig::One => list,
            Trig::Cos => format!("{list} * cos(z)"),
            Trig::Sin => format!("{list} * sin(z)"),
        }
    }
}

/// A parsed nonlinearity reference: family name plus numeric arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedCall {
    pub name: String,
    pub args: Vec<f64>,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
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

    fn eat(&mut self, ch: char) -> bool {
        if self.peek() == Some(ch) {
            self.pos += ch.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: char, expected: &'static str) -> Result<(), ParseError> {
        if self.eat(ch) {
            Ok(())
        } else {
            Err(ParseError::Expected {
                expected,
                pos: self.pos,
            })
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|&(i, c)| !(c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit())))
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return None;
        }
        self.pos += len;
        Some(&rest[..len])
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let rest = self.rest();
        let mut len = 0;
        let bytes = rest.as_bytes();
        while len < bytes.len() {
            let b = bytes[len];
            let sign_ok = (b == b'+' || b == b'-')
                && (len == 0 || matches!(bytes[len - 1], b'e' | b'E'));
            if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || sign_ok {
                len += 1;
            } else {
                break;
            }
        }
        if len == 0 {
            return Err(match rest.chars().next() {
                Some(ch) => ParseError::UnexpectedChar { ch, pos: self.pos },
                None => ParseError::Expected {
                    expected: "number",
                    pos: self.pos,
                },
            });
        }
        let text = &rest[..len];
        let v: f64 = text.parse().map_err(|_| ParseError::BadNumber { text: text.into() })?;
        if !v.is_finite() {
            return Err(ParseError::BadNumber { text: text.into() });
        }
        self.pos += len;
        Ok(v)
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            Err(ParseError::Trailing(self.pos))
        }
    }
}

/// Parses a gain expression such as `[0, 0, 1] * sin(z)`.
pub fn parse_gain_expr(src: &str) -> Result<PolyTrig, ParseError> {
    let mut cur = Cursor::new(src);
    if cur.peek().is_none() {
        return Err(ParseError::Empty);
    }
    cur.expect('[', "'['")?;
    let mut coeffs = vec![cur.number()?];
    while cur.eat(',') {
        if coeffs.len() > MAX_DEGREE {
            return Err(ParseError::DegreeTooHigh(coeffs.len()));
        }
        coeffs.push(cur.number()?);
    }
    cur.expect(']', "']'")?;
    let trig = if cur.eat('*') {
        let name = cur.ident().ok_or(ParseError::Expected {
            expected: "cos or sin",
            pos: cur.pos,
        })?;
        let trig = match name {
            "cos" => Trig::Cos,
            "sin" => Trig::Sin,
            other => return Err(ParseError::UnknownName(other.to_string())),
        };
        if cur.eat('(') {
            match cur.ident() {
                Some("z") => {}
                _ => {
                    return Err(ParseError::Expected {
                        expected: "'z'",
                        pos: cur.pos,
                    })
                }
            }
            cur.expect(')', "')'")?;
        }
        trig
    } else {
        Trig::One
    };
    cur.finish()?;
    Ok(PolyTrig { coeffs, trig })
}

/// Parses `name` or `name(a, b, ...)`.
pub fn parse_named_call(src: &str) -> Result<NamedCall, ParseError> {
    let mut cur = Cursor::new(src);
    if cur.peek().is_none() {
        return Err(ParseError::Empty);
    }
    let name = cur
        .ident()
        .ok_or(ParseError::Expected {
            expected: "name",
            pos: cur.pos,
        })?
        .to_string();
    let mut args = Vec::new();
    if cur.eat('(') && !cur.eat(')') {
        args.push(cur.number()?);
        while cur.eat(',') {
            if args.len() >= 8 {
                return Err(ParseError::Arity {
                    name,
                    expected: "at most 8",
                    got: args.len() + 1,
                });
            }
            args.push(cur.number()?);
        }
        cur.expect(')', "')'")?;
    }
    cur.finish()?;
    Ok(NamedCall { name, args })
}
