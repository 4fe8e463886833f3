//! Closed-form potentials in logarithmic coordinates.
//!
//! ```text
//! expr    := term ('+' term)*
//! term    := [number '*'] atom | number
//! atom    := 'fs'
//!          | 'affine'   '[' affine ']'
//!          | 'log1pexp' '[' affine ']'
//!          | 'lse'      '[' affine ('|' affine)* ']'
//!          | 'max'      '[' affine ('|' affine)* ']'
//!          | 'min'      '[' affine ('|' affine)* ']'
//! affine  := number (',' number)* ';' number      slope vector; constant
//! ```
//!
//! `fs` is `½·log(1 + Σ e^{2x_i})`, `log1pexp[a; b]` is `log(1 + e^{⟨a,x⟩+b})`
//! and `lse` is the log of a sum of exponentials.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub slope: Vec<f64>,
    pub constant: f64,
}

impl Affine {
    fn eval(&self, x: &[f64]) -> f64 {
        self.slope.iter().zip(x).map(|(a, t)| a * t).sum::<f64>() + self.constant
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Atom {
    Const,
    Fs,
    Affine(Affine),
    Log1pExp(Affine),
    Lse(Vec<Affine>),
    Max(Vec<Affine>),
    Min(Vec<Affine>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    terms: Vec<(f64, Atom)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

fn lse(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Potential {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        Parser { src, pos: 0 }.expr()
    }

    /// Number of coordinates the expression uses; `None` if it fits any
    /// dimension (`fs` and constants).
    pub fn dim(&self) -> Option<usize> {
        self.terms.iter().find_map(|(_, a)| match a {
            Atom::Affine(f) | Atom::Log1pExp(f) => Some(f.slope.len()),
            Atom::Lse(v) | Atom::Max(v) | Atom::Min(v) => v.first().map(|f| f.slope.len()),
            Atom::Const | Atom::Fs => None,
        })
    }

    fn consistent(&self) -> Option<String> {
        let d = self.dim()?;
        for (_, a) in &self.terms {
            let dims: Vec<usize> = match a {
                Atom::Affine(f) | Atom::Log1pExp(f) => vec![f.slope.len()],
                Atom::Lse(v) | Atom::Max(v) | Atom::Min(v) => {
                    v.iter().map(|f| f.slope.len()).collect()
                }
                Atom::Const | Atom::Fs => vec![],
            };
            if dims.iter().any(|x| *x != d) {
                return Some(format!(
                    "slope vectors of different lengths ({d} and {dims:?})"
                ));
            }
        }
        None
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, a)| {
                c * match a {
                    Atom::Const => 1.0,
                    Atom::Fs => 0.5 * lse(std::iter::once(0.0).chain(x.iter().map(|t| 2.0 * t))),
                    Atom::Affine(f) => f.eval(x),
                    Atom::Log1pExp(f) => {
                        let t = f.eval(x);
                        t.max(0.0) + (-t.abs()).exp().ln_1p()
                    }
                    Atom::Lse(v) => lse(v.iter().map(|f| f.eval(x))),
                    Atom::Max(v) => v
                        .iter()
                        .map(|f| f.eval(x))
                        .fold(f64::NEG_INFINITY, f64::max),
                    Atom::Min(v) => v.iter().map(|f| f.eval(x)).fold(f64::INFINITY, f64::min),
                }
            })
            .sum()
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += self.rest().chars().next().map_or(0, char::len_utf8);
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let bytes = self.rest().as_bytes();
        let mut len = 0;
        while len < bytes.len() {
            let b = bytes[len];
            let sign_ok = len == 0 || matches!(bytes[len - 1], b'e' | b'E');
            if b.is_ascii_digit()
                || matches!(b, b'.' | b'e' | b'E')
                || (matches!(b, b'+' | b'-') && sign_ok)
            {
                len += 1;
            } else {
                break;
            }
        }
        match self.rest()[..len].parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos += len;
                Ok(v)
            }
            _ => self.err("expected a number"),
        }
    }

    fn ident(&mut self) -> &str {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !c.is_ascii_alphanumeric())
            .unwrap_or(self.rest().len());
        let start = self.pos;
        self.pos += len;
        &self.src[start..self.pos]
    }

    fn affine(&mut self) -> Result<Affine, ParseError> {
        let mut slope = vec![self.number()?];
        while self.eat(',') {
            slope.push(self.number()?);
        }
        self.expect(';')?;
        let constant = self.number()?;
        Ok(Affine { slope, constant })
    }

    fn affine_list(&mut self) -> Result<Vec<Affine>, ParseError> {
        let mut v = vec![self.affine()?];
        while self.eat('|') {
            v.push(self.affine()?);
        }
        Ok(v)
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let start = self.pos;
        let name = self.ident().to_string();
        if name == "fs" {
            return Ok(Atom::Fs);
        }
        let known = ["affine", "log1pexp", "lse", "max", "min"];
        if !known.contains(&name.as_str()) {
            self.pos = start;
            return self.err(format!(
                "unknown function {name:?}; expected fs, {}",
                known.join(", ")
            ));
        }
        self.expect('[')?;
        let atom = match name.as_str() {
            "affine" => Atom::Affine(self.affine()?),
            "log1pexp" => Atom::Log1pExp(self.affine()?),
            "lse" => Atom::Lse(self.affine_list()?),
            "max" => Atom::Max(self.affine_list()?),
            _ => Atom::Min(self.affine_list()?),
        };
        self.expect(']')?;
        Ok(atom)
    }

    fn term(&mut self) -> Result<(f64, Atom), ParseError> {
        self.skip_ws();
        let starts_numeric = self
            .rest()
            .starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '.');
        if starts_numeric {
            let c = self.number()?;
            if self.eat('*') {
                return Ok((c, self.atom()?));
            }
            return Ok((c, Atom::Const));
        }
        Ok((1.0, self.atom()?))
    }

    fn expr(mut self) -> Result<Potential, ParseError> {
        let mut terms = vec![self.term()?];
        while self.eat('+') {
            terms.push(self.term()?);
        }
        self.skip_ws();
        if !self.rest().is_empty() {
            return self.err("unexpected trailing input");
        }
        let p = Potential { terms };
        if let Some(msg) = p.consistent() {
            return Err(ParseError {
                position: 0,
                message: msg,
            });
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fubini_study_forms_agree() {
        let a = Potential::parse("fs").unwrap();
        let b = Potential::parse("0.5 * log1pexp[2; 0]").unwrap();
        let c = Potential::parse("0.5*lse[0;0 | 2;0]").unwrap();
        for x in [-30.0f64, -1.0, 0.0, 0.3, 25.0] {
            let want = 0.5 * (1.0f64 + (2.0 * x).exp()).ln();
            for p in [&a, &b, &c] {
                let v = p.eval(&[x]);
                assert!(
                    (v - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "{x}: {v} vs {want}"
                );
            }
        }
        assert_eq!(a.dim(), None);
        assert_eq!(b.dim(), Some(1));
    }

    #[test]
    fn sums_and_piecewise_affine() {
        let p = Potential::parse("max[1,0;0 | -1,0;0] + 2*min[0,1;1 | 0,-1;1] + -0.25").unwrap();
        assert_eq!(p.dim(), Some(2));
        assert!((p.eval(&[-2.0, 0.5]) - (2.0 + 2.0 * 0.5 - 0.25)).abs() < 1e-15);
        assert!(
            (Potential::parse("affine[1e-1, 2; -3]")
                .unwrap()
                .eval(&[10.0, 1.0])
                - 0.0)
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn errors_point_at_the_problem() {
        let e = Potential::parse("fs + bogus[1;0]").unwrap_err();
        assert_eq!(e.position, 5);
        assert!(e.message.contains("bogus"));
        assert!(Potential::parse("lse[1;0 | 1,2;0]")
            .unwrap_err()
            .message
            .contains("different lengths"));
        assert!(Potential::parse("affine[1 0]").is_err());
        assert!(Potential::parse("fs fs")
            .unwrap_err()
            .message
            .contains("trailing"));
    }
}
