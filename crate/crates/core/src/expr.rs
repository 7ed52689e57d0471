//! User-supplied functions: real expressions in one variable, and rational
//! transforms in `s`.
//!
//! Real expressions go through `fasteval` with `exp`, `ln` and `sqrt` added
//! on top of its built-ins. Rational transforms use the grammar
//! `rational:<poly>/<poly>`, each polynomial a sum of `c*s^i` terms.

use std::fmt;

use fasteval::{Compiler, Evaler};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laplace_inversion::TransformFn;

/// A compiled real-valued expression of a single named variable.
pub struct RealExpr {
    source: String,
    var: String,
    slab: fasteval::Slab,
    compiled: fasteval::Instruction,
}

impl fmt::Debug for RealExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealExpr")
            .field("source", &self.source)
            .field("var", &self.var)
            .finish()
    }
}

impl RealExpr {
    pub fn parse(source: &str, var: &str) -> Result<Self> {
        let mut slab = fasteval::Slab::new();
        let parser = fasteval::Parser::new();
        let compiled = parser
            .parse(source, &mut slab.ps)
            .map_err(|e| Error::Expression(format!("{source:?}: {e}")))?
            .from(&slab.ps)
            .compile(&slab.ps, &mut slab.cs);
        let expr = RealExpr {
            source: source.to_string(),
            var: var.to_string(),
            slab,
            compiled,
        };
        // Surface unknown names now rather than at first use.
        expr.try_eval(1.0)?;
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn try_eval(&self, x: f64) -> Result<f64> {
        let var = self.var.as_str();
        let mut ns = |name: &str, args: Vec<f64>| -> Option<f64> {
            match (name, args.as_slice()) {
                (n, []) if n == var => Some(x),
                ("exp", [a]) => Some(a.exp()),
                ("ln", [a]) => Some(a.ln()),
                ("sqrt", [a]) => Some(a.sqrt()),
                _ => None,
            }
        };
        self.compiled
            .eval(&self.slab, &mut ns)
            .map_err(|e| Error::Expression(format!("{:?}: {e}", self.source)))
    }

    /// Evaluates, mapping evaluation failures to NaN.
    pub fn eval(&self, x: f64) -> f64 {
        self.try_eval(x).unwrap_or(f64::NAN)
    }
}

/// A polynomial in `s` with real coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    fn parse(text: &str) -> Result<Self> {
        let body = strip_parens(text.trim());
        if body.is_empty() {
            return Err(Error::Expression("empty polynomial".into()));
        }
        let mut coeffs: Vec<f64> = Vec::new();
        for (sign, term) in split_terms(body)? {
            let (c, power) = parse_term(term)?;
            if coeffs.len() <= power {
                coeffs.resize(power + 1, 0.0);
            }
            coeffs[power] += sign * c;
        }
        Ok(Polynomial(coeffs))
    }
}

fn strip_parens(mut s: &str) -> &str {
    while s.starts_with('(') && s.ends_with(')') && matching_outer(s) {
        s = s[1..s.len() - 1].trim();
    }
    s
}

fn matching_outer(s: &str) -> bool {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 && i != s.len() - 1 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}

fn split_terms(body: &str) -> Result<Vec<(f64, &str)>> {
    let bytes = body.as_bytes();
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut start = 0;
    for i in 0..bytes.len() {
        let ch = bytes[i] as char;
        let exponent_sign = i >= 2 && matches!(bytes[i - 1], b'e' | b'E') && bytes[i - 2].is_ascii_digit();
        if (ch == '+' || ch == '-') && !exponent_sign {
            let piece = body[start..i].trim();
            if !piece.is_empty() {
                terms.push((sign, piece));
            } else if i != 0 {
                return Err(Error::Expression(format!("dangling operator in {body:?}")));
            }
            sign = if ch == '-' { -1.0 } else { 1.0 };
            start = i + 1;
        }
    }
    let piece = body[start..].trim();
    if piece.is_empty() {
        return Err(Error::Expression(format!("trailing operator in {body:?}")));
    }
    terms.push((sign, piece));
    Ok(terms)
}

fn parse_term(term: &str) -> Result<(f64, usize)> {
    let t: String = term.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Expression(format!("cannot parse polynomial term {term:?}"));
    match t.find('s') {
        None => Ok((t.parse().map_err(|_| bad())?, 0)),
        Some(pos) => {
            let coef_part = t[..pos].trim_end_matches('*');
            let coef = if coef_part.is_empty() {
                1.0
            } else {
                coef_part.parse().map_err(|_| bad())?
            };
            let rest = &t[pos + 1..];
            let power = if rest.is_empty() {
                1
            } else if let Some(p) = rest.strip_prefix('^') {
                p.parse().map_err(|_| bad())?
            } else {
                return Err(bad());
            };
            Ok((coef, power))
        }
    }
}

/// A rational transform `N(s)/D(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTransform {
    pub numerator: Polynomial,
    pub denominator: Polynomial,
}

impl RationalTransform {
    /// Parses `rational:<poly>/<poly>`; the prefix and surrounding quotes are optional.
    pub fn parse(text: &str) -> Result<Self> {
        let body = text.trim().trim_start_matches("rational:").trim().trim_matches('"');
        let mut depth = 0i32;
        let mut split = None;
        for (i, ch) in body.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                '/' if depth == 0 => {
                    if split.is_some() {
                        return Err(Error::Expression(format!("more than one '/' in {body:?}")));
                    }
                    split = Some(i);
                }
                _ => {}
            }
        }
        let (num, den) = match split {
            Some(i) => (&body[..i], &body[i + 1..]),
            None => (body, "1"),
        };
        let out = RationalTransform {
            numerator: Polynomial::parse(num)?,
            denominator: Polynomial::parse(den)?,
        };
        if out.denominator.0.iter().all(|&c| c == 0.0) {
            return Err(Error::Expression("denominator is identically zero".into()));
        }
        Ok(out)
    }
}

impl TransformFn for RationalTransform {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.numerator.eval(s) / self.denominator.eval(s))
    }
}
