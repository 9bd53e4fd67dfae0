//! Sparse multivariate polynomials with `f64` coefficients.
//!
//! A [`Polynomial`] stores a map from exponent vectors to non-zero
//! coefficients. Terms are kept in graded lexicographic order, which is also
//! the order used by the text format and by monomial bases.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::grid::{BoxGrid, GridError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("variable x{index} at position {position} is outside x1..x{n}")]
    VariableOutOfRange {
        index: usize,
        n: usize,
        position: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Exponent vector of a monomial `x1^e1 * ... * xn^en`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    /// The monomial `x_{i+1}` (zero-based `i`).
    pub fn variable(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Product of two monomials (exponent addition).
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.n(), other.n());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

/// Graded lexicographic order: lower total degree first, then larger powers
/// of earlier variables first (`1 < x1 < x2 < x1^2 < x1*x2 < x2^2`).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return f.write_str("1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            write!(f, "x{}", i + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse real polynomial in `n` variables, in canonical form (no stored zero
/// coefficients).
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::one(n), c);
        p
    }

    /// The coordinate polynomial `x_{i+1}` (zero-based `i`).
    pub fn variable(n: usize, i: usize) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::variable(n, i), 1.0);
        p
    }

    /// Builds a polynomial from (exponents, coefficient) pairs; repeated
    /// monomials are summed.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        let mut p = Self::zero(n);
        for (m, c) in terms {
            if m.n() != n {
                return Err(PolyError::DimensionMismatch {
                    expected: n,
                    found: m.n(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    /// `n - (x1^2 + ... + xn^2)`, non-negative on `[-1, 1]^n`.
    pub fn ball_generator(n: usize) -> Self {
        let mut p = Self::constant(n, n as f64);
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 2;
            p.add_term(Monomial(e), -1.0);
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    /// Adds `c * m` in place, dropping the term if it cancels exactly.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        debug_assert_eq!(m.n(), self.n);
        if c == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Maximum total degree over the terms; the zero polynomial has degree 0.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, PolyError> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.evaluate(x)).sum()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<(), PolyError> {
        if x.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_dim(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.n != other.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.n);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        if c == 0.0 {
            return Polynomial::zero(self.n);
        }
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(m, &v)| (m.clone(), v * c))
                .filter(|(_, v)| *v != 0.0)
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.n, 1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Max of `|p|` over a uniform `resolution^n` grid on `[-1, 1]^n`.
    ///
    /// This is a lower bound on the box sup-norm `||p||`.
    pub fn sup_norm_grid(&self, resolution: usize) -> Result<f64, GridError> {
        self.sup_norm_on(&BoxGrid::new(self.n, resolution)?)
    }

    pub fn sup_norm_on(&self, grid: &BoxGrid) -> Result<f64, GridError> {
        let mut x = vec![0.0; self.n];
        let mut best = 0.0f64;
        for i in 0..grid.len() {
            grid.point_into(i, &mut x);
            best = best.max(self.eval_unchecked(&x).abs());
        }
        Ok(best)
    }

    /// Parses the polynomial text grammar, e.g. `-16/9*(x1^2+x2^2)^2 + x2^2 - x1^2`.
    pub fn parse(text: &str, n: usize) -> Result<Polynomial, PolyError> {
        Parser::new(text, n).parse()
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &'a Polynomial) -> Polynomial {
        self.try_add(rhs).expect("polynomial dimension mismatch")
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &'a Polynomial) -> Polynomial {
        self.try_sub(rhs).expect("polynomial dimension mismatch")
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &'a Polynomial) -> Polynomial {
        self.try_mul(rhs).expect("polynomial dimension mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

fn format_coefficient(c: f64) -> String {
    let a = c.abs();
    if a.fract() == 0.0 && a < 1e15 {
        format!("{a:.0}")
    } else if (1e-4..1e15).contains(&a) {
        format!("{a}")
    } else {
        format!("{a:e}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, &c)) in self.terms.iter().enumerate() {
            let sign = if c < 0.0 { "-" } else { "+" };
            match (i, c < 0.0) {
                (0, false) => {}
                (0, true) => f.write_str("-")?,
                _ => write!(f, " {sign} ")?,
            }
            if m.is_constant() {
                f.write_str(&format_coefficient(c))?;
            } else if c.abs() == 1.0 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", format_coefficient(c))?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    n: usize,
    _src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, n: usize) -> Self {
        Parser {
            chars: src.chars().collect(),
            pos: 0,
            n,
            _src: src,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Parse {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<Polynomial, PolyError> {
        if self.peek().is_none() {
            return self.err("empty expression");
        }
        let p = self.expr()?;
        match self.peek() {
            None => Ok(p),
            Some(c) => self.err(format!("unexpected character '{c}'")),
        }
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.signed_term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    let t = self.signed_term()?;
                    acc = &acc + &t;
                }
                Some('-') | Some('\u{2212}') => {
                    self.pos += 1;
                    let t = self.signed_term()?;
                    acc = &acc - &t;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn signed_term(&mut self) -> Result<Polynomial, PolyError> {
        let mut negate = false;
        loop {
            match self.peek() {
                Some('+') => self.pos += 1,
                Some('-') | Some('\u{2212}') => {
                    negate = !negate;
                    self.pos += 1;
                }
                _ => break,
            }
        }
        let t = self.product()?;
        Ok(if negate { -&t } else { t })
    }

    fn starts_primary(c: char) -> bool {
        c.is_ascii_digit() || c == '.' || c == 'x' || c == '('
    }

    fn product(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some('*') | Some('\u{b7}') => {
                    self.pos += 1;
                    let f = self.power()?;
                    acc = &acc * &f;
                }
                Some('/') => {
                    self.pos += 1;
                    self.skip_ws();
                    let at = self.pos;
                    let d = self.number()?;
                    if d == 0.0 {
                        self.pos = at;
                        return self.err("division by zero");
                    }
                    acc = acc.scale(1.0 / d);
                }
                Some(c) if Self::starts_primary(c) => {
                    let f = self.power()?;
                    acc = &acc * &f;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.primary()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let k = self.unsigned_int()?;
            let k = u32::try_from(k).or_else(|_| self.err("exponent too large"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some('x') => {
                let at = self.pos;
                self.pos += 1;
                if !self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    return self.err("expected variable index after 'x'");
                }
                let index = self.unsigned_int()?;
                if index == 0 || index > self.n {
                    return Err(PolyError::VariableOutOfRange {
                        index,
                        n: self.n,
                        position: at,
                    });
                }
                Ok(Polynomial::variable(self.n, index - 1))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let v = self.number()?;
                Ok(Polynomial::constant(self.n, v))
            }
            Some(c) => self.err(format!("unexpected character '{c}'")),
            None => self.err("unexpected end of input"),
        }
    }

    fn unsigned_int(&mut self) -> Result<usize, PolyError> {
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().or_else(|_| {
            self.pos = start;
            self.err("integer out of range")
        })
    }

    /// Decimal literal with optional exponent, e.g. `3`, `1.5`, `.25`, `2e-3`.
    fn number(&mut self) -> Result<f64, PolyError> {
        let start = self.pos;
        let digit_at = |p: usize, chars: &[char]| chars.get(p).is_some_and(|c| c.is_ascii_digit());
        while digit_at(self.pos, &self.chars) {
            self.pos += 1;
        }
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            while digit_at(self.pos, &self.chars) {
                self.pos += 1;
            }
        }
        if matches!(self.chars.get(self.pos), Some('e') | Some('E')) {
            let mut p = self.pos + 1;
            if matches!(self.chars.get(p), Some('+') | Some('-')) {
                p += 1;
            }
            if digit_at(p, &self.chars) {
                self.pos = p;
                while digit_at(self.pos, &self.chars) {
                    self.pos += 1;
                }
            }
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.err(format!("invalid number '{s}'"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, n: usize) -> Polynomial {
        Polynomial::parse(s, n).unwrap()
    }

    const LEMNISCATE: &str = "-16/9*(x1^2+x2^2)^2 + x2^2 - x1^2";

    #[test]
    fn parse_examples() {
        let a = p("x1^2 + x2^2", 2);
        assert_eq!(a.num_terms(), 2);
        assert_eq!(a.total_degree(), 2);

        let c = p("0*x1 + 3", 1);
        assert_eq!(c.num_terms(), 1);
        assert_eq!(c, Polynomial::constant(1, 3.0));

        let l = p(LEMNISCATE, 2);
        assert_eq!(l.num_terms(), 5);
        assert_eq!(l.total_degree(), 4);
        let k = 16.0 / 9.0;
        for (e, c) in [([4, 0], -k), ([2, 2], -2.0 * k), ([0, 4], -k)] {
            assert!((l.coefficient(&Monomial::new(e.to_vec())) - c).abs() < 1e-15);
        }
        assert_eq!(l.coefficient(&Monomial::new(vec![2, 0])), -1.0);
        assert_eq!(l.coefficient(&Monomial::new(vec![0, 2])), 1.0);
    }

    #[test]
    fn parse_variants() {
        assert_eq!(p("2x1 x2", 2), p("2*x1*x2", 2));
        assert_eq!(p("x1 / 4", 1), p("0.25*x1", 1));
        assert_eq!(p("- -x1", 1), p("x1", 1));
        assert_eq!(p("1.5e-3", 1), Polynomial::constant(1, 1.5e-3));
        assert_eq!(p("x1 \u{2212} 1", 1), p("x1 - 1", 1));
        assert_eq!(p("(x1 - 1/2)^2", 1), p("x1^2 - x1 + 0.25", 1));
    }

    #[test]
    fn parse_errors_carry_position() {
        match Polynomial::parse("x1 + * x2", 2) {
            Err(PolyError::Parse { position, .. }) => assert_eq!(position, 5),
            other => panic!("unexpected {other:?}"),
        }
        match Polynomial::parse("x1 + x3", 2) {
            Err(PolyError::VariableOutOfRange { index, n, position }) => {
                assert_eq!((index, n, position), (3, 2, 5))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(Polynomial::parse("x0", 2).is_err());
        assert!(Polynomial::parse("(x1 + 1", 2).is_err());
        assert!(Polynomial::parse("", 2).is_err());
        assert!(Polynomial::parse("x1/0", 2).is_err());
        assert!(Polynomial::parse("x1^", 2).is_err());
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(p("x1^2 + x2^2", 2).evaluate(&[1.0, 1.0]).unwrap(), 2.0);
        let reference = p("1.92876 - 7.71502*x1 + 10.96977*x2^2", 2);
        assert_eq!(reference.evaluate(&[0.0, 0.0]).unwrap(), 1.92876);
        let l = p(LEMNISCATE, 2);
        assert!(l.evaluate(&[0.0, 0.75]).unwrap().abs() < 1e-15);
        assert!(matches!(
            l.evaluate(&[0.0]),
            Err(PolyError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn arithmetic_examples() {
        let x1 = Polynomial::variable(2, 0);
        assert_eq!(&x1 * &x1, p("x1^2", 2));
        let s = p("x1 + x2", 2);
        let z = &s - &s;
        assert!(z.is_zero());
        assert_eq!(z.num_terms(), 0);
        assert_eq!(z.total_degree(), 0);
        let sq = p("x1^2 + x2^2", 2).pow(2);
        assert_eq!(sq, p("x1^4 + 2*x1^2*x2^2 + x2^4", 2));
        assert!(x1.try_add(&Polynomial::variable(3, 0)).is_err());
        assert!(s.scale(0.0).is_zero());
    }

    #[test]
    fn degree_examples() {
        assert_eq!(p("x1^3*x2", 2).total_degree(), 4);
        assert_eq!(Polynomial::constant(2, 5.0).total_degree(), 0);
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(p("x1", 2).sup_norm_grid(3).unwrap(), 1.0);
        assert_eq!(p("x1*x2", 2).sup_norm_grid(2).unwrap(), 1.0);
        assert_eq!(p("1 - x1^2", 1).sup_norm_grid(101).unwrap(), 1.0);
        assert!(p("x1", 8).sup_norm_grid(101).is_err());
    }

    #[test]
    fn graded_lex_formatting() {
        let q = p("x2^2 + x1*x2 + x1^2 + x2 + x1 + 1", 2);
        assert_eq!(q.to_string(), "1 + x1 + x2 + x1^2 + x1*x2 + x2^2");
        assert_eq!(
            p("10.96977*x2^2 - 7.71502*x1 + 1.92876", 2).to_string(),
            "1.92876 - 7.71502*x1 + 10.96977*x2^2"
        );
        assert_eq!(p("-x1 - 2", 1).to_string(), "-2 - x1");
        assert_eq!(Polynomial::zero(3).to_string(), "0");
        assert_eq!(Polynomial::constant(1, 1e-9).to_string(), "1e-9");
    }
}
