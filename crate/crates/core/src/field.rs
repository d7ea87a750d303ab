// SPDX-License-Identifier: Apache-2.0

//! Exact arithmetic in a real quadratic field `Q(sqrt(D))` and its ring of integers.
//!
//! Elements are stored as `(a + b*sqrt(D))/den` in lowest terms. Signs in the two real
//! embeddings are decided with integer arithmetic only.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::indec;

/// Errors raised by field construction and arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("D = {0} is not square-free")]
    NotSquareFree(i64),
    #[error("D = {0} must be greater than 1")]
    DTooSmall(i64),
    #[error("operands live in different fields (D = {0} and D = {1})")]
    MixedFields(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("element is not integral: {0}")]
    NotIntegral(String),
    #[error("invalid element literal {0:?}")]
    Parse(String),
}

/// One of the two real embeddings of `Q(sqrt(D))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Embedding {
    /// `sqrt(D) -> +sqrt(D)`.
    First,
    /// `sqrt(D) -> -sqrt(D)`.
    Second,
}

impl Embedding {
    pub const BOTH: [Embedding; 2] = [Embedding::First, Embedding::Second];

    fn sign(self) -> i32 {
        match self {
            Embedding::First => 1,
            Embedding::Second => -1,
        }
    }
}

/// Exact element `(a + b*sqrt(D))/den` with `gcd(a, b, den) = 1` and `den >= 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QNum {
    d: u64,
    a: BigInt,
    b: BigInt,
    den: BigInt,
}

fn big(v: i64) -> BigInt {
    BigInt::from(v)
}

/// Sign of `a + b*sqrt(d)` for integers `a`, `b`.
pub(crate) fn sign_of_surd(a: &BigInt, b: &BigInt, d: u64) -> i32 {
    let sa = sign_int(a);
    let sb = sign_int(b);
    if sb == 0 {
        return sa;
    }
    if sa == 0 || sa == sb {
        return sb;
    }
    let lhs = a * a;
    let rhs = b * b * BigInt::from(d);
    match lhs.cmp(&rhs) {
        Ordering::Greater => sa,
        Ordering::Less => sb,
        Ordering::Equal => 0,
    }
}

fn sign_int(x: &BigInt) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

/// Floor of `a + s*sqrt(n)` for `n >= 0`, `s` in `{-1, 0, 1}`.
fn floor_plus_sqrt(a: &BigInt, s: i32, n: &BigInt) -> BigInt {
    if s == 0 || n.is_zero() {
        return a.clone();
    }
    let r = n.sqrt();
    let exact = &r * &r == *n;
    if s > 0 {
        a + r
    } else if exact {
        a - r
    } else {
        a - r - 1
    }
}

impl QNum {
    /// Builds `(a + b*sqrt(d))/den` and reduces it to canonical form.
    pub fn new(d: u64, a: BigInt, b: BigInt, den: BigInt) -> QNum {
        assert!(!den.is_zero(), "zero denominator");
        let mut x = QNum { d, a, b, den };
        x.canonicalize();
        x
    }

    pub fn from_i64s(d: u64, a: i64, b: i64, den: i64) -> QNum {
        QNum::new(d, big(a), big(b), big(den))
    }

    pub fn from_int(d: u64, a: impl Into<BigInt>) -> QNum {
        QNum { d, a: a.into(), b: BigInt::zero(), den: BigInt::one() }
    }

    pub fn from_rational(d: u64, r: &BigRational) -> QNum {
        QNum::new(d, r.numer().clone(), BigInt::zero(), r.denom().clone())
    }

    pub fn zero(d: u64) -> QNum {
        QNum::from_int(d, 0)
    }

    pub fn one(d: u64) -> QNum {
        QNum::from_int(d, 1)
    }

    /// `sqrt(D)`.
    pub fn sqrt_d(d: u64) -> QNum {
        QNum::from_i64s(d, 0, 1, 1)
    }

    /// The generator `omega` of the ring of integers `Z + Z*omega`.
    pub fn omega(d: u64) -> QNum {
        if d % 4 == 1 {
            QNum::from_i64s(d, 1, 1, 2)
        } else {
            QNum::sqrt_d(d)
        }
    }

    /// Element `p + q*omega` from integer coordinates.
    pub fn from_coords(d: u64, p: &BigInt, q: &BigInt) -> QNum {
        if d % 4 == 1 {
            QNum::new(d, p * 2 + q, q.clone(), big(2))
        } else {
            QNum { d, a: p.clone(), b: q.clone(), den: BigInt::one() }
        }
    }

    pub fn from_coords_i64(d: u64, p: i64, q: i64) -> QNum {
        QNum::from_coords(d, &big(p), &big(q))
    }

    fn canonicalize(&mut self) {
        if self.den.is_negative() {
            self.a = -&self.a;
            self.b = -&self.b;
            self.den = -&self.den;
        }
        if self.a.is_zero() && self.b.is_zero() {
            self.den = BigInt::one();
            return;
        }
        let g = self.a.gcd(&self.b).gcd(&self.den);
        if !g.is_one() {
            self.a /= &g;
            self.b /= &g;
            self.den /= &g;
        }
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero() && self.den.is_one()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn same_field(&self, other: &QNum) -> Result<(), FieldError> {
        if self.d == other.d {
            Ok(())
        } else {
            Err(FieldError::MixedFields(self.d, other.d))
        }
    }

    pub fn checked_add(&self, other: &QNum) -> Result<QNum, FieldError> {
        self.same_field(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn checked_sub(&self, other: &QNum) -> Result<QNum, FieldError> {
        self.same_field(other)?;
        Ok(self.add_unchecked(&other.neg_ref()))
    }

    pub fn checked_mul(&self, other: &QNum) -> Result<QNum, FieldError> {
        self.same_field(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn add_unchecked(&self, other: &QNum) -> QNum {
        if self.den == other.den {
            return QNum::new(self.d, &self.a + &other.a, &self.b + &other.b, self.den.clone());
        }
        QNum::new(
            self.d,
            &self.a * &other.den + &other.a * &self.den,
            &self.b * &other.den + &other.b * &self.den,
            &self.den * &other.den,
        )
    }

    fn mul_unchecked(&self, other: &QNum) -> QNum {
        let dd = BigInt::from(self.d);
        QNum::new(
            self.d,
            &self.a * &other.a + &self.b * &other.b * dd,
            &self.a * &other.b + &self.b * &other.a,
            &self.den * &other.den,
        )
    }

    fn neg_ref(&self) -> QNum {
        QNum { d: self.d, a: -&self.a, b: -&self.b, den: self.den.clone() }
    }

    /// Galois conjugate `(a - b*sqrt(D))/den`.
    pub fn conj(&self) -> QNum {
        QNum { d: self.d, a: self.a.clone(), b: -&self.b, den: self.den.clone() }
    }

    /// `N(x) = x * conj(x)`.
    pub fn norm(&self) -> BigRational {
        let num = &self.a * &self.a - &self.b * &self.b * BigInt::from(self.d);
        BigRational::new(num, &self.den * &self.den)
    }

    /// `tr(x) = x + conj(x)`.
    pub fn trace(&self) -> BigRational {
        BigRational::new(&self.a * 2, self.den.clone())
    }

    pub fn mul_int(&self, k: &BigInt) -> QNum {
        QNum::new(self.d, &self.a * k, &self.b * k, self.den.clone())
    }

    pub fn mul_rational(&self, r: &BigRational) -> QNum {
        QNum::new(self.d, &self.a * r.numer(), &self.b * r.numer(), &self.den * r.denom())
    }

    pub fn div_int(&self, k: &BigInt) -> QNum {
        assert!(!k.is_zero(), "division by zero");
        QNum::new(self.d, self.a.clone(), self.b.clone(), &self.den * k)
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> Result<QNum, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let n = &self.a * &self.a - &self.b * &self.b * BigInt::from(self.d);
        Ok(QNum::new(self.d, &self.a * &self.den, -&self.b * &self.den, n))
    }

    /// Exact quotient `self / other` in the field.
    pub fn div(&self, other: &QNum) -> Result<QNum, FieldError> {
        self.same_field(other)?;
        Ok(self.mul_unchecked(&other.inv()?))
    }

    pub fn pow(&self, e: i64) -> QNum {
        if e < 0 {
            return self.inv().expect("power of zero").pow(-e);
        }
        let mut acc = QNum::one(self.d);
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn square(&self) -> QNum {
        self * self
    }

    /// Exact sign of the image under `emb`.
    pub fn sign_at(&self, emb: Embedding) -> i32 {
        let b = if emb.sign() > 0 { self.b.clone() } else { -&self.b };
        sign_of_surd(&self.a, &b, self.d)
    }

    /// `x > 0` in both embeddings.
    pub fn is_totally_positive(&self) -> bool {
        self.sign_at(Embedding::First) > 0 && self.sign_at(Embedding::Second) > 0
    }

    /// `x >= 0` in both embeddings.
    pub fn is_totally_nonnegative(&self) -> bool {
        self.sign_at(Embedding::First) >= 0 && self.sign_at(Embedding::Second) >= 0
    }

    /// `self ⪰ other`.
    pub fn dominates(&self, other: &QNum) -> bool {
        (self - other).is_totally_nonnegative()
    }

    /// `self ≻ other`.
    pub fn strictly_dominates(&self, other: &QNum) -> bool {
        (self - other).is_totally_positive()
    }

    /// Membership in the ring of integers.
    pub fn is_integral(&self) -> bool {
        if self.den.is_one() {
            return true;
        }
        self.d % 4 == 1 && self.den == big(2) && (&self.a - &self.b).is_even()
    }

    /// Coordinates `(p, q)` with `x = p + q*omega`, as rationals.
    pub fn coords(&self) -> (BigRational, BigRational) {
        if self.d % 4 == 1 {
            let q = BigRational::new(&self.b * 2, self.den.clone());
            let p = BigRational::new(&self.a - &self.b, self.den.clone());
            (p, q)
        } else {
            (
                BigRational::new(self.a.clone(), self.den.clone()),
                BigRational::new(self.b.clone(), self.den.clone()),
            )
        }
    }

    /// Integer coordinates `(p, q)` with `x = p + q*omega`; `None` if `x` is not integral.
    pub fn int_coords(&self) -> Option<(BigInt, BigInt)> {
        if !self.is_integral() {
            return None;
        }
        let (p, q) = self.coords();
        Some((p.to_integer(), q.to_integer()))
    }

    /// `floor` of the image under `emb`.
    pub fn floor_at(&self, emb: Embedding) -> BigInt {
        let b = if emb.sign() > 0 { self.b.clone() } else { -&self.b };
        let n = &b * &b * BigInt::from(self.d);
        let f = floor_plus_sqrt(&self.a, sign_int(&b), &n);
        f.div_floor(&self.den)
    }

    /// `ceil` of the image under `emb`.
    pub fn ceil_at(&self, emb: Embedding) -> BigInt {
        -(self.neg_ref().floor_at(emb))
    }

    /// Floating-point image under `emb`, for display and candidate ordering only.
    pub fn to_f64_at(&self, emb: Embedding) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        let den = self.den.to_f64().unwrap_or(f64::NAN);
        (a + emb.sign() as f64 * b * (self.d as f64).sqrt()) / den
    }

    /// Exact square root inside the field, if one exists.
    pub fn sqrt_exact(&self) -> Option<QNum> {
        if self.is_zero() {
            return Some(self.clone());
        }
        let n = self.norm();
        let rn = rational_sqrt(&n)?;
        let half = BigRational::new(BigInt::one(), big(2));
        let x = BigRational::new(self.a.clone(), self.den.clone());
        let dd = BigRational::from_integer(BigInt::from(self.d));
        for s in [1i64, -1] {
            let sr = &rn * BigRational::from_integer(big(s));
            let p2 = (&x + &sr) * &half;
            let q2 = (&x - &sr) * &half / &dd;
            if p2.is_negative() || q2.is_negative() {
                continue;
            }
            let (Some(p), Some(q)) = (rational_sqrt(&p2), rational_sqrt(&q2)) else {
                continue;
            };
            for (sp, sq) in [(1i64, 1i64), (1, -1)] {
                let pp = &p * BigRational::from_integer(big(sp));
                let qq = &q * BigRational::from_integer(big(sq));
                let den = pp.denom().lcm(qq.denom());
                let cand = QNum::new(
                    self.d,
                    (&pp * BigRational::from_integer(den.clone())).to_integer(),
                    (&qq * BigRational::from_integer(den.clone())).to_integer(),
                    den,
                );
                if &cand * &cand == *self {
                    return Some(cand);
                }
            }
        }
        None
    }

    /// Lexicographic key used for deterministic tie-breaking.
    pub fn lex_cmp(&self, other: &QNum) -> Ordering {
        self.den
            .cmp(&other.den)
            .then_with(|| self.a.cmp(&other.a))
            .then_with(|| self.b.cmp(&other.b))
    }

    /// Parses `"(a+b*sqrt(D))/den"` and its abbreviations.
    pub fn parse(d: u64, s: &str) -> Result<QNum, FieldError> {
        parse_literal(d, s)
    }

    /// The same coordinates read in `Q(sqrt(d))`. Rational literals parse without a field, so
    /// deserialized values are rebound through this.
    pub fn in_field(&self, d: u64) -> QNum {
        if self.b.is_zero() {
            QNum { d, a: self.a.clone(), b: BigInt::zero(), den: self.den.clone() }
        } else {
            assert_eq!(self.d, d, "mixed fields");
            self.clone()
        }
    }
}

/// Exact square root of a non-negative rational, if rational.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &n * &n == *r.numer() && &d * &d == *r.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

impl fmt::Debug for QNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for QNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let surd = |b: &BigInt| -> String {
            if b.is_one() {
                format!("sqrt({})", self.d)
            } else if *b == big(-1) {
                format!("-sqrt({})", self.d)
            } else {
                format!("{}*sqrt({})", b, self.d)
            }
        };
        let (core, compound) = if self.b.is_zero() {
            (self.a.to_string(), false)
        } else if self.a.is_zero() {
            (surd(&self.b), false)
        } else if self.b.is_negative() {
            (format!("{}-{}", self.a, surd(&-&self.b)), true)
        } else {
            (format!("{}+{}", self.a, surd(&self.b)), true)
        };
        if self.den.is_one() {
            write!(f, "{}", core)
        } else if compound {
            write!(f, "({})/{}", core, self.den)
        } else {
            write!(f, "{}/{}", core, self.den)
        }
    }
}

impl Serialize for QNum {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for QNum {
    fn deserialize<De: Deserializer<'de>>(de: De) -> Result<Self, De::Error> {
        let s = String::deserialize(de)?;
        parse_any(&s).map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl<'a> $trait<&'a QNum> for &'a QNum {
            type Output = QNum;
            fn $method(self, rhs: &'a QNum) -> QNum {
                assert_eq!(self.d, rhs.d, "mixed fields");
                self.$inner(rhs)
            }
        }
        impl $trait<QNum> for QNum {
            type Output = QNum;
            fn $method(self, rhs: QNum) -> QNum {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $trait<&'a QNum> for QNum {
            type Output = QNum;
            fn $method(self, rhs: &'a QNum) -> QNum {
                (&self).$method(rhs)
            }
        }
    };
}

impl QNum {
    fn sub_unchecked(&self, other: &QNum) -> QNum {
        self.add_unchecked(&other.neg_ref())
    }
}

forward_binop!(Add, add, add_unchecked);
forward_binop!(Sub, sub, sub_unchecked);
forward_binop!(Mul, mul, mul_unchecked);

impl Neg for QNum {
    type Output = QNum;
    fn neg(self) -> QNum {
        self.neg_ref()
    }
}

impl Neg for &QNum {
    type Output = QNum;
    fn neg(self) -> QNum {
        self.neg_ref()
    }
}

/// Quotient `b / a` when it lies in the ring of integers.
pub fn divides(a: &QNum, b: &QNum) -> Result<Option<QNum>, FieldError> {
    if a.is_zero() {
        return Err(FieldError::DivisionByZero);
    }
    let q = b.div(a)?;
    Ok(if q.is_integral() { Some(q) } else { None })
}

fn parse_int(s: &str, whole: &str) -> Result<BigInt, FieldError> {
    s.parse::<BigInt>().map_err(|_| FieldError::Parse(whole.to_string()))
}

/// Parses a literal, reading `D` from its `sqrt(D)` term when present.
pub fn parse_any(s: &str) -> Result<QNum, FieldError> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let d = match compact.find("sqrt(") {
        Some(i) => {
            let rest = &compact[i + 5..];
            let end = rest.find(')').ok_or_else(|| FieldError::Parse(s.to_string()))?;
            rest[..end].parse::<u64>().map_err(|_| FieldError::Parse(s.to_string()))?
        }
        None => 0,
    };
    parse_literal(d, s)
}

fn parse_literal(d: u64, s: &str) -> Result<QNum, FieldError> {
    let err = || FieldError::Parse(s.to_string());
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(err());
    }
    let (body, den) = split_denominator(&compact).ok_or_else(err)?;
    let den = match den {
        Some(t) => parse_int(t, s)?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(err());
    }
    let mut a = BigInt::zero();
    let mut b = BigInt::zero();
    let bytes = body.as_bytes();
    let mut i = 0;
    let mut first = true;
    while i < bytes.len() {
        let mut sign = 1;
        if bytes[i] == b'+' || bytes[i] == b'-' {
            if bytes[i] == b'-' {
                sign = -1;
            }
            i += 1;
        } else if !first {
            return Err(err());
        }
        first = false;
        let start = i;
        let mut depth = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b'+' | b'-' if depth == 0 => break,
                _ => {}
            }
            i += 1;
        }
        let term = &body[start..i];
        if term.is_empty() {
            return Err(err());
        }
        let (coef, is_surd) = parse_term(term, d, s)?;
        let coef = coef * sign;
        if is_surd {
            b += coef;
        } else {
            a += coef;
        }
    }
    Ok(QNum::new(d, a, b, den))
}

fn split_denominator(s: &str) -> Option<(&str, Option<&str>)> {
    let bytes = s.as_bytes();
    let mut depth = 0i32;
    let mut slash = None;
    for (i, &c) in bytes.iter().enumerate() {
        match c {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'/' if depth == 0 => slash = Some(i),
            _ => {}
        }
        if depth < 0 {
            return None;
        }
    }
    let (num, den) = match slash {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    let num = if num.starts_with('(') && num.ends_with(')') && matching_outer(num) {
        &num[1..num.len() - 1]
    } else {
        num
    };
    Some((num, den))
}

fn matching_outer(s: &str) -> bool {
    let mut depth = 0;
    for (i, c) in s.char_indices() {
        match c {
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
    true
}

fn parse_term(term: &str, d: u64, whole: &str) -> Result<(BigInt, bool), FieldError> {
    let err = || FieldError::Parse(whole.to_string());
    let Some(pos) = term.find("sqrt(") else {
        return Ok((parse_int(term, whole)?, false));
    };
    let close = term[pos..].find(')').ok_or_else(err)? + pos;
    let radicand: u64 = term[pos + 5..close].parse().map_err(|_| err())?;
    if radicand != d {
        return Err(FieldError::Parse(format!("{whole} (expected sqrt({d}))")));
    }
    let before = &term[..pos];
    let after = &term[close + 1..];
    let mut coef = BigInt::one();
    if !before.is_empty() {
        let c = before.strip_suffix('*').ok_or_else(err)?;
        coef *= parse_int(c, whole)?;
    }
    if !after.is_empty() {
        let c = after.strip_prefix('*').ok_or_else(err)?;
        coef *= parse_int(c, whole)?;
    }
    Ok((coef, true))
}

/// A real number `p + q*sqrt(m)` with rational `p`, `q`; used for Hermite-type constants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadReal {
    pub p: BigRational,
    pub q: BigRational,
    pub m: u64,
}

impl QuadReal {
    pub fn rational(r: BigRational) -> QuadReal {
        QuadReal { p: r, q: BigRational::zero(), m: 1 }
    }

    pub fn signum(&self) -> i32 {
        if self.q.is_zero() || self.m == 1 {
            let v = &self.p + &self.q;
            return if v.is_positive() { 1 } else if v.is_negative() { -1 } else { 0 };
        }
        let l = self.p.denom().lcm(self.q.denom());
        let a = (&self.p * BigRational::from_integer(l.clone())).to_integer();
        let b = (&self.q * BigRational::from_integer(l)).to_integer();
        sign_of_surd(&a, &b, self.m)
    }

    pub fn mul_rational(&self, r: &BigRational) -> QuadReal {
        QuadReal { p: &self.p * r, q: &self.q * r, m: self.m }
    }

    pub fn mul(&self, other: &QuadReal) -> QuadReal {
        if self.q.is_zero() {
            return other.mul_rational(&self.p);
        }
        if other.q.is_zero() {
            return self.mul_rational(&other.p);
        }
        assert_eq!(self.m, other.m, "incompatible radicands");
        let m = BigRational::from_integer(BigInt::from(self.m));
        QuadReal {
            p: &self.p * &other.p + &self.q * &other.q * m,
            q: &self.p * &other.q + &self.q * &other.p,
            m: self.m,
        }
    }

    pub fn pow(&self, e: u32) -> QuadReal {
        let mut acc = QuadReal::rational(BigRational::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Compares `self` with a rational.
    pub fn cmp_rational(&self, r: &BigRational) -> Ordering {
        let diff = QuadReal { p: &self.p - r, q: self.q.clone(), m: self.m };
        diff.signum().cmp(&0)
    }

    /// `floor(self)`.
    pub fn floor(&self) -> BigInt {
        let approx = self.to_f64().floor();
        let mut k = BigInt::from(approx as i64);
        while self.cmp_rational(&BigRational::from_integer(k.clone())) == Ordering::Less {
            k -= 1;
        }
        while self.cmp_rational(&BigRational::from_integer(&k + 1)) != Ordering::Less {
            k += 1;
        }
        k
    }

    /// Largest integer `k >= 0` with `k^2 <= self`, i.e. `floor(sqrt(self))` for `self >= 0`.
    pub fn floor_sqrt(&self) -> BigInt {
        let mut k = BigInt::from(self.to_f64().max(0.0).sqrt() as i64);
        while k.is_positive() && self.cmp_rational(&BigRational::from_integer(&k * &k)) == Ordering::Less {
            k -= 1;
        }
        loop {
            let k1: BigInt = &k + 1;
            if self.cmp_rational(&BigRational::from_integer(&k1 * &k1)) != Ordering::Less {
                k = k1;
            } else {
                break;
            }
        }
        k
    }

    pub fn to_f64(&self) -> f64 {
        self.p.to_f64().unwrap_or(f64::NAN) + self.q.to_f64().unwrap_or(f64::NAN) * (self.m as f64).sqrt()
    }
}

impl fmt::Display for QuadReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_zero() {
            write!(f, "{}", self.p)
        } else {
            write!(f, "{}+({})*sqrt({})", self.p, self.q, self.m)
        }
    }
}

/// Source of the value used for the binary Hermite constant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HermiteSource {
    /// Known exact value.
    Exact,
    /// Upper bound `Delta_K / 2`.
    Bound,
}

/// The binary Hermite constant `gamma_{K,2}`, stored through its exact square.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HermiteConstant {
    pub squared: QuadReal,
    pub source: HermiteSource,
    pub display: String,
}

impl HermiteConstant {
    fn for_field(d: u64, discriminant: u64) -> HermiteConstant {
        let r = |n: i64, m: i64| BigRational::new(big(n), big(m));
        let exact = |squared: QuadReal, display: &str| HermiteConstant {
            squared,
            source: HermiteSource::Exact,
            display: display.to_string(),
        };
        match d {
            // (4/(2*sqrt(6)-3))^2 = 16*(33+12*sqrt(6))/225
            2 => exact(QuadReal { p: r(16 * 33, 225), q: r(16 * 12, 225), m: 6 }, "4/(2*sqrt(6)-3)"),
            3 => exact(QuadReal::rational(r(16, 1)), "4"),
            5 => exact(QuadReal::rational(r(16, 5)), "4/sqrt(5)"),
            6 => exact(QuadReal::rational(r(25, 1)), "5"),
            21 => exact(QuadReal::rational(r(256, 9)), "16/3"),
            _ => {
                let g = r(discriminant as i64, 2);
                HermiteConstant {
                    squared: QuadReal::rational(&g * &g),
                    source: HermiteSource::Bound,
                    display: g.to_string(),
                }
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        self.source == HermiteSource::Exact
    }
}

pub(crate) fn is_square_free(n: u64) -> bool {
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p * p) {
            return false;
        }
        p += 1;
    }
    true
}

struct ContextData {
    d: u64,
    omega: QNum,
    discriminant: u64,
    cf: indec::PeriodicCF,
    fund_unit: QNum,
    fund_unit_norm: i32,
    eps_plus: QNum,
    dominance_c: BigRational,
    hermite2: HermiteConstant,
}

/// Everything derived from a square-free `D > 1`. Cheap to clone.
#[derive(Clone)]
pub struct FieldContext {
    inner: Arc<ContextData>,
}

impl fmt::Debug for FieldContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldContext(D = {})", self.inner.d)
    }
}

impl PartialEq for FieldContext {
    fn eq(&self, other: &Self) -> bool {
        self.inner.d == other.inner.d
    }
}

impl FieldContext {
    /// Builds the context for `Q(sqrt(D))`.
    pub fn new(d: i64) -> Result<FieldContext, FieldError> {
        if d <= 1 {
            return Err(FieldError::DTooSmall(d));
        }
        let du = d as u64;
        if !is_square_free(du) {
            return Err(FieldError::NotSquareFree(d));
        }
        let discriminant = if du % 4 == 1 { du } else { 4 * du };
        let cf = indec::expand_minus_omega_conj(du);
        let fund_unit = indec::fundamental_unit_from_cf(du, &cf);
        let fund_unit_norm = if fund_unit.norm().is_one() { 1 } else { -1 };
        let eps_plus = if fund_unit_norm == 1 { fund_unit.clone() } else { fund_unit.square() };
        let mut data = ContextData {
            d: du,
            omega: QNum::omega(du),
            discriminant,
            cf,
            fund_unit,
            fund_unit_norm,
            eps_plus,
            dominance_c: BigRational::zero(),
            hermite2: HermiteConstant::for_field(du, discriminant),
        };
        let partial = FieldContext { inner: Arc::new(clone_data(&data)) };
        data.dominance_c = indec::dominance_constant(&partial);
        Ok(FieldContext { inner: Arc::new(data) })
    }

    pub fn d(&self) -> u64 {
        self.inner.d
    }

    pub fn omega(&self) -> &QNum {
        &self.inner.omega
    }

    pub fn discriminant(&self) -> u64 {
        self.inner.discriminant
    }

    pub fn continued_fraction(&self) -> &indec::PeriodicCF {
        &self.inner.cf
    }

    pub fn fund_unit(&self) -> &QNum {
        &self.inner.fund_unit
    }

    pub fn fund_unit_norm(&self) -> i32 {
        self.inner.fund_unit_norm
    }

    pub fn eps_plus(&self) -> &QNum {
        &self.inner.eps_plus
    }

    pub fn dominance_c(&self) -> &BigRational {
        &self.inner.dominance_c
    }

    pub fn hermite2(&self) -> &HermiteConstant {
        &self.inner.hermite2
    }

    pub fn int(&self, v: i64) -> QNum {
        QNum::from_int(self.d(), v)
    }

    pub fn elem(&self, a: i64, b: i64, den: i64) -> QNum {
        QNum::from_i64s(self.d(), a, b, den)
    }

    pub fn from_coords(&self, p: &BigInt, q: &BigInt) -> QNum {
        QNum::from_coords(self.d(), p, q)
    }

    pub fn parse(&self, s: &str) -> Result<QNum, FieldError> {
        QNum::parse(self.d(), s)
    }

    /// Reduces a nonzero totally positive `x` modulo totally positive units into the half-open
    /// cone `{u1 + u2*eps_plus : u1 > 0, u2 >= 0}`. Returns the representative and the exponent
    /// `k` with `rep = x * eps_plus^k`.
    pub fn reduce_mod_tp_units(&self, x: &QNum) -> (QNum, i64) {
        let e = self.eps_plus();
        let ec = e.conj();
        let mut y = x.clone();
        let mut k = 0i64;
        while y.b().is_negative() {
            y = &y * e;
            k += 1;
        }
        loop {
            let z = &y * &ec;
            if z.b().is_negative() {
                break;
            }
            y = z;
            k -= 1;
        }
        (y, k)
    }

    /// Canonical representative of `x` modulo multiplication by squares of units.
    pub fn reduce_mod_unit_squares(&self, x: &QNum) -> QNum {
        let (y, k) = self.reduce_mod_tp_units(x);
        if self.fund_unit_norm() == -1 || k % 2 == 0 {
            y
        } else {
            &y * self.eps_plus()
        }
    }

    /// `x / y` is a square of a unit.
    pub fn differ_by_unit_square(&self, x: &QNum, y: &QNum) -> bool {
        if x.is_zero() || y.is_zero() {
            return x == y;
        }
        self.reduce_mod_unit_squares(x) == self.reduce_mod_unit_squares(y)
    }

    /// `x` is a unit of the ring of integers.
    pub fn is_unit(&self, x: &QNum) -> bool {
        x.is_integral() && {
            let n = x.norm();
            n.is_one() || n == -BigRational::one()
        }
    }
}

fn clone_data(d: &ContextData) -> ContextData {
    ContextData {
        d: d.d,
        omega: d.omega.clone(),
        discriminant: d.discriminant,
        cf: d.cf.clone(),
        fund_unit: d.fund_unit.clone(),
        fund_unit_norm: d.fund_unit_norm,
        eps_plus: d.eps_plus.clone(),
        dominance_c: d.dominance_c.clone(),
        hermite2: d.hermite2.clone(),
    }
}

/// Convenience alias for [`FieldContext::new`].
pub fn make_context(d: i64) -> Result<FieldContext, FieldError> {
    FieldContext::new(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, m: i64) -> BigRational {
        BigRational::new(big(n), big(m))
    }

    #[test]
    fn norm_trace_conj() {
        assert_eq!(QNum::from_i64s(2, 3, 2, 1).norm(), r(1, 1));
        assert_eq!(QNum::from_i64s(5, 1, 1, 2).trace(), r(1, 1));
        assert_eq!(QNum::from_i64s(21, 1, 1, 2).conj(), QNum::from_i64s(21, 1, -1, 2));
    }

    #[test]
    fn canonical_form() {
        let x = QNum::from_i64s(5, 2, 4, 4);
        assert_eq!((x.a().clone(), x.b().clone(), x.den().clone()), (big(1), big(2), big(2)));
        let z = QNum::from_i64s(3, 0, 0, 7);
        assert!(z.den().is_one());
        let n = QNum::from_i64s(3, 1, 1, -2);
        assert_eq!(n, QNum::from_i64s(3, -1, -1, 2));
    }

    #[test]
    fn positivity() {
        assert!(QNum::from_i64s(2, 2, 1, 1).is_totally_positive());
        assert!(!QNum::from_i64s(2, 1, 1, 1).is_totally_positive());
        assert!(QNum::from_int(2, 2).dominates(&QNum::from_int(2, 1)));
        assert_eq!(QNum::zero(7).sign_at(Embedding::Second), 0);
    }

    #[test]
    fn integrality_and_division() {
        assert!(QNum::from_i64s(5, 1, 1, 2).is_integral());
        assert!(!QNum::from_i64s(5, 1, 2, 2).is_integral());
        assert!(!QNum::from_i64s(3, 1, 1, 2).is_integral());
        let a = QNum::from_i64s(2, 2, 1, 1);
        let q = divides(&a, &QNum::from_int(2, 2)).unwrap().unwrap();
        assert_eq!(q, QNum::from_i64s(2, 2, -1, 1));
        assert!(divides(&QNum::from_int(2, 2), &QNum::from_i64s(2, 3, 1, 1)).unwrap().is_none());
        assert_eq!(divides(&QNum::zero(2), &QNum::one(2)), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn mixed_fields_rejected() {
        let x = QNum::one(2);
        let y = QNum::one(3);
        assert_eq!(x.checked_add(&y), Err(FieldError::MixedFields(2, 3)));
    }

    #[test]
    fn floors() {
        let x = QNum::from_i64s(2, 1, 1, 1);
        assert_eq!(x.floor_at(Embedding::First), big(2));
        assert_eq!(x.floor_at(Embedding::Second), big(-1));
        assert_eq!(x.ceil_at(Embedding::Second), big(0));
        let y = QNum::from_i64s(5, -1, 1, 2);
        assert_eq!(y.floor_at(Embedding::First), big(0));
        assert_eq!(y.floor_at(Embedding::Second), big(-2));
        assert_eq!(QNum::from_i64s(3, 7, 0, 2).floor_at(Embedding::First), big(3));
    }

    #[test]
    fn exact_square_roots() {
        let e = QNum::from_i64s(2, 3, 2, 1);
        assert_eq!(e.sqrt_exact().unwrap().square(), e);
        let g = QNum::from_i64s(5, 3, 1, 2);
        assert_eq!(g.sqrt_exact().unwrap().square(), g);
        assert!(QNum::from_int(2, 3).sqrt_exact().is_none());
        assert_eq!(QNum::from_int(2, 2).sqrt_exact().unwrap().square(), QNum::from_int(2, 2));
        assert!(QNum::from_i64s(3, 2, 1, 1).sqrt_exact().is_none());
    }

    #[test]
    fn literal_round_trip() {
        for s in ["(1+sqrt(5))/2", "3-2*sqrt(2)", "sqrt(6)", "-sqrt(6)", "7/4", "(3*sqrt(21))/2", "0"] {
            let x = parse_any(s).unwrap();
            let back = QNum::parse(x.d().max(2), &x.to_string()).unwrap();
            assert_eq!(x.a(), back.a());
            assert_eq!(x.b(), back.b());
        }
        let d = 21;
        assert_eq!(QNum::parse(d, " ( 15 + 3*sqrt(21) ) / 2 ").unwrap(), QNum::from_i64s(21, 15, 3, 2));
        assert_eq!(QNum::parse(d, "-1").unwrap(), QNum::from_int(21, -1));
        assert_eq!(QNum::parse(d, "sqrt(21)*2").unwrap(), QNum::from_i64s(21, 0, 2, 1));
        assert!(QNum::parse(d, "1+sqrt(5)").is_err());
        assert!(QNum::parse(d, "1+").is_err());
        assert!(QNum::parse(d, "(1)/0").is_err());
    }

    #[test]
    fn quad_real_ordering() {
        let g2 = HermiteConstant::for_field(2, 8).squared;
        assert_eq!(g2.cmp_rational(&r(4, 1)), Ordering::Greater);
        assert_eq!(g2.cmp_rational(&r(9, 2)), Ordering::Less);
        assert_eq!(g2.floor(), big(4));
        assert_eq!(QuadReal::rational(r(17, 1)).floor_sqrt(), big(4));
        assert_eq!(QuadReal::rational(r(16, 1)).floor_sqrt(), big(4));
    }

    #[test]
    fn context_errors() {
        assert_eq!(FieldContext::new(12).unwrap_err(), FieldError::NotSquareFree(12));
        assert_eq!(FieldContext::new(1).unwrap_err(), FieldError::DTooSmall(1));
        assert_eq!(FieldContext::new(4).unwrap_err(), FieldError::NotSquareFree(4));
    }
}
