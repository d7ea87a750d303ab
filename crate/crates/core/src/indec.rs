// SPDX-License-Identifier: Apache-2.0

//! Continued fractions, fundamental units and indecomposable integers.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::enumerate::box_between;
use crate::field::{FieldContext, FieldError, QNum};

/// Which quadratic irrational a [`PeriodicCF`] expands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CfTarget {
    /// `sqrt(D)`, for `D = 2, 3 (mod 4)`.
    SqrtD,
    /// `(sqrt(D) - 1)/2`, for `D = 1 (mod 4)`.
    HalfSqrtDMinusHalf,
}

/// Continued fraction `[u0; u1, ..., us, u1, ...]` of `-omega'`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicCF {
    pub head: i64,
    pub period: Vec<i64>,
    pub target: CfTarget,
}

impl PeriodicCF {
    /// Partial quotient `u_i`.
    pub fn u(&self, i: usize) -> i64 {
        if i == 0 {
            self.head
        } else {
            self.period[(i - 1) % self.period.len()]
        }
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    /// Convergent numerators and denominators `(p_i, q_i)` for `i = -1, 0, ..., n - 2`,
    /// returned at positions `0..n`.
    pub fn convergents(&self, n: usize) -> Vec<(BigInt, BigInt)> {
        let mut out = Vec::with_capacity(n);
        let (mut p_prev, mut q_prev) = (BigInt::zero(), BigInt::one());
        let (mut p, mut q) = (BigInt::one(), BigInt::zero());
        for i in 0..n {
            out.push((p.clone(), q.clone()));
            let u = BigInt::from(self.u(i));
            let pn = &u * &p + &p_prev;
            let qn = &u * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, pn);
            q_prev = std::mem::replace(&mut q, qn);
        }
        out
    }

    /// Largest partial quotient with odd index.
    pub fn max_odd_partial_quotient(&self) -> i64 {
        let s = self.period.len();
        (1..=2 * s).filter(|i| i % 2 == 1).map(|i| self.u(i)).max().unwrap_or(1)
    }
}

/// Expands `-omega'` with the exact `(P + sqrt(D))/Q` recurrence.
pub fn expand_minus_omega_conj(d: u64) -> PeriodicCF {
    let di = d as i64;
    let (mut p, mut q, target) = if d % 4 == 1 {
        (-1i64, 2i64, CfTarget::HalfSqrtDMinusHalf)
    } else {
        (0i64, 1i64, CfTarget::SqrtD)
    };
    let root = isqrt_i64(di);
    let floor_of = |p: i64, q: i64| -> i64 { (p + root).div_euclid(q) };
    let head = floor_of(p, q);
    let mut period = Vec::new();
    let mut seen: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut a = head;
    loop {
        let pn = a * q - p;
        let qn = (di - pn * pn) / q;
        p = pn;
        q = qn;
        if let Some(&start) = seen.get(&(p, q)) {
            debug_assert_eq!(start, 0, "tail is purely periodic from index 1");
            break;
        }
        seen.insert((p, q), period.len());
        a = floor_of(p, q);
        period.push(a);
    }
    PeriodicCF { head, period, target }
}

fn isqrt_i64(n: i64) -> i64 {
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Element `p + q*omega` for a convergent.
fn convergent_elem(d: u64, p: &BigInt, q: &BigInt) -> QNum {
    QNum::from_coords(d, p, q)
}

/// Fundamental unit `alpha_{s-1}` read off the period.
pub fn fundamental_unit_from_cf(d: u64, cf: &PeriodicCF) -> QNum {
    let s = cf.period_len();
    let conv = cf.convergents(s + 1);
    let (p, q) = &conv[s];
    let e = convergent_elem(d, p, q);
    debug_assert!({
        let n = e.norm();
        n.is_one() || n == -BigRational::one()
    });
    e
}

/// Continued fraction of `-omega'` for the context.
pub fn continued_fraction(ctx: &FieldContext) -> PeriodicCF {
    ctx.continued_fraction().clone()
}

/// The fundamental unit `epsilon > 1`.
pub fn fundamental_unit(ctx: &FieldContext) -> QNum {
    ctx.fund_unit().clone()
}

/// Provenance of an indecomposable representative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndecTag {
    /// The semiconvergent `alpha_{i,r} = alpha_i + r*alpha_{i+1}`.
    Semiconvergent { i: i64, r: i64 },
    /// Conjugate of a semiconvergent.
    Conjugate { i: i64, r: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndecEntry {
    pub value: QNum,
    pub tag: IndecTag,
}

/// Indecomposable integers modulo multiplication by squares of units.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndecSet {
    pub representatives: Vec<IndecEntry>,
}

impl IndecSet {
    pub fn values(&self) -> Vec<QNum> {
        self.representatives.iter().map(|e| e.value.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    pub fn contains_class_of(&self, ctx: &FieldContext, x: &QNum) -> bool {
        let r = ctx.reduce_mod_unit_squares(x);
        self.representatives.iter().any(|e| e.value == r)
    }
}

/// All semiconvergents `alpha_{i,r}` with odd `i` over one period of the unit-square group,
/// together with their conjugates, reduced to canonical representatives.
pub fn indecomposables(ctx: &FieldContext) -> IndecSet {
    let d = ctx.d();
    let cf = ctx.continued_fraction();
    let s = cf.period_len();
    // alpha_{i+L} = eps_plus * alpha_i; one more factor for the square group when N(eps) = 1.
    let l_plus = if s.is_multiple_of(2) { s } else { 2 * s };
    let span = if ctx.fund_unit_norm() == 1 { 2 * l_plus } else { l_plus };
    let conv = cf.convergents(span + 3);
    let alpha = |i: i64| -> QNum {
        let (p, q) = &conv[(i + 1) as usize];
        convergent_elem(d, p, q)
    };
    let mut found: BTreeMap<String, IndecEntry> = BTreeMap::new();
    let mut i = -1i64;
    while i + 2 < span as i64 {
        let a_i = alpha(i);
        let a_next = alpha(i + 1);
        let u = cf.u((i + 2) as usize);
        for r in 0..u {
            let v = &a_i + &a_next.mul_int(&BigInt::from(r));
            for (x, tag) in [
                (v.clone(), IndecTag::Semiconvergent { i, r }),
                (v.conj(), IndecTag::Conjugate { i, r }),
            ] {
                let rep = ctx.reduce_mod_unit_squares(&x);
                let key = sort_key(&rep);
                found.entry(key).or_insert(IndecEntry { value: rep, tag });
            }
        }
        i += 2;
    }
    let mut reps: Vec<IndecEntry> = found.into_values().collect();
    reps.sort_by(|a, b| {
        a.value
            .norm()
            .cmp(&b.value.norm())
            .then_with(|| a.value.trace().cmp(&b.value.trace()))
            .then_with(|| a.value.lex_cmp(&b.value))
    });
    IndecSet { representatives: reps }
}

fn sort_key(x: &QNum) -> String {
    x.to_string()
}

/// Errors raised by [`decompose_integer`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecomposeError {
    #[error("element is not integral")]
    NotIntegral,
    #[error("element is not totally positive")]
    NotTotallyPositive,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Splits `x = y + z` with `y, z` totally positive integers, if possible.
pub fn decompose_integer(ctx: &FieldContext, x: &QNum) -> Result<Option<(QNum, QNum)>, DecomposeError> {
    if !x.is_integral() {
        return Err(DecomposeError::NotIntegral);
    }
    if !x.is_totally_positive() {
        return Err(DecomposeError::NotTotallyPositive);
    }
    let zero = QNum::zero(ctx.d());
    let below = box_between(ctx, &zero, x, true)?;
    Ok(below.into_iter().next().map(|y| {
        let z = x - &y;
        (y, z)
    }))
}

/// `x` is a totally positive integer that admits no splitting into two such integers.
pub fn is_indecomposable(ctx: &FieldContext, x: &QNum) -> bool {
    matches!(decompose_integer(ctx, x), Ok(None))
}

/// Coordinates `(s1, s2)` with `x = s1 + s2*eps_plus`.
pub fn cone_coords(ctx: &FieldContext, x: &QNum) -> (BigRational, BigRational) {
    let e = ctx.eps_plus();
    let s2 = BigRational::new(x.b() * e.den(), x.den() * e.b());
    let rest = x - &e.mul_rational(&s2);
    debug_assert!(rest.is_rational());
    let s1 = BigRational::new(rest.a().clone(), rest.den().clone());
    (s1, s2)
}

/// Smallest norm bound `C` such that every totally positive `xi` with `N(xi) >= C` dominates a
/// totally positive integer.
pub fn dominance_constant(ctx: &FieldContext) -> BigRational {
    let d = ctx.d();
    let e = ctx.eps_plus();
    let one = QNum::one(d);
    let mut best = (&one + e).norm();
    let unit = BigRational::one();
    // An indecomposable with both cone coordinates in [0, 1) is the cone representative of its
    // class modulo totally positive units.
    let mut cands: Vec<QNum> = indecomposables(ctx).values().iter().map(|x| ctx.reduce_mod_tp_units(x).0).collect();
    cands.sort_by(|a, b| a.lex_cmp(b));
    cands.dedup();
    for eta in cands {
        let (s1, s2) = cone_coords(ctx, &eta);
        if s1.is_negative() || s2.is_negative() || s1 >= unit || s2 >= unit {
            continue;
        }
        let c1 = (&one + &e.mul_rational(&s2)).norm();
        let c2 = (&QNum::from_rational(d, &s1) + e).norm();
        let c = if c1 > c2 { c1 } else { c2 };
        if c < best {
            best = c;
        }
    }
    best
}
