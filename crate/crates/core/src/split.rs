// SPDX-License-Identifier: Apache-2.0

//! Exhaustive search for additive splittings `Q = Q1 + Q2`.
//!
//! Candidate ranges come from floating-point embeddings widened by a margin; every accept or
//! reject decision is an exact sign test. The inner loop runs on `i128` and falls back to
//! `BigInt` on overflow.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::enumerate::box_between;
use crate::field::{Embedding, QNum};
use crate::forms::{form_unchecked, BinaryForm, Mode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Target {
    /// Any splitting into two nonzero totally positive semi-definite forms.
    Any,
    /// A splitting whose first part has determinant zero.
    RankOne,
}

/// Returns the first part `Q1` of a splitting, or `None` when no splitting exists.
pub(crate) fn find_split(q: &BinaryForm, mode: Mode, target: Target) -> Option<BinaryForm> {
    let ctx = q.ctx();
    let d = ctx.d();
    let zero = QNum::zero(d);
    let det = q.det();
    // Q - a*x^2 is tpsd iff a <= det/eta.
    if let Ok(b) = det.div(q.eta()) {
        if let Some(a) = box_between(ctx, &zero, &b, false).ok()?.into_iter().find(|z| !z.is_zero()) {
            return Some(form_unchecked(ctx, a, zero.clone(), zero));
        }
    }
    if let Ok(b) = det.div(q.alpha()) {
        if let Some(e) = box_between(ctx, &zero, &b, false).ok()?.into_iter().find(|z| !z.is_zero()) {
            return Some(form_unchecked(ctx, zero.clone(), zero, e));
        }
    }
    match target {
        Target::Any => general(q, mode),
        Target::RankOne => rank_one(q),
    }
}

/// Arithmetic needed by the kernel.
trait KInt: Clone + Ord + Sized {
    fn from_big(b: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn add(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn is_neg(&self) -> bool;
    fn zero() -> Self;
}

impl KInt for i128 {
    fn from_big(b: &BigInt) -> Option<Self> {
        b.to_i128()
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.checked_add(*o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn is_neg(&self) -> bool {
        *self < 0
    }
    fn zero() -> Self {
        0
    }
}

impl KInt for BigInt {
    fn from_big(b: &BigInt) -> Option<Self> {
        Some(b.clone())
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn zero() -> Self {
        <BigInt as Zero>::zero()
    }
}

/// `(x + y sqrt(D)) / s` with the field-wide scale `s` (2 when `D = 1 mod 4`, else 1).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Surd<K> {
    x: K,
    y: K,
}

impl<K: KInt> Surd<K> {
    fn add(&self, o: &Self) -> Option<Self> {
        Some(Surd { x: self.x.add(&o.x)?, y: self.y.add(&o.y)? })
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(Surd { x: self.x.sub(&o.x)?, y: self.y.sub(&o.y)? })
    }
    /// Product at doubled scale.
    fn mul(&self, o: &Self, d: &K) -> Option<Self> {
        let x = self.x.mul(&o.x)?.add(&d.mul(&self.y.mul(&o.y)?)?)?;
        let y = self.x.mul(&o.y)?.add(&self.y.mul(&o.x)?)?;
        Some(Surd { x, y })
    }
    fn scale(&self, k: &K) -> Option<Self> {
        Some(Surd { x: self.x.mul(k)?, y: self.y.mul(k)? })
    }
    /// `x +- y sqrt(D) >= 0` for both signs.
    fn totally_nonneg(&self, d: &K) -> Option<bool> {
        if self.x.is_neg() {
            return Some(false);
        }
        let lhs = self.x.mul(&self.x)?;
        let rhs = d.mul(&self.y.mul(&self.y)?)?;
        Some(lhs >= rhs)
    }
}

struct Overflow;

fn scale_of(d: u64) -> i64 {
    if d % 4 == 1 {
        2
    } else {
        1
    }
}

/// Surd coordinates of an integral element.
fn surd_big(z: &QNum) -> Surd<BigInt> {
    let s = BigInt::from(scale_of(z.d()));
    let f = &s / z.den();
    Surd { x: z.a() * &f, y: z.b() * &f }
}

fn surd_k<K: KInt>(z: &Surd<BigInt>) -> Option<Surd<K>> {
    Some(Surd { x: K::from_big(&z.x)?, y: K::from_big(&z.y)? })
}

#[derive(Clone, Copy)]
struct Emb {
    s1: f64,
    s2: f64,
}

fn emb(z: &QNum) -> Emb {
    Emb { s1: z.to_f64_at(Embedding::First), s2: z.to_f64_at(Embedding::Second) }
}

struct Prepared {
    d: u64,
    /// c-bar = k * t, t integral.
    k: i64,
    alpha: Surd<BigInt>,
    eta: Surd<BigInt>,
    c: Surd<BigInt>,
    c_emb: Emb,
    a_list: Vec<(Surd<BigInt>, Emb, Emb)>,
    e_list: Vec<(Surd<BigInt>, Emb, Emb)>,
    omega: Surd<BigInt>,
    omega_emb: Emb,
}

fn slack(x: f64) -> f64 {
    1e-9 * (1.0 + x.abs())
}

fn general(q: &BinaryForm, mode: Mode) -> Option<BinaryForm> {
    general_hits(q, mode, 1).into_iter().next()
}

/// Splittings `Q = Q1 + Q2` into two totally positive definite parts valid in `mode`, one per
/// unordered pair. `None` when there are more than `cap`.
pub(crate) fn definite_splits(q: &BinaryForm, mode: Mode, cap: usize) -> Option<Vec<BinaryForm>> {
    let hits = general_hits(q, mode, usize::MAX);
    let out: Vec<BinaryForm> = hits.into_iter().filter(|p| p.is_tpd() && q.checked_sub(p).is_tpd()).collect();
    (out.len() <= cap).then_some(out)
}

/// First parts of up to `max_hits` semi-definite splittings found by the kernel.
fn general_hits(q: &BinaryForm, mode: Mode, max_hits: usize) -> Vec<BinaryForm> {
    let ctx = q.ctx();
    let d = ctx.d();
    let zero = QNum::zero(d);
    let (Ok(a_box), Ok(e_box)) = (box_between(ctx, &zero, q.alpha(), true), box_between(ctx, &zero, q.eta(), true)) else {
        return Vec::new();
    };
    if a_box.is_empty() || e_box.is_empty() {
        return Vec::new();
    }
    let with_rest = |v: &[QNum], total: &QNum| -> Vec<(Surd<BigInt>, Emb, Emb)> {
        v.iter().map(|z| (surd_big(z), emb(z), emb(&(total - z)))).collect()
    };
    let prep = Prepared {
        d,
        k: if mode == Mode::Classical { 2 } else { 1 },
        alpha: surd_big(q.alpha()),
        eta: surd_big(q.eta()),
        c: surd_big(q.c()),
        c_emb: emb(q.c()),
        a_list: with_rest(&a_box, q.alpha()),
        e_list: with_rest(&e_box, q.eta()),
        omega: surd_big(ctx.omega()),
        omega_emb: emb(ctx.omega()),
    };
    let hits = match general_kernel::<i128>(&prep, max_hits) {
        Ok(h) => h,
        Err(Overflow) => general_kernel::<BigInt>(&prep, max_hits).unwrap_or_else(|_| unreachable!("BigInt kernel cannot overflow")),
    };
    let s = scale_of(d);
    hits.into_iter()
        .map(|(i, j, cb)| {
            let cbar = QNum::new(d, cb.x, cb.y, BigInt::from(s));
            form_unchecked(ctx, a_box[i].clone(), cbar, e_box[j].clone())
        })
        .collect()
}

/// Integer range `[lo, hi]` covering the real interval `[a, b]` with a safety margin.
fn int_range(a: f64, b: f64) -> Option<(i64, i64)> {
    let lo = (a - slack(a)).floor() - 1.0;
    let hi = (b + slack(b)).ceil() + 1.0;
    assert!(
        lo.is_finite() && hi.is_finite() && lo.abs() < 9.0e15 && hi.abs() < 9.0e15,
        "coefficient magnitude outside the supported range"
    );
    if lo > hi {
        return None;
    }
    Some((lo as i64, hi as i64))
}

fn general_kernel<K: KInt>(p: &Prepared, max_hits: usize) -> Result<Vec<(usize, usize, Surd<BigInt>)>, Overflow> {
    let mut hits = Vec::new();
    let conv = |z: &Surd<BigInt>| surd_k::<K>(z).ok_or(Overflow);
    let dk = K::from_big(&BigInt::from(p.d)).ok_or(Overflow)?;
    let four = K::from_big(&BigInt::from(4)).ok_or(Overflow)?;
    let kk = K::from_big(&BigInt::from(p.k)).ok_or(Overflow)?;
    let s = scale_of(p.d);
    let sk = K::from_big(&BigInt::from(s)).ok_or(Overflow)?;
    let alpha = conv(&p.alpha)?;
    let eta = conv(&p.eta)?;
    let c = conv(&p.c)?;
    let omega = conv(&p.omega)?;
    let a_list: Vec<Surd<K>> = p.a_list.iter().map(|t| conv(&t.0)).collect::<Result<_, _>>()?;
    let e_list: Vec<Surd<K>> = p.e_list.iter().map(|t| conv(&t.0)).collect::<Result<_, _>>()?;
    let a_rest: Vec<Surd<K>> = a_list.iter().map(|a| alpha.sub(a).ok_or(Overflow)).collect::<Result<_, _>>()?;
    let e_rest: Vec<Surd<K>> = e_list.iter().map(|e| eta.sub(e).ok_or(Overflow)).collect::<Result<_, _>>()?;
    let w = p.omega_emb.s1 - p.omega_emb.s2;
    let kf = p.k as f64;
    let (c1, c2) = (p.c_emb.s1, p.c_emb.s2);

    for (i, ab) in a_list.iter().enumerate() {
        let ra = &a_rest[i];
        let (ae, rae) = (p.a_list[i].1, p.a_list[i].2);
        let a_cmp = ab.cmp(ra);
        if a_cmp == std::cmp::Ordering::Greater {
            continue;
        }
        for (j, eb) in e_list.iter().enumerate() {
            let re = &e_rest[j];
            if a_cmp == std::cmp::Ordering::Equal && eb > re {
                continue;
            }
            let (ee, ree) = (p.e_list[j].1, p.e_list[j].2);
            let r1 = 2.0 * (ae.s1 * ee.s1).sqrt();
            let r2 = 2.0 * (ae.s2 * ee.s2).sqrt();
            let big_r1 = 2.0 * (rae.s1 * ree.s1).sqrt();
            let big_r2 = 2.0 * (rae.s2 * ree.s2).sqrt();
            if c1.abs() > r1 + big_r1 + slack(r1 + big_r1 + c1) || c2.abs() > r2 + big_r2 + slack(r2 + big_r2 + c2) {
                continue;
            }
            let l1 = (-r1).max(c1 - big_r1) / kf;
            let u1 = r1.min(c1 + big_r1) / kf;
            let l2 = (-r2).max(c2 - big_r2) / kf;
            let u2 = r2.min(c2 + big_r2) / kf;
            let Some((q_lo, q_hi)) = int_range((l1 - u2) / w, (u1 - l2) / w) else { continue };
            let mut prods: Option<(Surd<K>, Surd<K>)> = None;
            for qv in q_lo..=q_hi {
                let qf = qv as f64;
                let p_lo_f = (l1 - qf * p.omega_emb.s1).max(l2 - qf * p.omega_emb.s2);
                let p_hi_f = (u1 - qf * p.omega_emb.s1).min(u2 - qf * p.omega_emb.s2);
                let Some((p_lo, p_hi)) = int_range(p_lo_f, p_hi_f) else { continue };
                let qk = K::from_big(&BigInt::from(qv)).ok_or(Overflow)?;
                for pv in p_lo..=p_hi {
                    if prods.is_none() {
                        let p1 = ab.mul(eb, &dk).and_then(|t| t.scale(&four)).ok_or(Overflow)?;
                        let p2 = ra.mul(re, &dk).and_then(|t| t.scale(&four)).ok_or(Overflow)?;
                        prods = Some((p1, p2));
                    }
                    let (p1, p2) = prods.as_ref().expect("set above");
                    let pk = K::from_big(&BigInt::from(pv)).ok_or(Overflow)?;
                    // t = p + q*omega in surd coordinates, c-bar = k*t.
                    let t = Surd { x: pk.mul(&sk).ok_or(Overflow)?, y: K::zero() }
                        .add(&omega.scale(&qk).ok_or(Overflow)?)
                        .ok_or(Overflow)?;
                    let cb = t.scale(&kk).ok_or(Overflow)?;
                    let d1 = p1.sub(&cb.mul(&cb, &dk).ok_or(Overflow)?).ok_or(Overflow)?;
                    if !d1.totally_nonneg(&dk).ok_or(Overflow)? {
                        continue;
                    }
                    let rc = c.sub(&cb).ok_or(Overflow)?;
                    let d2 = p2.sub(&rc.mul(&rc, &dk).ok_or(Overflow)?).ok_or(Overflow)?;
                    if !d2.totally_nonneg(&dk).ok_or(Overflow)? {
                        continue;
                    }
                    hits.push((i, j, Surd { x: cb.x.to_big(), y: cb.y.to_big() }));
                    if hits.len() >= max_hits {
                        return Ok(hits);
                    }
                }
            }
        }
    }
    Ok(hits)
}

/// Splittings `Q = (a, 2s, s^2/a) + rest` with `0 < a < alpha`, `0 < s^2/a < eta`.
fn rank_one(q: &BinaryForm) -> Option<BinaryForm> {
    let ctx = q.ctx();
    let d = ctx.d();
    let zero = QNum::zero(d);
    let a_box = box_between(ctx, &zero, q.alpha(), true).ok()?;
    let omega_emb = emb(ctx.omega());
    let w = omega_emb.s1 - omega_emb.s2;
    let ce = emb(q.c());
    let ee = emb(q.eta());
    for ab in &a_box {
        let ae = emb(ab);
        let rest_a = q.alpha() - ab;
        let rae = emb(&rest_a);
        let r1 = (ae.s1 * ee.s1).sqrt();
        let r2 = (ae.s2 * ee.s2).sqrt();
        let big1 = 2.0 * (rae.s1 * ee.s1).sqrt();
        let big2 = 2.0 * (rae.s2 * ee.s2).sqrt();
        let l1 = (-r1).max((ce.s1 - big1) / 2.0);
        let u1 = r1.min((ce.s1 + big1) / 2.0);
        let l2 = (-r2).max((ce.s2 - big2) / 2.0);
        let u2 = r2.min((ce.s2 + big2) / 2.0);
        let Some((q_lo, q_hi)) = int_range((l1 - u2) / w, (u1 - l2) / w) else { continue };
        for qv in q_lo..=q_hi {
            let qf = qv as f64;
            let p_lo_f = (l1 - qf * omega_emb.s1).max(l2 - qf * omega_emb.s2);
            let p_hi_f = (u1 - qf * omega_emb.s1).min(u2 - qf * omega_emb.s2);
            let Some((p_lo, p_hi)) = int_range(p_lo_f, p_hi_f) else { continue };
            for pv in p_lo..=p_hi {
                let s = QNum::from_coords_i64(d, pv, qv);
                if s.is_zero() {
                    continue;
                }
                let Ok(eb) = s.square().div(ab) else { continue };
                if !eb.is_integral() || !eb.is_totally_positive() || !q.eta().strictly_dominates(&eb) {
                    continue;
                }
                let two_s = s.mul_int(&BigInt::from(2));
                let part = form_unchecked(ctx, ab.clone(), two_s, eb);
                if q.checked_sub(&part).is_tpsd() {
                    return Some(part);
                }
            }
        }
    }
    None
}
