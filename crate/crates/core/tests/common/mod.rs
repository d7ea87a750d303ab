// SPDX-License-Identifier: Apache-2.0

//! Brute-force oracles sharing no search code with the engine: plain coefficient sweeps with
//! floating-point ranges widened by a margin and every decision taken exactly.

#![allow(dead_code)]

use indecomp::classify::{self, ClassifyOptions};
use indecomp::{are_equivalent, BinaryForm, Embedding, FieldContext, Mode, QNum};
use num_rational::BigRational;
use num_traits::One;

pub fn ctx(d: i64) -> FieldContext {
    FieldContext::new(d).unwrap()
}

pub fn is_square_free(n: i64) -> bool {
    (2..).take_while(|p| p * p <= n).all(|p| n % (p * p) != 0)
}

pub fn square_free_up_to(n: i64) -> Vec<i64> {
    (2..=n).filter(|&d| is_square_free(d)).collect()
}

fn emb(x: &QNum) -> [f64; 2] {
    [x.to_f64_at(Embedding::First), x.to_f64_at(Embedding::Second)]
}

/// Every integer `p + q*omega` whose embeddings lie in `[lo_i - 1, hi_i + 1]`, plus possibly a few
/// outside; callers filter exactly.
pub fn scan(ctx: &FieldContext, lo: [f64; 2], hi: [f64; 2]) -> Vec<QNum> {
    let d = ctx.d();
    let [w1, w2] = emb(ctx.omega());
    let w = w1 - w2;
    let q_lo = ((lo[0] - hi[1]) / w).floor() as i64 - 1;
    let q_hi = ((hi[0] - lo[1]) / w).ceil() as i64 + 1;
    let mut out = Vec::new();
    for q in q_lo..=q_hi {
        let qf = q as f64;
        let p_lo = (lo[0] - qf * w1).max(lo[1] - qf * w2).floor() as i64 - 1;
        let p_hi = (hi[0] - qf * w1).min(hi[1] - qf * w2).ceil() as i64 + 1;
        for p in p_lo..=p_hi {
            out.push(QNum::from_coords_i64(d, p, q));
        }
    }
    out
}

/// Totally positive integers `x` with `N(x) <= n` and both embeddings at most `top`, covered by
/// dyadic boxes under the hyperbola.
pub fn under_hyperbola(ctx: &FieldContext, n: f64, top: f64) -> Vec<QNum> {
    let nb = BigRational::from_integer((n.floor() as i64).into());
    let mut out: Vec<QNum> = Vec::new();
    let mut keep = |v: Vec<QNum>| {
        out.extend(v.into_iter().filter(|x| x.is_totally_positive() && x.norm() <= nb));
    };
    let mut a = n / top;
    keep(scan(ctx, [0.0, 0.0], [a, top]));
    while a < top {
        keep(scan(ctx, [a, 0.0], [2.0 * a, n / a]));
        a *= 2.0;
    }
    out.sort_by(|x, y| x.lex_cmp(y));
    out.dedup();
    out
}

/// Integers `y` with `0 <= y <= x` in both embeddings.
pub fn below(ctx: &FieldContext, x: &QNum) -> Vec<QNum> {
    let [a, b] = emb(x);
    scan(ctx, [0.0, 0.0], [a, b])
        .into_iter()
        .filter(|y| y.is_totally_nonnegative() && (x - y).is_totally_nonnegative())
        .collect()
}

/// `x = y + z` with `y, z` totally positive integers.
pub fn int_decomposable(ctx: &FieldContext, x: &QNum) -> bool {
    below(ctx, x).iter().any(|y| y.is_totally_positive() && (x - y).is_totally_positive())
}

fn psd(a: &QNum, c: &QNum, e: &QNum) -> bool {
    let four = num_bigint::BigInt::from(4);
    a.is_totally_nonnegative() && e.is_totally_nonnegative() && (&(a * e).mul_int(&four) - &c.square()).is_totally_nonnegative()
}

/// `Q = Q1 + Q2` with both parts nonzero, totally positive semi-definite and valid in `mode`.
pub fn form_decomposable(q: &BinaryForm, mode: Mode) -> bool {
    let ctx = q.ctx().clone();
    let (a, c, e) = (q.alpha().clone(), q.c().clone(), q.eta().clone());
    let two = num_bigint::BigInt::from(2);
    let a1s = below(&ctx, &a);
    let e1s = below(&ctx, &e);
    for a1 in &a1s {
        let a2 = &a - a1;
        for e1 in &e1s {
            let e2 = &e - e1;
            let [x1, x2] = emb(a1);
            let [y1, y2] = emb(e1);
            // |sigma_i(c1)| <= 2 sqrt(sigma_i(a1) sigma_i(e1))
            let r = [2.0 * (x1 * y1).max(0.0).sqrt(), 2.0 * (x2 * y2).max(0.0).sqrt()];
            let c1s: Vec<QNum> = match mode {
                Mode::Classical => scan(&ctx, [-r[0] / 2.0, -r[1] / 2.0], [r[0] / 2.0, r[1] / 2.0])
                    .into_iter()
                    .map(|b| b.mul_int(&two))
                    .collect(),
                Mode::Nonclassical => scan(&ctx, [-r[0], -r[1]], r),
            };
            for c1 in c1s {
                let c2 = &c - &c1;
                let zero1 = a1.is_zero() && e1.is_zero() && c1.is_zero();
                let zero2 = a2.is_zero() && e2.is_zero() && c2.is_zero();
                if zero1 || zero2 {
                    continue;
                }
                if psd(a1, &c1, e1) && psd(&a2, &c2, &e2) {
                    return true;
                }
            }
        }
    }
    false
}

/// Totally positive integers with trace at most `t`.
pub fn tp_up_to_trace(ctx: &FieldContext, t: i64) -> Vec<QNum> {
    let tf = t as f64;
    let tr = BigRational::from_integer(t.into());
    scan(ctx, [0.0, 0.0], [tf, tf]).into_iter().filter(|x| x.is_totally_positive() && x.trace() <= tr).collect()
}

/// Indecomposable classes with `N(det) <= bound` among forms with `tr(alpha), tr(eta) <= t`,
/// grouped by `are_equivalent`.
pub fn brute_classes(ctx: &FieldContext, mode: Mode, bound: i64, t: i64) -> Vec<BinaryForm> {
    let pos = tp_up_to_trace(ctx, t);
    let b = BigRational::from_integer(bound.into());
    let two = num_bigint::BigInt::from(2);
    let four = BigRational::from_integer(4.into());
    let mut classes: Vec<BinaryForm> = Vec::new();
    for a in &pos {
        for e in &pos {
            if a.norm() > e.norm() {
                continue;
            }
            let [x1, x2] = emb(a);
            let [y1, y2] = emb(e);
            let r = [2.0 * (x1 * y1).sqrt(), 2.0 * (x2 * y2).sqrt()];
            let cs: Vec<QNum> = match mode {
                Mode::Classical => scan(ctx, [-r[0] / 2.0, -r[1] / 2.0], [r[0] / 2.0, r[1] / 2.0])
                    .into_iter()
                    .map(|x| x.mul_int(&two))
                    .collect(),
                Mode::Nonclassical => scan(ctx, [-r[0], -r[1]], r),
            };
            for c in cs {
                // (x, y) -> (x, -y) pairs c with -c
                if c.lex_cmp(&-&c) == std::cmp::Ordering::Less {
                    continue;
                }
                let det = &(a * e) - &c.square().mul_rational(&four.recip());
                if !det.is_totally_positive() || det.norm() > b {
                    continue;
                }
                let q = BinaryForm::new(ctx, a.clone(), c, e.clone()).unwrap();
                if form_decomposable(&q, mode) {
                    continue;
                }
                if !classes.iter().any(|h| are_equivalent(h, &q).unwrap().is_some()) {
                    classes.push(q);
                }
            }
        }
    }
    classes
}

/// Engine classes with `N(det) <= bound`.
pub fn engine_classes(ctx: &FieldContext, mode: Mode, bound: i64) -> Vec<BinaryForm> {
    let opts = ClassifyOptions { det_bound: Some(BigRational::from_integer(bound.into())), ..ClassifyOptions::default() };
    let r = classify::classify(ctx, mode, &opts).unwrap();
    assert!(!r.partial);
    r.forms(ctx)
}

/// Both directions of class agreement; `Err` describes the first discrepancy.
pub fn compare_classes(engine: &[BinaryForm], brute: &[BinaryForm]) -> Result<(), String> {
    for q in brute {
        if !engine.iter().any(|h| are_equivalent(h, q).unwrap().is_some()) {
            return Err(format!("brute force found {q}, missing from the engine"));
        }
    }
    for q in engine {
        if !brute.iter().any(|h| are_equivalent(h, q).unwrap().is_some()) {
            return Err(format!("engine class {q} not met by the sweep"));
        }
    }
    Ok(())
}

pub fn one() -> BigRational {
    BigRational::one()
}
