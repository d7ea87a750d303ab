// SPDX-License-Identifier: Apache-2.0

//! Explicit families of indecomposable forms: the `D = m^2 + 1` family, the fixed-determinant
//! construction, and the existence forms for every `D`.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::equiv;
use crate::field::{is_square_free, FieldContext, FieldError, QNum};
use crate::forms::{inde_from_inde_check, BinaryForm, FormError};

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("m = {0} must be odd and positive")]
    NotOdd(i64),
    #[error("m^2 + 1 = {0} is not square-free")]
    NotSquareFree(i64),
    #[error("no construction with s <= {max_s} yields {n} forms")]
    BudgetExceeded { n: usize, max_s: usize },
    #[error("certification failed: {0}")]
    Certification(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// `alpha_i x^2 + 2k xy + alpha_i' y^2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyMember {
    pub i: i64,
    pub k: i64,
    pub alpha: QNum,
    pub c: QNum,
    pub eta: QNum,
    pub det: QNum,
}

impl FamilyMember {
    pub fn form(&self, ctx: &FieldContext) -> BinaryForm {
        BinaryForm::new(ctx, self.alpha.clone(), self.c.clone(), self.eta.clone()).expect("integral family form")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyReport {
    pub m: i64,
    pub d: i64,
    pub lower_bound: i64,
    pub members: Vec<FamilyMember>,
}

/// `alpha_i = m i + 1 + i sqrt(m^2 + 1)`.
pub fn alpha_i(ctx: &FieldContext, m: i64, i: i64) -> QNum {
    ctx.elem(m * i + 1, i, 1)
}

fn check_m(m: i64) -> Result<FieldContext, FamilyError> {
    if m <= 0 || m % 2 == 0 {
        return Err(FamilyError::NotOdd(m));
    }
    let d = m * m + 1;
    if !is_square_free(d as u64) {
        return Err(FamilyError::NotSquareFree(d));
    }
    Ok(FieldContext::new(d)?)
}

fn member(ctx: &FieldContext, m: i64, i: i64, k: i64) -> FamilyMember {
    let alpha = alpha_i(ctx, m, i);
    let eta = alpha.conj();
    let c = ctx.int(2 * k);
    let det = ctx.int(i * (2 * m - i) + 1 - k * k);
    FamilyMember { i, k, alpha, c, eta, det }
}

/// Certifies indecomposability of every member and pairwise inequivalence: distinct `i` by the
/// sum-of-squares obstruction, equal `i` by the rational determinant.
fn certify(ctx: &FieldContext, members: &[FamilyMember]) -> Result<(), FamilyError> {
    let forms: Vec<BinaryForm> = members.iter().map(|x| x.form(ctx)).collect();
    for (x, f) in members.iter().zip(&forms) {
        if !f.is_tpd() || !inde_from_inde_check(f) {
            return Err(FamilyError::Certification(format!("i={} k={}", x.i, x.k)));
        }
    }
    let mut separated: HashMap<(i64, i64), bool> = HashMap::new();
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            let (x, y) = (&members[a], &members[b]);
            let ok = if x.i == y.i {
                x.det != y.det
            } else {
                let key = (x.i.min(y.i), x.i.max(y.i));
                *separated
                    .entry(key)
                    .or_insert_with(|| equiv::sum_of_squares_obstruction(&forms[a], &forms[b]))
            };
            if !ok {
                return Err(FamilyError::Certification(format!(
                    "(i={}, k={}) vs (i={}, k={})",
                    x.i, x.k, y.i, y.k
                )));
            }
        }
    }
    Ok(())
}

/// Pairwise inequivalent indecomposable forms over `Q(sqrt(m^2 + 1))`, `m` odd:
/// `alpha_i x^2 + 2k xy + alpha_i' y^2` for `1 <= i <= m`, `0 < k^2 < N(alpha_i)`.
pub fn family_m2p1(m: i64) -> Result<FamilyReport, FamilyError> {
    let ctx = check_m(m)?;
    let mut members = Vec::new();
    for i in 1..=m {
        let n = i * (2 * m - i) + 1;
        let mut k = 1;
        while k * k < n {
            members.push(member(&ctx, m, i, k));
            k += 1;
        }
    }
    certify(&ctx, &members)?;
    Ok(FamilyReport { m, d: ctx.d() as i64, lower_bound: m * (m + 1) / 2, members })
}

/// Output of [`fixed_det_demo`].
#[derive(Clone, Debug, Serialize)]
pub struct FixedDetReport {
    pub s: usize,
    pub primes: Vec<i64>,
    pub m: i64,
    pub d: i64,
    /// Common determinant of all members.
    pub det: i64,
    /// Pairs `(j, k)` with `j^2 + k^2 = m^2 + 1 - det`, `0 < j < m`, `k > 0`.
    pub pairs: Vec<(i64, i64)>,
    /// Representations of `m^2 + 1 - det` as an ordered sum of two positive squares.
    pub two_square_count: usize,
    pub members: Vec<FamilyMember>,
}

/// Largest `s` tried by [`fixed_det_demo`].
pub const FIXED_DET_MAX_S: usize = 1;

fn primes_1_mod_4(s: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity(s);
    let mut p = 5;
    while out.len() < s {
        if p % 4 == 1 && (2..).take_while(|q| q * q <= p).all(|q| p % q != 0) {
            out.push(p);
        }
        p += 2;
    }
    out
}

/// At least `n` pairwise inequivalent indecomposable forms sharing one determinant `d`, from
/// `m = 3 * p_1 * ... * p_s` and `d = (p_1 * ... * p_s)^2 + 1` with `p_i` the primes `= 1 mod 4`.
pub fn fixed_det_demo(n: usize) -> Result<FixedDetReport, FamilyError> {
    fixed_det_demo_with_budget(n, FIXED_DET_MAX_S)
}

pub fn fixed_det_demo_with_budget(n: usize, max_s: usize) -> Result<FixedDetReport, FamilyError> {
    for s in 1..=max_s {
        let primes = primes_1_mod_4(s);
        let prod: i64 = primes.iter().product();
        let m = 3 * prod;
        let d_field = m * m + 1;
        if !is_square_free(d_field as u64) {
            continue;
        }
        let det = prod * prod + 1;
        let target = d_field - det;
        let two_square_count = (1..)
            .take_while(|j| j * j < target)
            .filter(|j| is_square(target - j * j))
            .count();
        let pairs: Vec<(i64, i64)> = (1..m)
            .filter_map(|j| {
                let r = target - j * j;
                (r > 0 && is_square(r)).then(|| (j, isqrt(r)))
            })
            .collect();
        if pairs.len() < n {
            continue;
        }
        let ctx = FieldContext::new(d_field)?;
        let members: Vec<FamilyMember> = pairs.iter().map(|&(j, k)| member(&ctx, m, m - j, k)).collect();
        debug_assert!(members.iter().all(|x| x.det == ctx.int(det)));
        certify(&ctx, &members)?;
        return Ok(FixedDetReport { s, primes, m, d: d_field, det, pairs, two_square_count, members });
    }
    Err(FamilyError::BudgetExceeded { n, max_s })
}

fn isqrt(n: i64) -> i64 {
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn is_square(n: i64) -> bool {
    n >= 0 && isqrt(n).pow(2) == n
}

/// A classical indecomposable form of nonzero determinant over `Q(sqrt(D))`, with a label.
/// Absent for `D = 1 mod 4` with `D < 17` other than 5 and 13.
pub fn classical_existence_form(ctx: &FieldContext) -> Option<(&'static str, BinaryForm)> {
    let d = ctx.d() as i64;
    let f = |a: QNum, c: QNum, e: QNum| BinaryForm::new(ctx, a, c, e).expect("integral existence form");
    let form = match d {
        5 => ("D=5", f(ctx.int(2), ctx.int(2), ctx.elem(3, 1, 1))),
        13 => ("D=13", f(ctx.int(2), ctx.elem(1, 1, 1), ctx.int(3))),
        17 => ("D=17", f(ctx.elem(5, 1, 2), ctx.int(2), ctx.elem(5, -1, 2))),
        _ if d % 4 == 3 => ("D=3 mod 4", f(ctx.int(2), ctx.elem(0, 2, 1), ctx.int((d + 1) / 2))),
        _ if d % 4 == 2 => ("D=2 mod 4", f(ctx.int(2), ctx.elem(2, 2, 1), ctx.elem(d / 2 + 1, 1, 1))),
        _ if d > 17 && d % 12 == 5 => ("D=5 mod 12", f(ctx.int(3), ctx.elem(6, 2, 1), ctx.elem((d + 10) / 3, 2, 1))),
        _ if d > 17 && d % 12 == 1 => ("D=1 mod 12", f(ctx.int(3), ctx.elem(6, 2, 1), ctx.elem((d + 11) / 3, 2, 1))),
        _ if d > 17 && d % 12 == 9 => ("D=9 mod 12", f(ctx.int(4), ctx.elem(4, 2, 1), ctx.elem((d + 7) / 4, 1, 1))),
        _ => return None,
    };
    Some(form)
}

/// `x^2 + xy + y^2` and `x^2 + sqrt(D) xy + ((D + i)/4) y^2`, both non-classical indecomposable.
pub fn nonclassical_existence_forms(ctx: &FieldContext) -> Vec<(&'static str, BinaryForm)> {
    let d = ctx.d() as i64;
    let i = match d % 4 {
        2 => 2,
        3 => 1,
        _ => 3,
    };
    let one = ctx.int(1);
    vec![
        ("x^2+xy+y^2", BinaryForm::new(ctx, one.clone(), one.clone(), one.clone()).expect("integral")),
        (
            "x^2+sqrt(D)xy+((D+i)/4)y^2",
            BinaryForm::new(ctx, one, ctx.elem(0, 1, 1), ctx.int((d + i) / 4)).expect("integral"),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{is_additively_indecomposable, Mode};

    #[test]
    fn family_m3_has_enough_members() {
        let r = family_m2p1(3).unwrap();
        assert_eq!(r.d, 10);
        assert!(r.members.len() as i64 >= r.lower_bound);
        let ctx = FieldContext::new(10).unwrap();
        for x in r.members.iter().filter(|x| x.i <= 3) {
            assert!(is_additively_indecomposable(&x.form(&ctx), Mode::Classical).unwrap().indecomposable);
        }
    }

    #[test]
    fn family_m1_is_degenerate() {
        let r = family_m2p1(1).unwrap();
        assert_eq!(r.d, 2);
        assert_eq!(r.members.len(), 1);
        assert_eq!(r.members[0].alpha, FieldContext::new(2).unwrap().elem(2, 1, 1));
    }

    #[test]
    fn family_rejects_bad_m() {
        assert!(matches!(family_m2p1(4), Err(FamilyError::NotOdd(4))));
        assert!(matches!(family_m2p1(7), Err(FamilyError::NotSquareFree(50))));
    }

    #[test]
    fn fixed_det_first_step() {
        let r = fixed_det_demo(3).unwrap();
        assert_eq!((r.s, r.m, r.d, r.det), (1, 15, 226, 26));
        assert_eq!(r.pairs, vec![(2, 14), (10, 10), (14, 2)]);
        assert_eq!(r.members.len(), 3);
        let r = fixed_det_demo(1).unwrap();
        assert!(!r.members.is_empty());
        assert!(matches!(fixed_det_demo(4), Err(FamilyError::BudgetExceeded { n: 4, max_s: 1 })));
    }

    #[test]
    fn family_m5_meets_lower_bound() {
        let r = family_m2p1(5).unwrap();
        assert_eq!(r.d, 26);
        assert!(r.members.len() >= 15);
    }

    #[test]
    fn existence_forms_small() {
        for d in [2, 3, 5, 6, 7, 10, 13, 17, 21, 29, 33, 37] {
            let ctx = FieldContext::new(d).unwrap();
            let (_, q) = classical_existence_form(&ctx).unwrap();
            assert!(q.classical());
            assert!(is_additively_indecomposable(&q, Mode::Classical).unwrap().indecomposable, "D={d}");
            for (_, q) in nonclassical_existence_forms(&ctx) {
                assert!(is_additively_indecomposable(&q, Mode::Nonclassical).unwrap().indecomposable, "D={d}");
            }
        }
    }
}
