// SPDX-License-Identifier: Apache-2.0

//! Equivalence of binary forms under `GL_2(O_K)`.

use num_rational::BigRational;
use serde::Serialize;

use crate::enumerate::{vectors_by_trace, TraceMode};
use crate::field::QNum;
use crate::forms::{sum_of_squares, BinaryForm, FormError};

/// Rows `v1`, `v2` with `H(x, y) = Q(x*v1 + y*v2)` and `det(v1 | v2)` a unit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnimodularWitness {
    pub v1: (QNum, QNum),
    pub v2: (QNum, QNum),
}

impl UnimodularWitness {
    pub fn det(&self) -> QNum {
        &(&self.v1.0 * &self.v2.1) - &(&self.v1.1 * &self.v2.0)
    }

    pub fn verify(&self, q: &BinaryForm, h: &BinaryForm) -> bool {
        q.ctx().is_unit(&self.det())
            && q.transform((&self.v1.0, &self.v1.1), (&self.v2.0, &self.v2.1)) == *h
    }
}

/// Decides whether `h` is equivalent to `q`, returning a transition matrix when it is.
pub fn are_equivalent(q: &BinaryForm, h: &BinaryForm) -> Result<Option<UnimodularWitness>, FormError> {
    if q.ctx() != h.ctx() {
        return Err(FormError::ModeMismatch);
    }
    if !q.is_tpd() || !h.is_tpd() {
        return Err(FormError::NotDefinite);
    }
    let (mq, _) = q.min_norm()?;
    let (mh, _) = h.min_norm()?;
    Ok(equivalent_with_minima(q, h, &mq, &mh))
}

/// [`are_equivalent`] with both minima already known.
pub(crate) fn equivalent_with_minima(
    q: &BinaryForm,
    h: &BinaryForm,
    mq: &BigRational,
    mh: &BigRational,
) -> Option<UnimodularWitness> {
    if q.classical() != h.classical() || mq != mh {
        return None;
    }
    let ratio = h.det().div(&q.det()).ok()?;
    let u0 = ratio.sqrt_exact()?;
    if !q.ctx().is_unit(&u0) {
        return None;
    }
    if sum_of_squares_obstruction(q, h) {
        return None;
    }
    search(q, h, &u0)
}

/// `alpha x^2 + 2b xy + alpha' y^2` with `b` a rational integer.
fn conjugate_shape(q: &BinaryForm) -> bool {
    *q.eta() == q.alpha().conj() && q.c().is_rational() && q.classical()
}

/// Two forms of conjugate shape with diagonals `alpha`, `beta` are inequivalent unless both
/// `alpha*beta` and `alpha'*beta` are sums of squares.
pub(crate) fn sum_of_squares_obstruction(q: &BinaryForm, h: &BinaryForm) -> bool {
    if !conjugate_shape(q) || !conjugate_shape(h) {
        return false;
    }
    let ctx = q.ctx();
    let a = q.alpha();
    let b = h.alpha();
    sum_of_squares(ctx, &(a * b)).is_none() || sum_of_squares(ctx, &(&a.conj() * b)).is_none()
}

fn search(q: &BinaryForm, h: &BinaryForm, u0: &QNum) -> Option<UnimodularWitness> {
    let alpha_h = h.alpha();
    let half_ch = h.half_c();
    let half_c = q.half_c();
    let firsts = vectors_by_trace(q, &alpha_h.trace(), TraceMode::Exactly).ok()?;
    for (x1, y1) in firsts {
        if q.eval(&x1, &y1) != *alpha_h {
            continue;
        }
        // v2 = (e, f) solves  -y1 e + x1 f = u  and  B(v1, v2) = c_H / 2;
        // the system determinant is -Q(v1) = -alpha_H.
        let a11 = -&y1;
        let a12 = x1.clone();
        let a21 = &(q.alpha() * &x1) + &(&half_c * &y1);
        let a22 = &(&half_c * &x1) + &(q.eta() * &y1);
        let det = -alpha_h;
        for u in [u0.clone(), -u0] {
            let e = (&(&u * &a22) - &(&a12 * &half_ch)).div(&det).ok()?;
            let f = (&(&a11 * &half_ch) - &(&u * &a21)).div(&det).ok()?;
            if !e.is_integral() || !f.is_integral() {
                continue;
            }
            if q.eval(&e, &f) != *h.eta() {
                continue;
            }
            let w = UnimodularWitness { v1: (x1.clone(), y1.clone()), v2: (e, f) };
            debug_assert!(w.verify(q, h));
            return Some(w);
        }
    }
    None
}

/// Equivalence classes of `forms` by greedy leader election in the given order. Returns, for each
/// input, the index of its leader.
pub(crate) fn leaders(forms: &[(BinaryForm, BigRational)]) -> Vec<usize> {
    let mut out = Vec::with_capacity(forms.len());
    let mut heads: Vec<usize> = Vec::new();
    for (i, (f, m)) in forms.iter().enumerate() {
        let found = heads.iter().copied().find(|&j| {
            let (g, mg) = &forms[j];
            equivalent_with_minima(g, f, mg, m).is_some()
        });
        match found {
            Some(j) => out.push(j),
            None => {
                heads.push(i);
                out.push(i);
            }
        }
    }
    out
}
