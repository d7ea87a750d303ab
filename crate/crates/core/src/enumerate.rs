// SPDX-License-Identifier: Apache-2.0

//! Exact enumeration: integers in boxes, norm-bounded representatives, and Fincke-Pohst
//! enumeration of the trace form.

use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::field::{Embedding, FieldContext, FieldError, QNum};
use crate::forms::{BinaryForm, FormError};

fn ratio_int(n: &BigInt) -> BigRational {
    BigRational::from_integer(n.clone())
}

/// Integers `z` with `lo < z < hi` (strict) or `lo <= z <= hi` in both embeddings.
/// Ordered by coordinates `(q, p)` where `z = p + q*omega`.
pub fn box_between(ctx: &FieldContext, lo: &QNum, hi: &QNum, strict: bool) -> Result<Vec<QNum>, FieldError> {
    let mut out = Vec::new();
    box_visit(ctx, lo, hi, strict, |z| {
        out.push(z);
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Visits the integers of [`box_between`] in the same order until `f` breaks. Returns whether it
/// broke.
pub fn box_visit<F>(ctx: &FieldContext, lo: &QNum, hi: &QNum, strict: bool, mut f: F) -> Result<bool, FieldError>
where
    F: FnMut(QNum) -> ControlFlow<()>,
{
    if lo.d() != ctx.d() || hi.d() != ctx.d() {
        return Err(FieldError::MixedFields(lo.d(), hi.d()));
    }
    let d = ctx.d();
    let omega = ctx.omega();
    // sigma1(z) - sigma2(z) = q * w with w = omega - omega'.
    let w = omega - &omega.conj();
    let q_lo = (lo - &hi.conj()).div(&w)?.ceil_at(Embedding::First);
    let q_hi = (hi - &lo.conj()).div(&w)?.floor_at(Embedding::First);
    let mut q = q_lo;
    while q <= q_hi {
        let qo = omega.mul_int(&q);
        let a = lo - &qo;
        let b = hi - &qo;
        let p_lo = a.ceil_at(Embedding::First).max(a.ceil_at(Embedding::Second));
        let p_hi = b.floor_at(Embedding::First).min(b.floor_at(Embedding::Second));
        let mut p = p_lo;
        while p <= p_hi {
            let z = QNum::from_coords(d, &p, &q);
            // the p-range is exact for the closed box; only strictness needs a re-check
            debug_assert!(z.dominates(lo) && hi.dominates(&z));
            let keep = !strict || (z.strictly_dominates(lo) && hi.strictly_dominates(&z));
            if keep && f(z).is_break() {
                return Ok(true);
            }
            p += 1;
        }
        q += 1;
    }
    Ok(false)
}

/// Number of integers `z` with `lo < z < hi`, counted without materialising them.
pub fn box_count(ctx: &FieldContext, lo: &QNum, hi: &QNum, strict: bool) -> Result<usize, FieldError> {
    box_between(ctx, lo, hi, strict).map(|v| v.len())
}

/// Totally positive elements `y` of `(1/den) O_K` with `N(y) <= bound`, one per class modulo
/// totally positive units (the canonical cone of [`FieldContext::reduce_mod_tp_units`]).
pub fn tp_reps_up_to_norm(ctx: &FieldContext, bound: &BigRational, den: i64) -> Vec<QNum> {
    let d = ctx.d();
    let den_b = BigInt::from(den);
    let scaled = bound * ratio_int(&(&den_b * &den_b));
    if scaled.is_negative() {
        return Vec::new();
    }
    // Cone elements u1 + u2*eps_plus with u1 > 0, u2 >= 0 and N <= M satisfy
    // u1 + u2 <= sqrt(M) up to the scale (1 + eps_plus) on each side.
    let k = scaled.floor().to_integer().sqrt() + 1;
    let hi = (&QNum::one(d) + ctx.eps_plus()).mul_int(&k);
    let zero = QNum::zero(d);
    let cands = box_between(ctx, &zero, &hi, false).unwrap_or_default();
    let ec = ctx.eps_plus().conj();
    let mut out: Vec<QNum> = cands
        .into_iter()
        .filter(|y| {
            y.is_totally_positive()
                && !y.b().is_negative()
                && (y * &ec).b().is_negative()
                && y.norm() <= scaled
        })
        .map(|y| y.div_int(&den_b))
        .collect();
    out.sort_by(|a, b| a.norm().cmp(&b.norm()).then_with(|| a.lex_cmp(b)));
    out
}

/// A positive definite rational quadratic form in LDL shape
/// `Q(v) = sum_i q_i (v_i + sum_{j>i} mu_ij v_j)^2`.
#[derive(Clone, Debug)]
pub struct Ldl {
    pub n: usize,
    pub q: Vec<BigRational>,
    pub mu: Vec<Vec<BigRational>>,
}

impl Ldl {
    /// Decomposes a symmetric positive definite Gram matrix; `None` if it is not definite.
    pub fn new(gram: &[Vec<BigRational>]) -> Option<Ldl> {
        let n = gram.len();
        let mut a: Vec<Vec<BigRational>> = gram.to_vec();
        for i in 0..n {
            if !a[i][i].is_positive() {
                return None;
            }
            for j in (i + 1)..n {
                a[j][i] = a[i][j].clone();
                a[i][j] = &a[i][j] / &a[i][i];
            }
            for k in (i + 1)..n {
                for l in k..n {
                    let t = &a[k][i] * &a[i][l];
                    a[k][l] -= t;
                }
            }
        }
        let q = (0..n).map(|i| a[i][i].clone()).collect();
        let mu = (0..n)
            .map(|i| (0..n).map(|j| if j > i { a[i][j].clone() } else { BigRational::zero() }).collect())
            .collect();
        Some(Ldl { n, q, mu })
    }
}

/// Fincke-Pohst enumeration of integer vectors `v` with `Q(v + shift) <= bound`.
///
/// Variables are fixed from the last index down. With `halve` set (homogeneous case only) one
/// vector of each `+-` pair is visited and the zero vector is skipped. The visitor receives the
/// vector and `Q(v + shift)`.
pub fn fincke_pohst<F>(ldl: &Ldl, shift: Option<&[BigRational]>, bound: &BigRational, halve: bool, mut visit: F)
where
    F: FnMut(&[BigInt], &BigRational) -> ControlFlow<()>,
{
    let n = ldl.n;
    let zero = BigRational::zero();
    let t: Vec<BigRational> = match shift {
        Some(s) => s.to_vec(),
        None => vec![zero.clone(); n],
    };
    let mut v = vec![BigInt::zero(); n];
    let mut w = vec![BigRational::zero(); n];
    // The recursion tracks the remaining budget; report the value itself.
    let mut report = |v: &[BigInt], rem: &BigRational| visit(v, &(bound - rem));
    let _ = level(ldl, &t, n, bound, true, halve && shift.is_none(), &mut v, &mut w, &mut report);

    #[allow(clippy::too_many_arguments)]
    fn level<F>(
        ldl: &Ldl,
        t: &[BigRational],
        i_plus: usize,
        rem: &BigRational,
        all_zero: bool,
        halve: bool,
        v: &mut [BigInt],
        w: &mut [BigRational],
        visit: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[BigInt], &BigRational) -> ControlFlow<()>,
    {
        if i_plus == 0 {
            if halve && all_zero {
                return ControlFlow::Continue(());
            }
            return visit(v, rem);
        }
        let i = i_plus - 1;
        let mut s = t[i].clone();
        for (m, wj) in ldl.mu[i][i + 1..ldl.n].iter().zip(&w[i + 1..ldl.n]) {
            s += m * wj;
        }
        let c = -s;
        let lim = rem / &ldl.q[i];
        let root = lim.floor().to_integer().max(BigInt::zero()).sqrt();
        let outside = |x: &BigInt| {
            let dx = ratio_int(x) - &c;
            &dx * &dx > lim
        };
        let mut lo = c.floor().to_integer() - &root - 1;
        while lo <= c.ceil().to_integer() + &root + 1 && outside(&lo) {
            lo += 1;
        }
        let mut hi = c.ceil().to_integer() + &root + 1;
        while hi >= lo && outside(&hi) {
            hi -= 1;
        }
        if halve && all_zero && lo.is_negative() {
            lo = BigInt::zero();
        }
        let mut x = lo;
        while x <= hi {
            let wx = ratio_int(&x) - &c;
            let used = &ldl.q[i] * &wx * &wx;
            let next = rem - &used;
            v[i] = x.clone();
            w[i] = ratio_int(&x) + &t[i];
            let z = all_zero && x.is_zero();
            level(ldl, t, i, &next, z, halve, v, w, visit)?;
            x += 1;
        }
        v[i] = BigInt::zero();
        w[i] = BigRational::zero();
        ControlFlow::Continue(())
    }
}

/// The rational quadratic form `v -> tr(Q(x, y))` on `O_K^2 = Z^4`, with coordinates
/// `(x1, x2, y1, y2)` for `x = x1 + x2*omega`, `y = y1 + y2*omega`.
#[derive(Clone, Debug)]
pub struct TraceForm {
    pub gram: Vec<Vec<BigRational>>,
    ldl: Option<Ldl>,
    d: u64,
}

impl TraceForm {
    pub fn new(alpha: &QNum, c: &QNum, eta: &QNum) -> TraceForm {
        let d = alpha.d();
        let omega = QNum::omega(d);
        let basis = [
            (QNum::one(d), QNum::zero(d)),
            (omega.clone(), QNum::zero(d)),
            (QNum::zero(d), QNum::one(d)),
            (QNum::zero(d), omega),
        ];
        let half_c = c.div_int(&BigInt::from(2));
        let bil = |u: &(QNum, QNum), v: &(QNum, QNum)| -> BigRational {
            let t = alpha * &(&u.0 * &v.0) + &half_c * &(&(&u.0 * &v.1) + &(&u.1 * &v.0)) + eta * &(&u.1 * &v.1);
            t.trace()
        };
        let gram: Vec<Vec<BigRational>> =
            (0..4).map(|i| (0..4).map(|j| bil(&basis[i], &basis[j])).collect()).collect();
        let ldl = Ldl::new(&gram);
        TraceForm { gram, ldl, d }
    }

    /// Positive definite, i.e. the binary form is totally positive definite.
    pub fn is_definite(&self) -> bool {
        self.ldl.is_some()
    }

    pub fn eval(&self, v: &[BigInt]) -> BigRational {
        let mut s = BigRational::zero();
        for i in 0..4 {
            for j in 0..4 {
                s += &self.gram[i][j] * ratio_int(&v[i]) * ratio_int(&v[j]);
            }
        }
        s
    }

    /// Vectors with trace value `<= bound`, one per `+-` pair, zero excluded.
    pub fn vectors_up_to(&self, bound: &BigRational) -> Vec<(QNum, QNum)> {
        let mut out = Vec::new();
        self.visit_up_to(bound, |x, y, _| {
            out.push((x, y));
            ControlFlow::Continue(())
        });
        out
    }

    /// Visits `(x, y, tr(Q(x, y)))` for the vectors of [`TraceForm::vectors_up_to`].
    pub fn visit_up_to<F>(&self, bound: &BigRational, mut f: F)
    where
        F: FnMut(QNum, QNum, &BigRational) -> ControlFlow<()>,
    {
        let Some(ldl) = &self.ldl else { return };
        let d = self.d;
        fincke_pohst(ldl, None, bound, true, |v, val| {
            let x = QNum::from_coords(d, &v[0], &v[1]);
            let y = QNum::from_coords(d, &v[2], &v[3]);
            f(x, y, val)
        });
    }
}

/// Certified trace bound for the minimum: every minimal vector has a unit-multiple whose value
/// has trace at most `sqrt((tr(eps^2) + 2) * n0)`, where `n0` is any attained norm.
pub fn trace_bound_for_norm(ctx: &FieldContext, n0: &BigRational) -> BigRational {
    let e2 = ctx.fund_unit().square();
    let t2 = (e2.trace() + BigRational::from_integer(BigInt::from(2))) * n0;
    // ceil(sqrt(t2)) as an integer upper bound.
    let c = t2.ceil().to_integer();
    let mut r = c.sqrt();
    while &r * &r < c {
        r += 1;
    }
    BigRational::from_integer(r)
}

/// Which vectors [`vectors_by_trace`] returns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceMode {
    AtMost,
    Exactly,
}

/// Nonzero `v` in `O_K^2`, one per `+-` pair, with `tr(Q(v)) <= t` or `= t`.
pub fn vectors_by_trace(q: &BinaryForm, t: &BigRational, mode: TraceMode) -> Result<Vec<(QNum, QNum)>, FormError> {
    let tf = TraceForm::new(q.alpha(), q.c(), q.eta());
    if !tf.is_definite() {
        return Err(FormError::NotDefinite);
    }
    let mut out = Vec::new();
    tf.visit_up_to(t, |x, y, tr| {
        if mode == TraceMode::AtMost || tr == t {
            out.push((x, y));
        }
        ControlFlow::Continue(())
    });
    Ok(out)
}

/// Minimal norm `min N(Q(v))` over nonzero `v` in `O_K^2`, with a witness vector.
///
/// One enumeration of the trace form up to a certified bound suffices: multiplying `v` by a unit
/// `u` scales `Q(v)` by `u^2`, which brings the embedding ratio of some value of minimal norm
/// into `[eps^-2, eps^2]`.
pub fn min_norm(q: &BinaryForm) -> Result<(BigRational, (QNum, QNum)), FormError> {
    let tf = TraceForm::new(q.alpha(), q.c(), q.eta());
    if !tf.is_definite() || !q.is_tpd() {
        return Err(FormError::NotDefinite);
    }
    let n0 = {
        let (a, b) = (q.alpha().norm(), q.eta().norm());
        if a < b { a } else { b }
    };
    let bound = trace_bound_for_norm(q.ctx(), &n0);
    let mut best: Option<(BigRational, BigRational, QNum, QNum)> = None;
    tf.visit_up_to(&bound, |x, y, tr| {
        let n = q.eval(&x, &y).norm();
        let better = match &best {
            None => true,
            Some((bn, bt, _, _)) => n < *bn || (n == *bn && tr < bt),
        };
        if better {
            best = Some((n, tr.clone(), x, y));
        }
        ControlFlow::Continue(())
    });
    best.map(|(n, _, x, y)| (n, (x, y))).ok_or(FormError::NotDefinite)
}
