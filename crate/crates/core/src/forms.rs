// SPDX-License-Identifier: Apache-2.0

//! Binary quadratic forms over the ring of integers and additive decompositions.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::enumerate::{self, box_between};
use crate::field::{Embedding, FieldContext, FieldError, QNum};
use crate::indec;
use crate::split::{self, Target};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormError {
    #[error("coefficient {0} is not an algebraic integer")]
    NotIntegral(String),
    #[error("form is not totally positive definite")]
    NotDefinite,
    #[error("form is not classical")]
    NotClassical,
    #[error("forms belong to different modes or fields")]
    ModeMismatch,
    #[error("cannot parse form: {0}")]
    Parse(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Classical forms have xy-coefficient in `2 O_K`; non-classical ones only in `O_K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Classical,
    Nonclassical,
}

impl Mode {
    /// The scale `J`: 1 for classical, 2 for non-classical.
    pub fn j(self) -> i64 {
        match self {
            Mode::Classical => 1,
            Mode::Nonclassical => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Classical => "classical",
            Mode::Nonclassical => "nonclassical",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = FormError;
    fn from_str(s: &str) -> Result<Mode, FormError> {
        match s {
            "classical" => Ok(Mode::Classical),
            "nonclassical" | "non-classical" => Ok(Mode::Nonclassical),
            _ => Err(FormError::Parse(s.to_string())),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `alpha x^2 + c xy + eta y^2` with integral coefficients.
#[derive(Clone)]
pub struct BinaryForm {
    ctx: FieldContext,
    alpha: QNum,
    c: QNum,
    eta: QNum,
}

impl PartialEq for BinaryForm {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha && self.c == other.c && self.eta == other.eta
    }
}

impl Eq for BinaryForm {}

impl fmt::Debug for BinaryForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryForm[D={}]({} | {} | {})", self.ctx.d(), self.alpha, self.c, self.eta)
    }
}

impl fmt::Display for BinaryForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = |x: &QNum, mono: &str| -> String {
            if x.is_one() {
                mono.to_string()
            } else if x.is_rational() || x.a().is_zero() {
                format!("{x}*{mono}")
            } else {
                format!("({x})*{mono}")
            }
        };
        let parts: Vec<String> = [(&self.alpha, "x^2"), (&self.c, "x*y"), (&self.eta, "y^2")]
            .into_iter()
            .filter(|(x, _)| !x.is_zero())
            .map(|(x, m)| term(x, m))
            .collect();
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

impl BinaryForm {
    pub fn new(ctx: &FieldContext, alpha: QNum, c: QNum, eta: QNum) -> Result<BinaryForm, FormError> {
        for x in [&alpha, &c, &eta] {
            if x.d() != ctx.d() {
                return Err(FieldError::MixedFields(x.d(), ctx.d()).into());
            }
            if !x.is_integral() {
                return Err(FormError::NotIntegral(x.to_string()));
            }
        }
        Ok(BinaryForm { ctx: ctx.clone(), alpha, c, eta })
    }

    pub fn from_i64(ctx: &FieldContext, alpha: (i64, i64, i64), c: (i64, i64, i64), eta: (i64, i64, i64)) -> Result<BinaryForm, FormError> {
        BinaryForm::new(
            ctx,
            ctx.elem(alpha.0, alpha.1, alpha.2),
            ctx.elem(c.0, c.1, c.2),
            ctx.elem(eta.0, eta.1, eta.2),
        )
    }

    /// Parses `"<alpha>|<c>|<eta>"`.
    pub fn parse(ctx: &FieldContext, s: &str) -> Result<BinaryForm, FormError> {
        let pieces: Vec<&str> = s.split('|').collect();
        if pieces.len() != 3 {
            return Err(FormError::Parse(s.to_string()));
        }
        let a = ctx.parse(pieces[0])?;
        let c = ctx.parse(pieces[1])?;
        let e = ctx.parse(pieces[2])?;
        BinaryForm::new(ctx, a, c, e)
    }

    /// The `"<alpha>|<c>|<eta>"` literal.
    pub fn literal(&self) -> String {
        format!("{}|{}|{}", self.alpha, self.c, self.eta)
    }

    pub fn ctx(&self) -> &FieldContext {
        &self.ctx
    }

    pub fn alpha(&self) -> &QNum {
        &self.alpha
    }

    pub fn c(&self) -> &QNum {
        &self.c
    }

    pub fn eta(&self) -> &QNum {
        &self.eta
    }

    /// Off-diagonal Gram entry `c/2`.
    pub fn half_c(&self) -> QNum {
        self.c.div_int(&BigInt::from(2))
    }

    pub fn classical(&self) -> bool {
        self.half_c().is_integral()
    }

    /// `alpha*eta - c^2/4`.
    pub fn det(&self) -> QNum {
        &(&self.alpha * &self.eta) - &self.c.square().div_int(&BigInt::from(4))
    }

    pub fn eval(&self, x: &QNum, y: &QNum) -> QNum {
        &(&self.alpha * &x.square()) + &(&(&self.c * &(x * y)) + &(&self.eta * &y.square()))
    }

    /// Symmetric bilinear form with `b(v, v) = Q(v)`.
    pub fn bilinear(&self, u: (&QNum, &QNum), v: (&QNum, &QNum)) -> QNum {
        let hc = self.half_c();
        &(&(&self.alpha * &(u.0 * v.0)) + &(&hc * &(&(u.0 * v.1) + &(u.1 * v.0)))) + &(&self.eta * &(u.1 * v.1))
    }

    /// `H(x, y) = Q(x*v1 + y*v2)`.
    pub fn transform(&self, v1: (&QNum, &QNum), v2: (&QNum, &QNum)) -> BinaryForm {
        let a = self.eval(v1.0, v1.1);
        let e = self.eval(v2.0, v2.1);
        let c = self.bilinear(v1, v2).mul_int(&BigInt::from(2));
        BinaryForm { ctx: self.ctx.clone(), alpha: a, c, eta: e }
    }

    /// `Q(y, x)`.
    pub fn swapped(&self) -> BinaryForm {
        BinaryForm { ctx: self.ctx.clone(), alpha: self.eta.clone(), c: self.c.clone(), eta: self.alpha.clone() }
    }

    /// `Q(x, -y)`.
    pub fn negated_c(&self) -> BinaryForm {
        BinaryForm { ctx: self.ctx.clone(), alpha: self.alpha.clone(), c: -&self.c, eta: self.eta.clone() }
    }

    /// `alpha x^2 + u*c xy + u^2*eta y^2`, equivalent to `Q` for a unit `u`.
    pub fn unit_scaled(&self, u: &QNum) -> BinaryForm {
        BinaryForm {
            ctx: self.ctx.clone(),
            alpha: self.alpha.clone(),
            c: &self.c * u,
            eta: &self.eta * &u.square(),
        }
    }

    pub fn checked_sub(&self, other: &BinaryForm) -> BinaryForm {
        BinaryForm {
            ctx: self.ctx.clone(),
            alpha: &self.alpha - &other.alpha,
            c: &self.c - &other.c,
            eta: &self.eta - &other.eta,
        }
    }

    pub fn checked_add(&self, other: &BinaryForm) -> BinaryForm {
        BinaryForm {
            ctx: self.ctx.clone(),
            alpha: &self.alpha + &other.alpha,
            c: &self.c + &other.c,
            eta: &self.eta + &other.eta,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.is_zero() && self.c.is_zero() && self.eta.is_zero()
    }

    /// Totally positive semi-definite: per embedding the Gram matrix is positive semi-definite.
    pub fn is_tpsd(&self) -> bool {
        if !self.alpha.is_totally_nonnegative() || !self.eta.is_totally_nonnegative() {
            return false;
        }
        if !self.det().is_totally_nonnegative() {
            return false;
        }
        for emb in Embedding::BOTH {
            if (self.alpha.sign_at(emb) == 0 || self.eta.sign_at(emb) == 0) && self.c.sign_at(emb) != 0 {
                return false;
            }
        }
        true
    }

    /// Totally positive definite.
    pub fn is_tpd(&self) -> bool {
        self.alpha.is_totally_positive() && self.det().is_totally_positive()
    }

    pub fn in_mode(&self, mode: Mode) -> bool {
        mode == Mode::Nonclassical || self.classical()
    }

    /// Exact minimum `min N(Q(v))` and a witness vector.
    pub fn min_norm(&self) -> Result<(BigRational, (QNum, QNum)), FormError> {
        enumerate::min_norm(self)
    }
}

/// How a decomposition splits the form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// One part has determinant zero.
    Rank1Split,
    General,
}

/// `Q = parts[0] + parts[1]` with both parts totally positive semi-definite and nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionWitness {
    pub parts: [BinaryForm; 2],
    pub kind: WitnessKind,
}

impl DecompositionWitness {
    pub(crate) fn from_part(q: &BinaryForm, first: BinaryForm) -> DecompositionWitness {
        let second = q.checked_sub(&first);
        let kind = if first.det().is_zero() || second.det().is_zero() {
            WitnessKind::Rank1Split
        } else {
            WitnessKind::General
        };
        DecompositionWitness { parts: [first, second], kind }
    }

    /// Parts sum to `q`, are nonzero, totally positive semi-definite and valid in `mode`.
    pub fn verify(&self, q: &BinaryForm, mode: Mode) -> bool {
        let [a, b] = &self.parts;
        a.checked_add(b) == *q
            && !a.is_zero()
            && !b.is_zero()
            && a.is_tpsd()
            && b.is_tpsd()
            && a.in_mode(mode)
            && b.in_mode(mode)
            && [a.alpha(), a.c(), a.eta(), b.alpha(), b.c(), b.eta()].iter().all(|x| x.is_integral())
    }
}

/// Result of the additive indecomposability decision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndecomposabilityResult {
    pub indecomposable: bool,
    pub witness: Option<DecompositionWitness>,
}

fn check_input(q: &BinaryForm, mode: Mode) -> Result<(), FormError> {
    if !q.is_tpd() {
        return Err(FormError::NotDefinite);
    }
    if mode == Mode::Classical && !q.classical() {
        return Err(FormError::NotClassical);
    }
    Ok(())
}

/// Splits off `mu y^2` with `mu` integral and `0 < mu <= det/alpha`, if such `mu` exists.
fn split_off_y2(q: &BinaryForm) -> Option<DecompositionWitness> {
    let bound = q.det().div(q.alpha()).ok()?;
    let zero = QNum::zero(q.ctx.d());
    let mu = box_between(&q.ctx, &zero, &bound, false).ok()?.into_iter().find(|m| !m.is_zero())?;
    let part = BinaryForm { ctx: q.ctx.clone(), alpha: zero.clone(), c: zero, eta: mu };
    Some(DecompositionWitness::from_part(q, part))
}

/// The two sufficient decomposability criteria that need only `det(Q)` and a minimal value
/// `alpha = Q(1, 0)`:
/// 1. `min(Q) <= N(det Q) / C`;
/// 2. `alpha` divides an integer `delta` with `0 < delta <= det Q`.
///
/// Both produce the split `Q = (Q - mu y^2) + mu y^2`. When `alpha` does not attain the minimum,
/// the swapped form is tried; otherwise the result is inconclusive.
pub fn quick_decomposable(q: &BinaryForm) -> Result<Option<DecompositionWitness>, FormError> {
    if !q.is_tpd() {
        return Err(FormError::NotDefinite);
    }
    let (m, _) = q.min_norm()?;
    if q.alpha().norm() == m {
        return Ok(quick_decomposable_at_min(q, &m));
    }
    if q.eta().norm() == m {
        let s = q.swapped();
        return Ok(quick_decomposable_at_min(&s, &m).map(|w| DecompositionWitness {
            parts: [w.parts[0].swapped(), w.parts[1].swapped()],
            kind: w.kind,
        }));
    }
    Ok(None)
}

/// [`quick_decomposable`] for a form whose `alpha` has norm `min_norm`.
pub fn quick_decomposable_at_min(q: &BinaryForm, min_norm: &BigRational) -> Option<DecompositionWitness> {
    let det = q.det();
    let c = q.ctx.dominance_c();
    if min_norm * c <= det.norm() {
        let w = split_off_y2(q);
        debug_assert!(w.is_some(), "dominance constant failed for {q:?}");
        if w.is_some() {
            return w;
        }
    }
    if alpha_divides_below(&q.ctx, q.alpha(), &det) {
        return split_off_y2(q);
    }
    None
}

/// `alpha` divides some integral `delta` with `0 < delta <= psi`.
pub fn alpha_divides_below(ctx: &FieldContext, alpha: &QNum, psi: &QNum) -> bool {
    // delta = alpha*mu with mu integral and 0 < mu <= psi/alpha.
    let Ok(bound) = psi.div(alpha) else { return false };
    // a nonzero totally nonnegative integer has norm at least 1
    if bound.norm() < BigRational::one() {
        return false;
    }
    if bound.dominates(&QNum::one(ctx.d())) {
        return true;
    }
    let zero = QNum::zero(ctx.d());
    enumerate::box_visit(ctx, &zero, &bound, false, |m| {
        if m.is_zero() { ControlFlow::Continue(()) } else { ControlFlow::Break(()) }
    })
    .unwrap_or(false)
}

/// Complete decision of additive indecomposability in the given mode.
pub fn is_additively_indecomposable(q: &BinaryForm, mode: Mode) -> Result<IndecomposabilityResult, FormError> {
    check_input(q, mode)?;
    let witness = split::find_split(q, mode, Target::Any).map(|p| DecompositionWitness::from_part(q, p));
    Ok(IndecomposabilityResult { indecomposable: witness.is_none(), witness })
}

/// A decomposition `Q = Q1 + Q2` with `det(Q1) = 0`, both parts totally positive
/// semi-definite and valid in `mode`.
pub fn rank1_split(q: &BinaryForm, mode: Mode) -> Result<Option<DecompositionWitness>, FormError> {
    check_input(q, mode)?;
    Ok(split::find_split(q, mode, Target::RankOne).map(|p| DecompositionWitness::from_part(q, p)))
}

/// First parts `Q1` of all splittings `Q = Q1 + Q2` into two totally positive definite forms
/// valid in `mode`, one per unordered pair. `None` when there are more than `cap`.
pub fn definite_splits(q: &BinaryForm, mode: Mode, cap: usize) -> Result<Option<Vec<BinaryForm>>, FormError> {
    check_input(q, mode)?;
    Ok(split::definite_splits(q, mode, cap))
}

/// Sufficient criterion: both diagonal entries are indecomposable integers and `c != 0`.
pub fn inde_from_inde_check(q: &BinaryForm) -> bool {
    !q.c().is_zero()
        && q.alpha().is_totally_positive()
        && q.eta().is_totally_positive()
        && indec::is_indecomposable(&q.ctx, q.alpha())
        && indec::is_indecomposable(&q.ctx, q.eta())
}

/// Writes `xi` as a sum of squares of integers, if possible.
pub fn sum_of_squares(ctx: &FieldContext, xi: &QNum) -> Option<Vec<QNum>> {
    if xi.is_zero() {
        return Some(Vec::new());
    }
    if !xi.is_integral() || !xi.is_totally_positive() {
        return None;
    }
    let mut memo = std::collections::HashMap::new();
    sos_rec(ctx, xi, &mut memo)
}

fn sos_rec(
    ctx: &FieldContext,
    xi: &QNum,
    memo: &mut std::collections::HashMap<QNum, Option<Vec<QNum>>>,
) -> Option<Vec<QNum>> {
    if xi.is_zero() {
        return Some(Vec::new());
    }
    if let Some(r) = memo.get(xi) {
        return r.clone();
    }
    let mut roots = square_roots_below(ctx, xi);
    roots.sort_by(|a, b| b.0.trace().cmp(&a.0.trace()).then_with(|| a.1.lex_cmp(&b.1)));
    let mut found = None;
    for (sq, s) in roots {
        let rest = xi - &sq;
        if let Some(mut tail) = sos_rec(ctx, &rest, memo) {
            tail.insert(0, s);
            found = Some(tail);
            break;
        }
    }
    memo.insert(xi.clone(), found.clone());
    found
}

/// Pairs `(s^2, s)` with `s` integral, nonzero, `s^2 <= xi`, one `s` per sign.
fn square_roots_below(ctx: &FieldContext, xi: &QNum) -> Vec<(QNum, QNum)> {
    // |sigma_i(s)| <= sqrt(sigma_i(xi)) <= isqrt(floor(sigma_i(xi))) + 1.
    let d = ctx.d();
    let r1 = xi.floor_at(Embedding::First).sqrt() + BigInt::one();
    let r2 = xi.floor_at(Embedding::Second).sqrt() + BigInt::one();
    let r = if r1 > r2 { r1 } else { r2 };
    let hi = QNum::from_int(d, r.clone());
    let lo = QNum::from_int(d, -r);
    let mut out = Vec::new();
    for s in box_between(ctx, &lo, &hi, false).unwrap_or_default() {
        if s.is_zero() {
            continue;
        }
        // one per sign: keep s with positive first embedding
        if s.sign_at(Embedding::First) < 0 {
            continue;
        }
        let sq = s.square();
        if xi.dominates(&sq) {
            out.push((sq, s));
        }
    }
    out
}

/// Norm of the determinant as a rational.
pub fn det_norm(q: &BinaryForm) -> BigRational {
    q.det().norm()
}

pub(crate) fn form_unchecked(ctx: &FieldContext, alpha: QNum, c: QNum, eta: QNum) -> BinaryForm {
    BinaryForm { ctx: ctx.clone(), alpha, c, eta }
}
