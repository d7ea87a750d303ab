// SPDX-License-Identifier: Apache-2.0

//! The classification driver: determinant sweep, minimum candidates, congruence-constrained
//! middle coefficients, decomposability tests and deduplication up to equivalence.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::{fincke_pohst, tp_reps_up_to_norm, Ldl};
use crate::equiv;
use crate::field::{FieldContext, HermiteSource, QNum, QuadReal};
use crate::forms::{self, form_unchecked, BinaryForm, FormError, Mode};
use crate::ser;
use crate::split::{self, Target};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("resume state does not match this run: {0}")]
    Resume(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// What a surviving candidate must satisfy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predicate {
    /// Additively indecomposable in the ambient mode.
    #[default]
    Indecomposable,
    /// No splitting `Q = Q1 + Q2` with `det(Q1) = 0`; determinant norm strictly below the bound.
    NoRankOneSplit,
}

/// Where the determinant-norm bound came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    /// `gamma^2 C^2` with the exact Hermite constant.
    HermiteExact,
    /// `gamma^2 C^2` with the fallback `gamma <= Delta_K / 2`.
    HermiteFallback,
    Override,
}

#[derive(Clone, Debug, Default)]
pub struct ClassifyOptions {
    /// Replaces `gamma^2 C^2` as the bound on `N(det)`.
    pub det_bound: Option<BigRational>,
    pub timeout: Option<Duration>,
    pub resume: Option<ResumeState>,
    pub predicate: Predicate,
}

/// Counters for each pruning stage, summed over all `(psi, alpha)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruningStats {
    pub det_candidates: u64,
    pub alpha_pool: u64,
    /// `N(psi)/C < N(alpha) <= gamma sqrt(N(psi))` failed.
    pub alpha_window: u64,
    /// `alpha` divides an integer below `psi`.
    pub alpha_divides: u64,
    pub pairs: u64,
    pub beta_residues: u64,
    /// Residues failing the integrality congruences.
    pub beta_congruence: u64,
    /// Classes whose negative has a smaller representative.
    pub beta_sign_mirror: u64,
    pub candidates: u64,
    /// `N(alpha) > N(eta)`.
    pub eta_smaller: u64,
    pub not_definite: u64,
    /// `N(alpha)` is not the minimum; the form is met again from another pair.
    pub min_not_alpha: u64,
    /// Dominance or divisibility shortcut produced a splitting.
    pub quick_split: u64,
    /// The exhaustive search produced a splitting.
    pub search_split: u64,
    pub survivors: u64,
    pub duplicates: u64,
}

impl PruningStats {
    fn absorb(&mut self, o: &PruningStats) {
        macro_rules! add {
            ($($f:ident),*) => { $( self.$f += o.$f; )* };
        }
        add!(
            det_candidates, alpha_pool, alpha_window, alpha_divides, pairs, beta_residues,
            beta_congruence, beta_sign_mirror, candidates, eta_smaller, not_definite, min_not_alpha,
            quick_split, search_split, survivors, duplicates
        );
    }
}

/// One equivalence class in a report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub alpha: QNum,
    pub c: QNum,
    pub eta: QNum,
    pub det: QNum,
    #[serde(with = "ser::rational")]
    pub det_norm: BigRational,
    #[serde(with = "ser::rational")]
    pub min_norm: BigRational,
}

impl ClassEntry {
    pub fn form(&self, ctx: &FieldContext) -> Result<BinaryForm, FormError> {
        let d = ctx.d();
        BinaryForm::new(ctx, self.alpha.in_field(d), self.c.in_field(d), self.eta.in_field(d))
    }

    fn rebind(&mut self, d: u64) {
        for x in [&mut self.alpha, &mut self.c, &mut self.eta, &mut self.det] {
            *x = x.in_field(d);
        }
    }
}

/// A candidate that passed every test, kept so interrupted runs can resume.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurvivorRecord {
    pub psi: QNum,
    pub alpha: QNum,
    /// Residue class of the middle coefficient, as `b1 + b2*omega`.
    pub beta_class: QNum,
    pub c: QNum,
    pub eta: QNum,
    #[serde(with = "ser::rational")]
    pub min_norm: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairKey {
    pub psi: QNum,
    pub alpha: QNum,
}

/// Progress of an interrupted run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResumeState {
    pub d: u64,
    pub mode: Mode,
    pub predicate: Predicate,
    pub det_bound: String,
    pub completed: Vec<PairKey>,
    pub survivors: Vec<SurvivorRecord>,
    pub pruning: PruningStats,
}

impl ResumeState {
    fn rebind(&mut self) {
        let d = self.d;
        for k in &mut self.completed {
            k.psi = k.psi.in_field(d);
            k.alpha = k.alpha.in_field(d);
        }
        for s in &mut self.survivors {
            for x in [&mut s.psi, &mut s.alpha, &mut s.beta_class, &mut s.c, &mut s.eta] {
                *x = x.in_field(d);
            }
        }
    }

    pub fn from_json(s: &str) -> Result<ResumeState, serde_json::Error> {
        let mut r: ResumeState = serde_json::from_str(s)?;
        r.rebind();
        Ok(r)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub d: u64,
    pub mode: Mode,
    pub predicate: Predicate,
    pub det_bound: String,
    pub det_bound_source: BoundSource,
    pub gamma_source: HermiteSource,
    #[serde(with = "ser::rational")]
    pub dominance_c: BigRational,
    pub classes: Vec<ClassEntry>,
    pub pruning: PruningStats,
    pub pairs_total: u64,
    pub pairs_done: u64,
    pub partial: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub resume: Option<ResumeState>,
}

impl ClassificationReport {
    pub fn from_json(s: &str) -> Result<ClassificationReport, serde_json::Error> {
        let mut r: ClassificationReport = serde_json::from_str(s)?;
        let d = r.d;
        for c in &mut r.classes {
            c.rebind(d);
        }
        if let Some(st) = &mut r.resume {
            st.rebind();
        }
        Ok(r)
    }

    pub fn forms(&self, ctx: &FieldContext) -> Vec<BinaryForm> {
        self.classes.iter().filter_map(|c| c.form(ctx).ok()).collect()
    }
}

/// The default bound `gamma^2 C^2` on the determinant norm of an indecomposable form.
pub fn default_det_bound(ctx: &FieldContext) -> QuadReal {
    let c = ctx.dominance_c();
    ctx.hermite2().squared.mul_rational(&(c * c))
}

fn sort_key_cmp(a: &QNum, b: &QNum) -> Ordering {
    a.norm().cmp(&b.norm()).then_with(|| a.trace().cmp(&b.trace())).then_with(|| a.lex_cmp(b))
}

/// Totally positive elements of `(1/den) O_K` with norm at most `bound`, one per class modulo
/// squares of units.
fn unit_square_reps(ctx: &FieldContext, bound: &BigRational, den: i64) -> Vec<QNum> {
    let p = tp_reps_up_to_norm(ctx, bound, den);
    let mut out: Vec<QNum> = if ctx.fund_unit_norm() == 1 {
        p.iter().flat_map(|x| [x.clone(), x * ctx.fund_unit()]).collect()
    } else {
        p
    };
    let mut seen = HashSet::new();
    out = out
        .into_iter()
        .map(|x| ctx.reduce_mod_unit_squares(&x))
        .filter(|x| seen.insert(x.clone()))
        .collect();
    sort_by_key_cached(&mut out);
    out
}

/// Sorts like [`sort_key_cmp`] with norms and traces computed once per element.
fn sort_by_key_cached(v: &mut Vec<QNum>) {
    let mut keyed: Vec<(BigRational, BigRational, QNum)> =
        v.drain(..).map(|x| (x.norm(), x.trace(), x)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)).then_with(|| a.2.lex_cmp(&b.2)));
    v.extend(keyed.into_iter().map(|k| k.2));
}

/// Determinant candidates: one representative per class modulo unit squares of totally
/// positive `psi` in `(1/J^2) O_K` with `N(psi) <= bound`.
pub fn det_candidates(ctx: &FieldContext, mode: Mode, bound: &QuadReal) -> Vec<QNum> {
    let j = mode.j();
    let j4 = BigRational::from_integer(BigInt::from(j.pow(4)));
    let scaled = QuadReal { p: &bound.p * &j4, q: &bound.q * &j4, m: bound.m };
    // N(J^2 psi) is an integer, so N(psi) <= bound iff N(J^2 psi) <= floor(J^4 bound).
    let n = BigRational::new(scaled.floor(), BigInt::from(j.pow(4)));
    unit_square_reps(ctx, &n, j * j)
}

/// The pool of possible minima: integral classes with `N(alpha)^2 <= gamma^2 * bound`.
/// Integral classes modulo unit squares that can be the minimum of a form in range, sorted by
/// norm.
struct AlphaPool {
    elems: Vec<QNum>,
    norms: Vec<BigRational>,
}

fn alpha_pool(ctx: &FieldContext, bound: &QuadReal) -> AlphaPool {
    let g2b = ctx.hermite2().squared.mul(bound);
    let n = BigRational::from_integer(g2b.floor_sqrt());
    let elems = unit_square_reps(ctx, &n, 1);
    let norms = elems.iter().map(|a| a.norm()).collect();
    AlphaPool { elems, norms }
}

/// `alpha` passes the window `N(psi)/C < N(alpha) <= gamma sqrt(N(psi))`.
fn in_window(ctx: &FieldContext, psi: &QNum, alpha: &QNum) -> bool {
    let na = alpha.norm();
    let np = psi.norm();
    if &na * ctx.dominance_c() <= np {
        return false;
    }
    ctx.hermite2().squared.mul_rational(&np).cmp_rational(&(&na * &na)) != Ordering::Less
}

/// Minimum candidates for the determinant `psi`: window and divisibility filters applied to the
/// integral classes of bounded norm.
pub fn min_candidates(ctx: &FieldContext, psi: &QNum) -> Vec<QNum> {
    let bound = QuadReal::rational(psi.norm());
    filter_alphas(ctx, psi, &alpha_pool(ctx, &bound), &mut PruningStats::default())
}

fn filter_alphas(ctx: &FieldContext, psi: &QNum, pool: &AlphaPool, stats: &mut PruningStats) -> Vec<QNum> {
    // `pool` is sorted by norm and `N(alpha)` is an integer, so the window is a slice with
    // `N(psi)/C < N(alpha) <= floor(sqrt(gamma^2 N(psi)))`.
    let np = psi.norm();
    let lo = &np / ctx.dominance_c();
    let hi = BigRational::from_integer(ctx.hermite2().squared.mul_rational(&np).floor_sqrt());
    let start = pool.norms.partition_point(|n| *n <= lo);
    let end = pool.norms.partition_point(|n| *n <= hi).max(start);
    debug_assert!(pool.elems[start..end].iter().all(|a| in_window(ctx, psi, a)));
    stats.alpha_window += (pool.elems.len() - (end - start)) as u64;
    let mut out = Vec::new();
    for a in &pool.elems[start..end] {
        if forms::alpha_divides_below(ctx, a, psi) {
            stats.alpha_divides += 1;
        } else {
            out.push(a.clone());
        }
    }
    out
}

/// The lattice `J*alpha*O_K` in Hermite normal form, in `(p, q)` coordinates of `p + q*omega`:
/// generated by `(a, 0)` and `(s, c)`.
struct Hnf {
    a: i128,
    s: i128,
    c: i128,
}

impl Hnf {
    fn new(d: u64, m1: i128, m2: i128, j: i128) -> Hnf {
        let (x1, y1) = (j * m1, j * m2);
        let (x2, y2) = if d % 4 == 1 {
            let k = ((d - 1) / 4) as i128;
            (j * m2 * k, j * (m1 + m2))
        } else {
            (j * m2 * d as i128, j * m1)
        };
        let eg = y1.extended_gcd(&y2);
        let (mut g, mut u, mut v) = (eg.gcd, eg.x, eg.y);
        if g < 0 {
            g = -g;
            u = -u;
            v = -v;
        }
        let s = u * x1 + v * x2;
        let index = (x1 * y2 - x2 * y1).abs();
        let a = index / g;
        Hnf { a, s: s.mod_floor(&a), c: g }
    }

    fn reduce(&self, p: i128, q: i128) -> (i128, i128) {
        let k = Integer::div_floor(&q, &self.c);
        let p = p - k * self.s;
        (p.mod_floor(&self.a), q - k * self.c)
    }
}

fn to_i128(x: &BigInt) -> i128 {
    x.to_i128().expect("coordinate outside the i128 range")
}

fn coords_i128(x: &QNum) -> (i128, i128) {
    let (p, q) = x.int_coords().expect("integral element expected");
    (to_i128(&p), to_i128(&q))
}

/// A class of middle coefficients together with its chosen representative.
#[derive(Clone, Debug)]
pub struct BetaClass {
    pub class: (i128, i128),
    pub beta: QNum,
}

#[derive(Default)]
struct BetaStats {
    residues: u64,
    congruence: u64,
    mirror: u64,
}

/// Middle coefficients `beta` making `eta = (J^2 psi + beta^2) / (J^2 alpha)` integral, one
/// representative per class modulo `J*alpha*O_K`, each chosen to minimise `tr(eta)`.
pub fn beta_candidates(ctx: &FieldContext, psi: &QNum, alpha: &QNum, mode: Mode) -> Vec<QNum> {
    beta_classes(ctx, psi, alpha, mode, false, &mut BetaStats::default()).into_iter().map(|b| b.beta).collect()
}

fn beta_classes(
    ctx: &FieldContext,
    psi: &QNum,
    alpha: &QNum,
    mode: Mode,
    skip_mirrors: bool,
    stats: &mut BetaStats,
) -> Vec<BetaClass> {
    let d = ctx.d();
    let j = mode.j() as i128;
    let (m1, m2) = coords_i128(alpha);
    let jpsi = psi.mul_int(&BigInt::from(j * j));
    let (d1, d2) = coords_i128(&jpsi);
    let n = to_i128(&alpha.norm().to_integer());
    let modulus = j * j * n;
    let hnf = Hnf::new(d, m1, m2, j);
    let k = ((d - 1) / 4) as i128;
    let di = d as i128;
    let mut out = Vec::new();
    for b2 in 0..hnf.c {
        for b1 in 0..hnf.a {
            stats.residues += 1;
            let ok = if d % 4 == 1 {
                let a = d1 + b1 * b1 + k * b2 * b2;
                let bv = d2 + 2 * b1 * b2 + b2 * b2;
                ((m1 + m2) * a - k * m2 * bv).rem_euclid(modulus) == 0 && (m2 * a - m1 * bv).rem_euclid(modulus) == 0
            } else {
                let a = d1 + b1 * b1 + di * b2 * b2;
                let bv = d2 + 2 * b1 * b2;
                (m1 * a - m2 * di * bv).rem_euclid(modulus) == 0 && (m2 * a - m1 * bv).rem_euclid(modulus) == 0
            };
            if !ok {
                stats.congruence += 1;
                continue;
            }
            if skip_mirrors && hnf.reduce(-b1, -b2) < (b1, b2) {
                stats.mirror += 1;
                continue;
            }
            let beta0 = QNum::from_coords(d, &BigInt::from(b1), &BigInt::from(b2));
            let beta = min_trace_rep(ctx, alpha, &beta0, j);
            let eta = eta_for(psi, alpha, &beta, j);
            assert!(eta.is_integral(), "congruence solution gave non-integral eta: psi={psi} alpha={alpha} beta={beta}");
            out.push(BetaClass { class: (b1, b2), beta });
        }
    }
    out
}

fn eta_for(psi: &QNum, alpha: &QNum, beta: &QNum, j: i128) -> QNum {
    let j2 = BigInt::from(j * j);
    let num = &psi.mul_int(&j2) + &beta.square();
    num.div(&alpha.mul_int(&j2)).expect("alpha is nonzero")
}

/// The element of `beta + J*alpha*O_K` minimising `tr(alpha (tau + t)^2)`, `tau = beta/(J alpha)`;
/// ties go to the lexicographically smallest coordinates.
fn min_trace_rep(ctx: &FieldContext, alpha: &QNum, beta: &QNum, j: i128) -> QNum {
    let d = ctx.d();
    let ja = alpha.mul_int(&BigInt::from(j));
    let tau = beta.div(&ja).expect("alpha is nonzero");
    let om = ctx.omega();
    let basis = [QNum::one(d), om.clone()];
    let gram: Vec<Vec<BigRational>> =
        (0..2).map(|r| (0..2).map(|s| (alpha * &(&basis[r] * &basis[s])).trace()).collect()).collect();
    let ldl = Ldl::new(&gram).expect("alpha totally positive");
    let (t1, t2) = tau.coords();
    let shift = [t1.clone(), t2.clone()];
    let value = |v: &[BigInt]| -> BigRational {
        let w = [BigRational::from_integer(v[0].clone()) + &t1, BigRational::from_integer(v[1].clone()) + &t2];
        let mut s = BigRational::zero();
        for r in 0..2 {
            for c in 0..2 {
                s += &gram[r][c] * &w[r] * &w[c];
            }
        }
        s
    };
    let v0 = [-t1.round().to_integer(), -t2.round().to_integer()];
    let bound = value(&v0);
    let mut best: Option<(BigRational, (BigInt, BigInt))> = None;
    fincke_pohst(&ldl, Some(&shift), &bound, false, |v, val| {
        let t = QNum::from_coords(d, &v[0], &v[1]);
        let b = beta + &(&ja * &t);
        let key = b.int_coords().expect("integral");
        let better = match &best {
            None => true,
            Some((bv, bk)) => val < bv || (val == bv && key < *bk),
        };
        if better {
            best = Some((val.clone(), key));
        }
        ControlFlow::Continue(())
    });
    let (_, (p, q)) = best.expect("the starting point lies inside the bound");
    QNum::from_coords(d, &p, &q)
}

#[derive(Clone, Debug)]
struct Survivor {
    psi: QNum,
    alpha: QNum,
    class: (i128, i128),
    form: BinaryForm,
    min: BigRational,
}

impl Survivor {
    fn record(&self) -> SurvivorRecord {
        let d = self.psi.d();
        SurvivorRecord {
            psi: self.psi.clone(),
            alpha: self.alpha.clone(),
            beta_class: QNum::from_coords(d, &BigInt::from(self.class.0), &BigInt::from(self.class.1)),
            c: self.form.c().clone(),
            eta: self.form.eta().clone(),
            min_norm: self.min.clone(),
        }
    }

    fn from_record(ctx: &FieldContext, r: &SurvivorRecord) -> Result<Survivor, ClassifyError> {
        let form = BinaryForm::new(ctx, r.alpha.clone(), r.c.clone(), r.eta.clone())?;
        let (p, q) = r.beta_class.int_coords().ok_or_else(|| ClassifyError::Resume("bad beta class".into()))?;
        Ok(Survivor {
            psi: r.psi.clone(),
            alpha: r.alpha.clone(),
            class: (to_i128(&p), to_i128(&q)),
            form,
            min: r.min_norm.clone(),
        })
    }

    fn cmp(&self, o: &Survivor) -> Ordering {
        sort_key_cmp(&self.psi, &o.psi)
            .then_with(|| sort_key_cmp(&self.alpha, &o.alpha))
            .then_with(|| self.class.cmp(&o.class))
    }
}

struct PairOutcome {
    key: PairKey,
    done: bool,
    stats: PruningStats,
    survivors: Vec<Survivor>,
}

struct Run<'a> {
    ctx: &'a FieldContext,
    mode: Mode,
    predicate: Predicate,
    deadline: Option<Instant>,
}

impl Run<'_> {
    fn expired(&self) -> bool {
        self.deadline.is_some_and(|t| Instant::now() >= t)
    }

    fn pair(&self, psi: &QNum, alpha: &QNum) -> Result<PairOutcome, ClassifyError> {
        let key = PairKey { psi: psi.clone(), alpha: alpha.clone() };
        let mut stats = PruningStats::default();
        if self.expired() {
            return Ok(PairOutcome { key, done: false, stats, survivors: vec![] });
        }
        stats.pairs = 1;
        let j = self.mode.j() as i128;
        let mut bs = BetaStats::default();
        let classes = beta_classes(self.ctx, psi, alpha, self.mode, true, &mut bs);
        stats.beta_residues = bs.residues;
        stats.beta_congruence = bs.congruence;
        stats.beta_sign_mirror = bs.mirror;
        let na = alpha.norm();
        let mut survivors = Vec::new();
        for bc in classes {
            if self.expired() {
                return Ok(PairOutcome { key, done: false, stats: PruningStats::default(), survivors: vec![] });
            }
            stats.candidates += 1;
            let eta = eta_for(psi, alpha, &bc.beta, j);
            if na > eta.norm() {
                stats.eta_smaller += 1;
                continue;
            }
            let c = bc.beta.mul_rational(&BigRational::new(BigInt::from(2), BigInt::from(j)));
            let q = form_unchecked(self.ctx, alpha.clone(), c, eta);
            if !q.is_tpd() {
                stats.not_definite += 1;
                continue;
            }
            let (m, _) = q.min_norm()?;
            if m != na {
                stats.min_not_alpha += 1;
                continue;
            }
            if let Some(w) = forms::quick_decomposable_at_min(&q, &m) {
                if !w.verify(&q, self.mode) {
                    return Err(ClassifyError::Invariant(format!("shortcut witness fails for {q}")));
                }
                stats.quick_split += 1;
                continue;
            }
            let target = match self.predicate {
                Predicate::Indecomposable => Target::Any,
                Predicate::NoRankOneSplit => Target::RankOne,
            };
            if split::find_split(&q, self.mode, target).is_some() {
                stats.search_split += 1;
                continue;
            }
            stats.survivors += 1;
            survivors.push(Survivor { psi: psi.clone(), alpha: alpha.clone(), class: bc.class, form: q, min: m });
        }
        Ok(PairOutcome { key, done: true, stats, survivors })
    }
}

/// Runs the classification for `(ctx, mode)`.
pub fn classify(ctx: &FieldContext, mode: Mode, opts: &ClassifyOptions) -> Result<ClassificationReport, ClassifyError> {
    let (bound, source) = match &opts.det_bound {
        Some(b) => (QuadReal::rational(b.clone()), BoundSource::Override),
        None => (
            default_det_bound(ctx),
            if ctx.hermite2().is_exact() { BoundSource::HermiteExact } else { BoundSource::HermiteFallback },
        ),
    };
    let bound_str = bound.to_string();
    let deadline = opts.timeout.map(|t| Instant::now() + t);
    let mut stats = PruningStats::default();

    let mut psis = det_candidates(ctx, mode, &bound);
    if opts.predicate == Predicate::NoRankOneSplit {
        psis.retain(|p| bound.cmp_rational(&p.norm()) == Ordering::Greater);
    }
    let pool = alpha_pool(ctx, &bound);
    stats.det_candidates = psis.len() as u64;
    stats.alpha_pool = pool.elems.len() as u64;

    // Expansion stops at the deadline; unexpanded determinants make the run partial.
    let expanded: Vec<Option<(Vec<QNum>, PruningStats)>> = psis
        .par_iter()
        .map(|psi| {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return None;
            }
            let mut st = PruningStats::default();
            let alphas = filter_alphas(ctx, psi, &pool, &mut st);
            Some((alphas, st))
        })
        .collect();
    let mut pairs: Vec<(QNum, QNum)> = Vec::new();
    let mut unexpanded = false;
    for (psi, e) in psis.iter().zip(expanded) {
        match e {
            Some((alphas, st)) => {
                stats.absorb(&st);
                pairs.extend(alphas.into_iter().map(|a| (psi.clone(), a)));
            }
            None => unexpanded = true,
        }
    }

    let mut survivors: Vec<Survivor> = Vec::new();
    let mut completed: Vec<PairKey> = Vec::new();
    let mut done_set: HashSet<(QNum, QNum)> = HashSet::new();
    if let Some(st) = &opts.resume {
        if st.d != ctx.d() || st.mode != mode || st.predicate != opts.predicate || st.det_bound != bound_str {
            return Err(ClassifyError::Resume(format!(
                "state is for D={} {} {:?} bound {}",
                st.d, st.mode, st.predicate, st.det_bound
            )));
        }
        for k in &st.completed {
            done_set.insert((k.psi.clone(), k.alpha.clone()));
        }
        completed = st.completed.clone();
        for r in &st.survivors {
            survivors.push(Survivor::from_record(ctx, r)?);
        }
        let mut carried = st.pruning.clone();
        // Pre-pair counters are recomputed on every run.
        carried.det_candidates = 0;
        carried.alpha_pool = 0;
        carried.alpha_window = 0;
        carried.alpha_divides = 0;
        carried.duplicates = 0;
        stats.absorb(&carried);
    }

    let run = Run { ctx, mode, predicate: opts.predicate, deadline };
    let todo: Vec<&(QNum, QNum)> = pairs.iter().filter(|p| !done_set.contains(*p)).collect();
    let outcomes: Vec<Result<PairOutcome, ClassifyError>> = todo.par_iter().map(|(p, a)| run.pair(p, a)).collect();
    let mut partial = unexpanded;
    for o in outcomes {
        let o = o?;
        if o.done {
            stats.absorb(&o.stats);
            completed.push(o.key);
            survivors.extend(o.survivors);
        } else {
            partial = true;
        }
    }

    survivors.sort_by(|a, b| a.cmp(b));
    let mut classes: Vec<Survivor> = Vec::new();
    let mut start = 0;
    while start < survivors.len() {
        let mut end = start + 1;
        while end < survivors.len() && survivors[end].psi == survivors[start].psi {
            end += 1;
        }
        let group: Vec<(BinaryForm, BigRational)> =
            survivors[start..end].iter().map(|s| (s.form.clone(), s.min.clone())).collect();
        let lead = equiv::leaders(&group);
        for (i, l) in lead.iter().enumerate() {
            if *l == i {
                classes.push(survivors[start + i].clone());
            } else {
                stats.duplicates += 1;
            }
        }
        start = end;
    }
    classes.sort_by(|a, b| {
        sort_key_cmp(&a.psi, &b.psi)
            .then_with(|| a.alpha.norm().cmp(&b.alpha.norm()))
            .then_with(|| a.class.cmp(&b.class))
    });

    for s in &classes {
        recheck(s, mode, opts.predicate)?;
    }

    let entries = classes
        .iter()
        .map(|s| ClassEntry {
            alpha: s.form.alpha().clone(),
            c: s.form.c().clone(),
            eta: s.form.eta().clone(),
            det: s.psi.clone(),
            det_norm: s.psi.norm(),
            min_norm: s.min.clone(),
        })
        .collect();
    let pairs_total = pairs.len() as u64;
    let pairs_done = completed.len() as u64;
    let resume = partial.then(|| ResumeState {
        d: ctx.d(),
        mode,
        predicate: opts.predicate,
        det_bound: bound_str.clone(),
        completed: completed.clone(),
        survivors: survivors.iter().map(|s| s.record()).collect(),
        pruning: stats.clone(),
    });
    Ok(ClassificationReport {
        d: ctx.d(),
        mode,
        predicate: opts.predicate,
        det_bound: bound_str,
        det_bound_source: source,
        gamma_source: ctx.hermite2().source.clone(),
        dominance_c: ctx.dominance_c().clone(),
        classes: entries,
        pruning: stats,
        pairs_total,
        pairs_done,
        partial,
        resume,
    })
}

/// All totally positive definite forms with `N(det)` below the bound and no rank-one splitting,
/// up to equivalence.
pub fn census(ctx: &FieldContext, mode: Mode, opts: &ClassifyOptions) -> Result<ClassificationReport, ClassifyError> {
    let o = ClassifyOptions { predicate: Predicate::NoRankOneSplit, ..opts.clone() };
    classify(ctx, mode, &o)
}

/// Independent re-check of a reported class on the swapped form.
fn recheck(s: &Survivor, mode: Mode, predicate: Predicate) -> Result<(), ClassifyError> {
    let sw = s.form.swapped();
    let (m, _) = sw.min_norm()?;
    if m != s.min || m != s.alpha.norm() {
        return Err(ClassifyError::Invariant(format!("minimum mismatch for {}", s.form)));
    }
    let bad = match predicate {
        Predicate::Indecomposable => !forms::is_additively_indecomposable(&sw, mode)?.indecomposable,
        Predicate::NoRankOneSplit => forms::rank1_split(&sw, mode)?.is_some(),
    };
    if bad {
        return Err(ClassifyError::Invariant(format!("re-check failed for {}", s.form)));
    }
    if s.form.det() != s.psi {
        return Err(ClassifyError::Invariant(format!("determinant mismatch for {}", s.form)));
    }
    Ok(())
}

/// Determinant norms as a sorted multiset, for comparisons with known tables.
pub fn det_multiset(report: &ClassificationReport) -> Vec<QNum> {
    let mut v: Vec<QNum> = report.classes.iter().map(|c| c.det.clone()).collect();
    v.sort_by(sort_key_cmp);
    v
}
