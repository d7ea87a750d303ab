// SPDX-License-Identifier: Apache-2.0

//! Rank bounds for n-universal forms: upper bounds from form censuses and lower bounds from
//! the sets `U(delta)` and `R(delta_1, delta_2)`.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{default_det_bound, BoundSource, ClassificationReport, ClassifyError};
use crate::enumerate::box_between;
use crate::equiv::equivalent_with_minima;
use crate::field::{Embedding, FieldContext, FieldError, QNum, QuadReal};
use crate::forms::{is_additively_indecomposable, BinaryForm, FormError, Mode};
use crate::ser;
use crate::split::definite_splits;

#[derive(Debug, Error)]
pub enum UniversalError {
    #[error("a form census is required")]
    MissingCensus,
    #[error("classification report is partial")]
    PartialClassification,
    #[error("census report is partial")]
    PartialCensus,
    #[error("count {0} is below 240")]
    CountTooSmall(u64),
    #[error("{0} is not in the codifferent")]
    NotCodifferent(String),
    #[error("{0} is not totally positive")]
    NotTotallyPositive(String),
    #[error("report belongs to D = {0}, mode {1}")]
    ReportMismatch(u64, Mode),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Configured value of `g_{O_K}(2)` with its source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GInvariant {
    pub value: u64,
    pub source: String,
}

/// `g(2)`: 5 for `D = 2` (He-Hu) and `D = 5` (Sasaki), otherwise the general bound 7.
pub fn g_invariant(d: u64) -> GInvariant {
    let (value, source) = match d {
        2 => (5, "He-Hu"),
        5 => (5, "Sasaki"),
        _ => (7, "Icaza bound"),
    };
    GInvariant { value, source: source.to_string() }
}

/// Field data shared by the bound calculators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundInputs {
    pub d: u64,
    pub mode: Mode,
    pub n: u32,
    pub g: GInvariant,
    /// Indecomposable integers up to multiplication by squares of units.
    pub indec_count: u64,
    pub gamma_squared: String,
    #[serde(with = "ser::rational")]
    pub dominance_c: BigRational,
    #[serde(with = "ser::opt_rational")]
    pub c_bi: Option<BigRational>,
}

impl BoundInputs {
    pub fn new(ctx: &FieldContext, mode: Mode) -> BoundInputs {
        BoundInputs {
            d: ctx.d(),
            mode,
            n: 2,
            g: g_invariant(ctx.d()),
            indec_count: crate::indec::indecomposables(ctx).len() as u64,
            gamma_squared: ctx.hermite2().squared.to_string(),
            dominance_c: ctx.dominance_c().clone(),
            c_bi: None,
        }
    }

    fn base(&self) -> BigInt {
        BigInt::from(self.g.value) * BigInt::from(self.indec_count)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// Census count of forms with bounded determinant.
    UpperCensus,
    /// Sum over indecomposable classes of determinant quotients.
    UpperDetSum,
    /// Census with decomposable forms excluded or absorbed into multiplicities.
    UpperRefined,
    LowerClassical,
    LowerNonclassical,
    LowerUHalf,
}

/// How one decomposable census form is accounted for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub form: String,
    /// `excluded`, `multiplicity` or `kept`.
    pub decision: String,
    /// `count x class` terms of the chosen decomposition.
    pub decomposition: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    #[serde(with = "ser::bigint")]
    pub value: BigInt,
    /// Exact real bound, e.g. `67^(1/2)/2`.
    pub exact: String,
    pub audit: BTreeMap<String, String>,
    pub flags: Vec<String>,
    pub ledger: Vec<LedgerEntry>,
}

fn audit_int(a: &BTreeMap<String, String>, k: &str) -> Option<BigInt> {
    a.get(k)?.parse().ok()
}

impl BoundReport {
    fn new(kind: BoundKind, value: BigInt, exact: String, audit: BTreeMap<String, String>) -> BoundReport {
        BoundReport { kind, value, exact, audit, flags: Vec::new(), ledger: Vec::new() }
    }

    /// Recomputes the value from the audit trail.
    pub fn recompute(&self) -> Option<BigInt> {
        let a = &self.audit;
        let g = || audit_int(a, "g");
        let base = || Some(g()? * audit_int(a, "indec_count")?);
        let n = || audit_int(a, "n");
        match self.kind {
            BoundKind::UpperCensus => {
                let second = base()? + n()? * audit_int(a, "census_count")?;
                match audit_int(a, "census_bi_count") {
                    Some(q) => Some(second.min(g()? + n()? * q)),
                    None => Some(second),
                }
            }
            BoundKind::UpperDetSum => Some(base()? + n()? * audit_int(a, "term_sum")?),
            BoundKind::UpperRefined => {
                if self.flags.iter().any(|f| f == "refinement-incomplete") {
                    return Some(base()? + n()? * audit_int(a, "term_sum")?);
                }
                Some(base()? + n()? * audit_int(a, "blocks")?)
            }
            BoundKind::LowerClassical | BoundKind::LowerNonclassical => {
                let count = audit_int(a, "count")?;
                let root: u32 = a.get("root")?.parse().ok()?;
                let d = audit_int(a, "degree")?;
                Some(count.nth_root(root) / d)
            }
            BoundKind::LowerUHalf => Some(audit_int(a, "u")? / 2),
        }
    }
}

/// `min(g + n * census_bi, g * #I + n * census)`, the first branch only when `C_BI` is set.
pub fn upper_bound_41(
    inputs: &BoundInputs,
    census_count: Option<u64>,
    census_bi_count: Option<u64>,
) -> Result<BoundReport, UniversalError> {
    let q = census_count.ok_or(UniversalError::MissingCensus)?;
    let n = BigInt::from(inputs.n);
    let mut audit = common_audit(inputs);
    audit.insert("census_count".into(), q.to_string());
    let second = inputs.base() + &n * BigInt::from(q);
    audit.insert("branch_indec".into(), second.to_string());
    let mut value = second;
    if let (Some(c), Some(qb)) = (&inputs.c_bi, census_bi_count) {
        let first = BigInt::from(inputs.g.value) + &n * BigInt::from(qb);
        audit.insert("c_bi".into(), ser::to_string(c));
        audit.insert("census_bi_count".into(), qb.to_string());
        audit.insert("branch_bi".into(), first.to_string());
        value = value.min(first);
    }
    Ok(BoundReport::new(BoundKind::UpperCensus, value.clone(), value.to_string(), audit))
}

fn common_audit(inputs: &BoundInputs) -> BTreeMap<String, String> {
    let mut a = BTreeMap::new();
    a.insert("d".into(), inputs.d.to_string());
    a.insert("mode".into(), inputs.mode.to_string());
    a.insert("g".into(), inputs.g.value.to_string());
    a.insert("g_source".into(), inputs.g.source.clone());
    a.insert("indec_count".into(), inputs.indec_count.to_string());
    a.insert("n".into(), inputs.n.to_string());
    a
}

/// The determinant bound a report was computed with.
pub fn report_bound(ctx: &FieldContext, report: &ClassificationReport) -> QuadReal {
    match report.det_bound_source {
        BoundSource::Override => QuadReal::rational(ser::parse(&report.det_bound).expect("rational bound")),
        _ => default_det_bound(ctx),
    }
}

fn check_report(ctx: &FieldContext, mode: Mode, r: &ClassificationReport) -> Result<(), UniversalError> {
    if r.d != ctx.d() || r.mode != mode {
        return Err(UniversalError::ReportMismatch(r.d, r.mode));
    }
    Ok(())
}

fn det_terms(bound: &QuadReal, classes: &ClassificationReport) -> (BigInt, Vec<String>) {
    let mut sum = BigInt::zero();
    let mut terms = Vec::new();
    for c in &classes.classes {
        let t = bound.mul_rational(&c.det_norm.recip()).floor();
        terms.push(format!("{}:{}", c.det, t));
        sum += t;
    }
    (sum, terms)
}

/// `g * #I + n * sum_H floor(B / N(det H))` over the indecomposable classes.
pub fn upper_bound_42(
    ctx: &FieldContext,
    inputs: &BoundInputs,
    classes: &ClassificationReport,
) -> Result<BoundReport, UniversalError> {
    check_report(ctx, inputs.mode, classes)?;
    if classes.partial {
        return Err(UniversalError::PartialClassification);
    }
    let bound = report_bound(ctx, classes);
    let (sum, terms) = det_terms(&bound, classes);
    let mut audit = common_audit(inputs);
    audit.insert("det_bound".into(), bound.to_string());
    audit.insert("classes".into(), classes.classes.len().to_string());
    audit.insert("terms".into(), terms.join(", "));
    audit.insert("term_sum".into(), sum.to_string());
    let value = inputs.base() + BigInt::from(inputs.n) * sum;
    Ok(BoundReport::new(BoundKind::UpperDetSum, value.clone(), value.to_string(), audit))
}

/// Limits on the decomposition search of [`upper_bound_refined`].
#[derive(Clone, Debug)]
pub struct RefineBudget {
    pub max_splits_per_form: usize,
    pub max_nodes: usize,
    pub max_options: usize,
    pub timeout: Option<Duration>,
}

impl Default for RefineBudget {
    fn default() -> Self {
        RefineBudget { max_splits_per_form: 20_000, max_nodes: 200_000, max_options: 64, timeout: Some(Duration::from_secs(600)) }
    }
}

type Counts = Vec<u32>;

struct Trip;

struct Refiner<'a> {
    mode: Mode,
    classes: &'a [(BinaryForm, BigRational)],
    budget: &'a RefineBudget,
    deadline: Option<Instant>,
    nodes: usize,
    memo: HashMap<String, Vec<Counts>>,
    class_of: HashMap<String, Option<usize>>,
}

impl Refiner<'_> {
    fn tick(&mut self, k: usize) -> Result<(), Trip> {
        self.nodes += k;
        if self.nodes > self.budget.max_nodes || self.deadline.is_some_and(|d| Instant::now() > d) {
            return Err(Trip);
        }
        Ok(())
    }

    fn class_index(&mut self, p: &BinaryForm) -> Result<Option<usize>, UniversalError> {
        let key = p.literal();
        if let Some(r) = self.class_of.get(&key) {
            return Ok(*r);
        }
        let (m, _) = p.min_norm()?;
        let r = self
            .classes
            .iter()
            .position(|(h, mh)| equivalent_with_minima(h, p, mh, &m).is_some());
        self.class_of.insert(key, r);
        Ok(r)
    }

    /// Count vectors of decompositions of `p` into indecomposable classes.
    fn part(&mut self, p: &BinaryForm) -> Result<Result<Vec<Counts>, Trip>, UniversalError> {
        if is_additively_indecomposable(p, self.mode)?.indecomposable {
            let Some(i) = self.class_index(p)? else {
                return Err(UniversalError::Invariant(format!("indecomposable {p} matches no class")));
            };
            let mut v = vec![0; self.classes.len()];
            v[i] = 1;
            return Ok(Ok(vec![v]));
        }
        self.options(p)
    }

    fn options(&mut self, q: &BinaryForm) -> Result<Result<Vec<Counts>, Trip>, UniversalError> {
        let key = q.literal();
        if let Some(r) = self.memo.get(&key) {
            return Ok(Ok(r.clone()));
        }
        let Some(splits) = definite_splits(q, self.mode, self.budget.max_splits_per_form) else {
            return Ok(Err(Trip));
        };
        if let Err(t) = self.tick(splits.len() + 1) {
            return Ok(Err(t));
        }
        let mut acc: Vec<Counts> = Vec::new();
        for p1 in &splits {
            let p2 = q.checked_sub(p1);
            let o1 = match self.part(p1)? {
                Ok(o) => o,
                Err(t) => return Ok(Err(t)),
            };
            let o2 = match self.part(&p2)? {
                Ok(o) => o,
                Err(t) => return Ok(Err(t)),
            };
            for a in &o1 {
                for b in &o2 {
                    acc.push(a.iter().zip(b).map(|(x, y)| x + y).collect());
                }
            }
            acc = pareto(acc, self.budget.max_options);
        }
        self.memo.insert(key, acc.clone());
        Ok(Ok(acc))
    }
}

/// Componentwise-minimal vectors, at most `cap`, smallest total first.
fn pareto(mut v: Vec<Counts>, cap: usize) -> Vec<Counts> {
    v.sort_by(|a, b| a.iter().sum::<u32>().cmp(&b.iter().sum::<u32>()).then_with(|| a.cmp(b)));
    v.dedup();
    let mut out: Vec<Counts> = Vec::new();
    for x in v {
        if !out.iter().any(|y| y.iter().zip(&x).all(|(a, b)| a <= b)) {
            out.push(x);
        }
    }
    out.truncate(cap);
    out
}

/// Choice per extra form: `None` keeps the form as its own block.
struct Plan {
    blocks: u64,
    choice: Vec<Option<usize>>,
}

fn plan_cost(mult: &[u32], kept: u64) -> u64 {
    mult.iter().map(|&m| u64::from(m.max(1))).sum::<u64>() + kept
}

fn search_plan(options: &[Vec<Counts>], classes: usize) -> Plan {
    fn rec(
        i: usize,
        options: &[Vec<Counts>],
        mult: &mut Vec<u32>,
        kept: u64,
        choice: &mut Vec<Option<usize>>,
        best: &mut Plan,
    ) {
        let cost = plan_cost(mult, kept);
        if cost >= best.blocks {
            return;
        }
        if i == options.len() {
            *best = Plan { blocks: cost, choice: choice.clone() };
            return;
        }
        for (k, v) in options[i].iter().enumerate() {
            let saved = mult.clone();
            for (m, x) in mult.iter_mut().zip(v) {
                *m = (*m).max(*x);
            }
            choice.push(Some(k));
            rec(i + 1, options, mult, kept, choice, best);
            choice.pop();
            *mult = saved;
        }
        choice.push(None);
        rec(i + 1, options, mult, kept + 1, choice, best);
        choice.pop();
    }
    let mut best = Plan { blocks: u64::MAX, choice: Vec::new() };
    let mut mult = vec![1; classes];
    rec(0, options, &mut mult, 0, &mut Vec::new(), &mut best);
    best
}

/// Refined upper bound: census forms not equivalent to an indecomposable class are excluded
/// when they split into pairwise inequivalent classes, absorbed into class multiplicities, or
/// kept as extra blocks, whichever minimises the total number of binary blocks.
pub fn upper_bound_refined(
    ctx: &FieldContext,
    inputs: &BoundInputs,
    classes: &ClassificationReport,
    census: &ClassificationReport,
    budget: &RefineBudget,
) -> Result<BoundReport, UniversalError> {
    check_report(ctx, inputs.mode, classes)?;
    check_report(ctx, inputs.mode, census)?;
    if classes.partial {
        return Err(UniversalError::PartialClassification);
    }
    if census.partial {
        return Err(UniversalError::PartialCensus);
    }
    let mode = inputs.mode;
    let class_forms: Vec<(BinaryForm, BigRational)> = classes
        .classes
        .iter()
        .map(|c| Ok((c.form(ctx)?, c.min_norm.clone())))
        .collect::<Result<_, FormError>>()?;
    let mut extras = Vec::new();
    for c in &census.classes {
        let f = c.form(ctx)?;
        if !class_forms.iter().any(|(h, mh)| equivalent_with_minima(h, &f, mh, &c.min_norm).is_some()) {
            extras.push(f);
        }
    }
    let bound = report_bound(ctx, classes);
    let (sum, _) = det_terms(&bound, classes);
    let mut audit = common_audit(inputs);
    audit.insert("det_bound".into(), bound.to_string());
    audit.insert("classes".into(), class_forms.len().to_string());
    audit.insert("census".into(), census.classes.len().to_string());
    audit.insert("extras".into(), extras.len().to_string());
    audit.insert("term_sum".into(), sum.to_string());

    let mut r = Refiner {
        mode,
        classes: &class_forms,
        budget,
        deadline: budget.timeout.map(|t| Instant::now() + t),
        nodes: 0,
        memo: HashMap::new(),
        class_of: HashMap::new(),
    };
    let mut options = Vec::with_capacity(extras.len());
    let mut tripped = false;
    for e in &extras {
        match r.options(e)? {
            Ok(o) => options.push(o),
            Err(Trip) => {
                tripped = true;
                break;
            }
        }
    }
    audit.insert("search_nodes".into(), r.nodes.to_string());
    let n = BigInt::from(inputs.n);
    if tripped {
        let value = inputs.base() + &n * sum;
        let mut rep = BoundReport::new(BoundKind::UpperRefined, value.clone(), value.to_string(), audit);
        rep.flags.push("refinement-incomplete".into());
        return Ok(rep);
    }
    let plan = search_plan(&options, class_forms.len());
    let mut mult = vec![1u32; class_forms.len()];
    let mut ledger = Vec::new();
    for ((e, opts), ch) in extras.iter().zip(&options).zip(&plan.choice) {
        let entry = match ch {
            None => LedgerEntry { form: e.literal(), decision: "kept".into(), decomposition: Vec::new() },
            Some(k) => {
                let v = &opts[*k];
                for (m, x) in mult.iter_mut().zip(v) {
                    *m = (*m).max(*x);
                }
                let decision = if v.iter().all(|&x| x <= 1) { "excluded" } else { "multiplicity" };
                let decomposition = v
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x > 0)
                    .map(|(i, x)| format!("{x} x {}", class_forms[i].0.literal()))
                    .collect();
                LedgerEntry { form: e.literal(), decision: decision.into(), decomposition }
            }
        };
        ledger.push(entry);
    }
    let kept = plan.choice.iter().filter(|c| c.is_none()).count();
    debug_assert_eq!(plan_cost(&mult, kept as u64), plan.blocks);
    audit.insert(
        "multiplicities".into(),
        mult.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","),
    );
    audit.insert("kept".into(), kept.to_string());
    audit.insert("blocks".into(), plan.blocks.to_string());
    let value = inputs.base() + &n * BigInt::from(plan.blocks);
    let mut rep = BoundReport::new(BoundKind::UpperRefined, value.clone(), value.to_string(), audit);
    rep.ledger = ledger;
    Ok(rep)
}

/// `trace(delta)` and `trace(delta * omega)` are integers.
pub fn in_codifferent(ctx: &FieldContext, delta: &QNum) -> bool {
    delta.trace().is_integer() && (delta * ctx.omega()).trace().is_integer()
}

fn check_delta(ctx: &FieldContext, delta: &QNum) -> Result<QNum, UniversalError> {
    let delta = delta.in_field(ctx.d());
    if !in_codifferent(ctx, &delta) {
        return Err(UniversalError::NotCodifferent(delta.to_string()));
    }
    if !delta.is_totally_positive() {
        return Err(UniversalError::NotTotallyPositive(delta.to_string()));
    }
    Ok(delta)
}

/// `U(delta) = { alpha >> 0 integral : trace(delta * alpha) = 1 }`.
pub fn u_set(ctx: &FieldContext, delta: &QNum) -> Result<Vec<QNum>, UniversalError> {
    let delta = check_delta(ctx, delta)?;
    // both summands of trace(delta * alpha) are positive, so sigma_i(alpha) < 1 / sigma_i(delta)
    let hi = delta.inv()?;
    let zero = QNum::zero(ctx.d());
    let one = BigRational::one();
    let mut out: Vec<QNum> = box_between(ctx, &zero, &hi, true)?
        .into_iter()
        .filter(|a| (&delta * a).trace() == one)
        .collect();
    out.sort_by(|a, b| a.trace().cmp(&b.trace()).then_with(|| a.lex_cmp(b)));
    Ok(out)
}

/// Integral `beta` with `x - beta^2` totally positive.
fn count_below_square(ctx: &FieldContext, x: &QNum) -> u64 {
    let r1 = x.floor_at(Embedding::First).max(BigInt::zero()).sqrt() + BigInt::one();
    let r2 = x.floor_at(Embedding::Second).max(BigInt::zero()).sqrt() + BigInt::one();
    let r = QNum::from_int(ctx.d(), r1.max(r2));
    box_between(ctx, &-&r, &r, false)
        .unwrap_or_default()
        .iter()
        .filter(|b| (x - &b.square()).is_totally_positive())
        .count() as u64
}

/// Number of totally positive definite forms `a1 x^2 + 2b xy + a2 y^2` (classical) or
/// `a1 x^2 + b xy + a2 y^2` (non-classical) with `a_i` in `U(delta_i)` and `b` integral.
pub fn r_set_count(ctx: &FieldContext, delta1: &QNum, delta2: &QNum, mode: Mode) -> Result<u64, UniversalError> {
    let u1 = u_set(ctx, delta1)?;
    let u2 = u_set(ctx, delta2)?;
    let pairs: Vec<(&QNum, &QNum)> = u1.iter().flat_map(|a| u2.iter().map(move |b| (a, b))).collect();
    let k = BigInt::from(if mode == Mode::Classical { 1 } else { 4 });
    Ok(pairs
        .par_iter()
        .map(|(a, b)| count_below_square(ctx, &(*a * *b).mul_int(&k)))
        .sum())
}

fn lower_root(kind: BoundKind, count: u64, root: u32, degree: u32) -> BoundReport {
    let value = BigInt::from(count).nth_root(root) / BigInt::from(degree);
    let mut audit = BTreeMap::new();
    audit.insert("count".into(), count.to_string());
    audit.insert("root".into(), root.to_string());
    audit.insert("degree".into(), degree.to_string());
    BoundReport::new(kind, value, format!("{count}^(1/{root})/{degree}"), audit)
}

/// Classical lower bound `#R^(1/n) / d`.
pub fn lower_bound_43(count: u64, n: u32, d: u32) -> BoundReport {
    lower_root(BoundKind::LowerClassical, count, n, d)
}

/// Non-classical lower bound `#R^(1/(2n)) / d`, valid for `#R >= 240`.
pub fn lower_bound_44(count: u64, n: u32, d: u32) -> Result<BoundReport, UniversalError> {
    if count < 240 {
        return Err(UniversalError::CountTooSmall(count));
    }
    Ok(lower_root(BoundKind::LowerNonclassical, count, 2 * n, d))
}

/// `u / 2` with `u` the largest odd-indexed partial quotient of `-omega'`.
pub fn lower_bound_u_half(ctx: &FieldContext) -> BoundReport {
    let cf = ctx.continued_fraction();
    let u = cf.max_odd_partial_quotient();
    let mut audit = BTreeMap::new();
    audit.insert("d".into(), ctx.d().to_string());
    audit.insert("u".into(), u.to_string());
    let period: Vec<String> = cf.period.iter().map(|x| x.to_string()).collect();
    audit.insert("continued_fraction".into(), format!("[{}; {}]", cf.head, period.join(", ")));
    BoundReport::new(BoundKind::LowerUHalf, BigInt::from(u / 2), format!("{u}/2"), audit)
}

/// `delta = (m^2 + 1 - m sqrt(m^2 + 1)) / (2(m^2 + 1))`, with `trace(alpha_i delta) = 1` for the
/// family `alpha_i = m i + 1 + i sqrt(m^2 + 1)`.
pub fn family_delta(ctx: &FieldContext, m: i64) -> QNum {
    let d = m * m + 1;
    ctx.elem(d, -m, 2 * d)
}

/// `(2m + 1)^2 + 4 (1 + ... + (m - 1)) + 2m = 6m^2 + 4m + 1`.
pub fn family_r_lower(m: i64) -> u64 {
    (6 * m * m + 4 * m + 1) as u64
}

/// `coeff * pi^pi_power`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiMultiple {
    #[serde(with = "ser::rational")]
    pub coeff: BigRational,
    pub pi_power: i64,
}

impl PiMultiple {
    pub fn to_f64(&self) -> f64 {
        self.coeff.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI.powi(self.pi_power as i32)
    }

    pub fn powi(&self, e: i64) -> PiMultiple {
        let c = if e >= 0 { self.coeff.pow(e as i32) } else { self.coeff.recip().pow((-e) as i32) };
        PiMultiple { coeff: c, pi_power: self.pi_power * e }
    }
}

impl std::fmt::Display for PiMultiple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}*pi^{}", ser::to_string(&self.coeff), self.pi_power)
    }
}

/// `Gamma(k/2)` as `coeff * sqrt(pi)^e` with `e` in {0, 1}, by `Gamma(x + 1) = x Gamma(x)`.
fn gamma_half(k: u32) -> (BigRational, u32) {
    assert!(k >= 1);
    let (mut x, mut acc, e) = if k.is_multiple_of(2) {
        (BigRational::one(), BigRational::one(), 0)
    } else {
        (BigRational::new(1.into(), 2.into()), BigRational::one(), 1)
    };
    let target = BigRational::new(k.into(), 2.into());
    while x < target {
        acc *= &x;
        x += BigRational::one();
    }
    (acc, e)
}

/// Volume of the unit ball in dimension `n`, `pi^(n/2) / Gamma(n/2 + 1)`.
pub fn unit_ball_volume(n: u32) -> PiMultiple {
    assert!(n >= 1);
    let (g, e) = gamma_half(n + 2);
    // pi^(n/2) / (g * pi^(e/2)) with n - e even
    PiMultiple { coeff: g.recip(), pi_power: i64::from((n - e) / 2) }
}

/// `4^d * omega_n^(-2d/n) * Delta`, an upper bound for the generalised Hermite constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IcazaGammaBound {
    pub degree: u32,
    pub n: u32,
    #[serde(with = "ser::bigint")]
    pub discriminant: BigInt,
    pub omega: PiMultiple,
    #[serde(with = "ser::rational")]
    pub exponent: BigRational,
}

impl IcazaGammaBound {
    pub fn to_f64(&self) -> f64 {
        let e = self.exponent.to_f64().unwrap_or(f64::NAN);
        4f64.powi(self.degree as i32) * self.omega.to_f64().powf(e) * self.discriminant.to_f64().unwrap_or(f64::NAN)
    }
}

pub fn icaza_gamma_bound(degree: u32, n: u32, discriminant: BigInt) -> IcazaGammaBound {
    IcazaGammaBound {
        degree,
        n,
        discriminant,
        omega: unit_ball_volume(n),
        exponent: BigRational::new(BigInt::from(-2 * i64::from(degree)), BigInt::from(n)),
    }
}

/// Determinant norm beyond which every `n`-ary form decomposes:
/// `4^(dn) omega_n^(-2d) Delta^n (Delta + 1)^n`.
pub fn decomposability_det_bound(degree: u32, n: u32, discriminant: &BigInt) -> PiMultiple {
    let w = unit_ball_volume(n).powi(-2 * i64::from(degree));
    let four = BigInt::from(4).pow(degree * n);
    let dd = discriminant.pow(n) * (discriminant + BigInt::one()).pow(n);
    PiMultiple { coeff: w.coeff * BigRational::from_integer(four * dd), pi_power: w.pi_power }
}

/// Binary forms over quadratic fields: `Delta^2 (Delta + 1)^2 / 4`.
pub fn binary_det_bound(discriminant: &BigInt) -> BigRational {
    let d = discriminant;
    BigRational::new(d.pow(2) * (d + BigInt::one()).pow(2), BigInt::from(4))
}

/// `g * #I + n * sum_H floor(B / N(det H))` from raw numbers.
pub fn det_sum_formula(g: u64, indec: u64, n: u32, bound: &BigRational, det_norms: &[BigRational]) -> BigInt {
    let s: BigInt = det_norms.iter().map(|x| (bound / x).floor().to_integer()).sum();
    BigInt::from(g) * BigInt::from(indec) + BigInt::from(n) * s
}

/// `min(g + n * q_bi, g * #I + n * q)` from raw numbers.
pub fn census_formula(g: u64, indec: u64, n: u32, q: u64, q_bi: Option<u64>) -> BigInt {
    let second = BigInt::from(g * indec + u64::from(n) * q);
    match q_bi {
        Some(b) => second.min(BigInt::from(g + u64::from(n) * b)),
        None => second,
    }
}
