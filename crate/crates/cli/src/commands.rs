// SPDX-License-Identifier: Apache-2.0

//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use indecomp::classify::{self, ClassificationReport, ClassifyOptions, ResumeState};
use indecomp::equiv::are_equivalent;
use indecomp::family;
use indecomp::forms::{is_additively_indecomposable, DecompositionWitness};
use indecomp::indec::{indecomposables, IndecTag};
use indecomp::universal::{self, BoundInputs, BoundReport, GInvariant, RefineBudget, UniversalError};
use indecomp::{ser, BinaryForm, FieldContext, Mode};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, EXIT_OK, EXIT_PARTIAL};
use crate::manifest::Recorder;
use crate::{ClassifyArgs, Command};

const CACHE_ENV: &str = "INDECOMP_CACHE_DIR";

pub fn run(cmd: Command, argv: Vec<String>) -> Result<i32, CliError> {
    match cmd {
        Command::Context { field, json } => context(field.d, json, argv),
        Command::Indecomposables { field, json } => indecomposable_list(field.d, json, argv),
        Command::Classify(a) => classify_cmd("classify", a, argv),
        Command::Census(a) => classify_cmd("census", a, argv),
        Command::CheckForm { field, form, mode, witness } => check_form(field.d, &form, mode.into(), witness, argv),
        Command::Equivalent { field, a, b } => equivalent(field.d, &a, &b, argv),
        Command::UniversalBounds { field, n, mode, delta, g, c_bi, timeout, refine_timeout, lower_only } => {
            let opts = BoundArgs { n, mode: mode.into(), delta, g, c_bi, timeout, refine_timeout, lower_only };
            universal_bounds(field.d, opts, argv)
        }
        Command::Family { m } => family_cmd(m, argv),
        Command::FixedDetDemo { n, max_s } => fixed_det(n, max_s, argv),
        Command::EnumMin { field, form } => enum_min(field.d, &form, argv),
    }
}

fn field(d: i64) -> Result<FieldContext, CliError> {
    Ok(FieldContext::new(d)?)
}

fn seconds(s: Option<f64>) -> Result<Option<Duration>, CliError> {
    s.map(|x| Duration::try_from_secs_f64(x).map_err(|e| CliError::invalid("Usage", format!("timeout {x}: {e}"))))
        .transpose()
}

fn rational(s: &str) -> Result<num_rational::BigRational, CliError> {
    ser::parse(s).map_err(|m| CliError::invalid("Parse", m))
}

/// `{"manifest": ..., "report": ...}` with a trailing newline.
fn envelope<T: Serialize>(rec: &Recorder, ctx: Option<&FieldContext>, partial: bool, report: &T) -> String {
    let doc = json!({ "manifest": rec.finish(ctx, partial), "report": report });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable report");
    s.push('\n');
    s
}

fn context(d: i64, as_json: bool, argv: Vec<String>) -> Result<i32, CliError> {
    let rec = Recorder::start("context", argv);
    let ctx = field(d)?;
    let cf = ctx.continued_fraction();
    let h = ctx.hermite2();
    let indec = indecomposables(&ctx).len();
    if as_json {
        let report = json!({
            "d": ctx.d(),
            "omega": ctx.omega(),
            "discriminant": ctx.discriminant(),
            "continued_fraction": cf,
            "fundamental_unit": ctx.fund_unit(),
            "fundamental_unit_norm": ctx.fund_unit_norm(),
            "eps_plus": ctx.eps_plus(),
            "dominance_c": ser::to_string(ctx.dominance_c()),
            "gamma2": h.display,
            "gamma2_squared": h.squared.to_string(),
            "gamma_source": h.source,
            "indecomposable_count": indec,
        });
        print!("{}", envelope(&rec, Some(&ctx), false, &report));
    } else {
        let period: Vec<String> = cf.period.iter().map(|x| x.to_string()).collect();
        println!("D                  {}", ctx.d());
        println!("omega              {}", ctx.omega());
        println!("discriminant       {}", ctx.discriminant());
        println!("-omega' cf         [{}; {}]", cf.head, period.join(", "));
        println!("fundamental unit   {} (norm {})", ctx.fund_unit(), ctx.fund_unit_norm());
        println!("eps+               {}", ctx.eps_plus());
        println!("C                  {}", ser::to_string(ctx.dominance_c()));
        println!("gamma_2            {} ({:?}), squared {}", h.display, h.source, h.squared);
        println!("#indecomposables   {indec}");
    }
    Ok(EXIT_OK)
}

fn indecomposable_list(d: i64, as_json: bool, argv: Vec<String>) -> Result<i32, CliError> {
    let rec = Recorder::start("indecomposables", argv);
    let ctx = field(d)?;
    let set = indecomposables(&ctx);
    if as_json {
        let rows: Vec<Value> = set
            .representatives
            .iter()
            .map(|e| json!({ "value": e.value, "norm": ser::to_string(&e.value.norm()), "tag": e.tag }))
            .collect();
        print!("{}", envelope(&rec, Some(&ctx), false, &rows));
    } else {
        println!("{} indecomposables up to squares of units, D = {}", set.len(), ctx.d());
        for e in &set.representatives {
            let tag = match e.tag {
                IndecTag::Semiconvergent { i, r } => format!("alpha_({i},{r})"),
                IndecTag::Conjugate { i, r } => format!("alpha_({i},{r})'"),
            };
            println!("{:<24} N = {:<8} {tag}", e.value.to_string(), ser::to_string(&e.value.norm()));
        }
    }
    Ok(EXIT_OK)
}

fn cache_path(cmd: &str, ctx: &FieldContext, mode: Mode) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    Some(PathBuf::from(dir).join(format!("{cmd}-d{}-{}.json", ctx.d(), mode.as_str())))
}

/// A bare state file, or a JSON report whose `report.resume` holds the state.
fn read_resume(path: &str) -> Result<ResumeState, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if let Ok(s) = ResumeState::from_json(&text) {
        return Ok(s);
    }
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::invalid("Parse", format!("{path}: {e}")))?;
    let inner = v.pointer("/report/resume").or_else(|| v.get("resume")).filter(|x| !x.is_null());
    match inner {
        Some(st) => ResumeState::from_json(&st.to_string()).map_err(|e| CliError::invalid("Parse", format!("{path}: {e}"))),
        None => Err(CliError::invalid("ResumeMismatch", format!("{path} holds no resume state"))),
    }
}

fn run_classification(cmd: &str, ctx: &FieldContext, mode: Mode, opts: &ClassifyOptions) -> Result<ClassificationReport, CliError> {
    Ok(if cmd == "census" { classify::census(ctx, mode, opts)? } else { classify::classify(ctx, mode, opts)? })
}

fn classify_cmd(cmd: &str, a: ClassifyArgs, argv: Vec<String>) -> Result<i32, CliError> {
    let rec = Recorder::start(cmd, argv);
    let ctx = field(a.field.d)?;
    let mode: Mode = a.mode.into();
    let mut opts = ClassifyOptions {
        det_bound: a.det_bound.as_deref().map(rational).transpose()?,
        timeout: seconds(a.timeout)?,
        ..ClassifyOptions::default()
    };
    let cache = cache_path(cmd, &ctx, mode);
    let report = if let Some(p) = &a.resume {
        opts.resume = Some(read_resume(p)?);
        run_classification(cmd, &ctx, mode, &opts)?
    } else if let Some(st) = cache.as_ref().filter(|p| p.exists()).and_then(|p| read_resume(&p.to_string_lossy()).ok()) {
        // a stale cache entry for different parameters is ignored
        let cached = ClassifyOptions { resume: Some(st), ..opts.clone() };
        match run_classification(cmd, &ctx, mode, &cached) {
            Err(e) if e.code == "ResumeMismatch" => run_classification(cmd, &ctx, mode, &opts)?,
            r => r?,
        }
    } else {
        run_classification(cmd, &ctx, mode, &opts)?
    };
    if let Some(p) = &cache {
        match &report.resume {
            Some(st) if report.partial => {
                if let Some(dir) = p.parent() {
                    std::fs::create_dir_all(dir).map_err(|e| CliError::io(&dir.to_string_lossy(), e))?;
                }
                let text = serde_json::to_string(st).expect("serializable state");
                std::fs::write(p, text).map_err(|e| CliError::io(&p.to_string_lossy(), e))?;
            }
            _ => {
                let _ = std::fs::remove_file(p);
            }
        }
    }
    let doc = envelope(&rec, Some(&ctx), report.partial, &report);
    match a.json.as_deref() {
        Some("-") => print!("{doc}"),
        Some(path) => {
            std::fs::write(path, &doc).map_err(|e| CliError::io(path, e))?;
            print!("{}", class_table(&report));
        }
        None => print!("{}", class_table(&report)),
    }
    Ok(if report.partial { EXIT_PARTIAL } else { EXIT_OK })
}

/// Classes grouped by determinant, ordered by determinant norm.
fn class_table(r: &ClassificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "D = {}, {}, {:?}: {} classes{}",
        r.d,
        r.mode,
        r.predicate,
        r.classes.len(),
        if r.partial { format!(" (partial, {}/{} pairs)", r.pairs_done, r.pairs_total) } else { String::new() }
    );
    let _ = writeln!(out, "N(det) bound {} ({:?})", r.det_bound, r.det_bound_source);
    let mut groups: BTreeMap<(num_rational::BigRational, String), Vec<usize>> = BTreeMap::new();
    for (i, c) in r.classes.iter().enumerate() {
        groups.entry((c.det_norm.clone(), c.det.to_string())).or_default().push(i);
    }
    for ((norm, det), idx) in &groups {
        let _ = writeln!(out, "det {det}  N = {}", ser::to_string(norm));
        for &i in idx {
            let c = &r.classes[i];
            let _ = writeln!(out, "  {} | {} | {}    min N = {}", c.alpha, c.c, c.eta, ser::to_string(&c.min_norm));
        }
    }
    out
}

fn witness_json(w: &DecompositionWitness) -> Value {
    json!({ "kind": w.kind, "parts": [w.parts[0].literal(), w.parts[1].literal()] })
}

fn parse_form(ctx: &FieldContext, s: &str) -> Result<BinaryForm, CliError> {
    Ok(BinaryForm::parse(ctx, s)?)
}

fn check_form(d: i64, form: &str, mode: Mode, witness: bool, argv: Vec<String>) -> Result<i32, CliError> {
    let rec = Recorder::start("check-form", argv);
    let ctx = field(d)?;
    let q = parse_form(&ctx, form)?;
    let r = is_additively_indecomposable(&q, mode)?;
    if let Some(w) = &r.witness {
        if !w.verify(&q, mode) {
            return Err(CliError::invariant(format!("decomposition witness for {q} does not verify")));
        }
    }
    let mut report = json!({ "form": q.literal(), "mode": mode, "indecomposable": r.indecomposable });
    if witness {
        if let Some(w) = &r.witness {
            report["witness"] = witness_json(w);
        }
    }
    print!("{}", envelope(&rec, Some(&ctx), false, &report));
    Ok(EXIT_OK)
}

fn equivalent(d: i64, a: &str, b: &str, argv: Vec<String>) -> Result<i32, CliError> {
    let rec = Recorder::start("equivalent", argv);
    let ctx = field(d)?;
    let q = parse_form(&ctx, a)?;
    let h = parse_form(&ctx, b)?;
    let w = are_equivalent(&q, &h)?;
    if let Some(w) = &w {
        if !w.verify(&q, &h) {
            return Err(CliError::invariant("equivalence witness does not verify"));
        }
    }
    let report = json!({ "a": q.literal(), "b": h.literal(), "equivalent": w.is_some(), "witness": w });
    print!("{}", envelope(&rec, Some(&ctx), false, &report));
    Ok(EXIT_OK)
}

struct BoundArgs {
    n: u32,
    mode: Mode,
    delta: Vec<String>,
    g: Option<u64>,
    c_bi: Option<String>,
    timeout: Option<f64>,
    refine_timeout: f64,
    lower_only: bool,
}

#[derive(Serialize)]
struct BoundsOutput {
    inputs: BoundInputs,
    bounds: Vec<BoundReport>,
    notes: Vec<String>,
}

fn universal_bounds(d: i64, a: BoundArgs, argv: Vec<String>) -> Result<i32, CliError> {
    let rec = Recorder::start("universal-bounds", argv);
    let ctx = field(d)?;
    if a.n != 2 {
        return Err(CliError::invalid("Unsupported", format!("n = {} (only binary forms are classified)", a.n)));
    }
    if a.delta.len() > 2 {
        return Err(CliError::invalid("Usage", "give at most two --delta values"));
    }
    let deltas = a.delta.iter().map(|s| ctx.parse(s)).collect::<Result<Vec<_>, _>>()?;
    let mut inputs = BoundInputs::new(&ctx, a.mode);
    inputs.n = a.n;
    if let Some(g) = a.g {
        inputs.g = GInvariant { value: g, source: "user".into() };
    }
    inputs.c_bi = a.c_bi.as_deref().map(rational).transpose()?;

    let mut bounds = Vec::new();
    let mut notes = Vec::new();
    let partial = !a.lower_only && upper_bounds(&ctx, &inputs, &a, &mut bounds, &mut notes)?;
    bounds.push(universal::lower_bound_u_half(&ctx));
    if !deltas.is_empty() {
        let d1 = &deltas[0];
        let d2 = deltas.get(1).unwrap_or(d1);
        let count = universal::r_set_count(&ctx, d1, d2, a.mode)?;
        notes.push(format!("#R(delta1, delta2) = {count}"));
        match a.mode {
            Mode::Classical => bounds.push(universal::lower_bound_43(count, a.n, 2)),
            Mode::Nonclassical => match universal::lower_bound_44(count, a.n, 2) {
                Err(UniversalError::CountTooSmall(c)) => {
                    notes.push(format!("non-classical lower bound needs #R >= 240, got {c}"));
                }
                r => bounds.push(r?),
            },
        }
    }
    for b in &bounds {
        if b.recompute().is_some_and(|v| v != b.value) {
            return Err(CliError::invariant(format!("{:?} does not recompute from its audit", b.kind)));
        }
    }
    let out = BoundsOutput { inputs, bounds, notes };
    print!("{}", envelope(&rec, Some(&ctx), partial, &out));
    Ok(if partial { EXIT_PARTIAL } else { EXIT_OK })
}

/// Census, determinant-sum and refined bounds. Returns whether any input run was partial.
fn upper_bounds(
    ctx: &FieldContext,
    inputs: &BoundInputs,
    a: &BoundArgs,
    bounds: &mut Vec<BoundReport>,
    notes: &mut Vec<String>,
) -> Result<bool, CliError> {
    let timeout = seconds(a.timeout)?;
    let opts = ClassifyOptions { timeout, ..ClassifyOptions::default() };
    let mode = inputs.mode;
    let classes = classify::classify(ctx, mode, &opts)?;
    let census = classify::census(ctx, mode, &opts)?;
    let mut partial = false;
    if classes.partial {
        notes.push("classification is partial".into());
        partial = true;
    }
    if census.partial {
        notes.push("census is partial".into());
        partial = true;
    }
    let census_bi = match &inputs.c_bi {
        Some(c) => {
            let o = ClassifyOptions { det_bound: Some(c.clone()), timeout, ..ClassifyOptions::default() };
            let r = classify::census(ctx, mode, &o)?;
            if r.partial {
                notes.push("census below C_BI is partial".into());
                partial = true;
            }
            (!r.partial).then_some(r.classes.len() as u64)
        }
        None => None,
    };
    if !classes.partial {
        bounds.push(universal::upper_bound_42(ctx, inputs, &classes)?);
    }
    if !census.partial {
        bounds.push(universal::upper_bound_41(inputs, Some(census.classes.len() as u64), census_bi)?);
    }
    if !classes.partial && !census.partial {
        let budget = RefineBudget { timeout: seconds(Some(a.refine_timeout))?, ..RefineBudget::default() };
        bounds.push(universal::upper_bound_refined(ctx, inputs, &classes, &census, &budget)?);
    }
    Ok(partial)
}

fn family_cmd(m: i64, argv: Vec<String>) -> Result<i32, CliError> {
    let rec = Recorder::start("family", argv);
    let report = family::family_m2p1(m)?;
    let ctx = FieldContext::new(report.d).ok();
    print!("{}", envelope(&rec, ctx.as_ref(), false, &report));
    Ok(EXIT_OK)
}

fn fixed_det(n: usize, max_s: usize, argv: Vec<String>) -> Result<i32, CliError> {
    let rec = Recorder::start("fixed-det-demo", argv);
    let report = family::fixed_det_demo_with_budget(n, max_s)?;
    let ctx = FieldContext::new(report.d).ok();
    print!("{}", envelope(&rec, ctx.as_ref(), false, &report));
    Ok(EXIT_OK)
}

fn enum_min(d: i64, form: &str, argv: Vec<String>) -> Result<i32, CliError> {
    let rec = Recorder::start("enum-min", argv);
    let ctx = field(d)?;
    let q = parse_form(&ctx, form)?;
    let (m, (x, y)) = q.min_norm()?;
    if q.eval(&x, &y).norm() != m {
        return Err(CliError::invariant("minimising vector does not attain the minimum"));
    }
    let report = json!({ "form": q.literal(), "min_norm": ser::to_string(&m), "vector": [x, y] });
    print!("{}", envelope(&rec, Some(&ctx), false, &report));
    Ok(EXIT_OK)
}
