// SPDX-License-Identifier: Apache-2.0

//! One PASS/FAIL line per acceptance criterion; exits nonzero if any criterion fails.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{brute_classes, compare_classes, ctx, engine_classes, int_decomposable, square_free_up_to, under_hyperbola};
use indecomp::classify::{self, ClassificationReport, ClassifyOptions};
use indecomp::enumerate::{trace_bound_for_norm, vectors_by_trace, TraceMode};
use indecomp::family;
use indecomp::forms::is_additively_indecomposable;
use indecomp::indec::{decompose_integer, indecomposables};
use indecomp::universal::{self, BoundInputs, RefineBudget};
use indecomp::{are_equivalent, BinaryForm, Embedding, Mode};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};

const MODES: [Mode; 2] = [Mode::Classical, Mode::Nonclassical];
/// Wall-clock allowance for the non-classical D = 6 and D = 21 runs.
const BUDGET: Duration = Duration::from_secs(1800);

type Check = Result<String, String>;
type Criterion = (u32, Box<dyn Fn(&mut Runs) -> Check>);

#[derive(Default)]
struct Runs {
    classes: HashMap<(u64, &'static str), ClassificationReport>,
    census: HashMap<(u64, &'static str), ClassificationReport>,
}

impl Runs {
    fn classes(&mut self, d: u64, mode: Mode) -> &ClassificationReport {
        self.classes.entry((d, mode.as_str())).or_insert_with(|| {
            let opts = ClassifyOptions { timeout: Some(BUDGET), ..ClassifyOptions::default() };
            classify::classify(&ctx(d as i64), mode, &opts).expect("classification")
        })
    }

    fn census(&mut self, d: u64, mode: Mode) -> &ClassificationReport {
        self.census.entry((d, mode.as_str())).or_insert_with(|| {
            let opts = ClassifyOptions { timeout: Some(BUDGET), ..ClassifyOptions::default() };
            classify::census(&ctx(d as i64), mode, &opts).expect("census")
        })
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion1(runs: &mut Runs) -> Check {
    let mut got = Vec::new();
    for (d, want) in [(2, 1), (3, 3), (5, 1), (6, 14), (21, 11)] {
        let r = runs.classes(d, Mode::Classical);
        got.push(format!("D={d}:{}", r.classes.len()));
        ensure(!r.partial && r.classes.len() == want, || format!("D={d}: {} classes, want {want}", r.classes.len()))?;
    }
    Ok(got.join(" "))
}

fn criterion2(runs: &mut Runs) -> Check {
    let mut got = Vec::new();
    for (d, want, exact) in [(2, 7, true), (3, 4, true), (5, 2, true), (6, 26, false), (21, 8, false)] {
        let r = runs.classes(d, Mode::Nonclassical);
        let n = r.classes.len();
        got.push(format!("D={d}:{n}{}", if r.partial { " (partial)" } else { "" }));
        if exact {
            ensure(!r.partial && n == want, || format!("D={d}: {n} classes, want {want}"))?;
        } else {
            ensure(n >= want, || format!("D={d}: {n} classes, want at least {want}"))?;
        }
    }
    Ok(got.join(" "))
}

/// Listed forms as `alpha|c|eta`, with `c` the full xy coefficient.
fn listed(d: u64, mode: Mode) -> &'static [&'static str] {
    match (d, mode) {
        (2, Mode::Classical) => &["2+sqrt(2)|2|2-sqrt(2)"],
        (2, Mode::Nonclassical) => &[
            "1|sqrt(2)|1",
            "1|1|1",
            "2+sqrt(2)|2|2-sqrt(2)",
            "1|1+sqrt(2)|2+sqrt(2)",
            "1|1+sqrt(2)|2",
            "2+sqrt(2)|sqrt(2)|2-sqrt(2)",
            "2+sqrt(2)|1|2-sqrt(2)",
        ],
        (3, Mode::Classical) => &["2|2*sqrt(3)|2", "3+sqrt(3)|2*sqrt(3)|3-sqrt(3)", "5+2*sqrt(3)|6|5-sqrt(3)"],
        (3, Mode::Nonclassical) => &["1|sqrt(3)|1", "1|1+sqrt(3)|2+sqrt(3)", "1|1|1", "2+sqrt(3)|1|2-sqrt(3)"],
        (5, Mode::Classical) => &["2|2|3+sqrt(5)"],
        (5, Mode::Nonclassical) => &["1|1|(3+sqrt(5))/2", "1|1|1"],
        (6, Mode::Classical) => &[
            "2|2+2*sqrt(6)|4+sqrt(6)",
            "3+sqrt(6)|2|2",
            "2|2+2*sqrt(6)|6+2*sqrt(6)",
            "3+sqrt(6)|2|3-sqrt(6)",
            "4+sqrt(6)|2*sqrt(6)|4",
            "6+2*sqrt(6)|6|6-2*sqrt(6)",
            "6+2*sqrt(6)|6|6-sqrt(6)",
            "4+sqrt(6)|2*sqrt(6)|4-sqrt(6)",
            "4+sqrt(6)|10|12-3*sqrt(6)",
            "32+13*sqrt(6)|6+4*sqrt(6)|28-11*sqrt(6)",
            "4-sqrt(6)|2+2*sqrt(6)|8+3*sqrt(6)",
            "4-sqrt(6)|2+2*sqrt(6)|42+17*sqrt(6)",
            "4+sqrt(6)|10|14-4*sqrt(6)",
            "4+sqrt(6)|10|12-2*sqrt(6)",
        ],
        (21, Mode::Classical) => &[
            "2|3+sqrt(21)|5+sqrt(21)",
            "3|2+2*sqrt(21)|9+sqrt(21)",
            "2|2|(15+3*sqrt(21))/2",
            "5+sqrt(21)|2|3",
            "2|3+sqrt(21)|37+8*sqrt(21)",
            "5+sqrt(21)|3+sqrt(21)|(17+3*sqrt(21))/2",
            "4|4+2*sqrt(21)|7+sqrt(21)",
            "(33+7*sqrt(21))/2|9+3*sqrt(21)|9-sqrt(21)",
            "(33+7*sqrt(21))/2|8+2*sqrt(21)|7-sqrt(21)",
            "78+17*sqrt(21)|8+2*sqrt(21)|28-6*sqrt(21)",
            "19+4*sqrt(21)|7+3*sqrt(21)|(29-5*sqrt(21))/2",
        ],
        _ => &[],
    }
}

/// The listed forms and the engine classes match one to one up to equivalence.
fn criterion3(runs: &mut Runs) -> Check {
    let cases = [
        (2, Mode::Classical),
        (2, Mode::Nonclassical),
        (3, Mode::Classical),
        (3, Mode::Nonclassical),
        (5, Mode::Classical),
        (5, Mode::Nonclassical),
        (6, Mode::Classical),
        (21, Mode::Classical),
    ];
    let mut total = 0;
    for (d, mode) in cases {
        let k = ctx(d as i64);
        let engine = runs.classes(d, mode).forms(&k);
        let mut hit = vec![false; engine.len()];
        for s in listed(d, mode) {
            let q = BinaryForm::parse(&k, s).map_err(|e| format!("D={d} {s}: {e}"))?;
            let i = engine
                .iter()
                .position(|h| are_equivalent(h, &q).unwrap().is_some())
                .ok_or_else(|| format!("D={d} {mode}: {s} matches no class"))?;
            ensure(!hit[i], || format!("D={d} {mode}: {s} repeats class {}", engine[i]))?;
            hit[i] = true;
        }
        ensure(hit.iter().all(|&h| h), || format!("D={d} {mode}: engine has unlisted classes"))?;
        total += hit.len();
    }
    Ok(format!("{total} listed forms matched one to one across 8 tables"))
}

fn criterion4() -> Check {
    let want = [
        (2, "17/4", "4/(2*sqrt(6)-3)", "176/75+(64/75)*sqrt(6)"),
        (3, "6", "4", "16"),
        (5, "5", "4/sqrt(5)", "16/5"),
        (6, "25/4", "5", "25"),
        (21, "7", "16/3", "256/9"),
    ];
    for (d, c, g, g2) in want {
        let k = ctx(d);
        let cc = indecomp::ser::to_string(k.dominance_c());
        let h = k.hermite2();
        ensure(cc == c, || format!("D={d}: C = {cc}, want {c}"))?;
        ensure(h.display == g, || format!("D={d}: gamma = {}, want {g}", h.display))?;
        ensure(h.squared.to_string() == g2, || format!("D={d}: gamma^2 = {}, want {g2}", h.squared))?;
    }
    Ok("C and gamma exact for D=2,3,5,6,21".into())
}

fn criterion5(runs: &mut Runs) -> Check {
    let cases = [
        (2, Mode::Classical, 12),
        (2, Mode::Nonclassical, 24),
        (3, Mode::Classical, 22),
        (3, Mode::Nonclassical, 30),
        (5, Mode::Classical, 7),
        (5, Mode::Nonclassical, 11),
        (6, Mode::Classical, 58),
        (21, Mode::Classical, 40),
    ];
    let mut lines = Vec::new();
    let mut bad = Vec::new();
    for (d, mode, want) in cases {
        let k = ctx(d as i64);
        let inputs = BoundInputs::new(&k, mode);
        let classes = runs.classes(d, mode).clone();
        let census = runs.census(d, mode).clone();
        let det_sum = universal::upper_bound_42(&k, &inputs, &classes).map_err(|e| e.to_string())?;
        let cen = universal::upper_bound_41(&inputs, Some(census.classes.len() as u64), None).map_err(|e| e.to_string())?;
        let refined = universal::upper_bound_refined(&k, &inputs, &classes, &census, &RefineBudget::default())
            .map_err(|e| e.to_string())?;
        for b in [&det_sum, &cen, &refined] {
            ensure(b.recompute().as_ref() == Some(&b.value), || format!("D={d} {mode}: audit does not reproduce {:?}", b.kind))?;
        }
        let incomplete = refined.flags.iter().any(|f| f == "refinement-incomplete");
        let w = BigInt::from(want);
        let tag = format!(
            "D={d} {mode}: refined {}{} census {} det-sum {} want {want}",
            refined.value,
            if incomplete { " (refinement incomplete)" } else { "" },
            cen.value,
            det_sum.value
        );
        let hard = d <= 5;
        if refined.value != w || (incomplete && hard) {
            if incomplete && !hard {
                lines.push(format!("{tag} [soft]"));
            } else {
                bad.push(tag);
            }
        } else {
            lines.push(format!("D={d} {mode}:{}", refined.value));
        }
    }
    if bad.is_empty() {
        Ok(lines.join(" "))
    } else {
        Err(format!("{}; matched: {}", bad.join("; "), lines.join(" ")))
    }
}

fn criterion6() -> Check {
    let mut classical = 0;
    let mut nonclassical = 0;
    for d in square_free_up_to(200) {
        let k = ctx(d);
        let special = d % 4 == 1 && d < 17 && d != 5 && d != 13;
        match family::classical_existence_form(&k) {
            Some((label, q)) => {
                let r = is_additively_indecomposable(&q, Mode::Classical).map_err(|e| format!("D={d}: {e}"))?;
                ensure(r.indecomposable, || format!("D={d} {label}: {q} decomposes"))?;
                ensure(q.det().norm() != BigRational::from_integer(0.into()), || format!("D={d}: zero determinant"))?;
                classical += 1;
            }
            None => ensure(special, || format!("D={d}: no classical form"))?,
        }
        for (label, q) in family::nonclassical_existence_forms(&k) {
            let r = is_additively_indecomposable(&q, Mode::Nonclassical).map_err(|e| format!("D={d}: {e}"))?;
            ensure(r.indecomposable, || format!("D={d} {label}: {q} decomposes"))?;
            nonclassical += 1;
        }
    }
    Ok(format!("{classical} classical and {nonclassical} non-classical forms indecomposable for square-free D <= 200"))
}

fn criterion7() -> Check {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut seen = Vec::new();
    while seen.len() < 50 {
        let d: i64 = rng.gen_range(2..=10_000);
        if !common::is_square_free(d) || seen.contains(&d) {
            continue;
        }
        let k = ctx(d);
        let q = BinaryForm::from_i64(&k, (1, 0, 1), (1, 0, 1), (1, 0, 1)).unwrap();
        let r = is_additively_indecomposable(&q, Mode::Nonclassical).map_err(|e| format!("D={d}: {e}"))?;
        ensure(r.indecomposable, || format!("D={d}: x^2+xy+y^2 decomposes"))?;
        seen.push(d);
    }
    Ok(format!("50 random square-free D up to 10^4, largest {}", seen.iter().max().unwrap()))
}

fn criterion8() -> Check {
    let mut got = Vec::new();
    for (m, want) in [(3, 6), (5, 15)] {
        let r = family::family_m2p1(m).map_err(|e| e.to_string())?;
        let k = ctx(r.d);
        let forms: Vec<BinaryForm> = r.members.iter().map(|x| x.form(&k)).collect();
        for (i, q) in forms.iter().enumerate() {
            let ind = is_additively_indecomposable(q, Mode::Classical).map_err(|e| e.to_string())?;
            ensure(ind.indecomposable, || format!("m={m}: {q} decomposes"))?;
            for h in &forms[..i] {
                ensure(are_equivalent(q, h).unwrap().is_none(), || format!("m={m}: {q} ~ {h}"))?;
            }
        }
        ensure(forms.len() >= want, || format!("m={m}: {} forms, want {want}", forms.len()))?;
        got.push(format!("m={m}:{}", forms.len()));
    }
    let k = ctx(10);
    let delta = universal::family_delta(&k, 3);
    let count = universal::r_set_count(&k, &delta, &delta.conj(), Mode::Classical).map_err(|e| e.to_string())?;
    ensure(count >= 67, || format!("#R = {count}, want at least 67"))?;
    got.push(format!("#R(m=3)={count}"));
    Ok(got.join(" "))
}

/// Engine and sweep agree on classes with `N(det) <= 30`.
fn brute_agreement() -> Check {
    let mut got = Vec::new();
    for d in [2, 3, 5] {
        let k = ctx(d);
        for mode in MODES {
            let e = engine_classes(&k, mode, 30);
            let b = brute_classes(&k, mode, 30, 12);
            compare_classes(&e, &b).map_err(|m| format!("D={d} {mode}: {m}"))?;
            got.push(e.len().to_string());
        }
    }
    Ok(format!("sweep agrees ({})", got.join(",")))
}

/// Every totally positive integer of norm at most the discriminant, one per unit-square class,
/// is indecomposable exactly when it lies in the semiconvergent set.
fn integer_agreement() -> Check {
    let mut checked = 0;
    for d in square_free_up_to(30) {
        let k = ctx(d);
        let set = indecomposables(&k);
        let disc = BigRational::from_integer(BigInt::from(k.discriminant()));
        for e in &set.representatives {
            ensure(e.value.norm() <= disc, || format!("D={d}: {} exceeds the discriminant", e.value))?;
        }
        // Unit squares scale the embedding ratio by powers of w^2, w = eps_plus^2 or eps_plus in
        // the first embedding as N(eps) = 1 or -1, so each class meets the ratio window [1/w, w].
        let e1 = k.eps_plus().to_f64_at(Embedding::First);
        let w = if k.fund_unit_norm() == 1 { e1 * e1 } else { e1 };
        let n = k.discriminant() as f64;
        let mut met = vec![false; set.len()];
        for x in under_hyperbola(&k, n, (n * w).sqrt() + 1.0) {
            let brute = !int_decomposable(&k, &x);
            let split = decompose_integer(&k, &x).unwrap();
            if let Some((y, z)) = &split {
                ensure(y.is_totally_positive() && z.is_totally_positive() && y + z == x, || format!("D={d}: bad split of {x}"))?;
            }
            let rep = k.reduce_mod_unit_squares(&x);
            let pos = set.representatives.iter().position(|e| e.value == rep);
            ensure(brute == split.is_none(), || format!("D={d}: decompose_integer disagrees at {x}"))?;
            ensure(brute == pos.is_some(), || format!("D={d}: semiconvergent set disagrees at {x}"))?;
            if let Some(i) = pos {
                met[i] = true;
            }
            checked += 1;
        }
        ensure(met.iter().all(|&m| m), || format!("D={d}: a semiconvergent class was not met by the sweep"))?;
    }
    Ok(format!("{checked} integers for square-free D <= 30"))
}

/// Recomputes every reported minimum with four times the certified trace bound.
fn min_norm_recheck(runs: &mut Runs) -> Check {
    let mut checked = 0;
    let keys: Vec<(u64, &'static str)> = runs.classes.keys().copied().collect();
    for key in keys {
        let r = runs.classes[&key].clone();
        let k = ctx(r.d as i64);
        for c in &r.classes {
            let q = c.form(&k).map_err(|e| e.to_string())?;
            let (a, b) = (q.alpha().norm(), q.eta().norm());
            let t = trace_bound_for_norm(&k, if a < b { &a } else { &b }) * BigRational::from_integer(4.into());
            let best = vectors_by_trace(&q, &t, TraceMode::AtMost)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|(x, y)| q.eval(x, y).norm())
                .min()
                .ok_or_else(|| format!("{q}: no vectors"))?;
            ensure(best == c.min_norm, || format!("{q}: reported minimum {}, found {best}", c.min_norm))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} minima"))
}

/// Every emitted middle coefficient yields an integral `eta`, and for small `N(J alpha)` every
/// admissible residue is emitted up to sign.
fn beta_integrality() -> Check {
    let mut emitted = 0;
    let mut residues = 0;
    for d in [2u64, 3, 5, 6, 21] {
        let k = ctx(d as i64);
        for mode in MODES {
            let j = BigInt::from(mode.j());
            let j2 = BigInt::from(mode.j() * mode.j());
            let bound = classify::default_det_bound(&k);
            for psi in classify::det_candidates(&k, mode, &bound) {
                for alpha in classify::min_candidates(&k, &psi) {
                    let ja = alpha.mul_int(&j);
                    let betas = classify::beta_candidates(&k, &psi, &alpha, mode);
                    let eta_of = |b: &indecomp::QNum| (&psi.mul_int(&j2) + &b.square()).div(&alpha.mul_int(&j2)).unwrap();
                    for b in &betas {
                        ensure(b.is_integral() && eta_of(b).is_integral(), || format!("D={d} {mode}: psi={psi} alpha={alpha} beta={b}"))?;
                        emitted += 1;
                    }
                    let n = ja.norm().to_integer();
                    if n > BigInt::from(60) {
                        continue;
                    }
                    let n: i64 = n.try_into().unwrap();
                    for p in 0..n {
                        for q in 0..n {
                            let b = indecomp::QNum::from_coords_i64(d, p, q);
                            if !eta_of(&b).is_integral() {
                                continue;
                            }
                            let covered = betas.iter().any(|c| {
                                (&b - c).div(&ja).unwrap().is_integral() || (&b + c).div(&ja).unwrap().is_integral()
                            });
                            ensure(covered, || format!("D={d} {mode}: psi={psi} alpha={alpha}: residue {b} missing"))?;
                            residues += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{emitted} emitted betas integral, {residues} residues covered"))
}

fn criterion9(runs: &mut Runs) -> Check {
    let parts = [
        brute_agreement()?,
        integer_agreement()?,
        min_norm_recheck(runs)?,
        beta_integrality()?,
    ];
    Ok(parts.join("; "))
}

fn main() -> ExitCode {
    let mut runs = Runs::default();
    let checks: Vec<Criterion> = vec![
        (1, Box::new(criterion1)),
        (2, Box::new(criterion2)),
        (3, Box::new(criterion3)),
        (4, Box::new(|_| criterion4())),
        (5, Box::new(criterion5)),
        (6, Box::new(|_| criterion6())),
        (7, Box::new(|_| criterion7())),
        (8, Box::new(|_| criterion8())),
        (9, Box::new(criterion9)),
    ];
    let mut failed = 0;
    for (n, f) in checks {
        let t = Instant::now();
        let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(&mut runs)))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panic".into())));
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {n}: PASS {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL {msg} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
