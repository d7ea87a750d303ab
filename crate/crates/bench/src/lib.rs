// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the engine benchmarks.

use indecomp::{BinaryForm, FieldContext, Mode};

pub fn field(d: i64) -> FieldContext {
    FieldContext::new(d).expect("square-free D > 1")
}

pub fn form(ctx: &FieldContext, literal: &str) -> BinaryForm {
    BinaryForm::parse(ctx, literal).expect("valid form literal")
}

/// Indecomposable forms with their modes, one per field, of growing size.
pub fn indecomposable_forms() -> Vec<(&'static str, BinaryForm, Mode)> {
    let cases = [
        ("d2-nc", 2, "2+sqrt(2)|1|2-sqrt(2)", Mode::Nonclassical),
        ("d6-c", 6, "32+13*sqrt(6)|6+4*sqrt(6)|28-11*sqrt(6)", Mode::Classical),
        ("d21-c", 21, "19+4*sqrt(21)|7+3*sqrt(21)|(29-5*sqrt(21))/2", Mode::Classical),
    ];
    cases.into_iter().map(|(name, d, s, m)| (name, form(&field(d), s), m)).collect()
}

/// Field sizes for context construction: small units, a large unit, a long period.
pub const CONTEXT_FIELDS: [i64; 3] = [21, 73, 9973];

/// `(D, mode)` pairs whose full classification takes well under a second.
pub const CLASSIFY_CASES: [(i64, Mode); 3] = [(2, Mode::Classical), (5, Mode::Nonclassical), (3, Mode::Classical)];
