// SPDX-License-Identifier: Apache-2.0

//! Exact arithmetic in real quadratic fields and classification of additively indecomposable
//! binary quadratic forms.

pub mod classify;
pub mod enumerate;
pub mod equiv;
pub mod family;
pub mod field;
pub mod forms;
pub mod indec;
pub mod ser;
pub mod universal;
pub(crate) mod split;

pub use field::{Embedding, FieldContext, FieldError, HermiteConstant, HermiteSource, QNum, QuadReal};
pub use forms::{BinaryForm, DecompositionWitness, FormError, Mode, WitnessKind};
pub use indec::{IndecSet, PeriodicCF};
pub use classify::{classify, ClassificationReport, ClassifyOptions, Predicate};
pub use equiv::{are_equivalent, UnimodularWitness};

/// Engine version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
