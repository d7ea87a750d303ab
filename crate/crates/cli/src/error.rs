// SPDX-License-Identifier: Apache-2.0

//! Errors with machine-readable codes and exit statuses.

use indecomp::classify::ClassifyError;
use indecomp::family::FamilyError;
use indecomp::indec::DecomposeError;
use indecomp::universal::UniversalError;
use indecomp::{FieldError, FormError};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Serialize)]
pub struct CliError {
    pub code: String,
    pub message: String,
    #[serde(skip)]
    pub exit: i32,
}

impl CliError {
    pub fn invalid(code: &str, message: impl Into<String>) -> CliError {
        CliError { code: code.into(), message: message.into(), exit: EXIT_INVALID }
    }

    pub fn invariant(message: impl Into<String>) -> CliError {
        CliError { code: "InvariantViolation".into(), message: message.into(), exit: EXIT_INVARIANT }
    }

    pub fn io(path: &str, e: std::io::Error) -> CliError {
        CliError::invalid("Io", format!("{path}: {e}"))
    }

    /// `{"error": {"code": ..., "message": ..., "exit": ...}}`
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "code": self.code, "message": self.message, "exit": self.exit } }).to_string()
    }
}

fn field_code(e: &FieldError) -> &'static str {
    match e {
        FieldError::NotSquareFree(_) => "NotSquareFree",
        FieldError::DTooSmall(_) => "DTooSmall",
        FieldError::MixedFields(..) => "MixedFields",
        FieldError::DivisionByZero => "DivisionByZero",
        FieldError::NotIntegral(_) => "NotIntegral",
        FieldError::Parse(_) => "Parse",
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> CliError {
        CliError::invalid(field_code(&e), e.to_string())
    }
}

impl From<FormError> for CliError {
    fn from(e: FormError) -> CliError {
        let code = match &e {
            FormError::NotIntegral(_) => "NotIntegral",
            FormError::NotDefinite => "NotDefinite",
            FormError::NotClassical => "NotClassical",
            FormError::ModeMismatch => "ModeMismatch",
            FormError::Parse(_) => "Parse",
            FormError::Field(f) => field_code(f),
        };
        CliError::invalid(code, e.to_string())
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> CliError {
        match e {
            ClassifyError::Form(f) => f.into(),
            ClassifyError::Resume(m) => CliError::invalid("ResumeMismatch", m),
            ClassifyError::Invariant(m) => CliError::invariant(m),
        }
    }
}

impl From<DecomposeError> for CliError {
    fn from(e: DecomposeError) -> CliError {
        CliError::invalid("Decompose", e.to_string())
    }
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> CliError {
        match e {
            FamilyError::NotOdd(_) => CliError::invalid("NotOdd", e.to_string()),
            FamilyError::NotSquareFree(_) => CliError::invalid("NotSquareFree", e.to_string()),
            FamilyError::BudgetExceeded { .. } => {
                CliError { code: "BudgetExceeded".into(), message: e.to_string(), exit: EXIT_PARTIAL }
            }
            FamilyError::Certification(m) => CliError::invariant(m),
            FamilyError::Field(f) => f.into(),
            FamilyError::Form(f) => f.into(),
        }
    }
}

impl From<UniversalError> for CliError {
    fn from(e: UniversalError) -> CliError {
        let code = match &e {
            UniversalError::MissingCensus => "MissingCensus",
            UniversalError::PartialClassification | UniversalError::PartialCensus => {
                return CliError { code: "Partial".into(), message: e.to_string(), exit: EXIT_PARTIAL };
            }
            UniversalError::CountTooSmall(_) => "CountTooSmall",
            UniversalError::NotCodifferent(_) => "NotCodifferent",
            UniversalError::NotTotallyPositive(_) => "NotTotallyPositive",
            UniversalError::ReportMismatch(..) => "ReportMismatch",
            UniversalError::Invariant(m) => return CliError::invariant(m.clone()),
            UniversalError::Classify(_) | UniversalError::Form(_) | UniversalError::Field(_) => {
                return match e {
                    UniversalError::Classify(c) => c.into(),
                    UniversalError::Form(f) => f.into(),
                    UniversalError::Field(f) => f.into(),
                    _ => unreachable!(),
                };
            }
        };
        CliError::invalid(code, e.to_string())
    }
}
