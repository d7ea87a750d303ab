// SPDX-License-Identifier: Apache-2.0

//! `indecomp`: command-line front end for the classification engine.

mod commands;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "indecomp", version, about = "Indecomposable binary quadratic forms over real quadratic fields")]
pub struct Cli {
    /// Worker threads; 0 uses all logical cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Classical,
    Nonclassical,
}

impl From<ModeArg> for indecomp::Mode {
    fn from(m: ModeArg) -> indecomp::Mode {
        match m {
            ModeArg::Classical => indecomp::Mode::Classical,
            ModeArg::Nonclassical => indecomp::Mode::Nonclassical,
        }
    }
}

#[derive(Args, Debug)]
pub struct FieldArg {
    /// Square-free D > 1.
    #[arg(long = "d", allow_negative_numbers = true)]
    pub d: i64,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub field: FieldArg,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Rational bound on N(det), replacing gamma^2 C^2.
    #[arg(long)]
    pub det_bound: Option<String>,
    /// Seconds before the run stops and reports partial results.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Write the JSON report to this path; `-` writes to stdout.
    #[arg(long)]
    pub json: Option<String>,
    /// Resume from a state file or a partial JSON report.
    #[arg(long)]
    pub resume: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Field constants.
    Context {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long)]
        json: bool,
    },
    /// Indecomposable integers up to squares of units.
    Indecomposables {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long)]
        json: bool,
    },
    /// Additively indecomposable forms up to equivalence.
    Classify(ClassifyArgs),
    /// Forms with no rank-one splitting and N(det) below the bound, up to equivalence.
    Census(ClassifyArgs),
    /// Decides additive indecomposability of one form.
    CheckForm {
        #[command(flatten)]
        field: FieldArg,
        /// `alpha|c|eta`
        #[arg(long)]
        form: String,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        witness: bool,
    },
    /// Decides equivalence of two forms.
    Equivalent {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Upper and lower bounds on the rank of binary-universal forms.
    UniversalBounds {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Codifferent elements for the lower-bound count; give one or two.
        #[arg(long)]
        delta: Vec<String>,
        /// Overrides g(2).
        #[arg(long)]
        g: Option<u64>,
        /// Rational C_BI; enables the census branch with that determinant bound.
        #[arg(long)]
        c_bi: Option<String>,
        /// Seconds allowed for each classification run.
        #[arg(long)]
        timeout: Option<f64>,
        /// Seconds allowed for the refinement search.
        #[arg(long, default_value_t = 600.0)]
        refine_timeout: f64,
        /// Skips the classification runs and reports lower bounds only.
        #[arg(long)]
        lower_only: bool,
    },
    /// Pairwise inequivalent indecomposable forms over Q(sqrt(m^2 + 1)).
    Family {
        #[arg(long)]
        m: i64,
    },
    /// At least n inequivalent indecomposable forms with one determinant.
    FixedDetDemo {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = indecomp::family::FIXED_DET_MAX_S)]
        max_s: usize,
    },
    /// Minimum of N(Q(v)) over nonzero integral v.
    EnumMin {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long)]
        form: String,
    },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let err = CliError::invalid("Usage", e.to_string().trim_end());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit as u8);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
        let err = CliError::invalid("ThreadPool", e.to_string());
        eprintln!("{}", err.to_json());
        return ExitCode::from(err.exit as u8);
    }
    match commands::run(cli.command, argv[1..].to_vec()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit as u8)
        }
    }
}
