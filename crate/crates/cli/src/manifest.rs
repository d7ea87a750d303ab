// SPDX-License-Identifier: Apache-2.0

//! Run manifests embedded in every JSON output.

use std::time::Instant;

use indecomp::{ser, FieldContext};
use serde::Serialize;

/// Field constants a run depended on.
#[derive(Debug, Serialize)]
pub struct Constants {
    pub d: u64,
    pub dominance_c: String,
    pub gamma2: String,
    pub gamma2_squared: String,
    pub gamma_source: indecomp::HermiteSource,
}

impl Constants {
    pub fn of(ctx: &FieldContext) -> Constants {
        let h = ctx.hermite2();
        Constants {
            d: ctx.d(),
            dominance_c: ser::to_string(ctx.dominance_c()),
            gamma2: h.display.clone(),
            gamma2_squared: h.squared.to_string(),
            gamma_source: h.source.clone(),
        }
    }
}

/// Everything needed to replay a run. Only `wall_time_ms` varies between identical runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub engine_version: &'static str,
    pub constants: Option<Constants>,
    pub jobs: usize,
    pub partial: bool,
    /// Core searches are deterministic; no seed is drawn.
    pub seed: Option<u64>,
    pub wall_time_ms: u64,
}

pub struct Recorder {
    command: String,
    argv: Vec<String>,
    start: Instant,
}

impl Recorder {
    pub fn start(command: &str, argv: Vec<String>) -> Recorder {
        Recorder { command: command.to_string(), argv, start: Instant::now() }
    }

    pub fn finish(&self, ctx: Option<&FieldContext>, partial: bool) -> RunManifest {
        RunManifest {
            command: self.command.clone(),
            argv: self.argv.clone(),
            engine_version: indecomp::VERSION,
            constants: ctx.map(Constants::of),
            jobs: rayon::current_num_threads(),
            partial,
            seed: None,
            wall_time_ms: self.start.elapsed().as_millis() as u64,
        }
    }
}
