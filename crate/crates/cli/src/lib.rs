//! Scenario runner: configuration, execution and flat-file persistence.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::time::Instant;

use pshlab_core::harmonic::{EquivariantMap, SolverReport};
use pshlab_core::scenario::{certify_from, solve_center, study_levels, MuSource, ScenarioSpec, Study};
use pshlab_core::variation::{PshCertificate, StencilGrid, Verdict};
use pshlab_core::Error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::ScenarioConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CERTIFICATE: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const CONFIG: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => exit::CONFIG,
            CliError::Run(e) => match e.root() {
                Error::NotConverged(_) | Error::NotHarmonic { .. } | Error::StencilNode { .. } => exit::SOLVER,
                _ => exit::CONFIG,
            },
        }
    }

    /// Stencil nodes solved before a failure, when there are any.
    pub fn partial_grid(&self) -> Option<&StencilGrid> {
        match self {
            CliError::Run(e) => match e.root() {
                Error::StencilNode { partial: Some(g), .. } => Some(g),
                _ => None,
            },
            _ => None,
        }
    }
}

/// Everything a certify run produces, minus the bulky grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub tool_version: String,
    pub config_hash: String,
    pub mu: MuSource,
    pub study: Study,
    pub certificate: PshCertificate,
    pub solver_reports: Vec<SolverReport>,
    /// Wall-clock seconds per stage; not part of [`ResultRecord::digest`].
    pub timings: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct Certified<'a> {
    tool_version: &'a str,
    config_hash: &'a str,
    mu: &'a MuSource,
    study: &'a Study,
    certificate: &'a PshCertificate,
    solver_reports: &'a [SolverReport],
}

impl ResultRecord {
    /// SHA-256 of every certified number; identical runs give identical
    /// digests.
    pub fn digest(&self) -> String {
        let c = Certified {
            tool_version: &self.tool_version,
            config_hash: &self.config_hash,
            mu: &self.mu,
            study: &self.study,
            certificate: &self.certificate,
            solver_reports: &self.solver_reports,
        };
        hex::encode(Sha256::digest(serde_json::to_vec(&c).expect("record serializes")))
    }

    pub fn passed(&self) -> bool {
        self.certificate.passed()
    }

    pub fn failures(&self) -> Vec<String> {
        match &self.certificate.verdict {
            Verdict::Fail(f) => f.clone(),
            Verdict::Uncertified => vec!["uncertified".into()],
            Verdict::Pass => Vec::new(),
        }
    }
}

fn record(cfg: &ScenarioConfig, spec: &ScenarioSpec, study: Study, seconds: f64) -> ResultRecord {
    let solver_reports = study.levels.iter().map(|l| l.solver.clone()).collect();
    let mut timings = BTreeMap::new();
    timings.insert("study".to_string(), seconds);
    ResultRecord {
        tool_version: VERSION.to_string(),
        config_hash: cfg.hash(),
        mu: spec.mu.clone(),
        certificate: study.certificate.clone(),
        study,
        solver_reports,
        timings,
    }
}

/// Build, solve, stencil, ledger and diagnostics at two levels, then certify.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(ResultRecord, StencilGrid), CliError> {
    cfg.check()?;
    let start = Instant::now();
    let (study, grid) = certify_from(&cfg.scenario, None)?;
    Ok((record(cfg, &cfg.scenario, study, start.elapsed().as_secs_f64()), grid))
}

/// One row of a sweep summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub direction: String,
    pub delta_e: f64,
    pub budget: f64,
    pub verdict: String,
}

/// Certifies every direction of the sweep. The centre solves do not depend
/// on the direction and are shared; directions run on up to `jobs` workers.
pub fn sweep(cfg: &ScenarioConfig, jobs: usize) -> Result<Vec<ResultRecord>, CliError> {
    cfg.check()?;
    let start = Instant::now();
    let levels = study_levels(&cfg.scenario);
    let centers: [(EquivariantMap, SolverReport); 2] =
        [solve_center(&cfg.scenario, levels[0])?, solve_center(&cfg.scenario, levels[1])?];
    let shared = start.elapsed().as_secs_f64();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start workers: {e}")))?;
    let runs: Vec<Result<ResultRecord, CliError>> = pool.install(|| {
        cfg.sweep_directions()
            .par_iter()
            .map(|dir| {
                let spec = ScenarioSpec { mu: MuSource::Generator(dir.clone()), ..cfg.scenario.clone() };
                let t = Instant::now();
                let (study, _) = certify_from(&spec, Some(&centers))?;
                let mut rec = record(cfg, &spec, study, t.elapsed().as_secs_f64());
                rec.timings.insert("shared_center".to_string(), shared);
                Ok(rec)
            })
            .collect()
    });
    runs.into_iter().collect()
}

pub fn sweep_summary(records: &[ResultRecord]) -> Vec<SweepRow> {
    records
        .iter()
        .map(|r| SweepRow {
            direction: match &r.mu {
                MuSource::Generator(s) => s.clone(),
                MuSource::PerFace(v) => format!("per-face[{}]", v.len()),
            },
            delta_e: r.certificate.delta_e,
            budget: r.certificate.budget.unwrap_or(f64::NAN),
            verdict: if r.passed() { "PASS".into() } else { "FAIL".into() },
        })
        .collect()
}

/// Worker cap from `PSHLAB_THREADS`, if set.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("PSHLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("PSHLAB_THREADS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}
