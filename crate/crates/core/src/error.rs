use thiserror::Error;

use crate::harmonic::SolverReport;
use crate::variation::StencilGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("tangent vectors are based at different points")]
    BaseMismatch,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate triangle at face {face} (quality {quality:.3e})")]
    DegenerateFace { face: usize, quality: f64 },
    #[error("degenerate structure: |u·mu| = {0} >= 1")]
    DegenerateStructure(f64),
    #[error("stencil leaves the family disk (|u| = {at}, radius {radius})")]
    OutsideDisk { at: f64, radius: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("map is not harmonic: gradient norm {grad:.3e} exceeds {limit:.3e}")]
    NotHarmonic { grad: f64, limit: f64 },
    #[error(
        "solver did not converge: {} iterations, gradient norm {:.3e}",
        .0.iterations,
        .0.grad_norm
    )]
    NotConverged(Box<SolverReport>),
    #[error("stencil node {node:?} failed: {source}")]
    StencilNode {
        node: [i32; 2],
        #[source]
        source: Box<Error>,
        /// Nodes solved before the failure.
        partial: Option<Box<StencilGrid>>,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

/// Pipeline stage of a scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Build,
    Solve,
    Stencil,
    Ledger,
    Diagnostics,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Build => "build",
            Stage::Solve => "solve",
            Stage::Stencil => "stencil",
            Stage::Ledger => "ledger",
            Stage::Diagnostics => "diagnostics",
        })
    }
}

impl Error {
    pub fn at(self, stage: Stage) -> Error {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage { stage, source: Box::new(other) },
        }
    }

    /// The error underneath any stage wrapper.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
