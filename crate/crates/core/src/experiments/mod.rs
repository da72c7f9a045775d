//! Experiment harnesses: the identity suite, remainder-scaling regressions,
//! norm estimates, single expansions, and their CSV and JSON reports.
//!
//! Every harness reads an [`ExperimentConfig`], simulates path `i` of the
//! ensemble from `derive_seed(seed, i)`, and reduces per-path results in
//! path order, so reports do not depend on the number of worker threads.

mod config;
mod ensemble;
mod expansion;
mod identities;
mod norms;
mod report;
mod scaling;


use serde::Serialize;

pub use config::{ExperimentConfig, TargetKind, MIN_DELTA_STEPS, MIN_REFINEMENT_PATHS, MIN_STATISTICAL_PATHS};
pub use expansion::{run_expansion, ExpansionReport, ExpansionRequest};
pub use identities::{run_identity_suite, CheckKind, CheckStatus, IdentityCheck, IdentityReport};
pub use norms::{estimate_norms, NormEntry, NormReport};
pub use report::{write_report, CsvRow, Report};
pub use scaling::{run_scaling, FitStatus, LevyGap, ScalingReport, ScalingRow, Sign, SlopeFit, StrideCheck};

use crate::error::Result;
use crate::functionals::{field_by_name, functional_by_name, FrozenFieldFunctional, PathFunctional, RandomField};
use crate::spde::{spde_case_by_name, SpdeCase};

/// Version string written into every report.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Simulation grid as recorded in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub horizon: f64,
    pub steps: usize,
    pub dt: f64,
}

/// What a report was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub code_version: String,
    pub seed: u64,
    pub grid: GridInfo,
    pub config: ExperimentConfig,
}

impl Provenance {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let grid = cfg.grid()?;
        Ok(Self {
            code_version: CODE_VERSION.to_string(),
            seed: cfg.seed,
            grid: GridInfo { horizon: grid.horizon(), steps: grid.steps(), dt: grid.dt() },
            config: cfg.clone(),
        })
    }
}

/// The object named by `cfg.target`.
pub(crate) enum Target {
    Functional(Box<dyn PathFunctional>),
    Field(Box<dyn RandomField>),
    Spde(SpdeCase),
}

impl Target {
    pub(crate) fn load(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(match cfg.kind {
            TargetKind::Functional => Target::Functional(functional_by_name(&cfg.target)?),
            TargetKind::Field => Target::Field(field_by_name(&cfg.target)?),
            TargetKind::Spde => Target::Spde(spde_case_by_name(&cfg.target)?),
        })
    }

    /// Driver dimension.
    pub(crate) fn dim(&self) -> usize {
        match self {
            Target::Functional(u) => u.dim(),
            Target::Field(u) => u.dim(),
            Target::Spde(case) => case.solution.dim(),
        }
    }

    /// The target as a path functional; fields are frozen at `x = 0.5`.
    pub(crate) fn as_functional(&self, cfg: &ExperimentConfig) -> Result<Box<dyn PathFunctional>> {
        match self {
            Target::Functional(_) => functional_by_name(&cfg.target),
            Target::Field(u) => Ok(Box::new(FrozenFieldFunctional::new(field_by_name(&cfg.target)?, vec![0.5; u.spatial_dim()]))),
            Target::Spde(case) => {
                let again = spde_case_by_name(&case.name)?;
                Ok(Box::new(FrozenFieldFunctional::new(again.solution, vec![0.5; case.solution.spatial_dim()])))
            }
        }
    }
}
