//! Single expansions on one member of the ensemble, for inspection.

use serde::Serialize;

use super::config::ExperimentConfig;
use super::ensemble::{member_path, member_seed};
use super::report::{CsvRow, Report};
use super::{Provenance, Target};
use crate::error::{Error, Result};
use crate::spde::spde_expand_with;
use crate::taylor::{expand_field_with, expand_with, ExpansionOptions, ExpansionQuery, ExpansionResult};

/// Where to expand: base time, signed offset and (for fields) the spatial
/// base point and offset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionRequest {
    pub t: f64,
    pub delta: f64,
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    /// Ensemble member whose path is used.
    pub path_index: usize,
}

/// Result of [`run_expansion`]: one expansion per configured variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub provenance: Provenance,
    pub request: ExpansionRequest,
    pub path_seed: u64,
    pub results: Vec<ExpansionResult>,
}

/// Expands the configured target at order `m` for every configured variant.
pub fn run_expansion(cfg: &ExperimentConfig, request: &ExpansionRequest) -> Result<ExpansionReport> {
    cfg.validate_common()?;
    let grid = cfg.grid()?;
    let target = Target::load(cfg)?;
    let path = member_path(cfg.seed, grid, target.dim(), request.path_index)?;
    let mut results = Vec::new();
    for &variant in &cfg.variants {
        let opts = ExpansionOptions { variant, ..Default::default() };
        let result = match &target {
            Target::Functional(u) => {
                if !request.x.is_empty() || !request.h.is_empty() {
                    return Err(Error::Query("path functionals take no spatial point or offset".into()));
                }
                expand_with(u.as_ref(), &path, &ExpansionQuery::new(request.t, request.delta, cfg.m), &opts)?
            }
            Target::Field(u) => {
                let q = ExpansionQuery::field(request.t, request.x.clone(), request.delta, request.h.clone(), cfg.m);
                expand_field_with(u.as_ref(), &path, &q, &opts)?
            }
            Target::Spde(case) => {
                let q = ExpansionQuery::field(request.t, request.x.clone(), request.delta, request.h.clone(), cfg.m);
                spde_expand_with(&case.coefficients, case.solution.as_ref(), &path, &q, &opts)?
            }
        };
        results.push(result);
    }
    Ok(ExpansionReport {
        provenance: Provenance::new(cfg)?,
        request: request.clone(),
        path_seed: member_seed(cfg.seed, request.path_index),
        results,
    })
}

impl ExpansionReport {
    /// A plain-text table of the terms of every result.
    pub fn table(&self) -> String {
        let mut s = String::new();
        for r in &self.results {
            s.push_str(&format!(
                "{} expansion of order {} at t = {}, δ = {}{}\n",
                variant_name(r),
                r.query.m,
                r.query.t,
                r.query.delta,
                if r.query.x.is_empty() { String::new() } else { format!(", x = {:?}, h = {:?}", r.query.x, r.query.h) }
            ));
            s.push_str(&format!("{:<28} {:>14} {:>14} {:>12} {:>14}\n", "index", "coefficient", "integral", "monomial", "contribution"));
            for t in &r.terms {
                s.push_str(&format!(
                    "{:<28} {:>14.6e} {:>14.6e} {:>12.4e} {:>14.6e}\n",
                    t.index.to_string(),
                    t.coefficient,
                    t.integral,
                    t.monomial,
                    t.contribution()
                ));
            }
            s.push_str(&format!("predicted {:.12e}\nactual    {:.12e}\nremainder {:.6e}\n\n", r.predicted, r.actual, r.remainder));
        }
        s
    }
}

fn variant_name(r: &ExpansionResult) -> &'static str {
    match r.variant {
        crate::taylor::Variant::Full => "full",
        crate::taylor::Variant::Symmetrized => "symmetrized",
    }
}

impl Report for ExpansionReport {
    fn stem(&self) -> &'static str {
        "expand"
    }

    fn csv_rows(&self) -> Vec<CsvRow> {
        let cfg = &self.provenance.config;
        let sign = if self.request.delta >= 0.0 { "+" } else { "-" };
        let mut out = Vec::new();
        for r in &self.results {
            let v = variant_name(r);
            let mut row = |statistic: String, value: f64| {
                out.push(CsvRow {
                    experiment: cfg.experiment.clone(),
                    functional: cfg.target.clone(),
                    m: cfg.m,
                    alpha: cfg.alpha,
                    p: cfg.p,
                    delta: Some(self.request.delta.abs()),
                    sign: sign.into(),
                    statistic,
                    value,
                    seed: cfg.seed,
                })
            };
            for t in &r.terms {
                row(format!("{v}:term:{}", t.index), t.contribution());
            }
            row(format!("{v}:predicted"), r.predicted);
            row(format!("{v}:actual"), r.actual);
            row(format!("{v}:remainder"), r.remainder);
        }
        out
    }

    fn passed(&self) -> bool {
        self.results.iter().all(|r| r.remainder.is_finite())
    }
}
