//! Monte Carlo estimates of derivative norms and Hölder seminorms.
//!
//! ```text
//! ‖u‖_{n,p,T} = Σ_{|θ| ≤ n} sup_t (E|D^θ u_t|^p)^{1/p}
//! [u]_{α,p}   = (E sup_{s<t} |u_t − u_s|^p / |t − s|^{pα/2})^{1/p}
//! ```
//!
//! Suprema over time run over a sub-grid of at most 256 intervals. For
//! fields, the supremum over the x-grid is taken inside the expectation.

use serde::Serialize;

use super::config::ExperimentConfig;
use super::ensemble::{map_members, member_path};
use super::report::{CsvRow, Report};
use super::{Provenance, Target};
use crate::error::{Error, Result};
use crate::indices::{enumerate_temporal, weight, TemporalIndex};
use crate::stats::moment_norm;

/// Largest number of intervals of the time sub-grid.
pub const NORM_TIME_POINTS: usize = 256;

/// One derivative's contribution to the norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEntry {
    /// `θ`, written as its entries.
    pub index: String,
    pub weight: usize,
    /// `sup_t (E|D^θ u_t|^p)^{1/p}`.
    pub sup_moment: f64,
    /// Time at which the supremum is attained.
    pub argmax_t: f64,
}

/// Result of [`estimate_norms`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub provenance: Provenance,
    pub entries: Vec<NormEntry>,
    /// `‖u‖_{n,p,T}`.
    pub norm: f64,
    /// `[u]_{α,p}` with its standard error.
    pub holder_seminorm: f64,
    pub holder_seminorm_se: f64,
    /// Every estimate is finite.
    pub passed: bool,
}

/// Per-path data: `|D^θ u|` on the sub-grid (sup over x for fields) and
/// the Hölder quotient supremum.
struct PathNorms {
    values: Vec<f64>,
    holder: f64,
}

/// Estimates `‖u‖_{n,p,T}` with `n = norm_order` and `[u]_{α,p}`.
pub fn estimate_norms(cfg: &ExperimentConfig) -> Result<NormReport> {
    cfg.validate_common()?;
    let grid = cfg.grid()?;
    let target = Target::load(cfg)?;
    let d = target.dim();
    let indices: Vec<TemporalIndex> = enumerate_temporal(cfg.norm_order, d);
    let max_order = match &target {
        Target::Functional(u) => u.max_order(),
        Target::Field(u) => u.max_order(),
        Target::Spde(case) => case.solution.max_order(),
    };
    if cfg.norm_order > max_order {
        return Err(Error::Capability(format!("'{}' supplies derivatives up to order {max_order}, norm order is {}", cfg.target, cfg.norm_order)));
    }
    let stride = grid.steps().div_ceil(NORM_TIME_POINTS).max(1);
    let nodes: Vec<usize> = (0..=grid.steps()).step_by(stride).collect();

    let per_path = map_members(cfg.threads, cfg.paths, |i| {
        let path = member_path(cfg.seed, grid, d, i)?;
        let mut values = Vec::with_capacity(indices.len() * nodes.len());
        match &target {
            Target::Functional(u) => {
                let b = u.bind(&path)?;
                for theta in &indices {
                    values.extend(nodes.iter().map(|&k| b.derivative(theta.entries(), k).abs()));
                }
                let series: Vec<f64> = nodes.iter().map(|&k| b.value(k)).collect();
                Ok(PathNorms { values, holder: holder_quotient(&series, &nodes, grid.dt(), cfg.alpha, 1)? })
            }
            Target::Field(_) | Target::Spde(_) => {
                let field = match &target {
                    Target::Field(u) => u.as_ref(),
                    Target::Spde(case) => case.solution.as_ref(),
                    Target::Functional(_) => unreachable!(),
                };
                let b = field.bind(&path)?;
                let xs = cfg.x_grid(field.spatial_dim());
                let zero = vec![0u32; field.spatial_dim()];
                for theta in &indices {
                    values.extend(
                        nodes.iter().map(|&k| xs.iter().map(|x| b.derivative(theta.entries(), &zero, k, x).abs()).fold(0.0, f64::max)),
                    );
                }
                // Series laid out x-major so each x gets its own quotient.
                let flat: Vec<f64> = xs.iter().flat_map(|x| nodes.iter().map(|&k| b.value(k, x)).collect::<Vec<_>>()).collect();
                Ok(PathNorms { values, holder: holder_quotient(&flat, &nodes, grid.dt(), cfg.alpha, xs.len())? })
            }
        }
    })?;

    let mut entries = Vec::new();
    let mut samples = vec![0.0; per_path.len()];
    for (ti, theta) in indices.iter().enumerate() {
        let mut best = (0.0f64, 0usize);
        for (ni, &k) in nodes.iter().enumerate() {
            samples.iter_mut().zip(&per_path).for_each(|(s, r)| *s = r.values[ti * nodes.len() + ni]);
            let (moment, _) = moment_norm(&samples, cfg.p);
            if moment > best.0 || ni == 0 {
                best = (moment, k);
            }
        }
        entries.push(NormEntry { index: format!("{theta}"), weight: weight(theta), sup_moment: best.0, argmax_t: grid.time(best.1) });
    }
    let norm = entries.iter().map(|e| e.sup_moment).sum::<f64>();
    let quotients: Vec<f64> = per_path.iter().map(|r| r.holder).collect();
    let (holder_seminorm, holder_seminorm_se) = moment_norm(&quotients, cfg.p);
    let passed = norm.is_finite() && holder_seminorm.is_finite();
    Ok(NormReport { provenance: Provenance::new(cfg)?, entries, norm, holder_seminorm, holder_seminorm_se, passed })
}

/// `max over blocks and node pairs s < t of |u_t − u_s| / |t − s|^{α/2}`,
/// with `series` holding `blocks` consecutive series on `nodes`.
fn holder_quotient(series: &[f64], nodes: &[usize], dt: f64, alpha: f64, blocks: usize) -> Result<f64> {
    let n = nodes.len();
    let mut worst = 0.0f64;
    for b in 0..blocks {
        let s = &series[b * n..(b + 1) * n];
        for i in 0..n {
            for j in i + 1..n {
                let gap = (nodes[j] - nodes[i]) as f64 * dt;
                let q = (s[j] - s[i]).abs() / gap.powf(alpha / 2.0);
                if !q.is_finite() {
                    return Err(Error::Consistency("non-finite Hölder quotient".into()));
                }
                worst = worst.max(q);
            }
        }
    }
    Ok(worst)
}

impl Report for NormReport {
    fn stem(&self) -> &'static str {
        "norms"
    }

    fn csv_rows(&self) -> Vec<CsvRow> {
        let cfg = &self.provenance.config;
        let row = |statistic: String, value: f64| CsvRow {
            experiment: cfg.experiment.clone(),
            functional: cfg.target.clone(),
            m: cfg.norm_order,
            alpha: cfg.alpha,
            p: cfg.p,
            delta: None,
            sign: String::new(),
            statistic,
            value,
            seed: cfg.seed,
        };
        let mut out: Vec<CsvRow> = Vec::new();
        for e in &self.entries {
            out.push(row(format!("sup_moment:{}", e.index), e.sup_moment));
            out.push(row(format!("argmax_t:{}", e.index), e.argmax_t));
        }
        out.push(row("norm".into(), self.norm));
        out.push(row("holder_seminorm".into(), self.holder_seminorm));
        out.push(row("holder_seminorm_se".into(), self.holder_seminorm_se));
        out
    }

    fn passed(&self) -> bool {
        self.passed
    }
}
