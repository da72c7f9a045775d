//! Remainder-scaling regressions over a geometric δ-grid.
//!
//! For every variant, sign, `|δ|` and order `k ≤ m`, each path contributes
//! `S = sup |R_k|` over a t-scan (and, for fields, over the x-grid and both
//! signs of `h = ±√|δ|`). The moment statistic `(E S^p)^{1/p}` is regressed
//! on `|δ|` in log-log coordinates; the slope should be close to `(k+1)/2`.
//!
//! The t-scan places `scan_points` nodes on `[t₁, t₁ + |δ|]`. Scanning a
//! window proportional to `|δ|` keeps the number of nearly independent
//! remainders in the supremum the same at every scale; a fixed window would
//! add a `log(1/|δ|)` growth to the supremum and bias the slope downwards.

use serde::{Serialize, Serializer};

use super::config::ExperimentConfig;
use super::ensemble::{map_members, member_path};
use super::report::{CsvRow, Report};
use super::{Provenance, Target, TargetKind};
use crate::error::{Error, Result};
use crate::functionals::BoundField;
use crate::paths::{SamplePath, TimeGrid};
use crate::spde::{derive_at_probe, substitute_coefficients, Probe, SpdeCoefficients};
use crate::stats::{loglog_fit, moment_norm, ROUNDING_FLOOR};
use crate::taylor::{FieldExpander, PathExpander, Variant};

/// Largest slope change accepted when the scan density is doubled.
pub const STRIDE_SLOPE_TOLERANCE: f64 = 0.05;

/// Direction of the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Forward,
    Backward,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Forward, Sign::Backward];

    /// `+` or `-`.
    pub fn label(self) -> &'static str {
        match self {
            Sign::Forward => "+",
            Sign::Backward => "-",
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

fn variant_label(v: Variant) -> &'static str {
    match v {
        Variant::Full => "full",
        Variant::Symmetrized => "symmetrized",
    }
}

/// Statistics of one `(variant, sign, |δ|, k)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub variant: Variant,
    pub sign: Sign,
    pub order: usize,
    /// `|δ|`.
    pub delta: f64,
    /// Scale of the remainder bound: `|δ|` for functionals, `|δ| + |h|²` for fields.
    pub scale: f64,
    /// `(E S^p)^{1/p}` with `S` the supremum over the scan.
    pub sup_moment: f64,
    pub sup_moment_se: f64,
    /// `max over paths of S / scale^{(k+α)/2}`.
    pub pathwise_max: f64,
    /// Moment statistic of the scan with doubled density.
    pub dense_sup_moment: Option<f64>,
}

/// Outcome of one slope fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitStatus {
    /// Slope within the tolerance of its target.
    Pass,
    /// Slope outside the tolerance, or no fit possible.
    Fail,
    /// Every moment is at rounding level: the expansion is exact.
    Exact,
    /// No target applies; the slope is reported only.
    Reported,
}

/// Log-log regression of one `(variant, sign, k)` series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub variant: Variant,
    pub sign: Sign,
    pub order: usize,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    /// `(k+1)/2`, or `None` for symmetrized orders `k ≥ 2`, whose remainder
    /// keeps the Lévy-area term of order 1.
    pub target: Option<f64>,
    pub status: FitStatus,
    /// Slope of the doubled-density scan.
    pub dense_slope: Option<f64>,
}

/// Sensitivity of the slopes to the scan density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrideCheck {
    pub max_slope_change: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Full against symmetrized second-order slopes for one sign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyGap {
    pub sign: Sign,
    pub full_slope: f64,
    pub symmetrized_slope: f64,
    pub gap: f64,
    /// Full slope within tolerance of 3/2, symmetrized slope at most
    /// `1 + tolerance`, gap at least twice the tolerance.
    pub pass: bool,
}

/// Result of [`run_scaling`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub provenance: Provenance,
    pub deltas: Vec<f64>,
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<SlopeFit>,
    pub stride_check: Option<StrideCheck>,
    pub levy_gaps: Vec<LevyGap>,
    pub passed: bool,
}

/// Scan nodes for one `|δ|`.
struct Scan {
    steps: usize,
    /// `(node, on_base_scan)`; nodes only on the dense scan carry `false`.
    nodes: Vec<(usize, bool)>,
}

fn plan_scans(cfg: &ExperimentConfig, grid: &TimeGrid) -> Result<Vec<Scan>> {
    let k1 = grid.node(cfg.window[0])?;
    let k2 = ((cfg.window[1] / grid.dt()) + 1e-9).floor() as usize;
    let mut scans = Vec::new();
    for delta in cfg.deltas() {
        let steps = grid.node(delta)?;
        let stride = ((steps as f64 / (cfg.scan_points - 1) as f64).round() as usize).max(1);
        let base: Vec<usize> = (0..cfg.scan_points).map(|j| k1 + j * stride).filter(|&k| k <= k2).collect();
        let mut nodes: Vec<(usize, bool)> = base.iter().map(|&k| (k, true)).collect();
        if cfg.stride_check {
            let last = *base.last().expect("t₁ is in the window");
            let dense_stride = (stride / 2).max(1);
            for k in (k1..=last).step_by(dense_stride) {
                if !base.contains(&k) {
                    nodes.push((k, false));
                }
            }
            nodes.sort_unstable();
        }
        scans.push(Scan { steps, nodes });
    }
    Ok(scans)
}

/// Per-path suprema, laid out as `[variant][sign][δ][k]`.
struct PathSups {
    base: Vec<f64>,
    dense: Vec<f64>,
}

struct Layout {
    deltas: usize,
    orders: usize,
}

impl Layout {
    fn at(&self, v: usize, s: usize, di: usize, k: usize) -> usize {
        ((v * 2 + s) * self.deltas + di) * self.orders + k
    }
}

fn record(sups: &mut PathSups, start: usize, on_base: bool, out: &[f64]) -> Result<()> {
    for (k, r) in out.iter().enumerate() {
        let a = r.abs();
        if !a.is_finite() {
            return Err(Error::Consistency(format!("non-finite remainder of order {k}")));
        }
        if on_base {
            sups.base[start + k] = sups.base[start + k].max(a);
        }
        sups.dense[start + k] = sups.dense[start + k].max(a);
    }
    Ok(())
}

fn end_node(k: usize, steps: usize, sign: Sign, grid: &TimeGrid) -> Result<usize> {
    match sign {
        Sign::Forward if k + steps <= grid.steps() => Ok(k + steps),
        Sign::Backward if k >= steps => Ok(k - steps),
        _ => Err(Error::Config(format!("scan node {k} with {steps} steps leaves [0, T]"))),
    }
}

/// `h` with `|h|² = |δ|`, spread evenly over the coordinates.
fn offsets(delta: f64, dp: usize) -> [Vec<f64>; 2] {
    let a = (delta / dp as f64).sqrt();
    [vec![a; dp], vec![-a; dp]]
}

fn path_sups(target: &Target, cfg: &ExperimentConfig, scans: &[Scan], path: &SamplePath) -> Result<PathSups> {
    let layout = Layout { deltas: scans.len(), orders: cfg.m + 1 };
    let size = cfg.variants.len() * 2 * layout.deltas * layout.orders;
    let mut sups = PathSups { base: vec![0.0; size], dense: vec![0.0; size] };
    let grid = *path.grid();
    let deltas = cfg.deltas();
    let mut out = Vec::with_capacity(cfg.m + 1);
    match target {
        Target::Functional(u) => {
            let bound = u.bind(path)?;
            for (vi, &variant) in cfg.variants.iter().enumerate() {
                let mut ex = PathExpander::new(bound.as_ref(), path, cfg.m, variant)?;
                for (si, &sign) in Sign::BOTH.iter().enumerate() {
                    for (di, scan) in scans.iter().enumerate() {
                        for &(k, on_base) in &scan.nodes {
                            ex.remainders(k, end_node(k, scan.steps, sign, &grid)?, &mut out);
                            record(&mut sups, layout.at(vi, si, di, 0), on_base, &out)?;
                        }
                    }
                }
            }
        }
        Target::Field(u) => {
            let bound = u.bind(path)?;
            let xs = cfg.x_grid(u.spatial_dim());
            for (vi, &variant) in cfg.variants.iter().enumerate() {
                let mut ex = FieldExpander::new(bound.as_ref(), path, cfg.m, variant)?;
                for (si, &sign) in Sign::BOTH.iter().enumerate() {
                    for (di, scan) in scans.iter().enumerate() {
                        let hs = offsets(deltas[di], u.spatial_dim());
                        for &(k, on_base) in &scan.nodes {
                            ex.set_interval(k, end_node(k, scan.steps, sign, &grid)?);
                            for x in &xs {
                                for h in &hs {
                                    ex.remainders(x, h, &mut out)?;
                                    record(&mut sups, layout.at(vi, si, di, 0), on_base, &out)?;
                                }
                            }
                        }
                    }
                }
            }
        }
        Target::Spde(case) => {
            let bound = case.solution.bind(path)?;
            let dp = case.solution.spatial_dim();
            let xs = cfg.x_grid(dp);
            for (vi, &variant) in cfg.variants.iter().enumerate() {
                let mut ex = FieldExpander::new(bound.as_ref(), path, 2, variant)?;
                for (si, &sign) in Sign::BOTH.iter().enumerate() {
                    for (di, scan) in scans.iter().enumerate() {
                        let hs = offsets(deltas[di], dp);
                        for &(k, on_base) in &scan.nodes {
                            ex.set_interval(k, end_node(k, scan.steps, sign, &grid)?);
                            for x in &xs {
                                for h in &hs {
                                    spde_remainders(&case.coefficients, bound.as_ref(), &ex, path, k, x, h, &mut out)?;
                                    record(&mut sups, layout.at(vi, si, di, 0), on_base, &out)?;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(sups)
}

/// Remainders `R_0, R_1, R_2` of the coefficient-route SPDE expansion.
#[allow(clippy::too_many_arguments)]
fn spde_remainders(
    c: &dyn SpdeCoefficients,
    bound: &dyn BoundField,
    ex: &FieldExpander<'_>,
    path: &SamplePath,
    k: usize,
    x: &[f64],
    h: &[f64],
    out: &mut Vec<f64>,
) -> Result<()> {
    let probe = Probe::from_field(bound, k, path.grid().time(k), x);
    let coef = derive_at_probe(c, &probe, path, k)?;
    let (mut terms, actual) = ex.terms(x, h)?;
    substitute_coefficients(&coef, &mut terms);
    let mut partial = [0.0; 3];
    for term in &terms {
        partial[term.index.weight()] += term.contribution();
    }
    out.clear();
    let mut acc = 0.0;
    for p in partial {
        acc += p;
        out.push(actual - acc);
    }
    Ok(())
}

fn slope_target(variant: Variant, order: usize) -> Option<f64> {
    match variant {
        Variant::Symmetrized if order >= 2 => None,
        _ => Some((order as f64 + 1.0) / 2.0),
    }
}

/// Runs the scaling regression described by `cfg`.
///
/// Fails with a configuration error when the ensemble is smaller than
/// [`super::MIN_STATISTICAL_PATHS`] or the δ-grid is not admissible.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    cfg.validate_scaling()?;
    if cfg.kind == TargetKind::Spde && cfg.m != 2 {
        return Err(Error::Config(format!("SPDE expansions are of order 2, got m = {}", cfg.m)));
    }
    let target = Target::load(cfg)?;
    let grid = cfg.grid()?;
    let scans = plan_scans(cfg, &grid)?;
    let d = target.dim();
    let per_path = map_members(cfg.threads, cfg.paths, |i| {
        let path = member_path(cfg.seed, grid, d, i)?;
        path_sups(&target, cfg, &scans, &path)
    })?;

    let deltas = cfg.deltas();
    let layout = Layout { deltas: deltas.len(), orders: cfg.m + 1 };
    let field_like = cfg.kind != TargetKind::Functional;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut samples = vec![0.0; per_path.len()];
    for (vi, &variant) in cfg.variants.iter().enumerate() {
        for (si, &sign) in Sign::BOTH.iter().enumerate() {
            for order in 0..=cfg.m {
                let mut moments = Vec::new();
                let mut dense_moments = Vec::new();
                for (di, &delta) in deltas.iter().enumerate() {
                    let at = layout.at(vi, si, di, order);
                    samples.iter_mut().zip(&per_path).for_each(|(s, r)| *s = r.base[at]);
                    let (sup_moment, sup_moment_se) = moment_norm(&samples, cfg.p);
                    let scale = if field_like { 2.0 * delta } else { delta };
                    let largest = samples.iter().fold(0.0f64, |a, b| a.max(*b));
                    let pathwise_max = largest / scale.powf((order as f64 + cfg.alpha) / 2.0);
                    let dense_sup_moment = cfg.stride_check.then(|| {
                        let dense: Vec<f64> = per_path.iter().map(|r| r.dense[at]).collect();
                        moment_norm(&dense, cfg.p).0
                    });
                    moments.push(sup_moment);
                    dense_moments.extend(dense_sup_moment);
                    rows.push(ScalingRow { variant, sign, order, delta, scale, sup_moment, sup_moment_se, pathwise_max, dense_sup_moment });
                }
                fits.push(fit_series(variant, sign, order, &deltas, &moments, &dense_moments, cfg.slope_tolerance));
            }
        }
    }

    let stride_check = cfg.stride_check.then(|| {
        let max_slope_change = fits
            .iter()
            .filter(|f| f.status != FitStatus::Exact)
            .map(|f| match (f.slope, f.dense_slope) {
                (Some(a), Some(b)) => (a - b).abs(),
                _ => f64::INFINITY,
            })
            .fold(0.0f64, f64::max);
        StrideCheck { max_slope_change, tolerance: STRIDE_SLOPE_TOLERANCE, pass: max_slope_change <= STRIDE_SLOPE_TOLERANCE }
    });
    let levy_gaps = levy_gaps(&fits, cfg, d);
    let passed = fits.iter().all(|f| f.status != FitStatus::Fail)
        && stride_check.as_ref().is_none_or(|s| s.pass)
        && levy_gaps.iter().all(|g| g.pass);
    Ok(ScalingReport { provenance: Provenance::new(cfg)?, deltas, rows, fits, stride_check, levy_gaps, passed })
}

fn fit_series(variant: Variant, sign: Sign, order: usize, deltas: &[f64], moments: &[f64], dense: &[f64], tol: f64) -> SlopeFit {
    let target = slope_target(variant, order);
    let dense_slope = loglog_fit(deltas, dense).map(|f| f.slope);
    if moments.iter().all(|m| *m <= ROUNDING_FLOOR) {
        let none = None;
        return SlopeFit { variant, sign, order, slope: none, intercept: none, r_squared: none, target, status: FitStatus::Exact, dense_slope };
    }
    let fit = loglog_fit(deltas, moments);
    let status = match (fit, target) {
        (None, _) => FitStatus::Fail,
        (Some(_), None) => FitStatus::Reported,
        (Some(f), Some(t)) if (f.slope - t).abs() <= tol => FitStatus::Pass,
        _ => FitStatus::Fail,
    };
    SlopeFit {
        variant,
        sign,
        order,
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r_squared: fit.map(|f| f.r_squared),
        target,
        status,
        dense_slope,
    }
}

/// Second-order slope gaps, when both variants were run with `m ≥ 2` on a
/// driver with `d ≥ 2` (for `d = 1` the two variants coincide).
fn levy_gaps(fits: &[SlopeFit], cfg: &ExperimentConfig, d: usize) -> Vec<LevyGap> {
    if cfg.m < 2 || d < 2 || !cfg.variants.contains(&Variant::Full) || !cfg.variants.contains(&Variant::Symmetrized) {
        return Vec::new();
    }
    let slope = |variant, sign| {
        fits.iter().find(|f| f.variant == variant && f.sign == sign && f.order == 2).and_then(|f| f.slope).unwrap_or(f64::NAN)
    };
    let tol = cfg.slope_tolerance;
    Sign::BOTH
        .iter()
        .map(|&sign| {
            let full_slope = slope(Variant::Full, sign);
            let symmetrized_slope = slope(Variant::Symmetrized, sign);
            let gap = full_slope - symmetrized_slope;
            let pass = (full_slope - 1.5).abs() <= tol && symmetrized_slope <= 1.0 + tol && gap >= 2.0 * tol;
            LevyGap { sign, full_slope, symmetrized_slope, gap, pass }
        })
        .collect()
}

impl Report for ScalingReport {
    fn stem(&self) -> &'static str {
        "scaling"
    }

    fn csv_rows(&self) -> Vec<CsvRow> {
        let cfg = &self.provenance.config;
        let row = |m: usize, delta: Option<f64>, sign: &str, statistic: String, value: f64| CsvRow {
            experiment: cfg.experiment.clone(),
            functional: cfg.target.clone(),
            m,
            alpha: cfg.alpha,
            p: cfg.p,
            delta,
            sign: sign.to_string(),
            statistic,
            value,
            seed: cfg.seed,
        };
        let mut out = Vec::new();
        for r in &self.rows {
            let v = variant_label(r.variant);
            let s = r.sign.label();
            out.push(row(r.order, Some(r.delta), s, format!("{v}:scale"), r.scale));
            out.push(row(r.order, Some(r.delta), s, format!("{v}:sup_moment"), r.sup_moment));
            out.push(row(r.order, Some(r.delta), s, format!("{v}:sup_moment_se"), r.sup_moment_se));
            out.push(row(r.order, Some(r.delta), s, format!("{v}:pathwise_max"), r.pathwise_max));
            if let Some(x) = r.dense_sup_moment {
                out.push(row(r.order, Some(r.delta), s, format!("{v}:dense_sup_moment"), x));
            }
        }
        for f in &self.fits {
            let v = variant_label(f.variant);
            let s = f.sign.label();
            let fields = [("slope", f.slope), ("intercept", f.intercept), ("r_squared", f.r_squared), ("slope_target", f.target), ("dense_slope", f.dense_slope)];
            for (name, value) in fields {
                if let Some(x) = value {
                    out.push(row(f.order, None, s, format!("{v}:{name}"), x));
                }
            }
            let pass = match f.status {
                FitStatus::Pass | FitStatus::Exact => 1.0,
                FitStatus::Fail => 0.0,
                FitStatus::Reported => continue,
            };
            out.push(row(f.order, None, s, format!("{v}:slope_pass"), pass));
        }
        if let Some(c) = &self.stride_check {
            out.push(row(cfg.m, None, "", "stride_max_slope_change".into(), c.max_slope_change));
        }
        for g in &self.levy_gaps {
            out.push(row(2, None, g.sign.label(), "levy_gap".into(), g.gap));
            out.push(row(2, None, g.sign.label(), "levy_gap_pass".into(), if g.pass { 1.0 } else { 0.0 }));
        }
        out
    }

    fn passed(&self) -> bool {
        self.passed
    }
}
