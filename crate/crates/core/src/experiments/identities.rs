//! The identity suite: exact discrete identities on every path of the
//! ensemble, refinement-order checks for identities that hold in the limit,
//! quadrature convergence of the spatial recursion, and the Lévy-area
//! regression when both variants are configured.

use serde::Serialize;

use super::config::{ExperimentConfig, MIN_REFINEMENT_PATHS, MIN_STATISTICAL_PATHS};
use super::ensemble::{map_members, member_path, member_seed};
use super::report::{CsvRow, Report};
use super::scaling::run_scaling;
use super::{Provenance, Target};
use crate::error::{Error, Result};
use crate::functionals::{
    chain_rule_residual, field_by_name, functional_by_name, functional_ito_residual_between, PathFunctional, RandomField, Smooth1d,
    TransportField,
};
use crate::indices::TemporalIndex;
use crate::integrals::{ibp_identity_residual, step2_signature_nodes, GridProcess};
use crate::paths::{derive_seed, refine_path, simulate_path, SamplePath, TimeGrid};
use crate::spde::{
    derive_coefficients, field_coefficients, ppde_residual, scaled_difference, six_tuple_forms, spde_case_by_name, spde_expand,
    SpdeCase, SpdeCoefficients, ROUTE_TOLERANCE,
};
use crate::stats::{refinement_order, rms, RefinementOutcome};
use crate::taylor::{
    backward_consistency, expand, expand_field, expand_field_m2_fast, expand_field_with, field_remainder_recursion_residual,
    remainder_via_representation, ExpansionOptions, ExpansionQuery, FieldExpander, PathExpander, Representation, Variant,
    DEFAULT_QUADRATURE_ORDER, MIN_RESOLUTION_STEPS,
};

/// Tolerance of identities that hold up to floating-point rounding.
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// Tolerance of the step-2 shuffle identity, relative to `1 + |B|²`.
pub const SHUFFLE_TOLERANCE: f64 = 1e-10;

/// Tolerance of the spatial recursion on polynomial fields, where
/// Gauss-Legendre quadrature is exact.
pub const POLYNOMIAL_RECURSION_TOLERANCE: f64 = 1e-10;

/// Quadrature orders of the spatial-recursion convergence check.
pub const QUADRATURE_ORDERS: [usize; 3] = [2, 4, 8];

/// Polynomial fields on which the spatial recursion is exact.
const POLYNOMIAL_FIELDS: [&str; 2] = ["poly2", "x2"];

/// Seed tags of the auxiliary paths drawn for ensemble member `i`.
const TAG_PLANE: u64 = 1;
const TAG_LINE: u64 = 2;
const TAG_SPDE: u64 = 3;
const TAG_POLY: u64 = 4;

/// Family of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Holds on every path up to rounding; `value` is the worst error.
    Exact,
    /// Holds in the limit; `value` is the smallest empirical order.
    Refinement,
    /// Converges in the quadrature order; `value` is the finest residual.
    Quadrature,
    /// A slope regression; `value` is the smallest slope gap.
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub kind: CheckKind,
    pub status: CheckStatus,
    pub value: Option<f64>,
    /// Error tolerance (exact), least order (refinement) or least gap (regression).
    pub tolerance: f64,
    /// Evaluations that entered the check.
    pub cases: usize,
    pub detail: String,
}

/// Result of [`run_identity_suite`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub provenance: Provenance,
    pub checks: Vec<IdentityCheck>,
    pub passed: bool,
}

impl IdentityReport {
    /// The check with the given name.
    pub fn check(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Exact checks in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exact {
    Shuffle,
    SquareOneDim,
    BackwardConsistency,
    RemainderOrders,
    FieldMatrixForm,
    SpdeRoutes,
    SixTuple,
    SpdeExpansionRoute,
    PolynomialRecursion,
}

impl Exact {
    const ALL: [Exact; 9] = [
        Exact::Shuffle,
        Exact::SquareOneDim,
        Exact::BackwardConsistency,
        Exact::RemainderOrders,
        Exact::FieldMatrixForm,
        Exact::SpdeRoutes,
        Exact::SixTuple,
        Exact::SpdeExpansionRoute,
        Exact::PolynomialRecursion,
    ];

    fn name(self) -> &'static str {
        match self {
            Exact::Shuffle => "shuffle_step2",
            Exact::SquareOneDim => "square_one_dimensional",
            Exact::BackwardConsistency => "backward_consistency",
            Exact::RemainderOrders => "remainder_orders",
            Exact::FieldMatrixForm => "field_matrix_form",
            Exact::SpdeRoutes => "spde_coefficient_routes",
            Exact::SixTuple => "six_tuple_forms",
            Exact::SpdeExpansionRoute => "spde_expansion_route",
            Exact::PolynomialRecursion => "polynomial_field_recursion",
        }
    }

    fn tolerance(self) -> f64 {
        match self {
            Exact::Shuffle => SHUFFLE_TOLERANCE,
            Exact::SpdeRoutes | Exact::SixTuple | Exact::SpdeExpansionRoute => ROUTE_TOLERANCE,
            Exact::PolynomialRecursion => POLYNOMIAL_RECURSION_TOLERANCE,
            _ => EXACT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    worst: f64,
    cases: usize,
}

impl Tally {
    fn note(&mut self, error: f64) {
        self.worst = if error.is_nan() { f64::INFINITY } else { self.worst.max(error) };
        self.cases += 1;
    }

    fn merge(&mut self, other: &Tally) {
        self.worst = self.worst.max(other.worst);
        self.cases += other.cases;
    }
}

/// Everything the per-path checks share.
struct Context<'a> {
    cfg: &'a ExperimentConfig,
    grid: TimeGrid,
    target: Target,
    functional: Box<dyn PathFunctional>,
    field: Option<Box<dyn RandomField>>,
    spde: SpdeCase,
    polynomials: Vec<Box<dyn RandomField>>,
    /// Base node of the exact checks.
    base: usize,
    /// Signed offsets in steps: the largest and smallest admissible `|δ|`
    /// of the configured grid, forwards and backwards.
    offsets: Vec<i64>,
    /// Spatial base point and offset of field queries.
    x: f64,
    h: f64,
}

impl Context<'_> {
    fn query_times(&self, steps: i64) -> (f64, f64) {
        (self.grid.time(self.base), steps as f64 * self.grid.dt())
    }

    fn intervals(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(0, self.grid.steps())];
        for &s in &self.offsets {
            let end = (self.base as i64 + s) as usize;
            out.push((self.base.min(end), self.base.max(end)));
        }
        out
    }
}

fn auxiliary_path(master: u64, i: usize, grid: TimeGrid, d: usize, tag: u64) -> Result<SamplePath> {
    simulate_path(grid, d, derive_seed(member_seed(master, i), tag))
}

fn build_offsets(cfg: &ExperimentConfig, grid: &TimeGrid, base: usize) -> Vec<i64> {
    let admissible: Vec<i64> = cfg.deltas().iter().filter_map(|d| grid.node(*d).ok()).filter(|s| *s >= MIN_RESOLUTION_STEPS).map(|s| s as i64).collect();
    let mut picks: Vec<i64> = Vec::new();
    for sign in [1i64, -1] {
        let fits: Vec<i64> = admissible.iter().copied().filter(|s| {
            let end = base as i64 + sign * s;
            end >= 0 && end <= grid.steps() as i64
        }).collect();
        for s in [fits.first(), fits.last()].into_iter().flatten() {
            if !picks.contains(&(sign * s)) {
                picks.push(sign * s);
            }
        }
    }
    picks
}

fn applicability(ctx: &Context<'_>, check: Exact) -> std::result::Result<(), String> {
    let m = ctx.cfg.m;
    match check {
        Exact::BackwardConsistency if !ctx.offsets.iter().any(|s| *s < 0) => Err("no backward offset fits before t₁".into()),
        Exact::BackwardConsistency | Exact::RemainderOrders if m > ctx.functional.max_order() => {
            Err(format!("'{}' supplies derivatives up to order {}, m = {m}", ctx.cfg.target, ctx.functional.max_order()))
        }
        Exact::FieldMatrixForm if ctx.field.is_none() => Err("the target is not a field".into()),
        Exact::SixTuple if ctx.spde.solution.dim() != 1 => Err(format!("SPDE case '{}' has d = {}", ctx.spde.name, ctx.spde.solution.dim())),
        _ if ctx.offsets.is_empty() && check != Exact::Shuffle && check != Exact::SquareOneDim => {
            Err("no admissible offset on the configured grid".into())
        }
        _ => Ok(()),
    }
}

fn exact_on_path(ctx: &Context<'_>, active: &[bool], i: usize) -> Result<Vec<Tally>> {
    let cfg = ctx.cfg;
    let mut tallies = vec![Tally::default(); Exact::ALL.len()];
    let on = |c: Exact| active[c as usize];

    if on(Exact::Shuffle) {
        let p = auxiliary_path(cfg.seed, i, ctx.grid, 2, TAG_PLANE)?;
        for (a, b) in ctx.intervals() {
            let sig = step2_signature_nodes(&p, a, b);
            let b2: f64 = sig.increment.iter().map(|v| v * v).sum();
            for r in 0..2 {
                for c in 0..2 {
                    let sum = sig.second_level[(r, c)] + sig.second_level[(c, r)] - sig.increment[r] * sig.increment[c];
                    tallies[Exact::Shuffle as usize].note(sum.abs() / (1.0 + b2));
                }
            }
        }
    }
    if on(Exact::SquareOneDim) {
        let p = auxiliary_path(cfg.seed, i, ctx.grid, 1, TAG_LINE)?;
        for (a, b) in ctx.intervals() {
            let sig = step2_signature_nodes(&p, a, b);
            let half_square = 0.5 * sig.increment[0] * sig.increment[0];
            // Rounding in the telescoping sum scales with the largest
            // excursion of the integrand, not with the final increment.
            let excursion = (a..=b).map(|k| (p.value(0, k) - p.value(0, a)).powi(2)).fold(0.0, f64::max) * 0.5;
            let scale = excursion.max(f64::MIN_POSITIVE);
            tallies[Exact::SquareOneDim as usize].note((sig.second_level[(0, 0)] - half_square).abs() / scale);
        }
    }

    let d = ctx.target.dim();
    let path = member_path(cfg.seed, ctx.grid, d, i)?;
    if on(Exact::BackwardConsistency) {
        for &s in ctx.offsets.iter().filter(|s| **s < 0) {
            let (t, delta) = ctx.query_times(s);
            let bc = backward_consistency(ctx.functional.as_ref(), &path, t, -delta, cfg.m)?;
            tallies[Exact::BackwardConsistency as usize].note(bc.max_term_difference.max(bc.closed_form_difference));
        }
    }
    if on(Exact::RemainderOrders) {
        let bound = ctx.functional.bind(&path)?;
        let mut ex = PathExpander::new(bound.as_ref(), &path, cfg.m, Variant::Full)?;
        let mut out = Vec::new();
        for &s in &ctx.offsets {
            let (t, delta) = ctx.query_times(s);
            let full = expand(ctx.functional.as_ref(), &path, &ExpansionQuery::new(t, delta, cfg.m))?;
            ex.remainders(ctx.base, (ctx.base as i64 + s) as usize, &mut out);
            for k in 0..=cfg.m {
                let own = expand(ctx.functional.as_ref(), &path, &ExpansionQuery::new(t, delta, k))?.remainder;
                let tally = &mut tallies[Exact::RemainderOrders as usize];
                tally.note(scaled_difference(own, full.remainder_at_order(k)));
                tally.note(scaled_difference(own, out[k]));
            }
        }
        if let Some(field) = &ctx.field {
            let fb = field.bind(&path)?;
            let mut fx = FieldExpander::new(fb.as_ref(), &path, cfg.m, Variant::Full)?;
            let (x, h) = (vec![ctx.x; field.spatial_dim()], vec![ctx.h; field.spatial_dim()]);
            for &s in &ctx.offsets {
                let (t, delta) = ctx.query_times(s);
                let full = expand_field(field.as_ref(), &path, &ExpansionQuery::field(t, x.clone(), delta, h.clone(), cfg.m))?;
                fx.set_interval(ctx.base, (ctx.base as i64 + s) as usize);
                fx.remainders(&x, &h, &mut out)?;
                for k in 0..=cfg.m {
                    let own = expand_field(field.as_ref(), &path, &ExpansionQuery::field(t, x.clone(), delta, h.clone(), k))?.remainder;
                    let tally = &mut tallies[Exact::RemainderOrders as usize];
                    tally.note(scaled_difference(own, full.remainder_at_order(k)));
                    tally.note(scaled_difference(own, out[k]));
                }
            }
        }
    }
    if on(Exact::FieldMatrixForm) {
        let field = ctx.field.as_ref().expect("checked by applicability");
        let (x, h) = (vec![ctx.x; field.spatial_dim()], vec![ctx.h; field.spatial_dim()]);
        for &s in &ctx.offsets {
            let (t, delta) = ctx.query_times(s);
            let q = ExpansionQuery::field(t, x.clone(), delta, h.clone(), 2);
            for variant in [Variant::Full, Variant::Symmetrized] {
                let generic = expand_field_with(field.as_ref(), &path, &q, &ExpansionOptions { variant, ..Default::default() })?;
                let fast = expand_field_m2_fast(field.as_ref(), &path, &q, variant)?;
                tallies[Exact::FieldMatrixForm as usize].note(scaled_difference(generic.predicted, fast));
            }
        }
    }

    if on(Exact::SpdeRoutes) || on(Exact::SixTuple) || on(Exact::SpdeExpansionRoute) {
        let case = &ctx.spde;
        let u = case.solution.as_ref();
        let c: &dyn SpdeCoefficients = &case.coefficients;
        let p = auxiliary_path(cfg.seed, i, ctx.grid, u.dim(), TAG_SPDE)?;
        let last = ctx.grid.steps();
        let times = [ctx.base, ((ctx.base + last) / 2).min(last), last].map(|k| ctx.grid.time(k));
        for x in cfg.x_grid(u.spatial_dim()) {
            for t in times {
                if on(Exact::SpdeRoutes) {
                    let derived = derive_coefficients(c, u, t, &x, &p)?;
                    let direct = field_coefficients(u, t, &x, &p)?;
                    let tally = &mut tallies[Exact::SpdeRoutes as usize];
                    tally.note(derived.max_difference(&direct));
                    tally.note(ppde_residual(c, u, t, &x, &p)?.max_abs());
                }
                if on(Exact::SixTuple) {
                    tallies[Exact::SixTuple as usize].note(six_tuple_forms(c, u, t, &x, &p)?.max_difference);
                }
            }
            if on(Exact::SpdeExpansionRoute) {
                let h = vec![ctx.h; u.spatial_dim()];
                for &s in &ctx.offsets {
                    let (t, delta) = ctx.query_times(s);
                    let q = ExpansionQuery::field(t, x.clone(), delta, h.clone(), 2);
                    let a = spde_expand(c, u, &p, &q)?;
                    let b = expand_field(u, &p, &q)?;
                    tallies[Exact::SpdeExpansionRoute as usize].note(scaled_difference(a.remainder, b.remainder));
                }
            }
        }
    }

    if on(Exact::PolynomialRecursion) {
        for f in &ctx.polynomials {
            let p = auxiliary_path(cfg.seed, i, ctx.grid, f.dim(), TAG_POLY)?;
            let (x, h) = (vec![ctx.x; f.spatial_dim()], vec![ctx.h; f.spatial_dim()]);
            for &s in &ctx.offsets {
                let (t, delta) = ctx.query_times(s);
                let q = ExpansionQuery::field(t, x.clone(), delta, h.clone(), 2);
                let r = field_remainder_recursion_residual(f.as_ref(), &p, &q, DEFAULT_QUADRATURE_ORDER)?;
                tallies[Exact::PolynomialRecursion as usize].note(r.abs());
            }
        }
    }
    Ok(tallies)
}

fn skipped(name: &str, kind: CheckKind, tolerance: f64, detail: String) -> IdentityCheck {
    IdentityCheck { name: name.into(), kind, status: CheckStatus::Skipped, value: None, tolerance, cases: 0, detail }
}

fn exact_checks(ctx: &Context<'_>) -> Result<Vec<IdentityCheck>> {
    let reasons: Vec<std::result::Result<(), String>> = Exact::ALL.iter().map(|c| applicability(ctx, *c)).collect();
    let active: Vec<bool> = reasons.iter().map(|r| r.is_ok()).collect();
    let per_path = map_members(ctx.cfg.threads, ctx.cfg.paths, |i| exact_on_path(ctx, &active, i))?;
    let mut totals = vec![Tally::default(); Exact::ALL.len()];
    for tallies in &per_path {
        totals.iter_mut().zip(tallies).for_each(|(a, b)| a.merge(b));
    }
    Ok(Exact::ALL
        .iter()
        .zip(&reasons)
        .zip(&totals)
        .map(|((check, reason), tally)| match reason {
            Err(why) => skipped(check.name(), CheckKind::Exact, check.tolerance(), why.clone()),
            Ok(()) => {
                let pass = tally.worst <= check.tolerance();
                IdentityCheck {
                    name: check.name().into(),
                    kind: CheckKind::Exact,
                    status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
                    value: Some(tally.worst),
                    tolerance: check.tolerance(),
                    cases: tally.cases,
                    detail: format!("worst error over {} paths", ctx.cfg.paths),
                }
            }
        })
        .collect())
}

/// One refinement case: its label and the per-path errors on both grids.
struct Case {
    label: String,
    coarse: Vec<f64>,
    fine: Vec<f64>,
}

/// Kink-free windows of `[0, T]`: a margin of `T/4` is kept around each kink.
fn kink_free_windows(kinks: &[f64], grid: &TimeGrid) -> Vec<(f64, f64)> {
    let t_end = grid.horizon();
    let margin = t_end / 4.0;
    let mut edges = vec![0.0];
    let mut sorted = kinks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut windows = Vec::new();
    for k in sorted {
        windows.push((*edges.last().expect("nonempty"), k - margin));
        edges.push(k + margin);
    }
    windows.push((*edges.last().expect("nonempty"), t_end));
    let dt = grid.dt();
    windows
        .into_iter()
        .map(|(a, b)| (grid.time(((a.max(0.0) / dt) - 1e-9).ceil() as usize), grid.time(((b.min(t_end) / dt) + 1e-9).floor() as usize)))
        .filter(|(a, b)| b - a >= 16.0 * dt)
        .collect()
}

/// Base time and `|δ|` of the refinement queries: `(T/4, T/8)`, moved to
/// `3T/4` when a kink falls inside `[t − δ, t + δ]`.
fn refinement_query(kinks: &[f64], grid: &TimeGrid) -> (f64, f64) {
    let n = grid.steps();
    let delta = grid.time(n / 8);
    let early = grid.time(n / 4);
    let clear = |t: f64| kinks.iter().all(|k| *k < t - delta || *k > t + delta);
    (if clear(early) { early } else { grid.time(3 * n / 4) }, delta)
}

const IBP_INDICES: [&[u8]; 5] = [&[1, 2], &[1, 2, 1], &[2, 1, 1], &[0, 1, 2], &[1, 1, 2]];

/// Inner functionals for the chain rule of `field`: `d'` Markovian
/// components with `sin` in every driver coordinate.
fn chain_inner(d: usize) -> Result<Box<dyn PathFunctional>> {
    functional_by_name(&format!("markovian:{}", vec!["sin"; d].join(",")))
}

fn refinement_cases(ctx: &Context<'_>, coarse: &SamplePath, fine: &SamplePath, plane: (&SamplePath, &SamplePath)) -> Result<Vec<(String, f64, f64)>> {
    let cfg = ctx.cfg;
    let u = ctx.functional.as_ref();
    let mut out = Vec::new();
    let kinks = u.kinks();
    let grid = *coarse.grid();

    for (a, b) in kink_free_windows(&kinks, &grid) {
        let c = functional_ito_residual_between(u, coarse, a, b)?;
        let f = functional_ito_residual_between(u, fine, a, b)?;
        out.push((format!("functional_ito:[{a},{b}]"), c, f));
    }

    let (t, delta) = refinement_query(&kinks, &grid);
    for k in 0..=cfg.m {
        for rep in [Representation::Full, Representation::Hoelder] {
            if rep.required_order(k) > u.max_order() {
                continue;
            }
            for signed in [delta, -delta] {
                let q = ExpansionQuery::new(t, signed, k);
                let gap = |p: &SamplePath| -> Result<f64> { Ok(expand(u, p, &q)?.remainder - remainder_via_representation(u, p, &q, rep)?) };
                out.push((format!("representation:{rep:?}:m={k}:delta={signed}"), gap(coarse)?, gap(fine)?));
            }
        }
    }

    let (pc, pf) = plane;
    let t_end = grid.horizon();
    for e in IBP_INDICES {
        let theta = TemporalIndex::new(e.to_vec(), 2)?;
        let one = |p: &SamplePath| GridProcess::constant(*p.grid(), 1.0);
        let c = ibp_identity_residual(&theta, &one(pc), pc, 0.0, t_end)?;
        let f = ibp_identity_residual(&theta, &one(pf), pf, 0.0, t_end)?;
        out.push((format!("ibp:{theta}"), c, f));
    }
    let theta = TemporalIndex::new(vec![1, 2, 1], 2)?;
    let sine = |p: &SamplePath| GridProcess::from_fn(*p.grid(), 0, p.grid().steps(), |k| p.value(0, k).sin());
    out.push((
        "ibp:sin:(1,2,1)".into(),
        ibp_identity_residual(&theta, &sine(pc), pc, 0.0, t_end)?,
        ibp_identity_residual(&theta, &sine(pf), pf, 0.0, t_end)?,
    ));

    let chain = |p: &SamplePath| -> Result<f64> {
        match &ctx.field {
            Some(field) => {
                let inner: Vec<Box<dyn PathFunctional>> = (0..field.spatial_dim()).map(|_| chain_inner(field.dim())).collect::<Result<_>>()?;
                let xs: Vec<&dyn PathFunctional> = inner.iter().map(|b| b.as_ref()).collect();
                Ok(chain_rule_residual(field.as_ref(), &xs, p, t)?.max_abs())
            }
            None => {
                let outer = TransportField::new(Smooth1d::Sin, vec![1.0; u.dim()]);
                Ok(chain_rule_residual(&outer, &[u], p, t)?.max_abs())
            }
        }
    };
    out.push(("chain_rule".into(), chain(coarse)?, chain(fine)?));
    Ok(out)
}

/// Refinement checks in report order: the name of each and the label
/// prefix of its cases.
const REFINEMENT_CHECKS: [(&str, &str); 4] = [
    ("functional_ito", "functional_ito"),
    ("representation_oracle", "representation"),
    ("ibp_identity", "ibp"),
    ("chain_rule", "chain_rule"),
];

fn refinement_checks(ctx: &Context<'_>) -> Result<Vec<IdentityCheck>> {
    let cfg = ctx.cfg;
    let n = cfg.paths.min(cfg.refinement_paths);
    if n < MIN_REFINEMENT_PATHS {
        let why = format!("{n} paths are below the {MIN_REFINEMENT_PATHS} needed for a refinement order");
        return Ok(REFINEMENT_CHECKS.iter().map(|(name, _)| skipped(name, CheckKind::Refinement, cfg.min_order, why.clone())).collect());
    }
    let grid = TimeGrid::new(cfg.horizon, cfg.refinement_steps)?;
    let d = ctx.target.dim();
    let per_path = map_members(cfg.threads, n, |i| {
        let coarse = member_path(cfg.seed, grid, d, i)?;
        let fine = refine_path(&coarse, cfg.refinement_factor)?;
        let pc = auxiliary_path(cfg.seed, i, grid, 2, TAG_PLANE)?;
        let pf = refine_path(&pc, cfg.refinement_factor)?;
        refinement_cases(ctx, &coarse, &fine, (&pc, &pf))
    })?;
    let mut cases: Vec<Case> = per_path[0].iter().map(|(l, _, _)| Case { label: l.clone(), coarse: Vec::new(), fine: Vec::new() }).collect();
    for row in &per_path {
        for (case, (_, c, f)) in cases.iter_mut().zip(row) {
            case.coarse.push(*c);
            case.fine.push(*f);
        }
    }
    let outcomes: Vec<(String, RefinementOutcome)> =
        cases.iter().map(|c| (c.label.clone(), refinement_order(rms(&c.coarse), rms(&c.fine), cfg.refinement_factor as f64))).collect();
    let mut checks = Vec::new();
    for (name, prefix) in REFINEMENT_CHECKS {
        let group: Vec<&(String, RefinementOutcome)> =
            outcomes.iter().filter(|(l, _)| l == prefix || l.starts_with(&format!("{prefix}:"))).collect();
        if group.is_empty() {
            checks.push(skipped(name, CheckKind::Refinement, cfg.min_order, "no admissible case for this target".into()));
            continue;
        }
        let failing: Vec<String> = group
            .iter()
            .filter(|(_, o)| !o.passes(cfg.min_order))
            .map(|(l, o)| format!("{l} (order {:.3})", o.order.unwrap_or(f64::NAN)))
            .collect();
        let worst = group.iter().filter_map(|(_, o)| o.order).fold(f64::INFINITY, f64::min);
        let detail = if failing.is_empty() {
            format!("{} cases on {n} paths, {} → {} steps", group.len(), cfg.refinement_steps, cfg.refinement_steps * cfg.refinement_factor)
        } else {
            format!("below the least order: {}", failing.join(", "))
        };
        checks.push(IdentityCheck {
            name: name.into(),
            kind: CheckKind::Refinement,
            status: if failing.is_empty() { CheckStatus::Pass } else { CheckStatus::Fail },
            value: worst.is_finite().then_some(worst),
            tolerance: cfg.min_order,
            cases: group.len() * n,
            detail,
        });
    }
    Ok(checks)
}

fn quadrature_check(ctx: &Context<'_>) -> Result<IdentityCheck> {
    let cfg = ctx.cfg;
    let n = cfg.paths.min(cfg.refinement_paths);
    let grid = TimeGrid::new(cfg.horizon, cfg.refinement_steps)?;
    let mut fields: Vec<Box<dyn RandomField>> = vec![field_by_name("transport:sin")?];
    if let Some(f) = &ctx.field {
        if f.name() != fields[0].name() {
            fields.push(field_by_name(&cfg.target)?);
        }
    }
    let (t, delta) = refinement_query(&[], &grid);
    let m = cfg.m.max(1);
    let mut worst_finest = 0.0f64;
    let mut failing = Vec::new();
    for f in &fields {
        if m > f.max_order() {
            continue;
        }
        let (x, h) = (vec![ctx.x; f.spatial_dim()], vec![ctx.h; f.spatial_dim()]);
        let per_path = map_members(cfg.threads, n, |i| {
            let p = member_path(cfg.seed, grid, f.dim(), i)?;
            let mut r = Vec::new();
            for signed in [delta, -delta] {
                let q = ExpansionQuery::field(t, x.clone(), signed, h.clone(), m);
                for order in QUADRATURE_ORDERS {
                    r.push(field_remainder_recursion_residual(f.as_ref(), &p, &q, order)?);
                }
            }
            Ok(r)
        })?;
        for (si, _) in [delta, -delta].iter().enumerate() {
            let levels: Vec<f64> = (0..QUADRATURE_ORDERS.len())
                .map(|j| rms(&per_path.iter().map(|r| r[si * QUADRATURE_ORDERS.len() + j]).collect::<Vec<_>>()))
                .collect();
            let finest = *levels.last().expect("three orders");
            worst_finest = worst_finest.max(finest);
            let decreasing = levels.windows(2).all(|w| w[1] < w[0]);
            if !(decreasing || finest <= POLYNOMIAL_RECURSION_TOLERANCE) {
                failing.push(format!("{}: {levels:?}", f.name()));
            }
        }
    }
    Ok(IdentityCheck {
        name: "field_recursion_quadrature".into(),
        kind: CheckKind::Quadrature,
        status: if failing.is_empty() { CheckStatus::Pass } else { CheckStatus::Fail },
        value: Some(worst_finest),
        tolerance: POLYNOMIAL_RECURSION_TOLERANCE,
        cases: fields.len() * 2 * n,
        detail: if failing.is_empty() {
            format!("residual decreases over quadrature orders {QUADRATURE_ORDERS:?}")
        } else {
            format!("not decreasing: {}", failing.join("; "))
        },
    })
}

fn levy_check(cfg: &ExperimentConfig, d: usize) -> Result<IdentityCheck> {
    let name = "levy_area_necessity";
    let tolerance = 2.0 * cfg.slope_tolerance;
    if cfg.m < 2 || !cfg.variants.contains(&Variant::Symmetrized) {
        return Ok(skipped(name, CheckKind::Regression, tolerance, "needs m ≥ 2 and the symmetrized variant".into()));
    }
    if d < 2 {
        return Ok(skipped(name, CheckKind::Regression, tolerance, "a one-dimensional driver has no Lévy area".into()));
    }
    if cfg.paths < MIN_STATISTICAL_PATHS {
        return Ok(skipped(name, CheckKind::Regression, tolerance, format!("needs M ≥ {MIN_STATISTICAL_PATHS}")));
    }
    let mut scaling_cfg = cfg.clone();
    scaling_cfg.variants = vec![Variant::Full, Variant::Symmetrized];
    let report = run_scaling(&scaling_cfg)?;
    let smallest = report.levy_gaps.iter().map(|g| g.gap).fold(f64::INFINITY, f64::min);
    let pass = !report.levy_gaps.is_empty() && report.levy_gaps.iter().all(|g| g.pass);
    let detail = report
        .levy_gaps
        .iter()
        .map(|g| format!("{}: full {:.3}, symmetrized {:.3}", g.sign.label(), g.full_slope, g.symmetrized_slope))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(IdentityCheck {
        name: name.into(),
        kind: CheckKind::Regression,
        status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
        value: Some(smallest),
        tolerance,
        cases: cfg.paths,
        detail,
    })
}

/// Runs every identity check that applies to `cfg`.
///
/// Exact checks run on all `M` paths of the configured grid. Refinement
/// checks use `min(M, refinement_paths)` paths and are skipped below
/// [`MIN_REFINEMENT_PATHS`].
pub fn run_identity_suite(cfg: &ExperimentConfig) -> Result<IdentityReport> {
    cfg.validate_common()?;
    let grid = cfg.grid()?;
    let target = Target::load(cfg)?;
    let functional = target.as_functional(cfg)?;
    let field = match &target {
        Target::Functional(_) => None,
        Target::Field(_) => Some(field_by_name(&cfg.target)?),
        Target::Spde(case) => Some(spde_case_by_name(&case.name)?.solution),
    };
    let spde = match &target {
        Target::Spde(case) => spde_case_by_name(&case.name)?,
        _ => spde_case_by_name(&cfg.spde_case).map_err(|e| Error::Config(format!("spde_case: {e}")))?,
    };
    let polynomials = POLYNOMIAL_FIELDS.iter().map(|n| field_by_name(n)).collect::<Result<Vec<_>>>()?;
    let base = ((cfg.window[0] / grid.dt()).round() as usize).min(grid.steps());
    let offsets = build_offsets(cfg, &grid, base);
    let ctx = Context { cfg, grid, target, functional, field, spde, polynomials, base, offsets, x: 0.3, h: 0.2 };

    let mut checks = exact_checks(&ctx)?;
    checks.extend(refinement_checks(&ctx)?);
    checks.push(quadrature_check(&ctx)?);
    checks.push(levy_check(cfg, ctx.target.dim())?);
    let passed = checks.iter().all(|c| c.status != CheckStatus::Fail);
    Ok(IdentityReport { provenance: Provenance::new(cfg)?, checks, passed })
}

impl Report for IdentityReport {
    fn stem(&self) -> &'static str {
        "identities"
    }

    fn csv_rows(&self) -> Vec<CsvRow> {
        let cfg = &self.provenance.config;
        let mut out = Vec::new();
        for c in &self.checks {
            let mut row = |statistic: &str, value: f64| {
                out.push(CsvRow {
                    experiment: cfg.experiment.clone(),
                    functional: cfg.target.clone(),
                    m: cfg.m,
                    alpha: cfg.alpha,
                    p: cfg.p,
                    delta: None,
                    sign: String::new(),
                    statistic: format!("{}:{statistic}", c.name),
                    value,
                    seed: cfg.seed,
                })
            };
            if let Some(v) = c.value {
                row("value", v);
            }
            row("tolerance", c.tolerance);
            row("cases", c.cases as f64);
            match c.status {
                CheckStatus::Pass => row("pass", 1.0),
                CheckStatus::Fail => row("pass", 0.0),
                CheckStatus::Skipped => row("skipped", 1.0),
            }
        }
        out
    }

    fn passed(&self) -> bool {
        self.passed
    }
}
