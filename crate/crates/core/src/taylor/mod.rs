//! Forward and backward pathwise Taylor expansions.
//!
//! For a query `(t, δ)` the order-`m` expansion of a path functional is
//!
//! ```text
//! u(t+δ) ≈ Σ_{|θ| ≤ m} D^θ u(t) · I^θ_{t,t+δ}
//! ```
//!
//! with `I^θ_{t,t+δ}` the signed iterated integral, so `δ < 0` gives the
//! backward expansion through `I^θ_{t,s} = (−1)^{|θ|₀} I^{−θ}_{s,t}`. The
//! remainder `R_m = u(t+δ) − predicted` is definitional. Random fields add
//! spatial indices and the monomials `h^ℓ/ℓ!` (see [`field`]).
//!
//! [`representation`] holds the independent remainder formulas used as
//! oracles against the definitional remainder.

pub mod field;
pub mod representation;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{check_capability, BoundFunctional, PathFunctional};
use crate::indices::{enumerate_temporal, weight_of, CombinedIndex, SpatialIndex, TemporalIndex};
use crate::integrals::{iterated_integral_nodes, step2_signature_nodes, GridProcess, UnitIntegrals};
use crate::paths::SamplePath;

pub use field::{expand_field, DEFAULT_QUADRATURE_ORDER, expand_field_m2_fast, expand_field_with, field_remainder_recursion_residual, FieldExpander};
pub use representation::{remainder_via_representation, representation_remainder_nodes, Representation};

/// Default cap on the expansion order.
pub const DEFAULT_MAX_ORDER: usize = 4;

/// Smallest admissible `|δ|`, in grid steps.
pub const MIN_RESOLUTION_STEPS: usize = 10;

/// Which second-order term is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Every index carries its own iterated integral.
    #[default]
    Full,
    /// Pure-noise pairs `(j,i)` use `½ B^j B^i` in place of `I^{(j,i)}`,
    /// which drops the Lévy-area half of the second-order term.
    Symmetrized,
}

/// One expansion query. `x` and `h` are empty for path functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionQuery {
    /// Base time, a grid node.
    pub t: f64,
    /// Signed temporal offset; `t + δ` must be a grid node in `[0, T]`.
    pub delta: f64,
    /// Expansion order `m`.
    pub m: usize,
    /// Base point (fields only).
    #[serde(default)]
    pub x: Vec<f64>,
    /// Spatial offset (fields only).
    #[serde(default)]
    pub h: Vec<f64>,
}

impl ExpansionQuery {
    /// A path-functional query.
    pub fn new(t: f64, delta: f64, m: usize) -> Self {
        Self { t, delta, m, x: Vec::new(), h: Vec::new() }
    }

    /// A field query at base point `x` with spatial offset `h`.
    pub fn field(t: f64, x: Vec<f64>, delta: f64, h: Vec<f64>, m: usize) -> Self {
        Self { t, delta, m, x, h }
    }
}

/// Engine options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionOptions {
    pub variant: Variant,
    /// Largest admissible `m`.
    pub max_order: usize,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self { variant: Variant::Full, max_order: DEFAULT_MAX_ORDER }
    }
}

/// One term `coefficient · integral · monomial` of an expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub index: CombinedIndex,
    /// `D_x^ℓ D^θ u(t, x)`.
    pub coefficient: f64,
    /// Signed `I^θ_{t,t+δ}`, symmetrized where the variant asks for it.
    pub integral: f64,
    /// `h^ℓ / ℓ!`; 1 for path functionals.
    pub monomial: f64,
}

impl Term {
    /// The term's contribution to the prediction.
    pub fn contribution(&self) -> f64 {
        self.coefficient * self.integral * self.monomial
    }
}

/// Terms, prediction and remainder of one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionResult {
    pub query: ExpansionQuery,
    pub variant: Variant,
    /// Terms in canonical index order.
    pub terms: Vec<Term>,
    pub predicted: f64,
    /// `u(t+δ)` or `u(t+δ, x+h)`.
    pub actual: f64,
    /// `actual − predicted`.
    pub remainder: f64,
}

impl ExpansionResult {
    /// The remainder of the truncated expansion of order `k ≤ m`, from the
    /// same coefficients and integrals.
    pub fn remainder_at_order(&self, k: usize) -> f64 {
        self.actual - self.terms.iter().filter(|t| t.index.weight() <= k).map(Term::contribution).sum::<f64>()
    }
}

/// Validates `(t, δ)` and returns the node pair `(k, k + δ/Δt)`.
pub fn resolve_nodes(path: &SamplePath, t: f64, delta: f64) -> Result<(usize, usize)> {
    let grid = path.grid();
    if !(t.is_finite() && delta.is_finite()) {
        return Err(Error::Query(format!("non-finite query (t = {t}, δ = {delta})")));
    }
    if t < 0.0 {
        return Err(Error::Query(format!("base time {t} is negative")));
    }
    if delta == 0.0 {
        return Err(Error::Query("δ must be nonzero".into()));
    }
    let k = grid.node(t)?;
    let end = t + delta;
    if end < -1e-12 || end > grid.horizon() + 1e-12 {
        return Err(Error::Query(format!("t + δ = {end} lies outside [0, {}]", grid.horizon())));
    }
    let kb = grid.node(end.clamp(0.0, grid.horizon()))?;
    if k.abs_diff(kb) < MIN_RESOLUTION_STEPS {
        return Err(Error::Query(format!(
            "|δ| = {} is below the resolution floor {}·Δt = {}",
            delta.abs(),
            MIN_RESOLUTION_STEPS,
            MIN_RESOLUTION_STEPS as f64 * grid.dt()
        )));
    }
    Ok((k, kb))
}

pub(crate) fn check_order(m: usize, opts: &ExpansionOptions) -> Result<()> {
    if m > opts.max_order {
        return Err(Error::Capability(format!("order {m} exceeds the configured cap {}", opts.max_order)));
    }
    Ok(())
}

/// Temporal indices of weight `≤ m` over `d` drivers as raw entry vectors,
/// in canonical order.
pub(crate) fn temporal_keys(m: usize, d: usize) -> Vec<Vec<u8>> {
    enumerate_temporal(m, d).into_iter().map(|t| t.entries().to_vec()).collect()
}

/// Signed integrals `I^θ_{t_k, t_kb}(1)` for every key, symmetrized for
/// pure-noise pairs when asked.
pub(crate) struct IntegralTable {
    ws: UnitIntegrals,
    raw: Vec<f64>,
}

impl IntegralTable {
    pub(crate) fn new() -> Self {
        Self { ws: UnitIntegrals::default(), raw: Vec::new() }
    }

    pub(crate) fn fill(&mut self, keys: &[Vec<u8>], path: &SamplePath, k: usize, kb: usize, variant: Variant, out: &mut Vec<f64>) {
        let refs: Vec<&[u8]> = keys.iter().map(|v| v.as_slice()).collect();
        self.ws.signed(&refs, path, k, kb, &mut self.raw);
        out.clear();
        out.extend_from_slice(&self.raw);
        if variant == Variant::Symmetrized {
            let single = |i: u8| path.value(i as usize - 1, kb) - path.value(i as usize - 1, k);
            for (v, key) in out.iter_mut().zip(keys) {
                if let [j, i] = key[..] {
                    if i != 0 && j != 0 {
                        *v = 0.5 * single(j) * single(i);
                    }
                }
            }
        }
    }
}

/// Repeated expansions of one bound functional on one path.
///
/// Holds the index table and integral workspace so that scans over many
/// `(t, δ)` pairs do not reallocate.
pub struct PathExpander<'a> {
    u: &'a dyn BoundFunctional,
    path: &'a SamplePath,
    variant: Variant,
    keys: Vec<Vec<u8>>,
    weights: Vec<usize>,
    table: IntegralTable,
    integrals: Vec<f64>,
}

impl<'a> PathExpander<'a> {
    /// Prepares order-`m` expansions.
    pub fn new(u: &'a dyn BoundFunctional, path: &'a SamplePath, m: usize, variant: Variant) -> Result<Self> {
        if u.dim() != path.dim() {
            return Err(Error::Query(format!("functional has d = {}, path has d = {}", u.dim(), path.dim())));
        }
        if m > u.max_order() {
            return Err(Error::Capability(format!(
                "expansion of order {m} needs derivatives the functional does not supply (max {})",
                u.max_order()
            )));
        }
        let keys = temporal_keys(m, u.dim());
        let weights = keys.iter().map(|k| weight_of(k)).collect();
        Ok(Self { u, path, variant, keys, weights, table: IntegralTable::new(), integrals: Vec::new() })
    }

    /// Index entries in canonical order.
    pub fn keys(&self) -> &[Vec<u8>] {
        &self.keys
    }

    /// Computes the integrals for nodes `k → kb` and returns
    /// `(coefficients, integrals, actual)`.
    pub fn terms(&mut self, k: usize, kb: usize) -> (Vec<f64>, Vec<f64>, f64) {
        self.table.fill(&self.keys, self.path, k, kb, self.variant, &mut self.integrals);
        let coef = self.keys.iter().map(|key| self.u.derivative(key, k)).collect();
        (coef, self.integrals.clone(), self.u.value(kb))
    }

    /// Remainders `R_0, …, R_m` for nodes `k → kb` written to `out`.
    pub fn remainders(&mut self, k: usize, kb: usize, out: &mut Vec<f64>) {
        self.table.fill(&self.keys, self.path, k, kb, self.variant, &mut self.integrals);
        let m = self.weights.last().copied().unwrap_or(0);
        out.clear();
        out.resize(m + 1, 0.0);
        let actual = self.u.value(kb);
        let mut partial = vec![0.0; m + 1];
        for ((key, &w), &i) in self.keys.iter().zip(&self.weights).zip(&self.integrals) {
            if i != 0.0 {
                partial[w] += self.u.derivative(key, k) * i;
            }
        }
        let mut acc = 0.0;
        for (r, p) in out.iter_mut().zip(&partial) {
            acc += p;
            *r = actual - acc;
        }
    }
}

/// Definitional remainder of order `m` between nodes, full variant.
pub(crate) fn definitional_remainder(u: &dyn BoundFunctional, path: &SamplePath, k: usize, kb: usize, m: usize) -> Result<f64> {
    let mut ex = PathExpander::new(u, path, m, Variant::Full)?;
    let mut out = Vec::new();
    ex.remainders(k, kb, &mut out);
    Ok(out[m])
}

/// Order-`m` expansion of `u` at `(t, δ)` with default options.
pub fn expand(u: &dyn PathFunctional, path: &SamplePath, q: &ExpansionQuery) -> Result<ExpansionResult> {
    expand_with(u, path, q, &ExpansionOptions::default())
}

/// Order-`m` expansion of `u` at `(t, δ)`.
pub fn expand_with(u: &dyn PathFunctional, path: &SamplePath, q: &ExpansionQuery, opts: &ExpansionOptions) -> Result<ExpansionResult> {
    check_order(q.m, opts)?;
    if !q.x.is_empty() || !q.h.is_empty() {
        return Err(Error::Query("spatial components given for a path functional".into()));
    }
    let (k, kb) = resolve_nodes(path, q.t, q.delta)?;
    let bound = u.bind(path)?;
    let mut ex = PathExpander::new(bound.as_ref(), path, q.m, opts.variant)?;
    let (coef, integrals, actual) = ex.terms(k, kb);
    let d = u.dim();
    let terms: Vec<Term> = ex
        .keys
        .iter()
        .zip(coef)
        .zip(integrals)
        .map(|((key, c), i)| Term {
            index: CombinedIndex {
                theta: TemporalIndex::new(key.clone(), d).expect("enumerated index"),
                ell: SpatialIndex::zero(0),
            },
            coefficient: c,
            integral: i,
            monomial: 1.0,
        })
        .collect();
    let predicted = terms.iter().map(Term::contribution).sum::<f64>();
    Ok(ExpansionResult { query: q.clone(), variant: opts.variant, terms, predicted, actual, remainder: actual - predicted })
}

/// The order-2 prediction in matrix form,
/// `u + ∂_t u·δ + ∂_ω u·B + H : B̲` forward and `… + H : B̲ᵀ` backward,
/// with `H[j][i] = D^{(j,i)} u` and `B`, `B̲` the increment and step-2
/// signature over the query interval. The symmetrized variant uses
/// `½ H : B Bᵀ` for the last term.
pub fn second_order_closed_form(u: &dyn PathFunctional, path: &SamplePath, t: f64, delta: f64, variant: Variant) -> Result<f64> {
    let (k, kb) = resolve_nodes(path, t, delta)?;
    let bound = u.bind(path)?;
    check_capability(bound.as_ref(), &[0])?;
    let d = u.dim();
    let (lo, hi) = (k.min(kb), k.max(kb));
    let sig = step2_signature_nodes(path, lo, hi);
    let forward = kb > k;
    let sign = if forward { 1.0 } else { -1.0 };
    let mut value = bound.value(k) + bound.derivative(&[0], k) * (path.grid().time(kb) - path.grid().time(k));
    for i in 0..d {
        value += bound.derivative(&[i as u8 + 1], k) * sign * sig.increment[i];
    }
    for j in 0..d {
        for i in 0..d {
            let h = bound.derivative(&[j as u8 + 1, i as u8 + 1], k);
            let second = match variant {
                Variant::Full if forward => sig.second_level[(j, i)],
                Variant::Full => sig.second_level[(i, j)],
                Variant::Symmetrized => 0.5 * sig.increment[j] * sig.increment[i],
            };
            value += h * second;
        }
    }
    Ok(value)
}

/// Term-by-term comparison of the two backward forms at `(t, −δ)`, `δ > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackwardConsistency {
    /// Largest relative difference between the unified term
    /// `D^θ u · I^θ_{t,t−δ}` and the literal term
    /// `(−1)^{|θ|₀} D^θ u · I^{−θ}_{t−δ,t}`.
    pub max_term_difference: f64,
    /// Relative difference between the unified order-2 prediction and the
    /// matrix form with `B̲ᵀ` (0 when `m ≠ 2`).
    pub closed_form_difference: f64,
    pub terms: usize,
}

/// Relative difference with a floor that keeps exact zeros at zero.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Checks that the backward expansion written with reversed indices on
/// `[t−δ, t]` equals the unified signed form, term by term.
pub fn backward_consistency(u: &dyn PathFunctional, path: &SamplePath, t: f64, delta: f64, m: usize) -> Result<BackwardConsistency> {
    if delta <= 0.0 {
        return Err(Error::Query("backward consistency takes δ > 0 and expands at t − δ".into()));
    }
    let q = ExpansionQuery::new(t, -delta, m);
    let unified = expand(u, path, &q)?;
    let (k, kb) = resolve_nodes(path, t, -delta)?;
    let ones = GridProcess::constant(*path.grid(), 1.0);
    let mut worst = 0.0f64;
    for term in &unified.terms {
        let e = term.index.theta.entries();
        let reversed: Vec<u8> = e.iter().rev().copied().collect();
        let sign = if e.len() % 2 == 1 { -1.0 } else { 1.0 };
        let literal = term.coefficient * sign * iterated_integral_nodes(&reversed, &ones, path, kb, k);
        worst = worst.max(relative_difference(term.contribution(), literal));
    }
    let closed_form_difference = if m == 2 {
        relative_difference(unified.predicted, second_order_closed_form(u, path, t, -delta, Variant::Full)?)
    } else {
        0.0
    };
    Ok(BackwardConsistency { max_term_difference: worst, closed_form_difference, terms: unified.terms.len() })
}

#[cfg(test)]
mod tests;
