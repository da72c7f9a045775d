//! Path functionals, random fields and their path derivatives.
//!
//! A functional is a descriptor; binding it to a [`SamplePath`] yields an
//! evaluator that answers `D^θ u(t_k)` at grid nodes. Derivative indices
//! follow the convention `D^θ u = ∂_{θ₁}⋯∂_{θₙ} u`: the last entry is
//! applied first, `0` means `∂_t` and `i ≥ 1` means `∂_{ω^i}`.

mod catalog;
mod smooth;

pub use catalog::{
    field_by_name, functional_by_name, AreaFunctional, ConstantFunctional, Cylindrical, CylindricalSlot, DriftOfPath,
    FrozenFieldFunctional, HeatField, Markovian, MultiplicativeField, PolyField, SpatialMultiplicativeField, TransportField,
    FIELD_NAMES,
    FUNCTIONAL_NAMES,
};
pub use smooth::Smooth1d;

use crate::error::{Error, Result};
use crate::indices::{weight_of, TemporalIndex};
use crate::integrals::integrate_slice;
use crate::paths::SamplePath;

/// An adapted functional `u(t, ω)` with analytically known path derivatives.
pub trait PathFunctional: Send + Sync {
    /// Catalog name.
    fn name(&self) -> String;
    /// Driver dimension `d`.
    fn dim(&self) -> usize;
    /// Largest derivative weight `|θ|` the functional supplies.
    fn max_order(&self) -> usize;
    /// Precomputes whatever running state the functional needs on `path`.
    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundFunctional + 'a>>;
    /// Times at which the derivatives jump. Identities that integrate
    /// derivatives are only expected to converge on intervals avoiding them.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `u(t, ω)` at a grid time.
    fn evaluate(&self, t: f64, path: &SamplePath) -> Result<f64> {
        let k = path.grid().node(t)?;
        Ok(self.bind(path)?.value(k))
    }

    /// `D^θ u(t, ω)` at a grid time.
    fn derivative(&self, theta: &TemporalIndex, t: f64, path: &SamplePath) -> Result<f64> {
        let k = path.grid().node(t)?;
        let bound = self.bind(path)?;
        check_capability(bound.as_ref(), theta.entries())?;
        Ok(bound.derivative(theta.entries(), k))
    }
}

/// A functional bound to one path, evaluated at node indices.
pub trait BoundFunctional: Send + Sync {
    /// Driver dimension `d`.
    fn dim(&self) -> usize;
    /// Largest derivative weight supplied.
    fn max_order(&self) -> usize;
    /// `D^θ u(t_k)`. Callers guarantee `|θ| ≤ max_order` and entries `≤ d`.
    fn derivative(&self, theta: &[u8], k: usize) -> f64;
    /// `u(t_k)`.
    fn value(&self, k: usize) -> f64 {
        self.derivative(&[], k)
    }
}

/// Checks that a bound functional can supply `D^θ`.
pub fn check_capability(u: &dyn BoundFunctional, theta: &[u8]) -> Result<()> {
    if let Some(&e) = theta.iter().find(|&&e| e as usize > u.dim()) {
        return Err(Error::Query(format!("index entry {e} exceeds driver dimension {}", u.dim())));
    }
    if weight_of(theta) > u.max_order() {
        return Err(Error::Capability(format!(
            "derivative of weight {} requested, functional supplies up to {}",
            weight_of(theta),
            u.max_order()
        )));
    }
    Ok(())
}

/// Node values of `D^θ u` on `a..=b`.
pub fn derivative_series(u: &dyn BoundFunctional, theta: &[u8], a: usize, b: usize) -> Vec<f64> {
    (a..=b).map(|k| u.derivative(theta, k)).collect()
}

/// The functional `D^{prefix} u` viewed as a functional in its own right:
/// its derivative along θ' is `D^{(θ', prefix)} u`.
pub struct Derived<'a> {
    base: &'a dyn BoundFunctional,
    prefix: Vec<u8>,
    buf: usize,
}

impl<'a> Derived<'a> {
    /// Wraps `base` with a prefix index.
    pub fn new(base: &'a dyn BoundFunctional, prefix: &[u8]) -> Result<Self> {
        check_capability(base, prefix)?;
        Ok(Self { base, prefix: prefix.to_vec(), buf: weight_of(prefix) })
    }
}

impl BoundFunctional for Derived<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn max_order(&self) -> usize {
        self.base.max_order() - self.buf
    }

    fn derivative(&self, theta: &[u8], k: usize) -> f64 {
        let mut full = Vec::with_capacity(theta.len() + self.prefix.len());
        full.extend_from_slice(theta);
        full.extend_from_slice(&self.prefix);
        self.base.derivative(&full, k)
    }
}

/// A random field `u(t, x, ω)`, `x ∈ ℝ^{d'}`, with path and spatial derivatives.
pub trait RandomField: Send + Sync {
    /// Catalog name.
    fn name(&self) -> String;
    /// Driver dimension `d`.
    fn dim(&self) -> usize;
    /// Spatial dimension `d'`.
    fn spatial_dim(&self) -> usize;
    /// Largest combined weight `|θ| + |ℓ|` supplied.
    fn max_order(&self) -> usize;
    /// Binds the field to a path.
    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundField + 'a>>;
}

/// A random field bound to one path.
pub trait BoundField: Send + Sync {
    /// Driver dimension `d`.
    fn dim(&self) -> usize;
    /// Spatial dimension `d'`.
    fn spatial_dim(&self) -> usize;
    /// Largest combined weight supplied.
    fn max_order(&self) -> usize;
    /// `D_x^ℓ D^θ u(t_k, x)`. Callers guarantee the weight is supported.
    fn derivative(&self, theta: &[u8], ell: &[u32], k: usize, x: &[f64]) -> f64;
    /// `u(t_k, x)`.
    fn value(&self, k: usize, x: &[f64]) -> f64 {
        let zero = vec![0u32; self.spatial_dim()];
        self.derivative(&[], &zero, k, x)
    }
}

/// Checks that a bound field can supply `D_x^ℓ D^θ`.
pub fn check_field_capability(u: &dyn BoundField, theta: &[u8], ell: &[u32]) -> Result<()> {
    if ell.len() != u.spatial_dim() {
        return Err(Error::Query(format!(
            "spatial index has dimension {}, field has {}",
            ell.len(),
            u.spatial_dim()
        )));
    }
    if let Some(&e) = theta.iter().find(|&&e| e as usize > u.dim()) {
        return Err(Error::Query(format!("index entry {e} exceeds driver dimension {}", u.dim())));
    }
    let w = weight_of(theta) + ell.iter().map(|&e| e as usize).sum::<usize>();
    if w > u.max_order() {
        return Err(Error::Capability(format!(
            "derivative of weight {w} requested, field supplies up to {}",
            u.max_order()
        )));
    }
    Ok(())
}

/// A bound field with the spatial argument frozen, seen as a path functional.
pub struct Frozen<'a> {
    field: &'a dyn BoundField,
    x: Vec<f64>,
    zero: Vec<u32>,
}

impl<'a> Frozen<'a> {
    /// Freezes `field` at `x`.
    pub fn new(field: &'a dyn BoundField, x: &[f64]) -> Result<Self> {
        if x.len() != field.spatial_dim() {
            return Err(Error::Query(format!(
                "point has {} components, field has spatial dimension {}",
                x.len(),
                field.spatial_dim()
            )));
        }
        Ok(Self { field, x: x.to_vec(), zero: vec![0; field.spatial_dim()] })
    }
}

impl BoundFunctional for Frozen<'_> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn max_order(&self) -> usize {
        self.field.max_order()
    }

    fn derivative(&self, theta: &[u8], k: usize) -> f64 {
        self.field.derivative(theta, &self.zero, k, &self.x)
    }
}

/// The field `∂_x^{raise} u`.
pub struct SpatialDerivative<'a> {
    field: &'a dyn BoundField,
    raise: Vec<u32>,
    order: usize,
}

impl<'a> SpatialDerivative<'a> {
    /// `∂_{x_i} u`.
    pub fn along(field: &'a dyn BoundField, i: usize) -> Result<Self> {
        if i >= field.spatial_dim() {
            return Err(Error::Query(format!("spatial direction {i} out of range")));
        }
        if field.max_order() == 0 {
            return Err(Error::Capability("field has no spatial derivatives".into()));
        }
        let mut raise = vec![0; field.spatial_dim()];
        raise[i] = 1;
        Ok(Self { field, raise, order: 1 })
    }
}

impl BoundField for SpatialDerivative<'_> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn spatial_dim(&self) -> usize {
        self.field.spatial_dim()
    }

    fn max_order(&self) -> usize {
        self.field.max_order() - self.order
    }

    fn derivative(&self, theta: &[u8], ell: &[u32], k: usize, x: &[f64]) -> f64 {
        let raised: Vec<u32> = ell.iter().zip(&self.raise).map(|(a, b)| a + b).collect();
        self.field.derivative(theta, &raised, k, x)
    }
}

fn check_path_dim(expected: usize, path: &SamplePath) -> Result<()> {
    if path.dim() != expected {
        return Err(Error::Query(format!(
            "functional needs a {expected}-dimensional path, got dimension {}",
            path.dim()
        )));
    }
    Ok(())
}

/// Residual of the functional Itô formula over `[0, T]`:
/// `u_T − u_0 − ∫_0^T ∂_t u ds − Σᵢ ∫_0^T ∂_{ω^i} u ∘ dB^i`.
pub fn functional_ito_residual(u: &dyn PathFunctional, path: &SamplePath, horizon: f64) -> Result<f64> {
    functional_ito_residual_between(u, path, 0.0, horizon)
}

/// As [`functional_ito_residual`] over a general interval `[s, t]`.
pub fn functional_ito_residual_between(u: &dyn PathFunctional, path: &SamplePath, s: f64, t: f64) -> Result<f64> {
    let (a, b) = (path.grid().node(s)?, path.grid().node(t)?);
    if a > b {
        return Err(Error::Query(format!("interval [{s}, {t}] is reversed")));
    }
    let bound = u.bind(path)?;
    check_capability(bound.as_ref(), &[0])?;
    let mut r = bound.value(b) - bound.value(a);
    for i in 0..=u.dim() as u8 {
        let phi = derivative_series(bound.as_ref(), &[i], a, b);
        r -= integrate_slice(&phi, i as usize, path, a);
    }
    Ok(r)
}

/// Residuals of the chain rule for the composite `Y_t = u(t, X_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRuleResidual {
    /// `∂_t Y − (∂_t u + ∂_x u · ∂_t X)`.
    pub time: f64,
    /// `∂_{ω^i} Y − (∂_{ω^i} u + (∂_{ω^i} X)·∂_x u)` for each driver `i`.
    pub omega: Vec<f64>,
}

impl ChainRuleResidual {
    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.omega.iter().fold(self.time.abs(), |m, v| m.max(v.abs()))
    }
}

/// Evaluates `u(t_k, X_{t_k})` on `path`.
fn composite_value(u: &dyn RandomField, xs: &[&dyn PathFunctional], path: &SamplePath, k: usize) -> Result<f64> {
    let field = u.bind(path)?;
    let point = xs.iter().map(|x| Ok(x.bind(path)?.value(k))).collect::<Result<Vec<f64>>>()?;
    Ok(field.value(k, &point))
}

/// Finite-difference path derivatives of a functional at node `k < N`.
///
/// The time derivative compares `u` on the path stopped at `t_k` one step
/// later with `u(t_k)`. The `ω^i` derivative is the central difference of
/// `u(t_{k+1})` over paths stopped at `t_k` that jump by `±h e_i` over the
/// next step. Both are first-order accurate in Δt when `h = √Δt`.
pub fn probe_derivatives(value_at: impl Fn(&SamplePath, usize) -> Result<f64>, path: &SamplePath, k: usize) -> Result<(f64, Vec<f64>)> {
    if k >= path.grid().steps() {
        return Err(Error::Query("derivative probe needs a node before the horizon".into()));
    }
    let d = path.dim();
    let dt = path.grid().dt();
    let h = dt.sqrt();
    let stopped = path.frozen_after(k, &vec![0.0; d])?;
    let time = (value_at(&stopped, k + 1)? - value_at(path, k)?) / dt;
    let mut omega = Vec::with_capacity(d);
    for i in 0..d {
        let mut bump = vec![0.0; d];
        bump[i] = h;
        let up = value_at(&path.frozen_after(k, &bump)?, k + 1)?;
        bump[i] = -h;
        let down = value_at(&path.frozen_after(k, &bump)?, k + 1)?;
        omega.push((up - down) / (2.0 * h));
    }
    Ok((time, omega))
}

/// Chain-rule residuals for `Y_t = u(t, X_t)` at grid time `t < T`.
///
/// The left sides are finite-difference probes of the composite (see
/// [`probe_derivatives`]); the right sides use the supplied derivatives of
/// `u` and of each component of `X`.
pub fn chain_rule_residual(u: &dyn RandomField, xs: &[&dyn PathFunctional], path: &SamplePath, t: f64) -> Result<ChainRuleResidual> {
    if xs.len() != u.spatial_dim() {
        return Err(Error::Query(format!(
            "field has spatial dimension {}, got {} state components",
            u.spatial_dim(),
            xs.len()
        )));
    }
    check_path_dim(u.dim(), path)?;
    for x in xs {
        check_path_dim(x.dim(), path)?;
    }
    let k = path.grid().node(t)?;
    let (lhs_t, lhs_w) = probe_derivatives(|p, n| composite_value(u, xs, p, n), path, k)?;

    let field = u.bind(path)?;
    let bound: Vec<Box<dyn BoundFunctional + '_>> = xs.iter().map(|x| x.bind(path)).collect::<Result<_>>()?;
    for b in &bound {
        check_capability(b.as_ref(), &[0])?;
    }
    let dp = u.spatial_dim();
    let point: Vec<f64> = bound.iter().map(|b| b.value(k)).collect();
    let zero = vec![0u32; dp];
    check_field_capability(field.as_ref(), &[0], &zero)?;
    let grad: Vec<f64> = (0..dp)
        .map(|l| {
            let mut e = zero.clone();
            e[l] = 1;
            field.derivative(&[], &e, k, &point)
        })
        .collect();
    let dot = |idx: u8| -> f64 { bound.iter().zip(&grad).map(|(b, g)| b.derivative(&[idx], k) * g).sum() };
    let rhs_t = field.derivative(&[0], &zero, k, &point) + dot(0);
    let omega = (1..=u.dim() as u8)
        .zip(&lhs_w)
        .map(|(i, lhs)| lhs - (field.derivative(&[i], &zero, k, &point) + dot(i)))
        .collect();
    Ok(ChainRuleResidual { time: lhs_t - rhs_t, omega })
}

#[cfg(test)]
mod tests;
