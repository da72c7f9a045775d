//! Expansions of random fields `u(t, x, ω)` in time, space and path.
//!
//! ```text
//! u(t+δ, x+h) ≈ Σ_{|(θ,ℓ)| ≤ m} (1/ℓ!) D_x^ℓ D^θ u(t, x) h^ℓ I^θ_{t,t+δ}
//! ```

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use super::{check_order, resolve_nodes, temporal_keys, ExpansionOptions, ExpansionQuery, ExpansionResult, IntegralTable, Term, Variant};
use crate::error::{Error, Result};
use crate::functionals::{check_field_capability, BoundField, RandomField, SpatialDerivative};
use crate::indices::{enumerate_indices, monomial, CombinedIndex};
use crate::integrals::step2_signature_nodes;
use crate::paths::SamplePath;

/// Default Gauss-Legendre order for the κ-integral of the recursion.
pub const DEFAULT_QUADRATURE_ORDER: usize = 8;

/// Repeated field expansions on one path.
///
/// The iterated integrals depend on the time interval only, so
/// [`FieldExpander::set_interval`] computes them once and any number of
/// `(x, h)` pairs can then be evaluated.
pub struct FieldExpander<'a> {
    u: &'a dyn BoundField,
    path: &'a SamplePath,
    variant: Variant,
    indices: Vec<CombinedIndex>,
    slots: Vec<usize>,
    keys: Vec<Vec<u8>>,
    table: IntegralTable,
    integrals: Vec<f64>,
    interval: Option<(usize, usize)>,
    m: usize,
}

impl<'a> FieldExpander<'a> {
    /// Prepares order-`m` expansions of a bound field.
    pub fn new(u: &'a dyn BoundField, path: &'a SamplePath, m: usize, variant: Variant) -> Result<Self> {
        if u.dim() != path.dim() {
            return Err(Error::Query(format!("field has d = {}, path has d = {}", u.dim(), path.dim())));
        }
        if m > u.max_order() {
            return Err(Error::Capability(format!(
                "expansion of order {m} needs derivatives the field does not supply (max {})",
                u.max_order()
            )));
        }
        let indices = enumerate_indices(m as i64, u.dim(), u.spatial_dim())?;
        let keys = temporal_keys(m, u.dim());
        let slots = indices
            .iter()
            .map(|c| keys.iter().position(|k| k.as_slice() == c.theta.entries()).expect("θ enumerated"))
            .collect();
        Ok(Self {
            u,
            path,
            variant,
            indices,
            slots,
            keys,
            table: IntegralTable::new(),
            integrals: Vec::new(),
            interval: None,
            m,
        })
    }

    /// Canonical index list.
    pub fn indices(&self) -> &[CombinedIndex] {
        &self.indices
    }

    /// Computes the iterated integrals over nodes `k → kb`.
    pub fn set_interval(&mut self, k: usize, kb: usize) {
        self.table.fill(&self.keys, self.path, k, kb, self.variant, &mut self.integrals);
        self.interval = Some((k, kb));
    }

    fn nodes(&self) -> (usize, usize) {
        self.interval.expect("set_interval must be called before evaluating")
    }

    fn check_point(&self, x: &[f64], h: &[f64]) -> Result<()> {
        let dp = self.u.spatial_dim();
        if x.len() != dp || h.len() != dp {
            return Err(Error::Query(format!(
                "field has spatial dimension {dp}, got x of length {} and h of length {}",
                x.len(),
                h.len()
            )));
        }
        Ok(())
    }

    /// Terms at base point `x` with offset `h` and `u(t+δ, x+h)`.
    pub fn terms(&self, x: &[f64], h: &[f64]) -> Result<(Vec<Term>, f64)> {
        self.check_point(x, h)?;
        let (k, kb) = self.nodes();
        let terms = self
            .indices
            .iter()
            .zip(&self.slots)
            .map(|(c, &slot)| {
                let mono = monomial(h, &c.ell).expect("dimension checked") / c.ell.factorial();
                Term {
                    index: c.clone(),
                    coefficient: self.u.derivative(c.theta.entries(), c.ell.entries(), k, x),
                    integral: self.integrals[slot],
                    monomial: mono,
                }
            })
            .collect();
        let moved: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
        Ok((terms, self.u.value(kb, &moved)))
    }

    /// Remainders `R_0, …, R_m` at `(x, h)` written to `out`.
    pub fn remainders(&self, x: &[f64], h: &[f64], out: &mut Vec<f64>) -> Result<()> {
        self.check_point(x, h)?;
        let (k, kb) = self.nodes();
        let mut partial = vec![0.0; self.m + 1];
        for (c, &slot) in self.indices.iter().zip(&self.slots) {
            let i = self.integrals[slot];
            let mono = monomial(h, &c.ell).expect("dimension checked");
            if i != 0.0 && mono != 0.0 {
                partial[c.weight()] += self.u.derivative(c.theta.entries(), c.ell.entries(), k, x) * i * mono / c.ell.factorial();
            }
        }
        let moved: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
        let actual = self.u.value(kb, &moved);
        out.clear();
        let mut acc = 0.0;
        for p in partial {
            acc += p;
            out.push(actual - acc);
        }
        Ok(())
    }

    /// `R_m` at `(x, h)`.
    pub fn remainder(&self, x: &[f64], h: &[f64]) -> Result<f64> {
        let mut out = Vec::with_capacity(self.m + 1);
        self.remainders(x, h, &mut out)?;
        Ok(out[self.m])
    }
}

/// Order-`m` field expansion with default options.
pub fn expand_field(u: &dyn RandomField, path: &SamplePath, q: &ExpansionQuery) -> Result<ExpansionResult> {
    expand_field_with(u, path, q, &ExpansionOptions::default())
}

/// Order-`m` field expansion at `(t, x, δ, h)`.
pub fn expand_field_with(u: &dyn RandomField, path: &SamplePath, q: &ExpansionQuery, opts: &ExpansionOptions) -> Result<ExpansionResult> {
    check_order(q.m, opts)?;
    let (k, kb) = resolve_nodes(path, q.t, q.delta)?;
    let bound = u.bind(path)?;
    let mut ex = FieldExpander::new(bound.as_ref(), path, q.m, opts.variant)?;
    ex.set_interval(k, kb);
    let (terms, actual) = ex.terms(&q.x, &q.h)?;
    let predicted = terms.iter().map(Term::contribution).sum::<f64>();
    Ok(ExpansionResult { query: q.clone(), variant: opts.variant, terms, predicted, actual, remainder: actual - predicted })
}

/// The order-2 field prediction in its seven-term matrix form:
///
/// ```text
/// u + ∂_t u δ + ∂_x u·h + ∂_ω u·B + ½ ∂²_xx u : h hᵀ + ∂²_{xω} u : h Bᵀ + ∂²_{ωω} u : B̲
/// ```
///
/// evaluated from the step-2 signature (`B̲ᵀ` for backward queries,
/// `½ B Bᵀ` for the symmetrized variant).
pub fn expand_field_m2_fast(u: &dyn RandomField, path: &SamplePath, q: &ExpansionQuery, variant: Variant) -> Result<f64> {
    if q.m != 2 {
        return Err(Error::Capability(format!("the seven-term form is order 2, got m = {}", q.m)));
    }
    let (k, kb) = resolve_nodes(path, q.t, q.delta)?;
    let f = u.bind(path)?;
    let (d, dp) = (u.dim(), u.spatial_dim());
    if q.x.len() != dp || q.h.len() != dp {
        return Err(Error::Query(format!("field has spatial dimension {dp}")));
    }
    let zero = vec![0u32; dp];
    check_field_capability(f.as_ref(), &[0], &zero)?;
    let (x, h) = (&q.x[..], &q.h[..]);
    let unit = |l: usize, n: u32| -> Vec<u32> {
        let mut e = zero.clone();
        e[l] += n;
        e
    };
    let pair = |l: usize, r: usize| -> Vec<u32> {
        let mut e = zero.clone();
        e[l] += 1;
        e[r] += 1;
        e
    };
    let (lo, hi) = (k.min(kb), k.max(kb));
    let sig = step2_signature_nodes(path, lo, hi);
    let forward = kb > k;
    let b: Vec<f64> = sig.increment.iter().map(|v| if forward { *v } else { -v }).collect();
    let delta = path.grid().time(kb) - path.grid().time(k);

    let mut value = f.value(k, x) + f.derivative(&[0], &zero, k, x) * delta;
    for l in 0..dp {
        value += f.derivative(&[], &unit(l, 1), k, x) * h[l];
    }
    for i in 0..d {
        value += f.derivative(&[i as u8 + 1], &zero, k, x) * b[i];
    }
    for l in 0..dp {
        for r in 0..dp {
            value += 0.5 * f.derivative(&[], &pair(l, r), k, x) * h[l] * h[r];
        }
    }
    for l in 0..dp {
        for i in 0..d {
            value += f.derivative(&[i as u8 + 1], &unit(l, 1), k, x) * h[l] * b[i];
        }
    }
    for j in 0..d {
        for i in 0..d {
            let second = match variant {
                Variant::Full if forward => sig.second_level[(j, i)],
                Variant::Full => sig.second_level[(i, j)],
                Variant::Symmetrized => 0.5 * b[j] * b[i],
            };
            value += f.derivative(&[j as u8 + 1, i as u8 + 1], &zero, k, x) * second;
        }
    }
    Ok(value)
}

/// Residual of the spatial recursion
///
/// ```text
/// R_m(h) − R_m(0) − Σᵢ hᵢ ∫_0^1 R_{m−1}(∂_{xᵢ}u, hⁱ(κ)) dκ,
/// hⁱ(κ) = (h₁, …, h_{i−1}, κhᵢ, 0, …, 0),
/// ```
///
/// with the κ-integral by Gauss-Legendre quadrature of the given order.
pub fn field_remainder_recursion_residual(u: &dyn RandomField, path: &SamplePath, q: &ExpansionQuery, quadrature_order: usize) -> Result<f64> {
    if q.m == 0 {
        return Err(Error::Query("the spatial recursion needs m ≥ 1".into()));
    }
    let order = NonZeroUsize::new(quadrature_order).ok_or_else(|| Error::Config("quadrature order must be positive".into()))?;
    let (k, kb) = resolve_nodes(path, q.t, q.delta)?;
    let bound = u.bind(path)?;
    let mut ex = FieldExpander::new(bound.as_ref(), path, q.m, Variant::Full)?;
    ex.set_interval(k, kb);
    let zero_h = vec![0.0; q.h.len()];
    let mut residual = ex.remainder(&q.x, &q.h)? - ex.remainder(&q.x, &zero_h)?;
    let rule = GaussLegendre::new(order);
    for i in 0..u.spatial_dim() {
        if q.h[i] == 0.0 {
            continue;
        }
        let du = SpatialDerivative::along(bound.as_ref(), i)?;
        let mut ex_i = FieldExpander::new(&du, path, q.m - 1, Variant::Full)?;
        ex_i.set_interval(k, kb);
        let mut failure = None;
        let integral = rule.integrate(0.0, 1.0, |kappa| {
            let mut hk = q.h.clone();
            hk[i] *= kappa;
            hk.iter_mut().skip(i + 1).for_each(|v| *v = 0.0);
            ex_i.remainder(&q.x, &hk).unwrap_or_else(|e| {
                failure = Some(e);
                0.0
            })
        });
        if let Some(e) = failure {
            return Err(e);
        }
        residual -= q.h[i] * integral;
    }
    Ok(residual)
}
