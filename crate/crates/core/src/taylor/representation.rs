//! Remainder formulas that do not go through the definitional subtraction.
//!
//! Two families are provided:
//!
//! - [`Representation::Full`] writes `R_m` as iterated integrals of the
//!   derivatives of weight `m+1` and `m+2`. Forward:
//!   `R_m = Σ_{θ̂} I^{θ̂}_{t,t+δ}(D^{θ̂} u)` over the remainder index set
//!   `{|θ̂| = m+1} ∪ {(0,θ) : |θ| = m}`. Backward, with `a = t−δ`:
//!   `R_m = Σ_{θ̂} (−1)^{|θ̂|₀} ∫_a^t D^{θ̂}u_s I^{−θ̃}_{a,s} d_{θ̂₁}s`,
//!   `θ̃ = (θ̂₂, …)`.
//! - [`Representation::Hoelder`] needs derivatives up to `m+1` only.
//!   Forward it combines lower-order remainders of `∂_t D^θ u` integrated
//!   against `I^θ_{s,t+δ} ds` with increments of `D^θ u`; backward it is
//!   `R_m(t,−δ) = −Σ_{|θ|≤m} (−1)^{|θ|₀} R_{m−|θ|}(D^θ u, a, δ) I^{−θ}_{a,t}`
//!   with forward remainders from base `a`.
//!
//! Both are evaluated with the quadrature rules of the engine, so they agree
//! with the definitional remainder up to discretisation error that vanishes
//! under refinement.

use serde::{Deserialize, Serialize};

use super::{definitional_remainder, resolve_nodes, ExpansionQuery};
use super::temporal_keys;
use crate::error::{Error, Result};
use crate::functionals::{derivative_series, BoundFunctional, Derived, PathFunctional};
use crate::indices::{enumerate_temporal, weight_of};
use crate::integrals::{integrate_slice, iterated_process, suffix_unit_process};
use crate::paths::SamplePath;

/// Which remainder formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Iterated integrals of the derivatives of weight `m+1` and `m+2`.
    Full,
    /// The recursion through lower-order remainders; derivatives up to `m+1`.
    Hoelder,
}

impl Representation {
    /// Derivative weight the formula consumes at order `m`.
    pub fn required_order(self, m: usize) -> usize {
        match self {
            Representation::Full => m + 2,
            Representation::Hoelder => m + 1,
        }
    }
}

/// `R_m(u, t, δ)` from the chosen representation.
pub fn remainder_via_representation(u: &dyn PathFunctional, path: &SamplePath, q: &ExpansionQuery, rep: Representation) -> Result<f64> {
    let (k, kb) = resolve_nodes(path, q.t, q.delta)?;
    let bound = u.bind(path)?;
    representation_remainder_nodes(bound.as_ref(), path, k, kb, q.m, rep)
}

/// Node-index form of [`remainder_via_representation`].
pub fn representation_remainder_nodes(
    u: &dyn BoundFunctional,
    path: &SamplePath,
    k: usize,
    kb: usize,
    m: usize,
    rep: Representation,
) -> Result<f64> {
    if u.max_order() < rep.required_order(m) {
        return Err(Error::Capability(format!(
            "{rep:?} representation of order {m} needs derivatives of weight {}, functional supplies {}",
            rep.required_order(m),
            u.max_order()
        )));
    }
    if k == kb {
        return Err(Error::Query("representation needs a nonempty interval".into()));
    }
    Ok(match (rep, kb > k) {
        (Representation::Full, true) => full_forward(u, path, k, kb, m),
        (Representation::Full, false) => full_backward(u, path, kb, k, m),
        (Representation::Hoelder, true) => hoelder_forward(u, path, k, kb, m),
        (Representation::Hoelder, false) => hoelder_backward(u, path, kb, k, m)?,
    })
}

/// `{|θ̂| = m+1} ∪ {(0,θ) : |θ| = m}`.
fn remainder_index_set(m: usize, d: usize) -> Vec<Vec<u8>> {
    let exact = |w: usize| enumerate_temporal(w, d).into_iter().filter(move |t| weight_of(t.entries()) == w);
    let mut set: Vec<Vec<u8>> = exact(m + 1).map(|t| t.entries().to_vec()).collect();
    set.extend(exact(m).map(|t| with_time_prefix(t.entries())));
    set
}

fn full_forward(u: &dyn BoundFunctional, path: &SamplePath, a: usize, b: usize, m: usize) -> f64 {
    remainder_index_set(m, u.dim())
        .iter()
        .map(|theta| {
            let phi = derivative_series(u, theta, a, b);
            let (last, inner) = theta.split_last().expect("remainder indices are nonempty");
            let layer = iterated_process(inner, &phi, path, a);
            integrate_slice(&layer, *last as usize, path, a)
        })
        .sum()
}

/// Backward remainder at base node `t` with the interval `[a, t]`.
fn full_backward(u: &dyn BoundFunctional, path: &SamplePath, a: usize, t: usize, m: usize) -> f64 {
    let ones = vec![1.0; t - a + 1];
    remainder_index_set(m, u.dim())
        .iter()
        .map(|theta| {
            let reversed_tail: Vec<u8> = theta[1..].iter().rev().copied().collect();
            let weight = iterated_process(&reversed_tail, &ones, path, a);
            let integrand: Vec<f64> = (a..=t).zip(&weight).map(|(s, w)| u.derivative(theta, s) * w).collect();
            let sign = if theta.len() % 2 == 0 { 1.0 } else { -1.0 };
            sign * integrate_slice(&integrand, theta[0] as usize, path, a)
        })
        .sum()
}

/// Pure-noise indices (no zero entries) of length `n`.
fn pure_noise(n: usize, d: usize) -> Vec<Vec<u8>> {
    enumerate_temporal(n, d)
        .into_iter()
        .map(|t| t.entries().to_vec())
        .filter(|e| e.len() == n && !e.contains(&0))
        .collect()
}

fn with_time_prefix(theta: &[u8]) -> Vec<u8> {
    let mut e = Vec::with_capacity(theta.len() + 1);
    e.push(0);
    e.extend_from_slice(theta);
    e
}

fn hoelder_forward(u: &dyn BoundFunctional, path: &SamplePath, a: usize, b: usize, m: usize) -> f64 {
    let d = u.dim();
    let len = b - a + 1;
    let ones = vec![1.0; len];
    if m == 0 {
        // R_0 = ∫ ∂_t u ds + Σᵢ ∫ ∂_{ω^i} u ∘ dB^i.
        return (0..=d as u8).map(|i| integrate_slice(&derivative_series(u, &[i], a, b), i as usize, path, a)).sum();
    }
    let mut total = 0.0;
    // Lower-order remainders of ∂_t D^θ u against I^θ_{s,b} ds, |θ| ≤ m−2.
    for n in (0..=m).take_while(|n| n + 2 <= m) {
        let inner_order = m - 2 - n;
        let lower = temporal_keys(inner_order, d);
        let processes: Vec<Vec<f64>> = lower.iter().map(|key| iterated_process(key, &ones, path, a)).collect();
        for theta in pure_noise(n, d) {
            let base = with_time_prefix(&theta);
            let coefs: Vec<f64> = lower
                .iter()
                .map(|key| {
                    let mut e = key.clone();
                    e.extend_from_slice(&base);
                    u.derivative(&e, a)
                })
                .collect();
            let tail = suffix_unit_process(&theta, path, a, b);
            let integrand: Vec<f64> = (0..len)
                .map(|s| {
                    let taylor: f64 = coefs.iter().zip(&processes).map(|(c, p)| c * p[s]).sum();
                    (u.derivative(&base, a + s) - taylor) * tail[s]
                })
                .collect();
            total += integrate_slice(&integrand, 0, path, a);
        }
    }
    // ∫ ∂_t D^θ u_s I^θ_{s,b} ds, |θ| = m−1.
    for theta in pure_noise(m - 1, d) {
        let base = with_time_prefix(&theta);
        let tail = suffix_unit_process(&theta, path, a, b);
        let integrand: Vec<f64> = (0..len).map(|s| u.derivative(&base, a + s) * tail[s]).collect();
        total += integrate_slice(&integrand, 0, path, a);
    }
    // I^θ_{a,b}([D^θ u]_{a,·}), |θ| = m.
    for theta in pure_noise(m, d) {
        let start = u.derivative(&theta, a);
        let phi: Vec<f64> = (a..=b).map(|s| u.derivative(&theta, s) - start).collect();
        let (last, inner) = theta.split_last().expect("m ≥ 1");
        let layer = iterated_process(inner, &phi, path, a);
        total += integrate_slice(&layer, *last as usize, path, a);
    }
    total
}

fn hoelder_backward(u: &dyn BoundFunctional, path: &SamplePath, a: usize, t: usize, m: usize) -> Result<f64> {
    let ones = vec![1.0; t - a + 1];
    let mut total = 0.0;
    for theta in enumerate_temporal(m, u.dim()) {
        let e = theta.entries();
        let derived = Derived::new(u, e)?;
        let inner = definitional_remainder(&derived, path, a, t, m - weight_of(e))?;
        let reversed: Vec<u8> = e.iter().rev().copied().collect();
        let integral = if reversed.is_empty() { 1.0 } else { *iterated_process(&reversed, &ones, path, a).last().expect("nonempty") };
        let sign = if e.len() % 2 == 1 { -1.0 } else { 1.0 };
        total -= sign * inner * integral;
    }
    Ok(total)
}
