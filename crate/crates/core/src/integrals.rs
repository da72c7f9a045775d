//! Iterated Stratonovich integrals on discretised paths.
//!
//! `I^θ_{s,t}(φ)` integrates innermost-first: θ₁ is the first layer applied
//! to φ and θₙ the outermost. Time layers use the trapezoid rule and noise
//! layers the midpoint rule `Σ ½(φ_k + φ_{k+1})(B^i_{k+1} − B^i_k)`, so
//! the shuffle relation `B̲ + B̲ᵀ = BBᵀ` holds exactly up to rounding.
//! Every layer is materialised in O(N); no closed-form shortcuts are taken.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::indices::{reverse, TemporalIndex};
use crate::paths::{SamplePath, TimeGrid};

/// Values of an adapted integrand φ at consecutive grid nodes
/// `start..start + len`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridProcess {
    grid: TimeGrid,
    start: usize,
    values: Vec<f64>,
}

impl GridProcess {
    /// A process covering the whole grid.
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.steps() + 1 {
            return Err(Error::Query(format!(
                "process has {} values, grid has {} nodes",
                values.len(),
                grid.steps() + 1
            )));
        }
        Self::on_range(grid, 0, values)
    }

    /// A process defined on nodes `start..start + values.len()`.
    pub fn on_range(grid: TimeGrid, start: usize, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || start + values.len() > grid.steps() + 1 {
            return Err(Error::Query("process range does not fit the grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Query("process has non-finite values".into()));
        }
        Ok(Self { grid, start, values })
    }

    /// The constant process on the whole grid.
    pub fn constant(grid: TimeGrid, value: f64) -> Self {
        Self { grid, start: 0, values: vec![value; grid.steps() + 1] }
    }

    /// Builds a process on nodes `a..=b` from a node function.
    pub fn from_fn(grid: TimeGrid, a: usize, b: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self { grid, start: a, values: (a..=b).map(f).collect() }
    }

    /// Coordinate `i` (0-based) of a path as a process.
    pub fn coordinate(path: &SamplePath, i: usize) -> Self {
        Self { grid: *path.grid(), start: 0, values: path.coord(i).to_vec() }
    }

    /// Grid of the process.
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// First covered node.
    pub fn start(&self) -> usize {
        self.start
    }

    /// Last covered node.
    pub fn end(&self) -> usize {
        self.start + self.values.len() - 1
    }

    /// Value at node `k`.
    pub fn at(&self, k: usize) -> f64 {
        self.values[k - self.start]
    }

    /// Values on nodes `a..=b`.
    pub fn slice(&self, a: usize, b: usize) -> &[f64] {
        &self.values[a - self.start..=b - self.start]
    }

    fn check_covers(&self, a: usize, b: usize) -> Result<()> {
        if a < self.start || b > self.end() {
            return Err(Error::Query(format!(
                "integrand covers nodes {}..={}, query needs {a}..={b}",
                self.start,
                self.end()
            )));
        }
        Ok(())
    }
}

/// Step-2 signature of the path over `[s,t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Step2Signature {
    /// `B_{s,t}`.
    pub increment: Vec<f64>,
    /// `B̲_{s,t}` with entry `(i,j) = ∫_s^t B^i_{s,r} ∘ dB^j_r`.
    pub second_level: DMatrix<f64>,
    /// `A_{s,t} = B̲ − B̲ᵀ`.
    pub levy_area: DMatrix<f64>,
}

/// Writes the cumulative integral `r ↦ ∫_{t_a}^r φ d_{driver}` into `out`,
/// where `phi` holds the integrand on nodes `a..=a + phi.len() − 1`.
#[inline]
pub(crate) fn cumulative_into(phi: &[f64], driver: usize, path: &SamplePath, a: usize, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(phi.len());
    let mut acc = 0.0;
    out.push(acc);
    if driver == 0 {
        let half_dt = 0.5 * path.grid().dt();
        for w in phi.windows(2) {
            acc += half_dt * (w[0] + w[1]);
            out.push(acc);
        }
    } else {
        let c = &path.coord(driver - 1)[a..a + phi.len()];
        for (w, x) in phi.windows(2).zip(c.windows(2)) {
            acc += 0.5 * (w[0] + w[1]) * (x[1] - x[0]);
            out.push(acc);
        }
    }
}

/// Midpoint (or trapezoid) sum of `phi` against `driver` over nodes `a..=b`.
#[inline]
pub(crate) fn integrate_slice(phi: &[f64], driver: usize, path: &SamplePath, a: usize) -> f64 {
    if driver == 0 {
        let half_dt = 0.5 * path.grid().dt();
        phi.windows(2).map(|w| half_dt * (w[0] + w[1])).sum()
    } else {
        let c = &path.coord(driver - 1)[a..a + phi.len()];
        phi.windows(2).zip(c.windows(2)).map(|(w, x)| 0.5 * (w[0] + w[1]) * (x[1] - x[0])).sum()
    }
}

/// The process `r ↦ I^θ_{t_a,r}(φ)` on nodes `a..=a + phi.len() − 1`.
pub(crate) fn iterated_process(theta: &[u8], phi: &[f64], path: &SamplePath, a: usize) -> Vec<f64> {
    let mut cur = phi.to_vec();
    let mut next = Vec::with_capacity(phi.len());
    for &e in theta {
        cumulative_into(&cur, e as usize, path, a, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// The process `s ↦ I^θ_{t_s,t_b}(1)` for `s ∈ a..=b`, built by peeling θ₁
/// off the front: `I^θ_{s,b} = ∫_s^b I^{(θ₂,…,θₙ)}_{r,b} d_{θ₁}r`.
pub(crate) fn suffix_unit_process(theta: &[u8], path: &SamplePath, a: usize, b: usize) -> Vec<f64> {
    let len = b - a + 1;
    let mut cur = vec![1.0; len];
    let mut next = vec![0.0; len];
    for &e in theta.iter().rev() {
        next[len - 1] = 0.0;
        for k in (0..len - 1).rev() {
            let dx = path.driver_step(e as usize, a + k);
            next[k] = next[k + 1] + 0.5 * (cur[k] + cur[k + 1]) * dx;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Reusable buffers for computing many `I^θ(1)` over one interval with
/// shared prefixes.
#[derive(Debug, Default)]
pub(crate) struct UnitIntegrals {
    layers: Vec<Vec<f64>>,
    order: Vec<usize>,
}

impl UnitIntegrals {
    /// Computes `I^{keys[q]}_{t_a,t_b}(1)` for every key with `a ≤ b`.
    ///
    /// Keys are visited in lexicographic order so that a layer computed for
    /// a prefix is reused by every key extending it.
    pub(crate) fn forward(&mut self, keys: &[&[u8]], path: &SamplePath, a: usize, b: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(keys.len(), 0.0);
        if a == b {
            for (q, k) in keys.iter().enumerate() {
                out[q] = if k.is_empty() { 1.0 } else { 0.0 };
            }
            return;
        }
        let len = b - a + 1;
        self.order.clear();
        self.order.extend(0..keys.len());
        self.order.sort_by(|&x, &y| keys[x].cmp(keys[y]));
        if self.layers.is_empty() {
            self.layers.push(Vec::new());
        }
        self.layers[0].clear();
        self.layers[0].resize(len, 1.0);
        let mut depth = 0usize;
        let mut prev: &[u8] = &[];
        for &q in &self.order {
            let key = keys[q];
            let common = prev.iter().zip(key).take_while(|(x, y)| x == y).count().min(depth);
            depth = common;
            for &e in &key[common..] {
                if self.layers.len() <= depth + 1 {
                    self.layers.push(Vec::new());
                }
                let (lo, hi) = self.layers.split_at_mut(depth + 1);
                cumulative_into(&lo[depth], e as usize, path, a, &mut hi[0]);
                depth += 1;
            }
            out[q] = self.layers[depth][len - 1];
            prev = key;
        }
    }

    /// Signed integrals `I^{keys[q]}_{t_a,t_b}(1)` for either order of `a`,
    /// `b`, using `I^θ_{b,a} = (−1)^{|θ|₀} I^{−θ}_{a,b}` when `a > b`.
    pub(crate) fn signed(&mut self, keys: &[&[u8]], path: &SamplePath, a: usize, b: usize, out: &mut Vec<f64>) {
        if a <= b {
            self.forward(keys, path, a, b, out);
            return;
        }
        let reversed: Vec<Vec<u8>> = keys.iter().map(|k| k.iter().rev().copied().collect()).collect();
        let refs: Vec<&[u8]> = reversed.iter().map(|k| k.as_slice()).collect();
        self.forward(&refs, path, b, a, out);
        for (v, k) in out.iter_mut().zip(keys) {
            if k.len() % 2 == 1 {
                *v = -*v;
            }
        }
    }
}

fn node_pair(path: &SamplePath, s: f64, t: f64) -> Result<(usize, usize)> {
    Ok((path.grid().node(s)?, path.grid().node(t)?))
}

fn check_driver(path: &SamplePath, theta: &[u8]) -> Result<()> {
    if let Some(&e) = theta.iter().find(|&&e| e as usize > path.dim()) {
        return Err(Error::Query(format!("driver {e} exceeds path dimension {}", path.dim())));
    }
    Ok(())
}

/// `∫_s^t φ d_i`: trapezoid in time for `i = 0`, midpoint Stratonovich sum
/// against `B^i` for `i ≥ 1`.
pub fn stratonovich_integral(phi: &GridProcess, driver: usize, path: &SamplePath, s: f64, t: f64) -> Result<f64> {
    let (a, b) = node_pair(path, s, t)?;
    if a > b {
        return Err(Error::Query(format!("integration bounds out of order: {s} > {t}")));
    }
    check_driver(path, &[driver as u8])?;
    phi.check_covers(a, b)?;
    Ok(integrate_slice(phi.slice(a, b), driver, path, a))
}

/// Midpoint sum of `phi` against a general grid process `z` over `[s,t]`:
/// `Σ ½(φ_k + φ_{k+1})(z_{k+1} − z_k)`.
pub fn integrate_against(phi: &GridProcess, z: &GridProcess, s: f64, t: f64) -> Result<f64> {
    let (a, b) = (phi.grid.node(s)?, phi.grid.node(t)?);
    if a > b {
        return Err(Error::Query(format!("integration bounds out of order: {s} > {t}")));
    }
    phi.check_covers(a, b)?;
    z.check_covers(a, b)?;
    Ok(phi
        .slice(a, b)
        .windows(2)
        .zip(z.slice(a, b).windows(2))
        .map(|(p, x)| 0.5 * (p[0] + p[1]) * (x[1] - x[0]))
        .sum())
}

/// Node-index form of [`iterated_integral`] for `a ≤ b`; `phi` must cover `a..=b`.
pub fn iterated_integral_nodes(theta: &[u8], phi: &GridProcess, path: &SamplePath, a: usize, b: usize) -> f64 {
    if theta.is_empty() {
        return phi.at(b);
    }
    if a == b {
        return 0.0;
    }
    let (last, inner) = theta.split_last().expect("nonempty");
    let layer = iterated_process(inner, phi.slice(a, b), path, a);
    integrate_slice(&layer, *last as usize, path, a)
}

/// `I^θ_{s,t}(φ)` for `s ≤ t`, integrating innermost-first.
pub fn iterated_integral(theta: &TemporalIndex, phi: &GridProcess, path: &SamplePath, s: f64, t: f64) -> Result<f64> {
    let (a, b) = node_pair(path, s, t)?;
    if a > b {
        return Err(Error::Query(format!("integration bounds out of order: {s} > {t}")));
    }
    check_driver(path, theta.entries())?;
    phi.check_covers(if theta.is_empty() { b } else { a }, b)?;
    Ok(iterated_integral_nodes(theta.entries(), phi, path, a, b))
}

/// `I^θ_{a,b}(φ)` for either order of the endpoints, with
/// `I^θ_{a,b} = (−1)^{|θ|₀} I^{−θ}_{b,a}` when `a > b`.
pub fn signed_integral(theta: &TemporalIndex, phi: &GridProcess, path: &SamplePath, a: f64, b: f64) -> Result<f64> {
    let (na, nb) = node_pair(path, a, b)?;
    if na <= nb {
        return iterated_integral(theta, phi, path, a, b);
    }
    let v = iterated_integral(&reverse(theta), phi, path, b, a)?;
    Ok(if theta.len() % 2 == 1 { -v } else { v })
}

/// Increment, second level `B̲_{s,t}` and Lévy area of the path over `[s,t]`.
pub fn step2_signature(path: &SamplePath, s: f64, t: f64) -> Result<Step2Signature> {
    let (a, b) = node_pair(path, s, t)?;
    if a >= b {
        return Err(Error::Query(format!("step-2 signature needs s < t, got [{s}, {t}]")));
    }
    Ok(step2_signature_nodes(path, a, b))
}

/// Node-index form of [`step2_signature`].
pub fn step2_signature_nodes(path: &SamplePath, a: usize, b: usize) -> Step2Signature {
    let d = path.dim();
    let increment = path.increment_nodes(a, b);
    let mut second_level = DMatrix::zeros(d, d);
    for i in 0..d {
        let inner: Vec<f64> = path.coord(i)[a..=b].iter().map(|x| x - path.value(i, a)).collect();
        for j in 0..d {
            second_level[(i, j)] = integrate_slice(&inner, j + 1, path, a);
        }
    }
    let levy_area = &second_level - second_level.transpose();
    Step2Signature { increment, second_level, levy_area }
}

/// Residual of the integration-by-parts identity
/// `∫_s^t φ_r I^{−θ̃}_{s,r}(1) d_{θ₁}r = Σᵢ (−1)^{i−1} I^{(θ₁…θᵢ)}_{s,t}(φ) I^{(θₙ…θ_{i+1})}_{s,t}(1)`
/// with θ̃ = (θ₂,…,θₙ).
///
/// The second factor on the right carries the reversed tail. That is the
/// order produced by repeated integration by parts, and the order for which
/// the residual vanishes under refinement when `n ≥ 3`.
pub fn ibp_identity_residual(theta: &TemporalIndex, phi: &GridProcess, path: &SamplePath, s: f64, t: f64) -> Result<f64> {
    if theta.is_empty() {
        return Err(Error::Query("integration-by-parts identity needs a nonempty index".into()));
    }
    let (a, b) = node_pair(path, s, t)?;
    if a > b {
        return Err(Error::Query(format!("integration bounds out of order: {s} > {t}")));
    }
    check_driver(path, theta.entries())?;
    phi.check_covers(a, b)?;
    let e = theta.entries();
    let n = e.len();
    let ones = vec![1.0; b - a + 1];
    let rev_tail: Vec<u8> = e[1..].iter().rev().copied().collect();
    let tail_process = iterated_process(&rev_tail, &ones, path, a);
    let product: Vec<f64> = phi.slice(a, b).iter().zip(&tail_process).map(|(p, q)| p * q).collect();
    let lhs = integrate_slice(&product, e[0] as usize, path, a);

    let mut rhs = 0.0;
    for i in 1..=n {
        let head = iterated_integral_nodes(&e[..i], phi, path, a, b);
        let rest: Vec<u8> = e[i..].iter().rev().copied().collect();
        let tail = if rest.is_empty() { 1.0 } else { *iterated_process(&rest, &ones, path, a).last().unwrap() };
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        rhs += sign * head * tail;
    }
    Ok(lhs - rhs)
}

/// The alternating sum `Σ_{i=0}^{n} (−1)^i I^{(θ₁…θᵢ)}_{s,t}(1) I^{(θₙ…θ_{i+1})}_{s,t}(1)`,
/// which vanishes identically in continuous time.
pub fn shuffle_cancellation_sum(theta: &TemporalIndex, path: &SamplePath, s: f64, t: f64) -> Result<f64> {
    let (a, b) = node_pair(path, s, t)?;
    if a > b {
        return Err(Error::Query(format!("integration bounds out of order: {s} > {t}")));
    }
    check_driver(path, theta.entries())?;
    let e = theta.entries();
    let ones = vec![1.0; b - a + 1];
    let unit = |idx: &[u8]| -> f64 {
        if idx.is_empty() {
            1.0
        } else if a == b {
            0.0
        } else {
            *iterated_process(idx, &ones, path, a).last().unwrap()
        }
    };
    let mut sum = 0.0;
    for i in 0..=e.len() {
        let rest: Vec<u8> = e[i..].iter().rev().copied().collect();
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * unit(&e[..i]) * unit(&rest);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{refine_path, simulate_path};
    use crate::stats::refinement_order;
    use proptest::prelude::*;

    fn th(e: &[u8], d: usize) -> TemporalIndex {
        TemporalIndex::new(e.to_vec(), d).unwrap()
    }

    fn path(n: usize, d: usize, seed: u64) -> SamplePath {
        simulate_path(TimeGrid::new(1.0, n).unwrap(), d, seed).unwrap()
    }

    #[test]
    fn constant_integrands() {
        let p = path(64, 2, 1);
        let one = GridProcess::constant(*p.grid(), 1.0);
        let v = stratonovich_integral(&one, 0, &p, 0.25, 0.75).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        for i in 1..=2 {
            let v = stratonovich_integral(&one, i, &p, 0.25, 0.75).unwrap();
            assert_eq!(v, p.value(i - 1, 48) - p.value(i - 1, 16));
        }
        assert!(matches!(stratonovich_integral(&one, 3, &p, 0.0, 1.0), Err(Error::Query(_))));
        assert!(matches!(stratonovich_integral(&one, 1, &p, 0.3, 1.0), Err(Error::Query(_))));
    }

    #[test]
    fn square_identity_by_direct_summation() {
        // Ten-step grid; the oracle is the explicit telescoping sum.
        let p = path(10, 1, 9);
        let b = GridProcess::coordinate(&p, 0);
        let v = stratonovich_integral(&b, 1, &p, 0.0, 1.0).unwrap();
        let mut oracle = 0.0;
        for k in 0..10 {
            let (x0, x1) = (p.value(0, k), p.value(0, k + 1));
            oracle += 0.5 * (x0 + x1) * (x1 - x0);
        }
        assert!((v - oracle).abs() < 1e-15);
        let bt = p.value(0, 10);
        assert!((v - 0.5 * bt * bt).abs() <= 1e-12 * (1.0 + bt * bt));
    }

    #[test]
    fn double_time_integral_is_exact() {
        let p = path(64, 1, 2);
        let one = GridProcess::constant(*p.grid(), 1.0);
        let v = iterated_integral(&th(&[0, 0], 1), &one, &p, 0.125, 0.875).unwrap();
        assert!((v - 0.75f64.powi(2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn double_noise_integral_is_half_square() {
        let p = path(128, 1, 3);
        let one = GridProcess::constant(*p.grid(), 1.0);
        let v = iterated_integral(&th(&[1, 1], 1), &one, &p, 0.25, 1.0).unwrap();
        let inc = p.value(0, 128) - p.value(0, 32);
        assert!((v - 0.5 * inc * inc).abs() < 1e-14);
    }

    #[test]
    fn second_level_entry_matches_explicit_sum() {
        let p = path(32, 2, 4);
        let one = GridProcess::constant(*p.grid(), 1.0);
        let v = iterated_integral(&th(&[2, 1], 2), &one, &p, 0.0, 1.0).unwrap();
        let mut oracle = 0.0;
        for k in 0..32 {
            let mid = 0.5 * (p.value(1, k) + p.value(1, k + 1));
            oracle += mid * (p.value(0, k + 1) - p.value(0, k));
        }
        assert!((v - oracle).abs() < 1e-14);
        let sig = step2_signature(&p, 0.0, 1.0).unwrap();
        assert!((sig.second_level[(1, 0)] - oracle).abs() < 1e-14);
    }

    #[test]
    fn empty_index_and_empty_interval() {
        let p = path(16, 2, 5);
        let b = GridProcess::coordinate(&p, 0);
        let t = TemporalIndex::empty(2);
        assert_eq!(iterated_integral(&t, &b, &p, 0.25, 0.5).unwrap(), p.value(0, 8));
        assert_eq!(iterated_integral(&th(&[1, 0], 2), &b, &p, 0.5, 0.5).unwrap(), 0.0);
        assert_eq!(signed_integral(&th(&[2], 2), &b, &p, 0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn signed_time_integral() {
        let p = path(16, 1, 6);
        let one = GridProcess::constant(*p.grid(), 1.0);
        let v = signed_integral(&th(&[0], 1), &one, &p, 0.75, 0.25).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn signed_second_level_matches_reversed_forward() {
        let p = path(64, 2, 7);
        let one = GridProcess::constant(*p.grid(), 1.0);
        for (j, i) in [(1u8, 2u8), (2, 1), (1, 1), (2, 2)] {
            let back = signed_integral(&th(&[j, i], 2), &one, &p, 0.75, 0.25).unwrap();
            let fwd = iterated_integral(&th(&[i, j], 2), &one, &p, 0.25, 0.75).unwrap();
            assert_eq!(back, fwd);
        }
    }

    #[test]
    fn shuffle_identity_and_antisymmetric_area() {
        for seed in 0..20 {
            let p = path(200, 2, seed);
            let sig = step2_signature(&p, 0.1, 0.9).unwrap();
            let b = &sig.increment;
            let norm2: f64 = b.iter().map(|x| x * x).sum();
            for i in 0..2 {
                for j in 0..2 {
                    let lhs = sig.second_level[(i, j)] + sig.second_level[(j, i)];
                    assert!((lhs - b[i] * b[j]).abs() <= 1e-10 * (1.0 + norm2));
                    assert_eq!(sig.levy_area[(i, j)], -sig.levy_area[(j, i)]);
                }
                assert_eq!(sig.levy_area[(i, i)], 0.0);
            }
        }
    }

    #[test]
    fn unit_integral_table_matches_direct_computation() {
        let p = path(64, 2, 8);
        let one = GridProcess::constant(*p.grid(), 1.0);
        let keys: Vec<Vec<u8>> = crate::indices::enumerate_temporal(4, 2).into_iter().map(|t| t.entries().to_vec()).collect();
        let refs: Vec<&[u8]> = keys.iter().map(|k| k.as_slice()).collect();
        let mut ws = UnitIntegrals::default();
        let mut out = Vec::new();
        for (a, b) in [(8usize, 40usize), (40, 8), (20, 20)] {
            ws.signed(&refs, &p, a, b, &mut out);
            for (k, v) in keys.iter().zip(&out) {
                let t = TemporalIndex::new(k.clone(), 2).unwrap();
                let direct = signed_integral(&t, &one, &p, p.grid().time(a), p.grid().time(b)).unwrap();
                assert!((v - direct).abs() < 1e-14, "{t} {a} {b}: {v} vs {direct}");
            }
        }
    }

    #[test]
    fn suffix_process_matches_forward_integral() {
        // Depth ≤ 2 agrees exactly through discrete integration by parts;
        // deeper indices agree to discretisation order.
        let p = path(64, 2, 9);
        let one = GridProcess::constant(*p.grid(), 1.0);
        for e in [&[1u8][..], &[0], &[2, 1], &[1, 0], &[1, 1]] {
            let proc_ = suffix_unit_process(e, &p, 10, 50);
            let t = TemporalIndex::new(e.to_vec(), 2).unwrap();
            for s in 10..=50 {
                let direct = iterated_integral(&t, &one, &p, p.grid().time(s), p.grid().time(50)).unwrap();
                assert!((proc_[s - 10] - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn chasles_for_single_integrals() {
        let p = path(64, 2, 10);
        let b = GridProcess::coordinate(&p, 1);
        for i in 0..=2 {
            let whole = stratonovich_integral(&b, i, &p, 0.125, 0.875).unwrap();
            let left = stratonovich_integral(&b, i, &p, 0.125, 0.5).unwrap();
            let right = stratonovich_integral(&b, i, &p, 0.5, 0.875).unwrap();
            assert!((whole - left - right).abs() < 1e-14);
        }
    }

    #[test]
    fn ibp_single_entry_is_exact() {
        let p = path(64, 2, 11);
        let phi = GridProcess::from_fn(*p.grid(), 0, 64, |k| p.value(0, k).sin());
        for e in 0..=2u8 {
            let r = ibp_identity_residual(&th(&[e], 2), &phi, &p, 0.25, 0.75).unwrap();
            assert_eq!(r, 0.0);
        }
        assert!(matches!(ibp_identity_residual(&TemporalIndex::empty(2), &phi, &p, 0.0, 1.0), Err(Error::Query(_))));
    }

    fn rms<F: Fn(&SamplePath) -> f64>(paths: &[SamplePath], f: F) -> f64 {
        (paths.iter().map(|p| f(p).powi(2)).sum::<f64>() / paths.len() as f64).sqrt()
    }

    #[test]
    fn ibp_and_cancellation_converge_under_refinement() {
        let coarse: Vec<SamplePath> = (0..100).map(|s| path(64, 2, 100 + s)).collect();
        let fine: Vec<SamplePath> = coarse.iter().map(|p| refine_path(p, 4).unwrap()).collect();
        for e in [&[1u8, 2][..], &[1, 2, 1], &[2, 1, 1], &[0, 1, 2], &[1, 1, 2]] {
            let t = th(e, 2);
            let r = |p: &SamplePath| {
                let one = GridProcess::constant(*p.grid(), 1.0);
                ibp_identity_residual(&t, &one, p, 0.0, 1.0).unwrap()
            };
            let outcome = refinement_order(rms(&coarse, r), rms(&fine, r), 4.0);
            assert!(outcome.passes(0.9), "ibp {t}: {outcome:?}");
            let c = |p: &SamplePath| shuffle_cancellation_sum(&t, p, 0.0, 1.0).unwrap();
            let outcome = refinement_order(rms(&coarse, c), rms(&fine, c), 4.0);
            assert!(outcome.passes(0.9), "cancellation {t}: {outcome:?}");
        }
    }

    #[test]
    fn ibp_with_literal_tail_order_does_not_converge() {
        // With the tail read forwards instead of reversed, the n = 3 identity
        // is off by I^{θ₁}·(I^{(θ₂,θ₃)} − I^{(θ₃,θ₂)}), which does not vanish.
        let p = path(4096, 2, 12);
        let one = GridProcess::constant(*p.grid(), 1.0);
        let t = th(&[1, 1, 2], 2);
        let good = ibp_identity_residual(&t, &one, &p, 0.0, 1.0).unwrap();
        let i1 = iterated_integral(&th(&[1], 2), &one, &p, 0.0, 1.0).unwrap();
        let fwd = iterated_integral(&th(&[1, 2], 2), &one, &p, 0.0, 1.0).unwrap();
        let bwd = iterated_integral(&th(&[2, 1], 2), &one, &p, 0.0, 1.0).unwrap();
        let literal = good + i1 * (bwd - fwd);
        assert!(good.abs() < 0.05);
        assert!(literal.abs() > 10.0 * good.abs());
    }

    #[test]
    fn associativity_converges_under_refinement() {
        // ∫ ξ ∘ d(∫ η ∘ dB¹) against ∫ (ξη) ∘ dB¹ with ξ = cos B², η = sin B¹.
        let residual = |p: &SamplePath| {
            let n = p.grid().steps();
            let xi = GridProcess::from_fn(*p.grid(), 0, n, |k| p.value(1, k).cos());
            let eta: Vec<f64> = (0..=n).map(|k| p.value(0, k).sin()).collect();
            let mut z = Vec::new();
            cumulative_into(&eta, 1, p, 0, &mut z);
            let z = GridProcess::new(*p.grid(), z).unwrap();
            let prod = GridProcess::from_fn(*p.grid(), 0, n, |k| xi.at(k) * eta[k]);
            integrate_against(&xi, &z, 0.0, 1.0).unwrap() - stratonovich_integral(&prod, 1, p, 0.0, 1.0).unwrap()
        };
        let coarse: Vec<SamplePath> = (0..100).map(|s| path(64, 2, 300 + s)).collect();
        let fine: Vec<SamplePath> = coarse.iter().map(|p| refine_path(p, 4).unwrap()).collect();
        let outcome = refinement_order(rms(&coarse, residual), rms(&fine, residual), 4.0);
        assert!(outcome.passes(0.9), "{outcome:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn double_reversal_and_forward_reduction(
            e in proptest::collection::vec(0u8..3, 0..4), seed in 0u64..1000, a in 0usize..32, b in 0usize..32
        ) {
            let p = path(32, 2, seed);
            let g = *p.grid();
            let phi = GridProcess::from_fn(g, 0, 32, |k| p.value(0, k).cos());
            let t = th(&e, 2);
            let (ta, tb) = (g.time(a), g.time(b));
            let direct = signed_integral(&t, &phi, &p, ta, tb).unwrap();
            let twice = signed_integral(&reverse(&reverse(&t)), &phi, &p, ta, tb).unwrap();
            prop_assert_eq!(direct, twice);
            if a <= b {
                prop_assert_eq!(direct, iterated_integral(&t, &phi, &p, ta, tb).unwrap());
            }
        }
    }
}
