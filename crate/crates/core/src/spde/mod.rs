//! Expansion coefficients of solutions of Stratonovich SPDEs
//!
//! ```text
//! du(t, x) = f(t, x, u, ∂_x u, ∂²_xx u) dt + g(t, x, u, ∂_x u) ∘ dB_t.
//! ```
//!
//! A classical solution satisfies `∂_t u = f` and `∂_ω u = g`, so its
//! second-order path derivatives follow from `(f, g)` and the spatial
//! derivatives of `u` alone:
//!
//! ```text
//! ∂²_{xω}u = ∂_x g + ∂_x u (∂_y g)ᵀ + ∂²_xx u ∂_z g                     (d' × d)
//! ∂²_{ωω}u = ∂_ω g + g (∂_y g)ᵀ + (∂²_{xω}u)ᵀ ∂_z g                     (d × d)
//! F        = f + ½ tr(∂_ω g + g (∂_y g)ᵀ + (∂_x g + z (∂_y g)ᵀ + γ ∂_z g)ᵀ ∂_z g)
//! ```
//!
//! Matrix conventions: `[∂_x g]_{ij} = ∂_{x_i} g_j`, `[∂_z g]_{kj} = ∂_{z_k} g_j`
//! and `[∂²_{ωω}u]_{ab} = ∂_{ω^a}∂_{ω^b}u`, which is the Hessian orientation
//! of the expansion engine (`D^{(a,b)}u`). For `d = d' = 1` every
//! orientation question disappears; for larger dimensions the shapes
//! follow the declared `d' × d` layout of `∂²_{xω}u`.
//!
//! The module does not solve SPDEs. It takes analytically known solutions
//! from the field catalog and checks the coefficient algebra on them.

mod catalog;

pub use catalog::{spde_case_by_name, CatalogSpde, SpdeCase, SPDE_CASE_NAMES};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{BoundField, RandomField};
use crate::paths::SamplePath;
use crate::taylor::{resolve_nodes, ExpansionOptions, ExpansionQuery, ExpansionResult, FieldExpander, Term};

/// Tolerance of the route-equivalence and six-tuple checks.
pub const ROUTE_TOLERANCE: f64 = 1e-10;

/// Eigenvalue tolerance of the parabolicity check.
pub const PARABOLICITY_TOLERANCE: f64 = 1e-10;

/// Arguments `(t, x, y, z, γ)` at which the coefficients are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub t: f64,
    /// Spatial point, length `d'`.
    pub x: Vec<f64>,
    /// Value slot `y` (stands for `u`).
    pub y: f64,
    /// Gradient slot `z` (stands for `∂_x u`), length `d'`.
    pub z: DVector<f64>,
    /// Hessian slot `γ` (stands for `∂²_xx u`), `d' × d'`.
    pub gamma: DMatrix<f64>,
}

impl Probe {
    /// Reads `(u, ∂_x u, ∂²_xx u)` of a bound field at node `k` and point `x`.
    pub fn from_field(u: &dyn BoundField, k: usize, t: f64, x: &[f64]) -> Self {
        let dp = u.spatial_dim();
        let unit = |i: usize, j: Option<usize>| {
            let mut e = vec![0u32; dp];
            e[i] += 1;
            if let Some(j) = j {
                e[j] += 1;
            }
            e
        };
        Probe {
            t,
            x: x.to_vec(),
            y: u.value(k, x),
            z: DVector::from_fn(dp, |i, _| u.derivative(&[], &unit(i, None), k, x)),
            gamma: DMatrix::from_fn(dp, dp, |i, j| u.derivative(&[], &unit(i, Some(j)), k, x)),
        }
    }
}

/// Coefficients `(f, g)` of a Stratonovich SPDE and their partial derivatives.
///
/// Derivative closures return `None` when the coefficient set does not
/// supply them; operations needing them then fail with a capability error.
pub trait SpdeCoefficients: Send + Sync {
    /// Catalog name.
    fn name(&self) -> String;
    /// Driver dimension `d`.
    fn dim(&self) -> usize;
    /// Spatial dimension `d'`.
    fn spatial_dim(&self) -> usize;
    /// Drift `f(t, x, y, z, γ)`.
    fn f(&self, p: &Probe) -> f64;
    /// Noise coefficient `g(t, x, y, z)`, length `d`.
    fn g(&self, p: &Probe) -> DVector<f64>;
    /// `∂_γ f`, `d' × d'`.
    fn df_dgamma(&self, _p: &Probe) -> Option<DMatrix<f64>> {
        None
    }
    /// `[∂_x g]_{ij} = ∂_{x_i} g_j`, `d' × d`.
    fn dg_dx(&self, _p: &Probe) -> Option<DMatrix<f64>> {
        None
    }
    /// `∂_y g`, length `d`.
    fn dg_dy(&self, _p: &Probe) -> Option<DVector<f64>> {
        None
    }
    /// `[∂_z g]_{kj} = ∂_{z_k} g_j`, `d' × d`.
    fn dg_dz(&self, _p: &Probe) -> Option<DMatrix<f64>> {
        None
    }
    /// `[∂_ω g]_{ab} = ∂_{ω^a} g_b` along `path` at node `k`. Zero for
    /// deterministic coefficients.
    fn dg_domega(&self, _p: &Probe, _path: &SamplePath, _k: usize) -> DMatrix<f64> {
        DMatrix::zeros(self.dim(), self.dim())
    }
    /// Whether `f` and `g` do not depend on the path.
    fn is_deterministic(&self) -> bool {
        true
    }
}

fn missing(c: &dyn SpdeCoefficients, what: &str) -> Error {
    Error::Capability(format!("coefficient set '{}' does not supply {what}", c.name()))
}

/// The first-order partial derivatives of `g` at one probe.
struct NoiseJacobian {
    dx: DMatrix<f64>,
    dy: DVector<f64>,
    dz: DMatrix<f64>,
}

impl NoiseJacobian {
    fn at(c: &dyn SpdeCoefficients, p: &Probe) -> Result<Self> {
        Ok(Self {
            dx: c.dg_dx(p).ok_or_else(|| missing(c, "∂_x g"))?,
            dy: c.dg_dy(p).ok_or_else(|| missing(c, "∂_y g"))?,
            dz: c.dg_dz(p).ok_or_else(|| missing(c, "∂_z g"))?,
        })
    }
}

/// Second-order expansion coefficients of an SPDE solution at `(t, x, ω)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedExpansionCoefficients {
    /// `∂_t u`.
    pub t_u: f64,
    /// `∂_ω u`, length `d`.
    pub omega_u: Vec<f64>,
    /// `∂²_{xω}u`, `d' × d`, row-major.
    pub x_omega_u: Vec<Vec<f64>>,
    /// `∂²_{ωω}u`, `d × d`, row-major, entry `[a][b] = ∂_{ω^a}∂_{ω^b}u`.
    pub omega_omega_u: Vec<Vec<f64>>,
    /// Itô drift `F`.
    pub ito_drift: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl DerivedExpansionCoefficients {
    /// All entries in a fixed order, for componentwise comparison.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = vec![self.t_u];
        v.extend(&self.omega_u);
        self.x_omega_u.iter().for_each(|r| v.extend(r));
        self.omega_omega_u.iter().for_each(|r| v.extend(r));
        v.push(self.ito_drift);
        v
    }

    /// Largest componentwise [`scaled_difference`] to another coefficient set.
    pub fn max_difference(&self, other: &Self) -> f64 {
        self.flatten().iter().zip(other.flatten()).map(|(a, b)| scaled_difference(*a, b)).fold(0.0, f64::max)
    }
}

/// `|a − b| / max(1, |a|, |b|)`: relative for large values, absolute near 0.
pub fn scaled_difference(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// `∂²_{xω}u` from the noise coefficient.
fn x_omega(j: &NoiseJacobian, p: &Probe) -> DMatrix<f64> {
    &j.dx + &p.z * j.dy.transpose() + &p.gamma * &j.dz
}

/// Itô drift `F(t, x, y, z, γ)` with `∂_ω g` supplied.
fn ito_drift_with(c: &dyn SpdeCoefficients, p: &Probe, j: &NoiseJacobian, domega_g: &DMatrix<f64>) -> f64 {
    let g = c.g(p);
    let inner = domega_g + &g * j.dy.transpose() + x_omega(j, p).transpose() * &j.dz;
    c.f(p) + 0.5 * inner.trace()
}

/// Itô drift `F` of a deterministic coefficient set at a probe.
pub fn ito_drift(c: &dyn SpdeCoefficients, p: &Probe) -> Result<f64> {
    if !c.is_deterministic() {
        return Err(Error::Capability("the Itô drift of random coefficients needs a path; use derive_coefficients".into()));
    }
    let j = NoiseJacobian::at(c, p)?;
    Ok(ito_drift_with(c, p, &j, &DMatrix::zeros(c.dim(), c.dim())))
}

fn check_dims(c: &dyn SpdeCoefficients, u: &dyn RandomField, x: &[f64], path: &SamplePath) -> Result<()> {
    if c.dim() != u.dim() || c.spatial_dim() != u.spatial_dim() {
        return Err(Error::Query(format!(
            "coefficients have (d, d') = ({}, {}), field has ({}, {})",
            c.dim(),
            c.spatial_dim(),
            u.dim(),
            u.spatial_dim()
        )));
    }
    if x.len() != u.spatial_dim() {
        return Err(Error::Query(format!("point has length {}, field has d' = {}", x.len(), u.spatial_dim())));
    }
    if path.dim() != u.dim() {
        return Err(Error::Query(format!("path has d = {}, field has d = {}", path.dim(), u.dim())));
    }
    Ok(())
}

/// Coefficients from `(f, g)` and the spatial derivatives of `u` at `(t, x)`.
pub fn derive_coefficients(
    c: &dyn SpdeCoefficients,
    u: &dyn RandomField,
    t: f64,
    x: &[f64],
    path: &SamplePath,
) -> Result<DerivedExpansionCoefficients> {
    check_dims(c, u, x, path)?;
    let k = path.grid().node(t)?;
    let bound = u.bind(path)?;
    let p = Probe::from_field(bound.as_ref(), k, t, x);
    derive_at_probe(c, &p, path, k)
}

pub(crate) fn derive_at_probe(c: &dyn SpdeCoefficients, p: &Probe, path: &SamplePath, k: usize) -> Result<DerivedExpansionCoefficients> {
    let j = NoiseJacobian::at(c, p)?;
    let g = c.g(p);
    let domega_g = c.dg_domega(p, path, k);
    let xw = x_omega(&j, p);
    let ww = &domega_g + &g * j.dy.transpose() + xw.transpose() * &j.dz;
    Ok(DerivedExpansionCoefficients {
        t_u: c.f(p),
        omega_u: g.iter().copied().collect(),
        x_omega_u: rows(&xw),
        omega_omega_u: rows(&ww),
        ito_drift: ito_drift_with(c, p, &j, &domega_g),
    })
}

/// The same coefficients read directly from the field's path derivatives,
/// with `F = ∂_t u + ½ tr(∂²_{ωω}u)`.
pub fn field_coefficients(u: &dyn RandomField, t: f64, x: &[f64], path: &SamplePath) -> Result<DerivedExpansionCoefficients> {
    let (d, dp) = (u.dim(), u.spatial_dim());
    if x.len() != dp {
        return Err(Error::Query(format!("point has length {}, field has d' = {dp}", x.len())));
    }
    let k = path.grid().node(t)?;
    let b = u.bind(path)?;
    let zero = vec![0u32; dp];
    let unit = |i: usize| {
        let mut e = zero.clone();
        e[i] = 1;
        e
    };
    let omega_omega: Vec<Vec<f64>> =
        (0..d).map(|a| (0..d).map(|c| b.derivative(&[a as u8 + 1, c as u8 + 1], &zero, k, x)).collect()).collect();
    let t_u = b.derivative(&[0], &zero, k, x);
    let trace: f64 = (0..d).map(|a| omega_omega[a][a]).sum();
    Ok(DerivedExpansionCoefficients {
        t_u,
        omega_u: (0..d).map(|j| b.derivative(&[j as u8 + 1], &zero, k, x)).collect(),
        x_omega_u: (0..dp).map(|i| (0..d).map(|j| b.derivative(&[j as u8 + 1], &unit(i), k, x)).collect()).collect(),
        omega_omega_u: omega_omega,
        ito_drift: t_u + 0.5 * trace,
    })
}

/// Residuals of the path-dependent system `∂_t u − f = 0`, `∂_ω u − g = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PpdeResidual {
    pub time: f64,
    pub noise: Vec<f64>,
}

impl PpdeResidual {
    /// Largest absolute residual.
    pub fn max_abs(&self) -> f64 {
        self.noise.iter().fold(self.time.abs(), |m, v| m.max(v.abs()))
    }
}

/// Evaluates the path-dependent system on a catalog solution.
pub fn ppde_residual(c: &dyn SpdeCoefficients, u: &dyn RandomField, t: f64, x: &[f64], path: &SamplePath) -> Result<PpdeResidual> {
    check_dims(c, u, x, path)?;
    let k = path.grid().node(t)?;
    let b = u.bind(path)?;
    let p = Probe::from_field(b.as_ref(), k, t, x);
    let zero = vec![0u32; u.spatial_dim()];
    let g = c.g(&p);
    Ok(PpdeResidual {
        time: b.derivative(&[0], &zero, k, x) - c.f(&p),
        noise: (0..u.dim()).map(|j| b.derivative(&[j as u8 + 1], &zero, k, x) - g[j]).collect(),
    })
}

/// `∂_γ f`, `∂_γ F` and the positive-semidefiniteness flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parabolicity {
    /// `∂_γ f`, row-major `d' × d'`.
    pub df_dgamma: Vec<Vec<f64>>,
    /// `∂_γ F = ∂_γ f + ½ (∂_z g)(∂_z g)ᵀ`, row-major `d' × d'`.
    pub dito_dgamma: Vec<Vec<f64>>,
    /// Smallest eigenvalue of the symmetric part of `∂_γ f`.
    pub min_eigenvalue: f64,
    /// `min_eigenvalue ≥ −10⁻¹⁰`.
    pub parabolic: bool,
}

/// Parabolicity of the path-dependent system at a probe.
pub fn parabolicity(c: &dyn SpdeCoefficients, p: &Probe) -> Result<Parabolicity> {
    let df = c.df_dgamma(p).ok_or_else(|| missing(c, "∂_γ f"))?;
    let dz = c.dg_dz(p).ok_or_else(|| missing(c, "∂_z g"))?;
    let dito = &df + 0.5 * &dz * dz.transpose();
    let sym = 0.5 * (&df + df.transpose());
    let min_eigenvalue = SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Parabolicity {
        df_dgamma: rows(&df),
        dito_dgamma: rows(&dito),
        min_eigenvalue,
        parabolic: min_eigenvalue >= -PARABOLICITY_TOLERANCE,
    })
}

/// The coefficients `(a, b, c, p, q, X)` of a second-order expansion in
/// `(h, k, B)` for `d = d' = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SixTuple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p: f64,
    pub q: f64,
    pub x: f64,
}

impl SixTuple {
    fn entries(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.p, self.q, self.x]
    }

    /// Largest componentwise [`scaled_difference`].
    pub fn max_difference(&self, other: &Self) -> f64 {
        self.entries().iter().zip(other.entries()).map(|(a, b)| scaled_difference(*a, b)).fold(0.0, f64::max)
    }
}

/// Both forms of the six-tuple and their largest discrepancy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SixTupleForms {
    /// From the field's path derivatives:
    /// `(∂_t u, ∂_ω u, ∂²_{ωω}u, ∂_x u, ∂²_{ωx}u, ∂²_xx u)`.
    pub path_derivatives: SixTuple,
    /// From the coefficients: `a = F − ½c`, `b = g`, `c = ⟨D_𝐳 g, G₂⟩`,
    /// `q = ∂_x g + ⟨D_𝐳 g, D_x ζ₂⟩`, where `𝐳 = (y, z, γ)`,
    /// `D_𝐳 g = (∂_y g, ∂_z g, 0)`, `ζ₂ = (u, ∂_x u, ∂²_xx u)` and
    /// `G₂ = (g, ∂_x g + ∂_y g ∂_x u + ∂_z g ∂²_xx u, ·)`.
    pub coefficients: SixTuple,
    pub max_difference: f64,
}

/// Computes both six-tuple forms for deterministic coefficients, `d = d' = 1`.
pub fn six_tuple_forms(c: &dyn SpdeCoefficients, u: &dyn RandomField, t: f64, x: &[f64], path: &SamplePath) -> Result<SixTupleForms> {
    if c.dim() != 1 || c.spatial_dim() != 1 {
        return Err(Error::Capability(format!("the six-tuple needs d = d' = 1, got ({}, {})", c.dim(), c.spatial_dim())));
    }
    if !c.is_deterministic() {
        return Err(Error::Capability("the six-tuple needs deterministic coefficients".into()));
    }
    check_dims(c, u, x, path)?;
    let k = path.grid().node(t)?;
    let b = u.bind(path)?;
    let d = |theta: &[u8], l: u32| b.derivative(theta, &[l], k, x);
    let path_derivatives = SixTuple { a: d(&[0], 0), b: d(&[1], 0), c: d(&[1, 1], 0), p: d(&[], 1), q: d(&[1], 1), x: d(&[], 2) };

    let p = Probe::from_field(b.as_ref(), k, t, x);
    let j = NoiseJacobian::at(c, &p)?;
    let (gx, gy, gz) = (j.dx[(0, 0)], j.dy[0], j.dz[(0, 0)]);
    let (ux, uxx) = (p.z[0], p.gamma[(0, 0)]);
    let g = c.g(&p)[0];
    // ⟨D_𝐳 g, G₂⟩: the third slot of D_𝐳 g vanishes, so G₂'s third entry
    // (which would need ∂⁴_x u) never enters.
    let g2 = gx + gy * ux + gz * uxx;
    let cc = gy * g + gz * g2;
    // ⟨D_𝐳 g, D_x ζ₂⟩ with D_x ζ₂ = (∂_x u, ∂²_xx u, ∂³_xxx u).
    let q = gx + gy * ux + gz * uxx;
    let big_f = ito_drift_with(c, &p, &j, &DMatrix::zeros(1, 1));
    let coefficients = SixTuple { a: big_f - 0.5 * cc, b: g, c: cc, p: ux, q, x: uxx };
    let max_difference = path_derivatives.max_difference(&coefficients);
    Ok(SixTupleForms { path_derivatives, coefficients, max_difference })
}

/// The six-tuple in path-derivative form, after checking it against the
/// coefficient form to [`ROUTE_TOLERANCE`].
pub fn six_tuple(c: &dyn SpdeCoefficients, u: &dyn RandomField, t: f64, x: &[f64], path: &SamplePath) -> Result<SixTuple> {
    let forms = six_tuple_forms(c, u, t, x, path)?;
    if forms.max_difference > ROUTE_TOLERANCE {
        return Err(Error::Consistency(format!(
            "six-tuple forms differ by {:.3e}: {:?} vs {:?}",
            forms.max_difference, forms.path_derivatives, forms.coefficients
        )));
    }
    Ok(forms.path_derivatives)
}

/// Order-2 field expansion whose coefficients come from `(f, g)`.
///
/// The terms are those of [`crate::taylor::expand_field`] in the same order;
/// only the path-derivative coefficients are replaced: `∂_t u → f`,
/// `∂_ω u → g`, `∂²_{xω}u` and `∂²_{ωω}u` by their composition formulas.
pub fn spde_expand(c: &dyn SpdeCoefficients, u: &dyn RandomField, path: &SamplePath, q: &ExpansionQuery) -> Result<ExpansionResult> {
    spde_expand_with(c, u, path, q, &ExpansionOptions::default())
}

/// [`spde_expand`] with explicit engine options.
pub fn spde_expand_with(
    c: &dyn SpdeCoefficients,
    u: &dyn RandomField,
    path: &SamplePath,
    q: &ExpansionQuery,
    opts: &ExpansionOptions,
) -> Result<ExpansionResult> {
    if q.m != 2 {
        return Err(Error::Capability(format!("SPDE expansions are of order 2, got m = {}", q.m)));
    }
    check_dims(c, u, &q.x, path)?;
    if q.h.len() != u.spatial_dim() {
        return Err(Error::Query(format!("offset has length {}, field has d' = {}", q.h.len(), u.spatial_dim())));
    }
    let (k, kb) = resolve_nodes(path, q.t, q.delta)?;
    let bound = u.bind(path)?;
    let p = Probe::from_field(bound.as_ref(), k, path.grid().time(k), &q.x);
    let coef = derive_at_probe(c, &p, path, k)?;
    let mut ex = FieldExpander::new(bound.as_ref(), path, 2, opts.variant)?;
    ex.set_interval(k, kb);
    let (mut terms, actual) = ex.terms(&q.x, &q.h)?;
    substitute_coefficients(&coef, &mut terms);
    let predicted = terms.iter().map(Term::contribution).sum::<f64>();
    Ok(ExpansionResult { query: q.clone(), variant: opts.variant, terms, predicted, actual, remainder: actual - predicted })
}

/// Replaces the path-derivative coefficients of an order-2 field expansion
/// by the ones derived from the SPDE coefficients.
pub(crate) fn substitute_coefficients(coef: &DerivedExpansionCoefficients, terms: &mut [Term]) {
    for term in terms {
        let theta = term.index.theta.entries();
        let ell = term.index.ell.entries();
        let spatial = ell.iter().position(|&e| e > 0);
        term.coefficient = match (theta, spatial) {
            ([0], _) => coef.t_u,
            ([j], None) => coef.omega_u[*j as usize - 1],
            ([j], Some(i)) => coef.x_omega_u[i][*j as usize - 1],
            ([a, b], _) => coef.omega_omega_u[*a as usize - 1][*b as usize - 1],
            // u and its spatial derivatives are inputs of the composition.
            _ => term.coefficient,
        };
    }
}

/// Largest deviation between supplied derivative closures and central
/// differences with step `step`, over every supplied closure.
pub fn derivative_closure_error(c: &dyn SpdeCoefficients, p: &Probe, step: f64) -> Result<f64> {
    let j = NoiseJacobian::at(c, p)?;
    let (d, dp) = (c.dim(), c.spatial_dim());
    let mut worst = 0.0f64;
    let mut note = |exact: f64, fd: f64| worst = worst.max(scaled_difference(exact, fd));
    let central_g = |shift: &dyn Fn(&mut Probe, f64)| -> DVector<f64> {
        let (mut hi, mut lo) = (p.clone(), p.clone());
        shift(&mut hi, step);
        shift(&mut lo, -step);
        (c.g(&hi) - c.g(&lo)) / (2.0 * step)
    };
    for i in 0..dp {
        let fd = central_g(&|q: &mut Probe, s| q.x[i] += s);
        (0..d).for_each(|b| note(j.dx[(i, b)], fd[b]));
        let fd = central_g(&|q: &mut Probe, s| q.z[i] += s);
        (0..d).for_each(|b| note(j.dz[(i, b)], fd[b]));
    }
    let fd = central_g(&|q: &mut Probe, s| q.y += s);
    (0..d).for_each(|b| note(j.dy[b], fd[b]));
    if let Some(df) = c.df_dgamma(p) {
        for r in 0..dp {
            for s in 0..dp {
                let (mut hi, mut lo) = (p.clone(), p.clone());
                hi.gamma[(r, s)] += step;
                lo.gamma[(r, s)] -= step;
                note(df[(r, s)], (c.f(&hi) - c.f(&lo)) / (2.0 * step));
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
