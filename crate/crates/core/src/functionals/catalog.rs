//! Built-in functionals and fields with closed-form path derivatives.
//!
//! Each entry documents its derivative table in the crate's orientation,
//! `D^θ u = ∂_{θ₁}⋯∂_{θₙ} u`. Running state (time integrals, area
//! integrals) is accumulated with the same quadrature rules as
//! [`crate::integrals`], so discrete expansion identities hold exactly.

use super::smooth::Smooth1d;
use super::{check_path_dim, BoundField, BoundFunctional, PathFunctional, RandomField};
use crate::error::{Error, Result};
use crate::integrals::cumulative_into;
use crate::paths::SamplePath;

/// Derivative weight supplied by every catalog entry.
pub const CATALOG_ORDER: usize = 8;

/// Path functionals addressable by name.
pub const FUNCTIONAL_NAMES: &[&str] = &[
    "markovian:sin",
    "markovian:x2",
    "markovian:sin,cos",
    "markovian:sin;rate=-0.5",
    "drift",
    "area",
    "area:sin",
    "cylindrical",
    "transport:sin",
    "transport:gauss",
];

/// Random fields addressable by name.
pub const FIELD_NAMES: &[&str] = &["transport:sin", "transport:gauss", "transport2:sin", "poly2", "x2", "heat", "multiplicative", "multiplicative-x"];

/// Spatial point at which a field is frozen when used as a path functional.
const FROZEN_POINT: f64 = 0.5;

/// Looks up a path functional by catalog name.
///
/// Names: `markovian:<f>[,<g>…][;rate=<r>]`, `drift`, `area`, `area:<f>`,
/// `cylindrical`, `constant`, `zero`, and any field name (frozen at `x = 0.5`).
pub fn functional_by_name(name: &str) -> Result<Box<dyn PathFunctional>> {
    if let Some(profiles_part) = name.strip_prefix("markovian:") {
        let (profiles, rate) = match profiles_part.split_once(";rate=") {
            Some((p, r)) => (p, r.parse::<f64>().map_err(|_| Error::Config(format!("bad rate in '{name}'")))?),
            None => (profiles_part, 0.0),
        };
        let profiles = profiles.split(',').map(Smooth1d::parse).collect::<Result<Vec<_>>>()?;
        return Ok(Box::new(Markovian::new(profiles, rate)));
    }
    if let Some(f) = name.strip_prefix("area:") {
        return Ok(Box::new(AreaFunctional::with_outer(Smooth1d::parse(f)?)));
    }
    match name {
        "drift" => return Ok(Box::new(DriftOfPath)),
        "area" => return Ok(Box::new(AreaFunctional::new())),
        "cylindrical" => return Ok(Box::new(Cylindrical::default_entry())),
        "constant" => return Ok(Box::new(ConstantFunctional { value: 1.0, d: 1 })),
        "zero" => return Ok(Box::new(ConstantFunctional { value: 0.0, d: 1 })),
        _ => {}
    }
    match field_by_name(name) {
        Ok(field) => {
            let x = vec![FROZEN_POINT; field.spatial_dim()];
            Ok(Box::new(FrozenFieldFunctional::new(field, x)))
        }
        Err(_) => Err(Error::Config(format!("unknown functional '{name}'"))),
    }
}

/// Looks up a random field by catalog name.
///
/// Names: `transport:<f>`, `transport2:<f>`, `poly2`, `x2`, `heat`,
/// `multiplicative`, `multiplicative:<f>`, `multiplicative-x`,
/// `multiplicative-x:<f>`.
pub fn field_by_name(name: &str) -> Result<Box<dyn RandomField>> {
    if let Some(f) = name.strip_prefix("transport:") {
        return Ok(Box::new(TransportField::new(Smooth1d::parse(f)?, vec![1.0])));
    }
    if let Some(f) = name.strip_prefix("transport2:") {
        return Ok(Box::new(TransportField::new(Smooth1d::parse(f)?, vec![1.0, 0.5])));
    }
    if let Some(f) = name.strip_prefix("multiplicative-x:") {
        return Ok(Box::new(SpatialMultiplicativeField::new(Smooth1d::parse(f)?)));
    }
    if let Some(f) = name.strip_prefix("multiplicative:") {
        return Ok(Box::new(MultiplicativeField::new(Smooth1d::parse(f)?)));
    }
    match name {
        "poly2" => Ok(Box::new(PolyField::new(vec![Smooth1d::Identity, Smooth1d::Sin, Smooth1d::Cos]))),
        "x2" => Ok(Box::new(PolyField::new(vec![Smooth1d::parse("zero")?, Smooth1d::parse("zero")?, Smooth1d::parse("one")?]))),
        "heat" => Ok(Box::new(HeatField)),
        "multiplicative" => Ok(Box::new(MultiplicativeField::new(Smooth1d::Sin))),
        "multiplicative-x" => Ok(Box::new(SpatialMultiplicativeField::new(Smooth1d::Sin))),
        _ => Err(Error::Config(format!("unknown field '{name}'"))),
    }
}

/// Per-driver multiplicities of an index: `(time count, [count of i])`.
fn multiplicities(theta: &[u8], d: usize) -> (usize, Vec<usize>) {
    let mut counts = vec![0usize; d];
    let mut zeros = 0;
    for &e in theta {
        if e == 0 {
            zeros += 1;
        } else {
            counts[e as usize - 1] += 1;
        }
    }
    (zeros, counts)
}

/// Markovian functional `u(t, ω) = e^{rate·t} Π_i f_i(ω^i_t)`.
///
/// Path derivatives reduce to partial derivatives of `v(t, x)`: every `0`
/// in θ contributes a factor `rate`, every `i` a derivative of `f_i`, and
/// the order of application is immaterial.
#[derive(Debug, Clone)]
pub struct Markovian {
    profiles: Vec<Smooth1d>,
    rate: f64,
}

impl Markovian {
    /// One profile per driver coordinate.
    pub fn new(profiles: Vec<Smooth1d>, rate: f64) -> Self {
        Self { profiles, rate }
    }
}

struct BoundMarkovian<'a> {
    u: &'a Markovian,
    path: &'a SamplePath,
}

impl PathFunctional for Markovian {
    fn name(&self) -> String {
        let p: Vec<String> = self.profiles.iter().map(|f| f.name()).collect();
        if self.rate == 0.0 {
            format!("markovian:{}", p.join(","))
        } else {
            format!("markovian:{};rate={}", p.join(","), self.rate)
        }
    }

    fn dim(&self) -> usize {
        self.profiles.len()
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundFunctional + 'a>> {
        check_path_dim(self.dim(), path)?;
        Ok(Box::new(BoundMarkovian { u: self, path }))
    }
}

impl BoundFunctional for BoundMarkovian<'_> {
    fn dim(&self) -> usize {
        self.u.profiles.len()
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn derivative(&self, theta: &[u8], k: usize) -> f64 {
        let (zeros, counts) = multiplicities(theta, self.dim());
        let t = self.path.grid().time(k);
        let time = self.u.rate.powi(zeros as i32) * (self.u.rate * t).exp();
        self.u
            .profiles
            .iter()
            .zip(&counts)
            .enumerate()
            .fold(time, |acc, (i, (f, &n))| acc * f.derivative(n, self.path.value(i, k)))
    }
}

/// The functional `u_t = ∫_0^t B_s ds`, `d = 1`.
///
/// Derivative table: `∂_t u = B_t`, `∂_ω u = 0`, `D^{(1,0)} u = ∂_ω ∂_t u = 1`,
/// every other nonempty index gives 0. In particular
/// `D^{(0,1)} u = ∂_t ∂_ω u = 0 ≠ 1 = D^{(1,0)} u`.
#[derive(Debug, Clone, Copy)]
pub struct DriftOfPath;

struct BoundDrift<'a> {
    path: &'a SamplePath,
    running: Vec<f64>,
}

impl PathFunctional for DriftOfPath {
    fn name(&self) -> String {
        "drift".into()
    }

    fn dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundFunctional + 'a>> {
        check_path_dim(1, path)?;
        let mut running = Vec::new();
        cumulative_into(path.coord(0), 0, path, 0, &mut running);
        Ok(Box::new(BoundDrift { path, running }))
    }
}

impl BoundFunctional for BoundDrift<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn derivative(&self, theta: &[u8], k: usize) -> f64 {
        match theta {
            [] => self.running[k],
            [0] => self.path.value(0, k),
            [1, 0] => 1.0,
            _ => 0.0,
        }
    }
}

/// `u_t = F(A_t)` with `A_t = ∫_0^t B²_s ∘ dB¹_s`, `d = 2`.
///
/// With `F` the identity this is the area functional: `∂_ω u = (B², 0)`,
/// `D^{(2,1)} u = ∂_{ω²}∂_{ω¹} u = 1`, `D^{(1,2)} u = 0`, `∂_t u = 0`.
/// For general `F`, every `D^θ u` with nonzero entries is a combination of
/// `F^{(k)}(A_t) (B²_t)^p`: `∂_{ω¹}` maps `(k, p)` to `(k+1, p+1)` and
/// `∂_{ω²}` maps it to `p·(k, p−1)`. No derivative has a `dt` part, so any
/// index containing `0` gives 0.
#[derive(Debug, Clone)]
pub struct AreaFunctional {
    outer: Smooth1d,
}

impl AreaFunctional {
    /// The plain area integral.
    pub fn new() -> Self {
        Self { outer: Smooth1d::Identity }
    }

    /// `F(A_t)` for a smooth outer function `F`.
    pub fn with_outer(outer: Smooth1d) -> Self {
        Self { outer }
    }
}

impl Default for AreaFunctional {
    fn default() -> Self {
        Self::new()
    }
}

struct BoundArea<'a> {
    u: &'a AreaFunctional,
    path: &'a SamplePath,
    area: Vec<f64>,
}

impl PathFunctional for AreaFunctional {
    fn name(&self) -> String {
        match self.outer {
            Smooth1d::Identity => "area".into(),
            ref f => format!("area:{}", f.name()),
        }
    }

    fn dim(&self) -> usize {
        2
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundFunctional + 'a>> {
        check_path_dim(2, path)?;
        let mut area = Vec::new();
        cumulative_into(path.coord(1), 1, path, 0, &mut area);
        Ok(Box::new(BoundArea { u: self, path, area }))
    }
}

impl BoundFunctional for BoundArea<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn derivative(&self, theta: &[u8], k: usize) -> f64 {
        // Terms (k_F, p, coefficient) of Σ c F^{(k_F)}(A)(B²)^p.
        let mut terms: Vec<(usize, i32, f64)> = vec![(0, 0, 1.0)];
        for &e in theta.iter().rev() {
            match e {
                1 => terms.iter_mut().for_each(|t| {
                    t.0 += 1;
                    t.1 += 1;
                }),
                2 => {
                    terms = terms
                        .into_iter()
                        .filter(|t| t.1 > 0)
                        .map(|(kf, p, c)| (kf, p - 1, c * p as f64))
                        .collect()
                }
                _ => return 0.0,
            }
        }
        let a = self.area[k];
        let b2 = self.path.value(1, k);
        terms.iter().map(|&(kf, p, c)| c * self.u.outer.derivative(kf, a) * b2.powi(p)).sum()
    }
}

/// One factor `f(ω^{coord}_{t_obs ∧ t})` of a cylindrical functional.
#[derive(Debug, Clone)]
pub struct CylindricalSlot {
    pub profile: Smooth1d,
    /// 0-based coordinate.
    pub coord: usize,
    /// Observation time; `None` tracks the current time.
    pub time: Option<f64>,
}

/// Cylindrical functional `u(t, ω) = Π_s f_s(ω^{c_s}_{t_s ∧ t})`.
///
/// A slot is active while `t < t_s` and frozen afterwards. Path derivatives
/// act on active slots only, `∂_{ω^i}` differentiating the product of the
/// active factors on coordinate `i`, so the Hessian is symmetric; `∂_t u = 0`.
/// Derivatives jump at the observation times, which are reported as kinks.
#[derive(Debug, Clone)]
pub struct Cylindrical {
    slots: Vec<CylindricalSlot>,
    d: usize,
}

impl Cylindrical {
    /// Builds the functional; slot coordinates must be `< d`.
    pub fn new(slots: Vec<CylindricalSlot>, d: usize) -> Result<Self> {
        if slots.iter().any(|s| s.coord >= d) {
            return Err(Error::Config("cylindrical slot coordinate out of range".into()));
        }
        Ok(Self { slots, d })
    }

    /// The catalog entry `cos(ω¹_{½∧t}) sin(ω¹_t) cos(ω²_t)`, `d = 2`.
    pub fn default_entry() -> Self {
        Self {
            slots: vec![
                CylindricalSlot { profile: Smooth1d::Cos, coord: 0, time: Some(0.5) },
                CylindricalSlot { profile: Smooth1d::Sin, coord: 0, time: None },
                CylindricalSlot { profile: Smooth1d::Cos, coord: 1, time: None },
            ],
            d: 2,
        }
    }
}

struct BoundCylindrical<'a> {
    u: &'a Cylindrical,
    path: &'a SamplePath,
    obs: Vec<Option<usize>>,
}

impl PathFunctional for Cylindrical {
    fn name(&self) -> String {
        "cylindrical".into()
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn kinks(&self) -> Vec<f64> {
        self.slots.iter().filter_map(|s| s.time).collect()
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundFunctional + 'a>> {
        check_path_dim(self.d, path)?;
        let horizon = path.grid().horizon();
        let obs = self
            .slots
            .iter()
            .map(|s| match s.time {
                Some(t) if t < horizon => path.grid().node(t).map(Some),
                _ => Ok(None),
            })
            .collect::<Result<_>>()?;
        Ok(Box::new(BoundCylindrical { u: self, path, obs }))
    }
}

fn binomial(n: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl BoundFunctional for BoundCylindrical<'_> {
    fn dim(&self) -> usize {
        self.u.d
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn derivative(&self, theta: &[u8], k: usize) -> f64 {
        let (zeros, counts) = multiplicities(theta, self.u.d);
        if zeros > 0 {
            return 0.0;
        }
        let mut out = 1.0;
        for (i, &n) in counts.iter().enumerate() {
            let x = self.path.value(i, k);
            // Derivatives 0..=n of the product of active factors on coordinate i.
            let mut g = vec![0.0; n + 1];
            g[0] = 1.0;
            for (slot, obs) in self.u.slots.iter().zip(&self.obs) {
                if slot.coord != i {
                    continue;
                }
                match obs {
                    Some(o) if k >= *o => {
                        let frozen = slot.profile.value(self.path.value(i, *o));
                        g.iter_mut().for_each(|v| *v *= frozen);
                    }
                    _ => {
                        let f: Vec<f64> = (0..=n).map(|j| slot.profile.derivative(j, x)).collect();
                        g = (0..=n).map(|m| (0..=m).map(|j| binomial(m, j) * g[j] * f[m - j]).sum()).collect();
                    }
                }
            }
            out *= g[n];
        }
        out
    }
}

/// The constant functional, with every nonempty derivative zero.
#[derive(Debug, Clone, Copy)]
pub struct ConstantFunctional {
    pub value: f64,
    pub d: usize,
}

impl PathFunctional for ConstantFunctional {
    fn name(&self) -> String {
        "constant".into()
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundFunctional + 'a>> {
        check_path_dim(self.d, path)?;
        Ok(Box::new(*self))
    }
}

impl BoundFunctional for ConstantFunctional {
    fn dim(&self) -> usize {
        self.d
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn derivative(&self, theta: &[u8], _k: usize) -> f64 {
        if theta.is_empty() {
            self.value
        } else {
            0.0
        }
    }
}

/// A random field frozen at a fixed spatial point, as a path functional.
pub struct FrozenFieldFunctional {
    field: Box<dyn RandomField>,
    x: Vec<f64>,
}

impl FrozenFieldFunctional {
    /// Freezes `field` at `x`.
    pub fn new(field: Box<dyn RandomField>, x: Vec<f64>) -> Self {
        Self { field, x }
    }
}

struct BoundFrozenOwned<'a> {
    field: Box<dyn BoundField + 'a>,
    x: &'a [f64],
    zero: Vec<u32>,
}

impl PathFunctional for FrozenFieldFunctional {
    fn name(&self) -> String {
        self.field.name()
    }

    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn max_order(&self) -> usize {
        self.field.max_order()
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundFunctional + 'a>> {
        let field = self.field.bind(path)?;
        Ok(Box::new(BoundFrozenOwned { zero: vec![0; self.x.len()], field, x: &self.x }))
    }
}

impl BoundFunctional for BoundFrozenOwned<'_> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn max_order(&self) -> usize {
        self.field.max_order()
    }

    fn derivative(&self, theta: &[u8], k: usize) -> f64 {
        self.field.derivative(theta, &self.zero, k, self.x)
    }
}

/// Transport field `u(t, x) = v(x + a·B_t)`, `d' = 1`.
///
/// It solves `du = ∂_x u (a ∘ dB)`, i.e. `f ≡ 0`, `g(t,x,y,z) = a z`.
/// `D_x^ℓ D^θ u = (Π_j a_{θ_j}) v^{(n+ℓ)}(x + a·B_t)` for θ without zero
/// entries, and 0 otherwise.
#[derive(Debug, Clone)]
pub struct TransportField {
    profile: Smooth1d,
    a: Vec<f64>,
}

impl TransportField {
    /// Profile `v` and loading vector `a` (one entry per driver).
    pub fn new(profile: Smooth1d, a: Vec<f64>) -> Self {
        Self { profile, a }
    }

    /// Loading vector `a`.
    pub fn loading(&self) -> &[f64] {
        &self.a
    }

    /// Profile `v`.
    pub fn profile(&self) -> &Smooth1d {
        &self.profile
    }
}

struct BoundTransport<'a> {
    u: &'a TransportField,
    path: &'a SamplePath,
}

impl RandomField for TransportField {
    fn name(&self) -> String {
        if self.a == [1.0] {
            format!("transport:{}", self.profile.name())
        } else {
            format!("transport2:{}", self.profile.name())
        }
    }

    fn dim(&self) -> usize {
        self.a.len()
    }

    fn spatial_dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundField + 'a>> {
        check_path_dim(self.a.len(), path)?;
        Ok(Box::new(BoundTransport { u: self, path }))
    }
}

impl BoundField for BoundTransport<'_> {
    fn dim(&self) -> usize {
        self.u.a.len()
    }

    fn spatial_dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn derivative(&self, theta: &[u8], ell: &[u32], k: usize, x: &[f64]) -> f64 {
        let mut coef = 1.0;
        for &e in theta {
            if e == 0 {
                return 0.0;
            }
            coef *= self.u.a[e as usize - 1];
        }
        let shift: f64 = self.u.a.iter().enumerate().map(|(i, a)| a * self.path.value(i, k)).sum();
        coef * self.u.profile.derivative(theta.len() + ell[0] as usize, x[0] + shift)
    }
}

/// Polynomial-in-space field `u(t, x) = Σ_j x^j c_j(B_t)`, `d = d' = 1`.
///
/// `D_x^ℓ D^θ u = Σ_{j≥ℓ} j!/(j−ℓ)! x^{j−ℓ} c_j^{(n)}(B_t)` for θ without
/// zero entries (n = |θ|₀), and 0 otherwise.
#[derive(Debug, Clone)]
pub struct PolyField {
    coeffs: Vec<Smooth1d>,
}

impl PolyField {
    /// Coefficient functions in increasing degree.
    pub fn new(coeffs: Vec<Smooth1d>) -> Self {
        Self { coeffs }
    }
}

struct BoundPoly<'a> {
    u: &'a PolyField,
    path: &'a SamplePath,
}

impl RandomField for PolyField {
    fn name(&self) -> String {
        let c: Vec<String> = self.coeffs.iter().map(|f| f.name()).collect();
        match c.join(",").as_str() {
            "id,sin,cos" => "poly2".into(),
            "zero,zero,one" => "x2".into(),
            other => format!("poly[{other}]"),
        }
    }

    fn dim(&self) -> usize {
        1
    }

    fn spatial_dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundField + 'a>> {
        check_path_dim(1, path)?;
        Ok(Box::new(BoundPoly { u: self, path }))
    }
}

impl BoundField for BoundPoly<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn spatial_dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn derivative(&self, theta: &[u8], ell: &[u32], k: usize, x: &[f64]) -> f64 {
        if theta.contains(&0) {
            return 0.0;
        }
        let l = ell[0] as usize;
        let b = self.path.value(0, k);
        (l..self.u.coeffs.len())
            .map(|j| {
                let falling: f64 = ((j - l + 1)..=j).map(|v| v as f64).product();
                falling * x[0].powi((j - l) as i32) * self.u.coeffs[j].derivative(theta.len(), b)
            })
            .sum()
    }
}

/// Deterministic heat solution `u(t, x) = e^{−t/2} sin x`, `d = d' = 1`.
///
/// `∂_t u = ½ ∂_xx u`; each `0` in θ contributes `−½`, any noise entry
/// gives 0.
#[derive(Debug, Clone, Copy)]
pub struct HeatField;

struct BoundHeat<'a> {
    path: &'a SamplePath,
}

impl RandomField for HeatField {
    fn name(&self) -> String {
        "heat".into()
    }

    fn dim(&self) -> usize {
        1
    }

    fn spatial_dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundField + 'a>> {
        check_path_dim(1, path)?;
        Ok(Box::new(BoundHeat { path }))
    }
}

impl BoundField for BoundHeat<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn spatial_dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn derivative(&self, theta: &[u8], ell: &[u32], k: usize, x: &[f64]) -> f64 {
        if theta.iter().any(|&e| e != 0) {
            return 0.0;
        }
        let t = self.path.grid().time(k);
        (-0.5f64).powi(theta.len() as i32) * (-0.5 * t).exp() * Smooth1d::Sin.derivative(ell[0] as usize, x[0])
    }
}

/// Multiplicative-noise solution `u(t, x) = v(x) e^{B_t}`, `d = d' = 1`.
///
/// It solves `du = u ∘ dB` (`f ≡ 0`, `g(t,x,y,z) = y`): every noise entry
/// reproduces `u`, any time entry gives 0.
#[derive(Debug, Clone)]
pub struct MultiplicativeField {
    profile: Smooth1d,
}

impl MultiplicativeField {
    /// Initial profile `v`.
    pub fn new(profile: Smooth1d) -> Self {
        Self { profile }
    }
}

struct BoundMultiplicative<'a> {
    u: &'a MultiplicativeField,
    path: &'a SamplePath,
}

impl RandomField for MultiplicativeField {
    fn name(&self) -> String {
        match self.profile {
            Smooth1d::Sin => "multiplicative".into(),
            ref f => format!("multiplicative:{}", f.name()),
        }
    }

    fn dim(&self) -> usize {
        1
    }

    fn spatial_dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundField + 'a>> {
        check_path_dim(1, path)?;
        Ok(Box::new(BoundMultiplicative { u: self, path }))
    }
}

impl BoundField for BoundMultiplicative<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn spatial_dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn derivative(&self, theta: &[u8], ell: &[u32], k: usize, x: &[f64]) -> f64 {
        if theta.contains(&0) {
            return 0.0;
        }
        self.u.profile.derivative(ell[0] as usize, x[0]) * self.path.value(0, k).exp()
    }
}

/// Solution `u(t, x) = v(x) e^{x B_t}` of `du = x u ∘ dB`, `d = d' = 1`.
///
/// Here `g(t,x,y,z) = x y` depends on both `x` and `y`. A noise index of
/// length `q` gives `x^q v(x) e^{x B_t}` and any time entry gives 0; spatial
/// derivatives follow from the Leibniz rule over the three factors.
#[derive(Debug, Clone)]
pub struct SpatialMultiplicativeField {
    profile: Smooth1d,
}

impl SpatialMultiplicativeField {
    /// Initial profile `v`.
    pub fn new(profile: Smooth1d) -> Self {
        Self { profile }
    }
}

struct BoundSpatialMultiplicative<'a> {
    u: &'a SpatialMultiplicativeField,
    path: &'a SamplePath,
}

impl RandomField for SpatialMultiplicativeField {
    fn name(&self) -> String {
        match self.profile {
            Smooth1d::Sin => "multiplicative-x".into(),
            ref f => format!("multiplicative-x:{}", f.name()),
        }
    }

    fn dim(&self) -> usize {
        1
    }

    fn spatial_dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundField + 'a>> {
        check_path_dim(1, path)?;
        Ok(Box::new(BoundSpatialMultiplicative { u: self, path }))
    }
}

impl BoundField for BoundSpatialMultiplicative<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn spatial_dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        CATALOG_ORDER
    }

    fn derivative(&self, theta: &[u8], ell: &[u32], k: usize, x: &[f64]) -> f64 {
        if theta.contains(&0) {
            return 0.0;
        }
        let (q, l, x) = (theta.len(), ell[0] as usize, x[0]);
        let b = self.path.value(0, k);
        let factorial = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
        // (x^q)^{(i)} v^{(j)} (B^c e^{xB}) with i + j + c = ℓ.
        let mut total = 0.0;
        for i in 0..=l.min(q) {
            let power = factorial(q) / factorial(q - i) * x.powi((q - i) as i32);
            for j in 0..=(l - i) {
                let c = l - i - j;
                let multinomial = factorial(l) / (factorial(i) * factorial(j) * factorial(c));
                total += multinomial * power * self.u.profile.derivative(j, x) * b.powi(c as i32);
            }
        }
        total * (x * b).exp()
    }
}
