//! Experiment configuration, defaults and validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{field_by_name, functional_by_name};
use crate::paths::TimeGrid;
use crate::spde::spde_case_by_name;
use crate::taylor::{Variant, DEFAULT_MAX_ORDER};

/// Smallest admissible `|δ|` in grid steps.
pub const MIN_DELTA_STEPS: f64 = 10.0;

/// Ensemble size below which statistical experiments are refused.
pub const MIN_STATISTICAL_PATHS: usize = 100;

/// Ensemble size below which the identity suite skips refinement-order checks.
pub const MIN_REFINEMENT_PATHS: usize = 32;

/// Which catalog the target name refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    /// A path functional `u(t, ω)`.
    #[default]
    Functional,
    /// A random field `u(t, x, ω)`.
    Field,
    /// An SPDE case; expansions use the coefficient route.
    Spde,
}

/// Everything an experiment run depends on. Every field except `threads` is
/// echoed into the reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form label written into every report row.
    pub experiment: String,
    /// Catalog name of the functional, field or SPDE case.
    pub target: String,
    pub kind: TargetKind,
    /// Expansion order; scaling reports every order `0..=m`.
    pub m: usize,
    /// Expansion variants to evaluate.
    pub variants: Vec<Variant>,
    /// Driver dimension, checked against the target when given.
    pub d: Option<usize>,
    /// Spatial dimension, checked against the target when given.
    pub d_prime: Option<usize>,
    /// Horizon `T`.
    pub horizon: f64,
    /// Grid steps `N`.
    pub steps: usize,
    /// Ensemble size `M`.
    pub paths: usize,
    /// Master seed; path `i` uses `derive_seed(seed, i)`.
    pub seed: u64,
    /// Largest `|δ|` of the geometric grid.
    pub delta_max: f64,
    /// Number of `|δ|` values.
    pub delta_points: usize,
    /// Ratio between consecutive `|δ|` values.
    pub delta_ratio: f64,
    /// Moment exponent `p`.
    pub p: f64,
    /// Hölder exponent `α` of the pathwise statistic and the norms.
    pub alpha: f64,
    /// Base-time window `[t₁, t₂]`.
    pub window: [f64; 2],
    /// Scan points per `(δ, sign)`, spread over `[t₁, t₁ + |δ|]`.
    pub scan_points: usize,
    /// Repeat the scan with the stride halved and report the slope change.
    pub stride_check: bool,
    /// Radius `N_K` of the spatial window `|x| ≤ N_K`.
    pub x_radius: f64,
    /// Points of the x-grid on `[−N_K, N_K]` (per coordinate).
    pub x_points: usize,
    /// Half-width of the slope acceptance band.
    pub slope_tolerance: f64,
    /// Base resolution of refinement-order checks.
    pub refinement_steps: usize,
    /// Refinement factor of refinement-order checks.
    pub refinement_factor: usize,
    /// Paths used by refinement-order checks (at most `paths`).
    pub refinement_paths: usize,
    /// Least acceptable empirical refinement order.
    pub min_order: f64,
    /// Derivative order `n` of the norm estimates.
    pub norm_order: usize,
    /// SPDE case checked by the identity suite.
    pub spde_case: String,
    /// Worker threads; `None` uses every available core. Results do not
    /// depend on it, so it is not echoed into reports.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "default".into(),
            target: "markovian:sin".into(),
            kind: TargetKind::Functional,
            m: 2,
            variants: vec![Variant::Full],
            d: None,
            d_prime: None,
            horizon: 1.0,
            steps: 4096,
            paths: 10_000,
            seed: 20_240_601,
            delta_max: 0.3125,
            delta_points: 8,
            delta_ratio: 2.0,
            p: 2.0,
            alpha: 0.4,
            window: [0.3125, 0.625],
            scan_points: 11,
            stride_check: false,
            x_radius: 1.0,
            x_points: 5,
            slope_tolerance: 0.15,
            refinement_steps: 512,
            refinement_factor: 4,
            refinement_paths: 256,
            min_order: 0.9,
            norm_order: 2,
            spde_case: "transport:sin".into(),
            threads: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads a JSON configuration; missing fields take their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))
    }

    /// The simulation grid.
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.steps)
    }

    /// The `|δ|` values, largest first.
    pub fn deltas(&self) -> Vec<f64> {
        (0..self.delta_points).map(|j| self.delta_max / self.delta_ratio.powi(j as i32)).collect()
    }

    /// Spatial evaluation points `x ∈ [−N_K, N_K]^{d'}` (a tensor grid).
    pub fn x_grid(&self, d_prime: usize) -> Vec<Vec<f64>> {
        let axis: Vec<f64> = if self.x_points == 1 {
            vec![0.0]
        } else {
            (0..self.x_points).map(|i| -self.x_radius + 2.0 * self.x_radius * i as f64 / (self.x_points - 1) as f64).collect()
        };
        let mut points = vec![Vec::new()];
        for _ in 0..d_prime {
            points = points.iter().flat_map(|p| axis.iter().map(move |a| [p.as_slice(), &[*a]].concat())).collect();
        }
        points
    }

    /// Dimensions `(d, d')` of the target, checked against the declared ones.
    pub fn target_dims(&self) -> Result<(usize, usize)> {
        let dims = match self.kind {
            TargetKind::Functional => {
                let u = functional_by_name(&self.target)?;
                (u.dim(), 0)
            }
            TargetKind::Field => {
                let u = field_by_name(&self.target)?;
                (u.dim(), u.spatial_dim())
            }
            TargetKind::Spde => {
                let case = spde_case_by_name(&self.target)?;
                (case.solution.dim(), case.solution.spatial_dim())
            }
        };
        if let Some(d) = self.d.filter(|d| *d != dims.0) {
            return Err(Error::Config(format!("config declares d = {d}, '{}' has d = {}", self.target, dims.0)));
        }
        if let Some(dp) = self.d_prime.filter(|dp| *dp != dims.1) {
            return Err(Error::Config(format!("config declares d' = {dp}, '{}' has d' = {}", self.target, dims.1)));
        }
        Ok(dims)
    }

    /// Checks the settings shared by every experiment.
    pub fn validate_common(&self) -> Result<()> {
        let grid = self.grid()?;
        if self.paths == 0 {
            return Err(Error::Config("ensemble size must be positive".into()));
        }
        if self.m > DEFAULT_MAX_ORDER {
            return Err(Error::Config(format!("m = {} exceeds the supported maximum {DEFAULT_MAX_ORDER}", self.m)));
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::Config(format!("p must be positive, got {}", self.p)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("at least one variant is needed".into()));
        }
        if self.refinement_factor < 2 || self.refinement_steps < 16 {
            return Err(Error::Config("refinement needs factor ≥ 2 and at least 16 base steps".into()));
        }
        if self.x_points == 0 || !(self.x_radius.is_finite() && self.x_radius >= 0.0) {
            return Err(Error::Config("x-grid needs a point and a finite radius".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        let [t1, t2] = self.window;
        if !(t1 >= 0.0 && t1 <= t2 && t2 <= grid.horizon()) {
            return Err(Error::Config(format!("window [{t1}, {t2}] must lie inside [0, {}]", grid.horizon())));
        }
        self.target_dims()?;
        Ok(())
    }

    /// Checks the δ-grid and window of a scaling run.
    pub fn validate_scaling(&self) -> Result<()> {
        self.validate_common()?;
        if self.paths < MIN_STATISTICAL_PATHS {
            return Err(Error::Config(format!(
                "statistical experiments need M ≥ {MIN_STATISTICAL_PATHS}, got {}",
                self.paths
            )));
        }
        self.validate_delta_grid()?;
        if self.scan_points < 2 {
            return Err(Error::Config("the t-scan needs at least 2 points".into()));
        }
        Ok(())
    }

    /// Checks the δ-grid: at least 4 points, all on the grid, `δ_min ≥ 10Δt`,
    /// `t₂ + δ_max ≤ T` and `t₁ ≥ δ_max` for the backward scans.
    pub fn validate_delta_grid(&self) -> Result<()> {
        let grid = self.grid()?;
        if self.delta_points < 4 {
            return Err(Error::Config(format!("the δ-grid needs at least 4 points for a regression, got {}", self.delta_points)));
        }
        if !(self.delta_ratio > 1.0 && self.delta_max > 0.0) {
            return Err(Error::Config("the δ-grid needs delta_max > 0 and ratio > 1".into()));
        }
        let deltas = self.deltas();
        let smallest = *deltas.last().expect("at least 4 points");
        if smallest < MIN_DELTA_STEPS * grid.dt() * (1.0 - 1e-9) {
            return Err(Error::Config(format!(
                "smallest |δ| = {smallest} is below {MIN_DELTA_STEPS}Δt = {}",
                MIN_DELTA_STEPS * grid.dt()
            )));
        }
        for d in &deltas {
            grid.node(*d).map_err(|_| Error::Config(format!("|δ| = {d} is not a multiple of Δt = {}", grid.dt())))?;
        }
        let [t1, t2] = self.window;
        grid.node(t1).map_err(|_| Error::Config(format!("t₁ = {t1} is not a grid node")))?;
        if t2 + self.delta_max > grid.horizon() * (1.0 + 1e-12) {
            return Err(Error::Config(format!("t₂ + δ_max = {} exceeds T = {}", t2 + self.delta_max, grid.horizon())));
        }
        if t1 + 1e-12 < self.delta_max {
            return Err(Error::Config(format!("backward scans need t₁ ≥ δ_max, got t₁ = {t1} < {}", self.delta_max)));
        }
        Ok(())
    }
}
