//! Small numerical summaries: refinement orders, log-log regression, moments.

use serde::Serialize;

/// Errors at or below this absolute level are treated as rounding noise.
pub const ROUNDING_FLOOR: f64 = 1e-12;

/// Result of comparing an error measure at two grid resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementOutcome {
    /// Error on the coarse grid.
    pub coarse: f64,
    /// Error on the grid refined by `factor`.
    pub fine: f64,
    /// `log(coarse/fine) / log(factor)`; `None` when both errors sit at the
    /// rounding floor and no order can be measured.
    pub order: Option<f64>,
}

impl RefinementOutcome {
    /// Both errors are at rounding level: the identity holds exactly on the
    /// discrete level.
    pub fn is_exact(&self) -> bool {
        self.order.is_none()
    }

    /// The identity converges with at least `min_order`, or is exact.
    pub fn passes(&self, min_order: f64) -> bool {
        match self.order {
            None => true,
            Some(o) => o >= min_order,
        }
    }
}

/// Empirical convergence order from errors at two resolutions `factor` apart.
pub fn refinement_order(coarse: f64, fine: f64, factor: f64) -> RefinementOutcome {
    refinement_order_with_floor(coarse, fine, factor, ROUNDING_FLOOR)
}

/// As [`refinement_order`] with an explicit rounding floor.
pub fn refinement_order_with_floor(coarse: f64, fine: f64, factor: f64, floor: f64) -> RefinementOutcome {
    let order = if coarse <= floor && fine <= floor {
        None
    } else {
        Some((coarse / fine.max(f64::MIN_POSITIVE)).ln() / factor.ln())
    };
    RefinementOutcome { coarse, fine, order }
}

/// Ordinary least-squares fit `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits a line by ordinary least squares. Needs at least two distinct `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(LinearFit { slope, intercept, r_squared })
}

/// Fits `log y` against `log x`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}

/// `(E|X|^p)^{1/p}` with its delta-method standard error.
pub fn moment_norm(samples: &[f64], p: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    let powered: Vec<f64> = samples.iter().map(|v| v.abs().powf(p)).collect();
    let mean = powered.iter().sum::<f64>() / n;
    let norm = mean.powf(1.0 / p);
    if samples.len() < 2 || mean == 0.0 {
        return (norm, 0.0);
    }
    let var = powered.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se_mean = (var / n).sqrt();
    (norm, norm / (p * mean) * se_mean)
}

/// Root mean square.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}
