//! Built-in SPDE coefficient sets, each paired with a known solution field.

use nalgebra::{DMatrix, DVector};

use super::{Probe, SpdeCoefficients};
use crate::error::{Error, Result};
use crate::functionals::{HeatField, MultiplicativeField, RandomField, Smooth1d, SpatialMultiplicativeField, TransportField};

/// SPDE cases addressable by name.
pub const SPDE_CASE_NAMES: &[&str] =
    &["transport:sin", "transport:gauss", "transport2:sin", "multiplicative", "multiplicative-x", "heat-deterministic"];

/// Coefficient sets with `d' = 1` and closed-form partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum CatalogSpde {
    /// `f = 0`, `g_j = a_j z`.
    Transport { a: Vec<f64> },
    /// `f = 0`, `g = y`.
    Multiplicative,
    /// `f = 0`, `g = x y`.
    SpatialMultiplicative,
    /// `f = κ γ`, `g = 0`.
    Heat { diffusion: f64 },
    /// `f = 0`, `g = c` (constant).
    ConstantNoise { c: Vec<f64> },
}

impl SpdeCoefficients for CatalogSpde {
    fn name(&self) -> String {
        match self {
            CatalogSpde::Transport { a } => format!("transport{a:?}"),
            CatalogSpde::Multiplicative => "multiplicative".into(),
            CatalogSpde::SpatialMultiplicative => "multiplicative-x".into(),
            CatalogSpde::Heat { diffusion } => format!("heat[{diffusion}]"),
            CatalogSpde::ConstantNoise { c } => format!("constant-noise{c:?}"),
        }
    }

    fn dim(&self) -> usize {
        match self {
            CatalogSpde::Transport { a } => a.len(),
            CatalogSpde::ConstantNoise { c } => c.len(),
            _ => 1,
        }
    }

    fn spatial_dim(&self) -> usize {
        1
    }

    fn f(&self, p: &Probe) -> f64 {
        match self {
            CatalogSpde::Heat { diffusion } => diffusion * p.gamma[(0, 0)],
            _ => 0.0,
        }
    }

    fn g(&self, p: &Probe) -> DVector<f64> {
        match self {
            CatalogSpde::Transport { a } => DVector::from_iterator(a.len(), a.iter().map(|aj| aj * p.z[0])),
            CatalogSpde::Multiplicative => DVector::from_element(1, p.y),
            CatalogSpde::SpatialMultiplicative => DVector::from_element(1, p.x[0] * p.y),
            CatalogSpde::Heat { .. } => DVector::zeros(1),
            CatalogSpde::ConstantNoise { c } => DVector::from_column_slice(c),
        }
    }

    fn df_dgamma(&self, _p: &Probe) -> Option<DMatrix<f64>> {
        let k = match self {
            CatalogSpde::Heat { diffusion } => *diffusion,
            _ => 0.0,
        };
        Some(DMatrix::from_element(1, 1, k))
    }

    fn dg_dx(&self, p: &Probe) -> Option<DMatrix<f64>> {
        let d = self.dim();
        Some(match self {
            CatalogSpde::SpatialMultiplicative => DMatrix::from_element(1, 1, p.y),
            _ => DMatrix::zeros(1, d),
        })
    }

    fn dg_dy(&self, p: &Probe) -> Option<DVector<f64>> {
        let d = self.dim();
        Some(match self {
            CatalogSpde::Multiplicative => DVector::from_element(1, 1.0),
            CatalogSpde::SpatialMultiplicative => DVector::from_element(1, p.x[0]),
            _ => DVector::zeros(d),
        })
    }

    fn dg_dz(&self, _p: &Probe) -> Option<DMatrix<f64>> {
        let d = self.dim();
        Some(match self {
            CatalogSpde::Transport { a } => DMatrix::from_row_slice(1, d, a),
            _ => DMatrix::zeros(1, d),
        })
    }
}

/// A coefficient set together with a solution of its SPDE.
pub struct SpdeCase {
    pub name: String,
    pub coefficients: CatalogSpde,
    pub solution: Box<dyn RandomField>,
}

/// Looks up an SPDE case:
///
/// - `transport:<v>`: `du = ∂_x u ∘ dB`, solved by `v(x + B_t)`;
/// - `transport2:<v>`: `du = ∂_x u (∘ dB¹ + ½ ∘ dB²)`, solved by `v(x + B¹_t + ½B²_t)`;
/// - `multiplicative`: `du = u ∘ dB`, solved by `sin(x) e^{B_t}`;
/// - `multiplicative-x`: `du = x u ∘ dB`, solved by `sin(x) e^{x B_t}`;
/// - `heat-deterministic`: `∂_t u = ½ ∂²_xx u`, solved by `e^{−t/2} sin x`.
pub fn spde_case_by_name(name: &str) -> Result<SpdeCase> {
    let (coefficients, solution): (CatalogSpde, Box<dyn RandomField>) = if let Some(v) = name.strip_prefix("transport:") {
        (CatalogSpde::Transport { a: vec![1.0] }, Box::new(TransportField::new(Smooth1d::parse(v)?, vec![1.0])))
    } else if let Some(v) = name.strip_prefix("transport2:") {
        let a = vec![1.0, 0.5];
        (CatalogSpde::Transport { a: a.clone() }, Box::new(TransportField::new(Smooth1d::parse(v)?, a)))
    } else {
        match name {
            "multiplicative" => (CatalogSpde::Multiplicative, Box::new(MultiplicativeField::new(Smooth1d::Sin))),
            "multiplicative-x" => (CatalogSpde::SpatialMultiplicative, Box::new(SpatialMultiplicativeField::new(Smooth1d::Sin))),
            "heat-deterministic" => (CatalogSpde::Heat { diffusion: 0.5 }, Box::new(HeatField)),
            _ => return Err(Error::Config(format!("unknown SPDE case '{name}'"))),
        }
    };
    Ok(SpdeCase { name: name.to_string(), coefficients, solution })
}
