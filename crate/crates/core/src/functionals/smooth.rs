//! Scalar functions of one variable with derivatives of every order.
//!
//! These are the building blocks of the catalog: Markovian profiles,
//! transport profiles, cylindrical factors and outer functions.

use crate::error::{Error, Result};

/// A smooth function `f: ℝ → ℝ` with closed-form derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum Smooth1d {
    Sin,
    Cos,
    Exp,
    /// `exp(−x²/2)`.
    Gauss,
    Identity,
    /// `Σ c_j x^j` with coefficients in increasing degree.
    Poly(Vec<f64>),
}

impl Smooth1d {
    /// Parses a short name: `sin`, `cos`, `exp`, `gauss`, `id`, `x2`, `x3`,
    /// `one`, `zero`.
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "sin" => Smooth1d::Sin,
            "cos" => Smooth1d::Cos,
            "exp" => Smooth1d::Exp,
            "gauss" => Smooth1d::Gauss,
            "id" => Smooth1d::Identity,
            "x2" => Smooth1d::Poly(vec![0.0, 0.0, 1.0]),
            "x3" => Smooth1d::Poly(vec![0.0, 0.0, 0.0, 1.0]),
            "one" => Smooth1d::Poly(vec![1.0]),
            "zero" => Smooth1d::Poly(vec![]),
            _ => return Err(Error::Config(format!("unknown scalar profile '{name}'"))),
        })
    }

    /// Short name, the inverse of [`Smooth1d::parse`] where one exists.
    pub fn name(&self) -> String {
        match self {
            Smooth1d::Sin => "sin".into(),
            Smooth1d::Cos => "cos".into(),
            Smooth1d::Exp => "exp".into(),
            Smooth1d::Gauss => "gauss".into(),
            Smooth1d::Identity => "id".into(),
            Smooth1d::Poly(c) => {
                let named = [("x2", &[0.0, 0.0, 1.0][..]), ("x3", &[0.0, 0.0, 0.0, 1.0]), ("one", &[1.0]), ("zero", &[])];
                match named.iter().find(|(_, coeffs)| *coeffs == c.as_slice()) {
                    Some((n, _)) => (*n).into(),
                    None => format!("poly{c:?}"),
                }
            }
        }
    }

    /// `f(x)`.
    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// `f^{(k)}(x)`.
    pub fn derivative(&self, k: usize, x: f64) -> f64 {
        match self {
            Smooth1d::Sin => cyclic(k, x.sin(), x.cos()),
            Smooth1d::Cos => cyclic(k + 1, x.sin(), x.cos()),
            Smooth1d::Exp => x.exp(),
            Smooth1d::Gauss => {
                // d^k/dx^k e^{−x²/2} = (−1)^k He_k(x) e^{−x²/2}.
                let (mut h0, mut h1) = (1.0, x);
                let he = if k == 0 {
                    1.0
                } else {
                    for n in 1..k {
                        let h2 = x * h1 - n as f64 * h0;
                        h0 = h1;
                        h1 = h2;
                    }
                    h1
                };
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * he * (-0.5 * x * x).exp()
            }
            Smooth1d::Identity => match k {
                0 => x,
                1 => 1.0,
                _ => 0.0,
            },
            Smooth1d::Poly(c) => {
                let mut acc = 0.0;
                for j in (k..c.len()).rev() {
                    let falling: f64 = ((j - k + 1)..=j).map(|v| v as f64).product();
                    acc = acc * x + c[j] * falling;
                }
                acc
            }
        }
    }
}

/// The k-th derivative of sin at x, from the four-cycle sin, cos, −sin, −cos.
fn cyclic(k: usize, s: f64, c: f64) -> f64 {
    match k % 4 {
        0 => s,
        1 => c,
        2 => -s,
        _ => -c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: &Smooth1d, k: usize, x: f64) -> f64 {
        let h = 1e-5;
        (f.derivative(k, x + h) - f.derivative(k, x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let all = ["sin", "cos", "exp", "gauss", "id", "x2", "x3", "one", "zero"];
        for name in all {
            let f = Smooth1d::parse(name).unwrap();
            assert_eq!(f.name(), name);
            for k in 0..5 {
                for &x in &[-1.3, -0.2, 0.0, 0.7, 2.1] {
                    let a = f.derivative(k + 1, x);
                    let b = fd(&f, k, x);
                    assert!((a - b).abs() < 1e-7 * (1.0 + a.abs()), "{name} k={k} x={x}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn closed_forms() {
        let x = 0.4f64;
        assert_eq!(Smooth1d::Sin.value(x), x.sin());
        assert_eq!(Smooth1d::Sin.derivative(2, x), -x.sin());
        assert_eq!(Smooth1d::Cos.derivative(1, x), -x.sin());
        let g = Smooth1d::Gauss;
        assert!((g.derivative(2, x) - (x * x - 1.0) * (-0.5 * x * x).exp()).abs() < 1e-15);
        let p = Smooth1d::Poly(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.value(2.0), 17.0);
        assert_eq!(p.derivative(1, 2.0), 14.0);
        assert_eq!(p.derivative(2, 2.0), 6.0);
        assert_eq!(p.derivative(3, 2.0), 0.0);
        assert!(Smooth1d::parse("tan").is_err());
    }
}
