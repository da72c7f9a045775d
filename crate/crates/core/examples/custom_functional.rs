//! Implements a user-defined functional, the exponential martingale
//! `u(t, ω) = exp(B_t − t/2)`, and expands it. Its path derivatives are
//! `∂_ω u = u` and `∂_t u = −u/2`, so `D^θ u = (−1/2)^{#zeros in θ} u`.

use pathwise_taylor::functionals::{BoundFunctional, PathFunctional};
use pathwise_taylor::paths::{simulate_path, SamplePath, TimeGrid};
use pathwise_taylor::taylor::{expand, ExpansionQuery};
use pathwise_taylor::{Error, Result};

struct ExponentialMartingale;

struct Bound<'a> {
    path: &'a SamplePath,
}

impl PathFunctional for ExponentialMartingale {
    fn name(&self) -> String {
        "exponential-martingale".into()
    }

    fn dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        8
    }

    fn bind<'a>(&'a self, path: &'a SamplePath) -> Result<Box<dyn BoundFunctional + 'a>> {
        if path.dim() != 1 {
            return Err(Error::Query("the exponential martingale needs a scalar path".into()));
        }
        Ok(Box::new(Bound { path }))
    }
}

impl BoundFunctional for Bound<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        8
    }

    fn derivative(&self, theta: &[u8], k: usize) -> f64 {
        let t = self.path.grid().time(k);
        let zeros = theta.iter().filter(|e| **e == 0).count() as i32;
        (-0.5f64).powi(zeros) * (self.path.value(0, k) - t / 2.0).exp()
    }
}

fn main() -> Result<()> {
    let path = simulate_path(TimeGrid::new(1.0, 4096)?, 1, 21)?;
    for m in 0..=4 {
        let r = expand(&ExponentialMartingale, &path, &ExpansionQuery::new(0.5, 0.125, m))?;
        println!("m = {m}: {} terms, remainder {:+.3e}", r.terms.len(), r.remainder);
    }
    Ok(())
}
