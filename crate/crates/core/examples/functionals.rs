//! Path derivatives of catalog functionals, and the functional Itô formula
//! residual shrinking under refinement.

use pathwise_taylor::functionals::{functional_by_name, functional_ito_residual, FUNCTIONAL_NAMES};
use pathwise_taylor::indices::enumerate_temporal;
use pathwise_taylor::paths::{refine_path, simulate_path, TimeGrid};

fn main() -> pathwise_taylor::Result<()> {
    let u = functional_by_name("area:sin")?;
    let path = simulate_path(TimeGrid::new(1.0, 1024)?, u.dim(), 3)?;
    println!("{} at t = 0.5:", u.name());
    for theta in enumerate_temporal(2, u.dim()) {
        println!("  D^{theta:<8} u = {:+.6}", u.derivative(&theta, 0.5, &path)?);
    }
    println!("Itô residual over [0, 1] (coarse, refined ×4):");
    for name in FUNCTIONAL_NAMES {
        let u = functional_by_name(name)?;
        let coarse = simulate_path(TimeGrid::new(1.0, 512)?, u.dim(), 5)?;
        let fine = refine_path(&coarse, 4)?;
        let (a, b) = (functional_ito_residual(u.as_ref(), &coarse, 1.0)?, functional_ito_residual(u.as_ref(), &fine, 1.0)?);
        println!("  {name:<26} {a:+.3e}  {b:+.3e}");
    }
    Ok(())
}
