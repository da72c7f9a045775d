//! Expansion coefficients of SPDE solutions computed from the coefficients
//! `(f, g)` and checked against the solutions' own path derivatives.

use pathwise_taylor::paths::{simulate_path, TimeGrid};
use pathwise_taylor::spde::{derive_coefficients, field_coefficients, parabolicity, six_tuple, spde_case_by_name, Probe, SPDE_CASE_NAMES};

fn main() -> pathwise_taylor::Result<()> {
    for name in SPDE_CASE_NAMES {
        let case = spde_case_by_name(name)?;
        let u = case.solution.as_ref();
        let path = simulate_path(TimeGrid::new(1.0, 1024)?, u.dim(), 2)?;
        let derived = derive_coefficients(&case.coefficients, u, 0.5, &[0.3], &path)?;
        let direct = field_coefficients(u, 0.5, &[0.3], &path)?;
        let bound = u.bind(&path)?;
        let probe = Probe::from_field(bound.as_ref(), 512, 0.5, &[0.3]);
        let par = parabolicity(&case.coefficients, &probe)?;
        println!(
            "{name:<20} ∂_t u = {:+.5}  ∂²_ωω u = {:+.5}  routes differ by {:.1e}  parabolic: {}",
            derived.t_u,
            derived.omega_omega_u[0][0],
            derived.max_difference(&direct),
            par.parabolic
        );
        if u.dim() == 1 {
            let s = six_tuple(&case.coefficients, u, 0.5, &[0.3], &path)?;
            println!("{:<20} (a, b, c, p, q, x) = ({:+.4}, {:+.4}, {:+.4}, {:+.4}, {:+.4}, {:+.4})", "", s.a, s.b, s.c, s.p, s.q, s.x);
        }
    }
    Ok(())
}
