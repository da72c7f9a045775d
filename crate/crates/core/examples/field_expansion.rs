//! Expansion of a random field in time and space, and the spatial
//! remainder recursion converging with the quadrature order.

use pathwise_taylor::functionals::field_by_name;
use pathwise_taylor::paths::{simulate_path, TimeGrid};
use pathwise_taylor::taylor::{expand_field, field_remainder_recursion_residual, ExpansionQuery};

fn main() -> pathwise_taylor::Result<()> {
    let u = field_by_name("transport:sin")?;
    let path = simulate_path(TimeGrid::new(1.0, 4096)?, 1, 9)?;
    for (delta, h) in [(0.0625, 0.25), (-0.0625, 0.25), (0.015625, 0.125)] {
        let q = ExpansionQuery::field(0.5, vec![0.3], delta, vec![h], 2);
        let r = expand_field(u.as_ref(), &path, &q)?;
        println!("δ = {delta:+}, h = {h}: {} terms, R_2 = {:+.3e}", r.terms.len(), r.remainder);
    }
    let q = ExpansionQuery::field(0.5, vec![0.3], 0.0625, vec![0.25], 2);
    for order in [1, 2, 4, 8] {
        println!("recursion residual, {order}-point quadrature: {:.3e}", field_remainder_recursion_residual(u.as_ref(), &path, &q, order)?);
    }
    Ok(())
}
