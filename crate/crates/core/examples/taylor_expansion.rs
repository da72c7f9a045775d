//! Forward and backward expansions of a functional of a planar path, with
//! the term table and the remainders of every lower order.

use pathwise_taylor::functionals::functional_by_name;
use pathwise_taylor::paths::{simulate_path, TimeGrid};
use pathwise_taylor::taylor::{expand_with, ExpansionOptions, ExpansionQuery, Variant};

fn main() -> pathwise_taylor::Result<()> {
    let u = functional_by_name("area:sin")?;
    let path = simulate_path(TimeGrid::new(1.0, 4096)?, 2, 4)?;
    for delta in [0.0625, -0.0625] {
        for variant in [Variant::Full, Variant::Symmetrized] {
            let r = expand_with(u.as_ref(), &path, &ExpansionQuery::new(0.5, delta, 3), &ExpansionOptions { variant, ..Default::default() })?;
            println!("δ = {delta:+}, {variant:?}: u(t+δ) = {:+.6}, predicted {:+.6}", r.actual, r.predicted);
            for t in r.terms.iter().filter(|t| t.contribution() != 0.0) {
                println!("    {:<24} {:+.4e} · {:+.4e}", t.index.theta.to_string(), t.coefficient, t.integral);
            }
            let orders: Vec<String> = (0..=3).map(|k| format!("R_{k} = {:+.2e}", r.remainder_at_order(k))).collect();
            println!("    {}", orders.join(", "));
        }
    }
    Ok(())
}
