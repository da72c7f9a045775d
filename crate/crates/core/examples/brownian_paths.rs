//! Simulates a Brownian path, refines it by Brownian bridges, and shows
//! that the coarse nodes survive refinement and that seeds reproduce paths.

use pathwise_taylor::paths::{derive_seed, refine_path, simulate_path, TimeGrid};

fn main() -> pathwise_taylor::Result<()> {
    let grid = TimeGrid::new(1.0, 8)?;
    let seed = derive_seed(7, 0);
    let path = simulate_path(grid, 2, seed)?;
    let fine = refine_path(&path, 4)?;
    println!("Δt = {}, refined Δt = {}", grid.dt(), fine.grid().dt());
    for k in 0..=grid.steps() {
        println!("t = {:.3}  B = ({:+.4}, {:+.4})  refined node agrees: {}", grid.time(k), path.value(0, k), path.value(1, k), fine.column(4 * k) == path.column(k));
    }
    let again = simulate_path(grid, 2, seed)?;
    println!("same seed, same path: {}", again.column(8) == path.column(8));
    Ok(())
}
