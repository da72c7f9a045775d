//! Step-2 signature of a planar path: the shuffle identity
//! `B̲ + B̲ᵀ = B Bᵀ` holds exactly, and the Lévy area is what is left.

use pathwise_taylor::indices::TemporalIndex;
use pathwise_taylor::integrals::{iterated_integral, step2_signature, GridProcess};
use pathwise_taylor::paths::{simulate_path, TimeGrid};

fn main() -> pathwise_taylor::Result<()> {
    let path = simulate_path(TimeGrid::new(1.0, 4096)?, 2, 11)?;
    let sig = step2_signature(&path, 0.25, 0.75)?;
    let b = &sig.increment;
    println!("increment B = ({:+.5}, {:+.5})", b[0], b[1]);
    println!("second level B̲ =\n{}", sig.second_level);
    println!("Lévy area A₁₂ = {:+.6}", sig.levy_area[(0, 1)]);
    let shuffle = sig.second_level[(0, 1)] + sig.second_level[(1, 0)] - b[0] * b[1];
    println!("B̲₁₂ + B̲₂₁ − B¹B² = {shuffle:+.2e}");
    let one = GridProcess::constant(*path.grid(), 1.0);
    let i = iterated_integral(&TemporalIndex::new(vec![0, 1, 2], 2)?, &one, &path, 0.25, 0.75)?;
    println!("I^(0,1,2) over [0.25, 0.75] = {i:+.6}");
    Ok(())
}
