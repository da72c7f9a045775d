//! Enumerates temporal multi-indices by weight; the time direction `0`
//! weighs 2 and each noise direction weighs 1.

use pathwise_taylor::indices::{enumerate_temporal, reverse, weight, TemporalIndex};

fn main() -> pathwise_taylor::Result<()> {
    for theta in enumerate_temporal(3, 2) {
        println!("{theta:<10} weight {}  reversed {}", weight(&theta), reverse(&theta));
    }
    let theta = TemporalIndex::new(vec![0, 2, 1], 2)?;
    println!("{theta} has weight {}", weight(&theta));
    Ok(())
}
