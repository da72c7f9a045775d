//! A small remainder-scaling regression: the full second-order remainder
//! of `sin(A_t)` decays like `|δ|^{3/2}`, the symmetrized one only like `|δ|`.

use pathwise_taylor::experiments::{run_scaling, ExperimentConfig};
use pathwise_taylor::taylor::Variant;

fn main() -> pathwise_taylor::Result<()> {
    let cfg = ExperimentConfig {
        target: "area:sin".into(),
        variants: vec![Variant::Full, Variant::Symmetrized],
        steps: 2048,
        paths: 1000,
        delta_points: 6,
        ..Default::default()
    };
    let report = run_scaling(&cfg)?;
    for f in report.fits.iter().filter(|f| f.order == cfg.m) {
        println!("{:?} {} R_{}: slope {:.3} (r² {:.4})", f.variant, f.sign.label(), f.order, f.slope.unwrap_or(f64::NAN), f.r_squared.unwrap_or(f64::NAN));
    }
    for g in &report.levy_gaps {
        println!("Lévy gap {}: {:.3}", g.sign.label(), g.gap);
    }
    Ok(())
}
