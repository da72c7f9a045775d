//! Norm and Hölder-seminorm estimates for a few targets, including the
//! zero functional whose norms vanish.

use pathwise_taylor::experiments::{estimate_norms, ExperimentConfig, TargetKind};

fn main() -> pathwise_taylor::Result<()> {
    for (target, kind) in [("zero", TargetKind::Functional), ("markovian:sin", TargetKind::Functional), ("transport:sin", TargetKind::Field)] {
        let cfg = ExperimentConfig { target: target.into(), kind, steps: 1024, paths: 2000, ..Default::default() };
        let r = estimate_norms(&cfg)?;
        println!("{target:<16} ‖u‖_{{2,2,1}} = {:.4}  [u]_(0.4,2) = {:.4} ± {:.4}", r.norm, r.holder_seminorm, r.holder_seminorm_se);
    }
    Ok(())
}
