//! Runs the identity suite on a field target and writes its reports.

use pathwise_taylor::experiments::{run_identity_suite, write_report, ExperimentConfig, TargetKind};

fn main() -> pathwise_taylor::Result<()> {
    let cfg = ExperimentConfig { target: "transport2:sin".into(), kind: TargetKind::Field, steps: 512, paths: 256, delta_points: 4, ..Default::default() };
    let report = run_identity_suite(&cfg)?;
    for c in &report.checks {
        println!("{:<28} {:?} {:?}", c.name, c.status, c.value);
    }
    let dir = std::env::temp_dir().join("pathwise-taylor-identity-example");
    let (csv, json) = write_report(&report, &dir)?;
    println!("reports: {} {}", csv.display(), json.display());
    Ok(())
}
