//! Command-line front end of the experiment harnesses.
//!
//! Exit codes: 0 on success, 1 when a check fails or a run errors, 2 on a
//! configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pathwise_taylor::experiments::{
    estimate_norms, run_expansion, run_identity_suite, run_scaling, write_report, CheckStatus, ExperimentConfig, ExpansionRequest,
    FitStatus, Report,
};
use pathwise_taylor::{Error, Result};

#[derive(Parser)]
#[command(name = "pathwise-taylor", version, about = "Pathwise Taylor expansions of Brownian functionals: checks and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for the CSV and JSON reports.
    #[arg(long, global = true, default_value = "reports")]
    out: PathBuf,
    /// Also fail on skipped checks and on slopes reported without a target.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the identity suite.
    Identities,
    /// Runs the remainder-scaling regression.
    Scaling,
    /// Estimates derivative norms and the Hölder seminorm.
    Norms,
    /// Expands the target on one path and prints the terms.
    Expand(ExpandArgs),
}

#[derive(Args)]
struct ExpandArgs {
    /// Base time (defaults to the start of the window).
    #[arg(long)]
    t: Option<f64>,
    /// Signed offset (defaults to the largest |δ|).
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Spatial base point, comma separated (fields only).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,
    /// Spatial offset, comma separated (fields only).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    h: Vec<f64>,
    /// Ensemble member whose path is expanded.
    #[arg(long, default_value_t = 0)]
    path_index: usize,
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    Ok(cfg)
}

fn finish<R: Report>(report: &R, common: &Common, strict_ok: bool) -> Result<bool> {
    let (csv, json) = write_report(report, &common.out)?;
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(report.passed() && (!common.strict || strict_ok))
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(&cli.common)?;
    match &cli.command {
        Command::Identities => {
            let report = run_identity_suite(&cfg)?;
            for c in &report.checks {
                let value = c.value.map_or("-".to_string(), |v| format!("{v:.3e}"));
                println!("{:<30} {:<8} {:>12}  {}", c.name, format!("{:?}", c.status).to_lowercase(), value, c.detail);
            }
            let strict_ok = report.checks.iter().all(|c| c.status == CheckStatus::Pass);
            finish(&report, &cli.common, strict_ok)
        }
        Command::Scaling => {
            let report = run_scaling(&cfg)?;
            for f in &report.fits {
                let slope = f.slope.map_or("-".to_string(), |s| format!("{s:.3}"));
                let target = f.target.map_or("-".to_string(), |s| format!("{s:.2}"));
                println!("{:?} {} R_{}: slope {slope} (target {target}) {:?}", f.variant, f.sign.label(), f.order, f.status);
            }
            for g in &report.levy_gaps {
                println!("Lévy gap {}: {:.3} ({})", g.sign.label(), g.gap, if g.pass { "pass" } else { "fail" });
            }
            if let Some(s) = &report.stride_check {
                println!("stride check: largest slope change {:.3} ({})", s.max_slope_change, if s.pass { "pass" } else { "fail" });
            }
            let strict_ok = report.fits.iter().all(|f| matches!(f.status, FitStatus::Pass | FitStatus::Exact));
            finish(&report, &cli.common, strict_ok)
        }
        Command::Norms => {
            let report = estimate_norms(&cfg)?;
            for e in &report.entries {
                println!("θ = {:<16} sup_t ‖D^θ u_t‖_p = {:.6e} (at t = {})", e.index, e.sup_moment, e.argmax_t);
            }
            println!("norm {:.6e}, Hölder seminorm {:.6e} ± {:.1e}", report.norm, report.holder_seminorm, report.holder_seminorm_se);
            finish(&report, &cli.common, true)
        }
        Command::Expand(args) => {
            let request = ExpansionRequest {
                t: args.t.unwrap_or(cfg.window[0]),
                delta: args.delta.unwrap_or(cfg.delta_max),
                x: args.x.clone(),
                h: args.h.clone(),
                path_index: args.path_index,
            };
            let report = run_expansion(&cfg, &request)?;
            print!("{}", report.table());
            finish(&report, &cli.common, true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some checks failed; see the reports");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
