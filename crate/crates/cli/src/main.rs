use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ahlap::config::RunConfig;
use ahlap::identities::run_suite;
use ahlap::report::{self, CONFIG_SNAPSHOT};
use ahlap::spectral::spectral_picture;
use ahlap::Error;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "ahlap", version, about = "Lichnerowicz Laplacian checks on hyperbolic surfaces")]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed for random test fields.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated subset of identity checks.
    #[arg(long, global = true, value_delimiter = ',')]
    only: Vec<String>,
    /// Comma-separated grid sizes for convergence ladders.
    #[arg(long, global = true, value_delimiter = ',')]
    grid_ladder: Vec<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the identity and inequality suite.
    Verify,
    /// Scan quasi-mode residual ratios over λ and R.
    Quasimode {
        /// Comma-separated λ values (overrides the config).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambdas: Vec<f64>,
        /// Comma-separated cutoff scales R (overrides the config).
        #[arg(long, value_delimiter = ',')]
        r_scales: Vec<f64>,
    },
    /// Block spectra, explicit eigentensors and verdicts.
    Spectrum,
    /// Summarise the artifacts found in the output directory.
    Report,
}

enum Outcome {
    Pass,
    Fail,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Usage(_) | Error::Domain(_) => 2,
        _ => 1,
    }
}

fn load(cli: &Cli) -> ahlap::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if !cli.only.is_empty() {
        cfg.verify.only = cli.only.clone();
    }
    if !cli.grid_ladder.is_empty() {
        cfg.verify.grid_ladder = cli.grid_ladder.clone();
    }
    if let Command::Quasimode { lambdas, r_scales } = &cli.command {
        if !lambdas.is_empty() {
            cfg.quasimode.lambdas = lambdas.clone();
        }
        if !r_scales.is_empty() {
            cfg.quasimode.r_scales = r_scales.clone();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn snapshot(cfg: &RunConfig) -> ahlap::Result<()> {
    report::ensure_dir(&cfg.out)?;
    std::fs::write(cfg.out.join(CONFIG_SNAPSHOT), cfg.to_toml()?)?;
    Ok(())
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn verify(cfg: &RunConfig) -> ahlap::Result<Outcome> {
    snapshot(cfg)?;
    let reports = run_suite(&cfg.suite(), &cfg.verify.only)?;
    for r in &reports {
        println!(
            "{:<45} order {:>7.3}  finest {:>10.3e}  {}",
            r.name,
            r.fitted_order,
            r.finest(),
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    print_written(&report::write_identities(&cfg.out, &reports)?);
    Ok(if reports.iter().all(|r| r.pass) { Outcome::Pass } else { Outcome::Fail })
}

fn quasimode(cfg: &RunConfig) -> ahlap::Result<Outcome> {
    snapshot(cfg)?;
    let table = cfg.quasimode.run(cfg.model.bump())?;
    for s in &table.slopes {
        println!(
            "λ = {:<5} ratio slope {:>7.3}  ‖h_R‖² slope {:>6.3}  {}",
            s.lambda,
            s.ratio_slope,
            s.norm_sq_slope,
            if s.ratio_pass { "PASS" } else { "FAIL" }
        );
    }
    print_written(&report::write_scan(&cfg.out, &table)?);
    Ok(if table.slopes.iter().all(|s| s.ratio_pass) { Outcome::Pass } else { Outcome::Fail })
}

fn spectrum(cfg: &RunConfig) -> ahlap::Result<Outcome> {
    snapshot(cfg)?;
    let rep = spectral_picture(&cfg.spectral())?;
    for v in &rep.verdicts {
        println!("{:?}: {}\n    {}", v.status, v.claim, v.evidence);
    }
    print_written(&report::write_spectrum(&cfg.out, &rep)?);
    Ok(if rep.all_pass() { Outcome::Pass } else { Outcome::Fail })
}

fn summary(dir: &Path) -> ahlap::Result<Outcome> {
    let lines = report::summarize_dir(dir)?;
    if lines.is_empty() {
        return Err(Error::Usage(format!("no run artifacts found in {}", dir.display())));
    }
    for l in &lines {
        println!("{:<22} {:<70} {}", l.source, l.item, if l.pass { "PASS" } else { "FAIL" });
    }
    Ok(if lines.iter().all(|l| l.pass) { Outcome::Pass } else { Outcome::Fail })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|cfg| match cli.command {
        Command::Verify => verify(&cfg),
        Command::Quasimode { .. } => quasimode(&cfg),
        Command::Spectrum => spectrum(&cfg),
        Command::Report => summary(&cfg.out),
    });
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Numerical { log, .. } = &e {
                for l in log {
                    eprintln!("  {l}");
                }
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
