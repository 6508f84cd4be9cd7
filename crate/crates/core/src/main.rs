use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use maxwell_morawetz::certifier::Verdict;
use maxwell_morawetz::config::{parse_config, RunConfig, KEYS};
use maxwell_morawetz::error::{Error, Result};
use maxwell_morawetz::run;

/// Tolerance for the Coulomb check: every derived quantity must vanish.
const COULOMB_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(version, about = "Maxwell fields on the Schwarzschild exterior: evolution, energy diagnostics and exact inequality certification")]
#[command(after_help = config_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// `key = value` configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV and report output.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Worker threads for the per-mode evolution (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overrides `l_max` from the configuration.
    #[arg(long, global = true)]
    l_max: Option<u32>,

    /// Refines the grid by this integer factor, keeping nodes nested.
    #[arg(long, global = true)]
    resolution_scale: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured modes and write evolve.csv.
    Evolve,
    /// Certify the radial inequality corpus; writes certify.txt and certify.json.
    Certify,
    /// Three-resolution convergence study.
    Converge,
    /// Step a pure Coulomb field and check every derived quantity vanishes.
    CoulombCheck,
}

fn config_help() -> String {
    let mut s = String::from("Configuration keys (default):\n");
    for (k, v) in KEYS {
        s.push_str(&format!("  {k:<16} {v}\n"));
    }
    s.push_str("\nExit codes: 0 pass, 1 failed check or runtime error, 2 configuration error.");
    s
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(l) = cli.l_max {
        cfg.l_max = l;
    }
    if let Some(k) = cli.resolution_scale {
        if k == 0 {
            return Err(Error::config("--resolution-scale", "must be at least 1"));
        }
        cfg = cfg.refined(k);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::config("--threads", "must be at least 1"));
        }
        // Fails only if a pool already exists, which is harmless here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Evolve => {
            let s = run::run_evolve(&cfg, &cli.out_dir)?;
            print!("{}", run::format_summary(&s));
            Ok(s.violations.is_empty())
        }
        Command::Certify => {
            let reports = run::run_certify(&cfg, &cli.out_dir)?;
            for r in &reports {
                print!("{}", r.to_text());
            }
            Ok(reports.iter().all(|r| r.verdict == Verdict::Certified))
        }
        Command::Converge => {
            let t = run::run_converge(&cfg)?;
            let text = run::format_convergence(&t);
            std::fs::create_dir_all(&cli.out_dir)?;
            std::fs::write(cli.out_dir.join("converge.csv"), &text)?;
            print!("{text}");
            Ok(true)
        }
        Command::CoulombCheck => {
            let r = run::run_coulomb_check(&cfg)?;
            println!(
                "steps {} max|Theta| {:.3e} max|beta| {:.3e} max|energy| {:.3e} max|bulk| {:.3e} max phi1 change {:.3e}",
                r.steps, r.max_theta, r.max_beta, r.max_energy, r.max_bulk, r.max_phi1_change
            );
            let ok = r.passed(COULOMB_TOL);
            println!("{}", if ok { "PASS" } else { "FAIL" });
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(run::exit_code(&e) as u8)
        }
    }
}
