use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vortex2ch::config::{load_config, RunConfig};
use vortex2ch::runner::execute;

/// Pseudospectral solver for the two-component vorticity shallow-water system.
#[derive(Parser, Debug)]
#[command(name = "vortex2ch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Configuration file.
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key overrides such as `--grid.n 512` or `--model.A=1.5`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the system and record diagnostics.
    Simulate(RunArgs),
    /// Run the Friedrichs iteration and compare with the direct solver.
    Friedrichs(RunArgs),
    /// Check the coefficient identities.
    Audit(RunArgs),
    /// Run every point of the configured parameter sweep.
    Sweep(RunArgs),
    /// Validate a configuration and print its canonical form.
    CheckConfig(RunArgs),
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    let mut it = raw.iter();
    while let Some(tok) = it.next() {
        let key = tok
            .strip_prefix("--")
            .ok_or_else(|| format!("unexpected argument '{tok}' (overrides look like --key value)"))?;
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| format!("override --{key} needs a value"))?;
                out.push((key.to_string(), v.clone()));
            }
        }
    }
    Ok(out)
}

fn load(args: &RunArgs, mode: Option<&str>) -> Result<RunConfig, String> {
    let mut overrides = parse_overrides(&args.overrides)?;
    if let Some(m) = mode {
        overrides.push(("mode".into(), format!("\"{m}\"")));
    }
    load_config(&args.config, &overrides).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, mode) = match &cli.command {
        Command::Simulate(a) => (a, Some("simulate")),
        Command::Friedrichs(a) => (a, Some("friedrichs")),
        Command::Audit(a) => (a, Some("audit")),
        Command::Sweep(a) => (a, Some("sweep")),
        Command::CheckConfig(a) => (a, None),
    };
    let config = match load(args, mode) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    if mode.is_none() {
        print!("{}", config.canonical_text());
        println!("# hash {}", config.hash());
        return ExitCode::SUCCESS;
    }
    let dir = args.out.clone().unwrap_or_else(|| config.output_dir.clone());
    match execute(&config, &dir) {
        Ok(summary) => {
            println!(
                "{} at t = {} -> {}",
                summary.status.as_str(),
                summary.final_time,
                summary.dir.display()
            );
            if !summary.checks_passed {
                eprintln!("checks failed, see {}", summary.dir.join("manifest.json").display());
            }
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
