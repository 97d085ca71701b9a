//! Command-line front end: `willmore-lab <verify|solve|asymptotics|flux>`.
//!
//! Exit codes: 0 on success, 2 on numeric failure, 3 on config errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use willmore_lab::experiments::{self, Command, ExperimentConfig};
use willmore_lab::Error;

#[derive(Parser, Debug)]
#[command(
    name = "willmore-lab",
    version,
    about = "Curvature functionals and area-constrained Willmore spheres in asymptotically Schwarzschild 3-manifolds"
)]
struct Cli {
    /// verify | solve | asymptotics | flux
    command: String,
    /// TOML or JSON experiment configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// band limit override
    #[arg(long)]
    band_limit: Option<usize>,
    /// seed override for randomized corpora
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{failures} numeric failure(s)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) | Error::Io(_) | Error::InvalidBandLimit(_) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> willmore_lab::Result<usize> {
    let command: Command = cli.command.parse()?;
    let mut config = match &cli.config {
        Some(path) => experiments::parse_config_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(l) = cli.band_limit {
        config.band_limit = l;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    config.validate()?;
    let out_dir = cli
        .out
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("willmore-lab-out"));

    let artifact = experiments::run(command, &config, &out_dir)?;
    if command == Command::Verify {
        print_verify_table(&artifact.manifest_path)?;
    }
    println!(
        "wrote {} table(s), {} plot(s) under {}",
        artifact.tables.len(),
        artifact.plots.len(),
        out_dir.display()
    );
    Ok(artifact.failures)
}

fn print_verify_table(manifest_path: &std::path::Path) -> willmore_lab::Result<()> {
    let dir = manifest_path
        .parent()
        .expect("manifest sits in the run dir");
    let table = std::fs::read_to_string(dir.join("verify_results.csv"))?;
    for line in table.lines().skip(1) {
        let cells: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
        if cells.len() >= 4 {
            println!("{:<42} {:<22} measured {}", cells[0], cells[3], cells[1]);
        }
    }
    Ok(())
}
