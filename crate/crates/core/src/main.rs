use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use nystrom_quad::experiment::{run_experiment, write_csv, ConfigFile, ExperimentConfig, Method};
use nystrom_quad::Error;

/// Runs kernel-quadrature comparison experiments and writes one CSV row per
/// (method, n, trial).
#[derive(Debug, Parser)]
#[command(name = "nystrom-quad", version)]
struct Cli {
    /// Figure preset: fig1a, fig1b, fig1c, fig2a, fig2b (or custom with --config).
    #[arg(long)]
    figure: Option<String>,

    /// JSON configuration file; command-line flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output CSV path; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Trials per size.
    #[arg(long)]
    trials: Option<usize>,

    /// Drop the inequality constraint from recombination.
    #[arg(long)]
    no_inequality: bool,

    /// Relative eigenvalue cutoff for pseudo-inverses and square roots.
    #[arg(long)]
    rtol: Option<f64>,

    /// Comma-separated subset of methods.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,

    /// Comma-separated list of sizes n.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,

    /// Write runtime_ms as 0 so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
}

fn build_config(cli: &Cli) -> nystrom_quad::Result<ExperimentConfig> {
    let mut file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ConfigFile>(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => {
            if cli.figure.is_none() {
                return Err(Error::Config("one of --figure or --config is required".into()));
            }
            ConfigFile::default()
        }
    };
    if let Some(figure) = &cli.figure {
        file.figure = Some(figure.clone());
    }
    if let Some(seed) = cli.seed {
        file.seed = Some(seed);
    }
    if let Some(trials) = cli.trials {
        file.trials = Some(trials);
    }
    if cli.no_inequality {
        file.enforce_inequality = Some(false);
    }
    if let Some(rtol) = cli.rtol {
        file.rtol = Some(rtol);
    }
    if let Some(methods) = &cli.methods {
        file.methods = Some(methods.iter().map(|m| m.trim().parse::<Method>()).collect::<Result<_, _>>()?);
    }
    if let Some(n_list) = &cli.n_list {
        file.n_list = Some(n_list.clone());
    }
    let mut config = ExperimentConfig::from_file(file)?;
    config.record_timing = !cli.no_timing;
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> nystrom_quad::Result<()> {
    let config = build_config(cli)?;
    let rows = run_experiment(&config)?;
    match &cli.out {
        Some(path) => write_csv(&config, &rows, BufWriter::new(File::create(path)?))?,
        None => write_csv(&config, &rows, io::stdout().lock())?,
    }
    if let Some(path) = &cli.out {
        eprintln!("wrote {} rows to {}", rows.len(), path.display());
    }
    Ok(())
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Config(_) => 2,
        Error::NumericalConsistency(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => {
            let _ = io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
