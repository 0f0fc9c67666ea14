use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pivot::commands::{
    cmd_decompose, cmd_enumerate, cmd_metrics, cmd_pikl, cmd_reproduce, cmd_sample, cmd_verify, PiklMethod,
};
use pivot::config::{parse_algorithm, RunConfig};
use pivot::format::OutputFormat;
use pivot::frame::read_frame;
use pivot::verify::Level;
use pivot::{CliError, Result};

#[derive(Parser)]
#[command(name = "pivot", version, about = "Ordered pivotal sampling and its competitors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Formula,
    Enumeration,
    MonteCarlo,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyLevel {
    Fast,
    Full,
}

#[derive(Args)]
struct FrameArg {
    /// CSV frame with `unit` and `pi` columns and optional study variables.
    #[arg(long)]
    pi_file: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    frame: FrameArg,
    #[arg(long, default_value = "ops", value_parser = ["ops", "dss", "sys", "srs", "cmc", "rps"])]
    algorithm: String,
    /// Mixing parameter of the compromise Markov design, in [0, 1].
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 1)]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-border units, microstrata and clusters of a frame.
    Decompose(FrameArg),
    /// Draw samples.
    Sample {
        #[command(flatten)]
        run: RunArgs,
        /// Report first-order frequencies instead of the samples.
        #[arg(long)]
        summary: bool,
    },
    /// Exact design as `members;probability` lines.
    Enumerate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Matrix of first- and second-order inclusion probabilities.
    Pikl {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Method::Formula)]
        method: Method,
    },
    /// Entropy, eigenvalue dispersion, variances and design effects.
    Metrics {
        #[command(flatten)]
        frame: FrameArg,
        /// Also evaluate compromise Markov designs with these parameters.
        #[arg(long, value_delimiter = ',')]
        rho: Vec<f64>,
    },
    /// Check every closed form against its oracle.
    Verify {
        #[arg(long, value_enum, default_value_t = VerifyLevel::Fast)]
        level: VerifyLevel,
    },
    /// Recompute the design-effect table of the twelve-unit population.
    Reproduce,
}

fn config(run: &RunArgs, cli: &Cli) -> Result<RunConfig> {
    RunConfig::new(
        &run.algorithm,
        run.rho,
        run.frame.pi_file.clone(),
        run.replicates,
        run.seed,
        cli.out.clone(),
        cli.format.into(),
        cli.verbose,
    )
}

/// Runs the command; `Ok(false)` signals a failed verification.
fn execute(cli: &Cli, out: &mut dyn Write) -> Result<bool> {
    let format: OutputFormat = cli.format.into();
    match &cli.command {
        Command::Decompose(f) => cmd_decompose(&read_frame(&f.pi_file)?, format, out)?,
        Command::Sample { run, summary } => {
            let cfg = config(run, cli)?;
            cmd_sample(&cfg, &read_frame(&cfg.pi_file)?, *summary, out)?;
        }
        Command::Enumerate { run } => {
            let algorithm = parse_algorithm(&run.algorithm, run.rho)?;
            cmd_enumerate(algorithm, &read_frame(&run.frame.pi_file)?, out)?;
        }
        Command::Pikl { run, method } => {
            let cfg = config(run, cli)?;
            let method = match method {
                Method::Formula => PiklMethod::Formula,
                Method::Enumeration => PiklMethod::Enumeration,
                Method::MonteCarlo => PiklMethod::MonteCarlo,
            };
            cmd_pikl(&cfg, method, &read_frame(&cfg.pi_file)?, out)?;
        }
        Command::Metrics { frame, rho } => {
            if let Some(bad) = rho.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return Err(CliError::Usage(format!("--rho must lie in [0, 1], got {bad}")));
            }
            cmd_metrics(&read_frame(&frame.pi_file)?, rho, format, out)?;
        }
        Command::Verify { level } => {
            let level = match level {
                VerifyLevel::Fast => Level::Fast,
                VerifyLevel::Full => Level::Full,
            };
            return cmd_verify(level, format, out);
        }
        Command::Reproduce => cmd_reproduce(format, out)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sink: Result<Box<dyn Write>> = match &cli.out {
        Some(path) => File::create(path)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|source| CliError::Io { path: path.clone(), source }),
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    };
    let outcome = sink.and_then(|mut out| {
        let passed = execute(&cli, &mut *out)?;
        out.flush()?;
        Ok(passed)
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
