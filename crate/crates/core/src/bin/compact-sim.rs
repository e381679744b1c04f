use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use compact_coding::harness::{self, output, Experiment, ExperimentConfig, OracleConfig};
use compact_coding::Error;

#[derive(Parser)]
#[command(name = "compact-sim", version, about = "Compact-coding protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,

    /// Overrides trials.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Exit with status 3 if any trial aborted on its IV check.
    #[arg(long, global = true)]
    fail_on_abort: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured trials.
    Simulate,
    /// Run the trials once per value of a numeric parameter.
    Sweep {
        /// Dotted path, e.g. `channel.eta`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Compare detector statistics and displacement against the Fock oracle.
    OracleCheck,
    /// Parse and check the configuration, then print it with defaults filled in.
    ValidateConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for output::Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => output::Format::Csv,
            OutFormat::Json => output::Format::Json,
        }
    }
}

enum Failure {
    Config(Error),
    Runtime(Error),
    Abort(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(Failure::Config)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    Ok(cfg)
}

fn validated(cfg: &ExperimentConfig) -> Result<Experiment, Failure> {
    cfg.validate().map_err(Failure::Config)
}

fn emit(cli: &Cli, write: impl FnOnce(&mut dyn Write) -> compact_coding::Result<()>) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|source| Error::Io { path: path.clone(), source })?;
            let mut w = io::BufWriter::new(file);
            write(&mut w)?;
            w.flush().map_err(|source| Error::Io { path: path.clone(), source })?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn json_to(w: &mut dyn Write, value: &impl serde::Serialize) -> compact_coding::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Serialization(e.to_string()))?;
    writeln!(w).map_err(|e| Error::Serialization(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let format = output::Format::from(cli.format);
    match &cli.command {
        Command::Simulate => {
            let exp = validated(&load(cli)?)?;
            let rows = harness::run_trials(&exp)?;
            emit(cli, |w| match format {
                output::Format::Csv => output::write_csv(&rows, w),
                output::Format::Json => output::write_json(&rows, w),
            })?;
            let aborted = rows.iter().filter(|r| r.aborted).count();
            if cli.fail_on_abort && aborted > 0 {
                return Err(Failure::Abort(aborted));
            }
        }
        Command::Sweep { param, values } => {
            let cfg = load(cli)?;
            validated(&cfg)?;
            for &v in values {
                harness::with_param(&cfg, param, v).and_then(|c| c.validate()).map_err(Failure::Config)?;
            }
            let blocks = harness::sweep(&cfg, param, values)?;
            emit(cli, |w| match format {
                output::Format::Csv => output::write_sweep_csv(&blocks, w),
                output::Format::Json => output::write_sweep_json(&blocks, w),
            })?;
            let aborted = blocks.iter().flat_map(|b| &b.rows).filter(|r| r.aborted).count();
            if cli.fail_on_abort && aborted > 0 {
                return Err(Failure::Abort(aborted));
            }
        }
        Command::OracleCheck => {
            let seed = match (&cli.config, cli.seed) {
                (_, Some(s)) => s,
                (Some(_), None) => load(cli)?.master_seed,
                (None, None) => 0,
            };
            let report = harness::cross_validate_oracle(&OracleConfig { seed, ..OracleConfig::default() })?;
            emit(cli, |w| json_to(w, &report))?;
            if !report.passed {
                return Err(Failure::Runtime(Error::InvalidInput("oracle cross-check failed".into())));
            }
        }
        Command::ValidateConfig => {
            let cfg = load(cli)?;
            validated(&cfg)?;
            let text = cfg.to_toml_string()?;
            emit(cli, |w| w.write_all(text.as_bytes()).map_err(|e| Error::Serialization(e.to_string())))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Abort(n)) => {
            eprintln!("{n} trial(s) aborted on the IV check");
            ExitCode::from(3)
        }
    }
}
