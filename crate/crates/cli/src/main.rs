use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hardy_lab::acceptance::{self, SuiteOptions};
use hardy_lab::config::{parse_config, Command as ConfigCommand};
use hardy_lab::error::CliError;
use hardy_lab::run::{run_checked, DEFAULT_OUTPUT_DIR};

#[derive(Parser)]
#[command(name = "hardy-lab", version, about = "Weighted Hardy inequality laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON config file
    config: PathBuf,
    /// Where reports and CSV files go (overrides the config's output_dir)
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run whatever command the config names
    Run(RunArgs),
    CheckWeight(RunArgs),
    HardyConstant(RunArgs),
    CCurve(RunArgs),
    Spectrum(RunArgs),
    BlowupWitness(RunArgs),
    Dichotomy(RunArgs),
    Evolve(RunArgs),
    BlowupSweep(RunArgs),
    /// Run the acceptance suite
    ReproduceAll {
        /// Directory of criterion configs overriding the bundled ones
        #[arg(long)]
        configs: Option<PathBuf>,
        #[arg(long, default_value = DEFAULT_OUTPUT_DIR)]
        output_dir: PathBuf,
        /// Only these criteria
        #[arg(long, num_args = 1..)]
        only: Option<Vec<u32>>,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("HARDY_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("HARDY_LAB_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))
}

fn run_file(args: &RunArgs, expected: Option<ConfigCommand>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", args.config.display())))?;
    let config = parse_config(&text)?;
    if let Some(expected) = expected {
        if config.command != expected {
            return Err(CliError::config(format!(
                "config is for {}, not {}",
                config.command.name(),
                expected.name()
            )));
        }
    }
    let result = run_checked(&config, args.output_dir.as_deref())?;
    println!("{}: ok, report in {}", config.command.name(), result.output_dir.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    use ConfigCommand as C;
    match cli.command {
        Cmd::Run(a) => run_file(&a, None),
        Cmd::CheckWeight(a) => run_file(&a, Some(C::CheckWeight)),
        Cmd::HardyConstant(a) => run_file(&a, Some(C::HardyConstant)),
        Cmd::CCurve(a) => run_file(&a, Some(C::CCurve)),
        Cmd::Spectrum(a) => run_file(&a, Some(C::Spectrum)),
        Cmd::BlowupWitness(a) => run_file(&a, Some(C::BlowupWitness)),
        Cmd::Dichotomy(a) => run_file(&a, Some(C::Dichotomy)),
        Cmd::Evolve(a) => run_file(&a, Some(C::Evolve)),
        Cmd::BlowupSweep(a) => run_file(&a, Some(C::BlowupSweep)),
        Cmd::ReproduceAll { configs, output_dir, only } => {
            let run = acceptance::reproduce_all(&SuiteOptions {
                configs_dir: configs,
                output_dir: output_dir.clone(),
                only,
            })?;
            for o in &run.report.criteria {
                println!("criterion {:>2} {:<45} {}", o.criterion, o.title, if o.passed { "PASS" } else { "FAIL" });
            }
            println!("report in {}", output_dir.display());
            acceptance::failures_as_error(&run.report)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hardy-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
