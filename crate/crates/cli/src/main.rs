use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sampling_recovery::analysis::{hat_kolmogorov_width, hat_sampling_number, HatClassSpec};
use sampling_recovery_cli::{execute, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "sampling-recovery", version, about = "Weighted least-squares recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides as `--key value` pairs.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
        overrides: Vec<String>,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the hat-class sampling numbers and Kolmogorov widths.
    Oracle {
        #[arg(long)]
        alpha_len: f64,
        #[arg(long)]
        beta_h: f64,
        #[arg(long)]
        n_max: usize,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentConfig::parse(&text)
}

fn apply_overrides(config: &mut ExperimentConfig, args: &[String]) -> Result<(), CliError> {
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| CliError::Invalid(format!("expected `--key value`, got `{flag}`")))?;
        let value = it
            .next()
            .ok_or_else(|| CliError::Invalid(format!("override `{flag}` has no value")))?;
        config.set(&key.replace('-', "_"), value)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run { config, overrides } => {
            let mut config = load(&config)?;
            apply_overrides(&mut config, &overrides)?;
            let output = execute(&config)?;
            print!("{}", output.summary);
            println!(
                "wrote {} and {}",
                config.output.display(),
                config.summary_path().display()
            );
            Ok(output.passed)
        }
        Command::Validate { config } => {
            let config = load(&config)?;
            config.validate()?;
            println!("config ok");
            Ok(true)
        }
        Command::Oracle {
            alpha_len,
            beta_h,
            n_max,
        } => {
            let spec = HatClassSpec::new(alpha_len, beta_h, HatClassSpec::DEFAULT_TRUNCATION)?;
            println!("n,sampling_number,kolmogorov_width");
            for n in 0..=n_max {
                println!(
                    "{n},{:.16e},{:.16e}",
                    hat_sampling_number(&spec, n),
                    hat_kolmogorov_width(&spec, n)
                );
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
