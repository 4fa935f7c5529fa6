use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use needleseek::{run_experiment, thread_count, CliError, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "needleseek", version, about = "Needle-dither extremum seeking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a `key = value` config file.
    Run {
        config: PathBuf,
        /// Directory for the CSV output (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// List experiment kinds and their keys.
    List,
}

fn run(config: PathBuf, out: PathBuf) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(&config).map_err(|source| CliError::Io {
        context: format!("cannot read config {}", config.display()),
        source,
    })?;
    let cfg = ExperimentConfig::parse(&text)?;
    let threads = thread_count()?;
    let result = run_experiment(&cfg, threads)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    std::fs::create_dir_all(&out).map_err(|source| CliError::Io {
        context: format!("cannot create output directory {}", out.display()),
        source,
    })?;
    let path = out.join(&result.file_name);
    std::fs::write(&path, result.csv).map_err(|source| CliError::Io {
        context: format!("cannot write {}", path.display()),
        source,
    })?;
    Ok(path)
}

fn list() {
    for kind in ExperimentKind::ALL {
        println!("{kind}");
        println!("  experiment = {kind}  (required)");
        for (key, default) in kind.keys() {
            println!("  {key} = {default}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            list();
            ExitCode::SUCCESS
        }
        Command::Run { config, out } => match run(config, out) {
            Ok(path) => {
                println!("wrote {}", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}", e.machine_line());
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
