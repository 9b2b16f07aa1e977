use clap::Parser;
use coupler_cli::{execute, load, CliError, Command};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "coupler", version, about = "Coupled down-conversion waveguides: scans, sweeps and regime maps")]
struct Args {
    /// evolve, sweep, phase-diagram, photon-dist or oracle-check
    command: String,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the output path of the scenario; stdout if neither is set.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main_inner(args: Args) -> Result<(), CliError> {
    let command: Command = args.command.parse().map_err(CliError::Scenario)?;
    let sc = load(&args.config)?;
    if sc.command != command {
        return Err(CliError::Scenario(format!(
            "{} describes a {} scenario, not {command}",
            args.config.display(),
            sc.command
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Scenario(format!("thread pool: {e}")))?;
    let text = pool.install(|| execute(&sc))?;
    match args.output.or(sc.output.as_ref().map(PathBuf::from)) {
        Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
