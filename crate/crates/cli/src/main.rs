use std::path::PathBuf;
use std::process::ExitCode;

use circumpolar_cli::sweep::{load_sweep, run_sweep};
use circumpolar_cli::{load_config, parse_config, run, CliError, Overrides, RunOutcome};
use clap::Parser;

/// Zonal steady states, vorticity transport and stability diagnostics for a
/// circumpolar band of a rotating sphere.
#[derive(Debug, Parser)]
#[command(name = "circumpolar", version)]
struct Cli {
    /// Configuration file with [band], [grid] and [run] sections
    #[arg(long)]
    config: Option<PathBuf>,

    /// Run each listed configuration file on worker threads
    #[arg(long, num_args = 1..)]
    sweep: Vec<PathBuf>,

    /// Worker threads for --sweep (default: available parallelism)
    #[arg(long)]
    threads: Option<usize>,

    #[command(flatten)]
    overrides: Overrides,
}

fn report(label: &str, result: &Result<RunOutcome, CliError>) {
    match result {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("{label}warning: {w}");
            }
            for s in &out.summary {
                println!("{label}{s}");
            }
            for f in &out.files {
                println!("{label}wrote {}", f.display());
            }
        }
        Err(e) => eprintln!("{label}error: {e}"),
    }
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !cli.sweep.is_empty() {
        let base = cli.overrides.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        let specs = match load_sweep(&cli.sweep, &cli.overrides, &base) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return exit(e.exit_code());
            }
        };
        let threads = cli
            .threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let results = run_sweep(&specs, threads);
        let mut code = 0;
        for (spec, result) in specs.iter().zip(&results) {
            report(&format!("[{}] ", spec.output_dir.display()), result);
            if let Err(e) = result {
                code = code.max(e.exit_code());
            }
        }
        return exit(code);
    }

    let spec = match &cli.config {
        Some(path) => load_config(path, &cli.overrides),
        None => parse_config("", &cli.overrides),
    };
    let result = spec.and_then(|s| run(&s));
    report("", &result);
    exit(result.err().map_or(0, |e| e.exit_code()))
}
