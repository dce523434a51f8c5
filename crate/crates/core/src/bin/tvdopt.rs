use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tvdopt::experiment::{
    builtin_scenario, error_json, exit_code, parse_values, run_experiment, run_sweep, ExperimentSpec, SweepParam,
};
use tvdopt::Error;

#[derive(Parser)]
#[command(version, about = "Run time-varying distributed optimization experiments")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the spec seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML experiment spec.
    Run { spec: PathBuf },
    /// Run a builtin scenario, or print its spec.
    Builtin {
        name: String,
        #[arg(long)]
        emit_spec: bool,
    },
    /// Run a spec once per value of one parameter.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn out_dir(cli_out: Option<PathBuf>, name: &str) -> PathBuf {
    cli_out.unwrap_or_else(|| PathBuf::from("out").join(name))
}

fn load(path: &std::path::Path, seed: Option<u64>) -> Result<ExperimentSpec, Error> {
    let mut spec = ExperimentSpec::load(path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Spec(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { spec } => {
            let spec = load(&spec, cli.seed)?;
            let dir = out_dir(cli.out, &spec.name);
            print_json(&run_experiment(&spec, &dir)?)
        }
        Command::Builtin { name, emit_spec } => {
            let mut spec = builtin_scenario(&name)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            if emit_spec {
                print!("{}", spec.to_toml()?);
                return Ok(());
            }
            let dir = out_dir(cli.out, &spec.name);
            print_json(&run_experiment(&spec, &dir)?)
        }
        Command::Sweep { spec, param, values } => {
            let spec = load(&spec, cli.seed)?;
            let param: SweepParam = param.parse()?;
            let values = parse_values(&values)?;
            spec.validate()?;
            let dir = out_dir(cli.out, &format!("{}_sweep_{}", spec.name, param.name()));
            let rows = run_sweep(&spec, param, &values, &dir)?;
            print_json(&rows)
        }
    }
}
