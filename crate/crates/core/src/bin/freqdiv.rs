use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use freqdiv::cli::{self, Command, Overrides, EXIT_CONFIG, EXIT_NUMERICAL};
use freqdiv::dynamics::Method;

#[derive(Parser)]
#[command(name = "freqdiv", version, about = "Lindblad simulator for a three-body microwave frequency divider")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run description; defaults to the standard parameters when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fock levels kept in every resonator.
    #[arg(long, global = true)]
    truncation: Option<usize>,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Time series from the ground state (simulate or amplitude-study).
    Simulate,
    /// Conversion-efficiency sweep (detuning-sweep or coupling-sweep).
    Sweep,
    /// Steady state and conversion efficiency of one parameter set.
    Steady,
    /// Square-pulse trains over pulse widths and intervals.
    Pulse,
    /// Self-checks against closed forms and the exact propagator.
    Validate,
}

#[derive(ValueEnum, Clone, Copy)]
enum MethodArg {
    Rk4,
    Rk45,
    Expm,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Rk4 => Method::Rk4,
            MethodArg::Rk45 => Method::Rk45,
            MethodArg::Expm => Method::Expm,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Sweep => Command::Sweep,
        Cmd::Steady => Command::Steady,
        Cmd::Pulse => Command::Pulse,
        Cmd::Validate => Command::Validate,
    };
    if command == Command::Validate {
        let checks = cli::run_validation();
        for c in &checks {
            println!("{c}");
        }
        let ok = checks.iter().all(|c| c.passed);
        return ExitCode::from(if ok { 0 } else { EXIT_NUMERICAL as u8 });
    }
    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: cannot read config {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => None,
    };
    let overrides = Overrides { out: args.out, truncation: args.truncation, method: args.method.map(Method::from) };
    let result = cli::resolve(command, text.as_deref(), &overrides).and_then(|cfg| cli::run(command, &cfg));
    match result {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            for path in &report.outputs {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
