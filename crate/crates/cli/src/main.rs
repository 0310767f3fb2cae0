//! `fqg` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fqg::diagnostics::FitMode;
use fqg::harness::{self, output, parse_config, presets, read_snapshot, RunConfig};
use fqg::Error;

#[derive(Parser)]
#[command(name = "fqg", version, about = "Decay experiments for fractionally dissipative SQG and Boussinesq flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Run a frozen acceptance experiment, e.g. `acceptance:sqg_decay`.
    Preset {
        /// Preset name; omit to list the available presets.
        name: Option<String>,
    },
    /// Print the header and field statistics of a snapshot.
    SnapshotInfo { path: PathBuf },
    /// Fit decay exponents to the norm columns of a series CSV.
    Fit {
        series: PathBuf,
        #[arg(long, value_enum, default_value = "log1p-t")]
        mode: Mode,
        /// Regression window `t_min,t_max`; defaults to the last 60% of samples with t >= 1.
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
        /// Field label written in the first column.
        #[arg(long, default_value = "z")]
        field: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Log1pT,
    Tau,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `t_min,t_max`")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    if a < b {
        Ok((a, b))
    } else {
        Err("t_min must be below t_max".into())
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() || matches!(e, Error::Io(_)) {
        2
    } else {
        3
    }
}

fn execute(cfg: &RunConfig) -> fqg::Result<()> {
    let outcome = harness::run_experiment(cfg, &harness::output_root())?;
    println!("wrote {}", outcome.dir.display());
    for row in &outcome.fits {
        match &row.fit {
            Ok(f) => println!(
                "{:>6} {:<15} exponent {:+.4}  r2 {:.4}  window [{}, {}]",
                row.field, row.quantity, f.exponent, f.r_squared, f.window.0, f.window.1
            ),
            Err(msg) => println!("{:>6} {:<15} {msg}", row.field, row.quantity),
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> fqg::Result<()> {
    match cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)?;
            execute(&parse_config(&text)?)
        }
        Command::Preset { name: None } => {
            for n in presets::names() {
                println!("{n}");
            }
            Ok(())
        }
        Command::Preset { name: Some(name) } => execute(&presets::preset(&name)?),
        Command::SnapshotInfo { path } => {
            let snap = read_snapshot(&path)?;
            let g = snap.grid();
            println!("variant {}", snap.variant.name());
            println!("alpha {}", snap.alpha);
            println!("beta {}", snap.beta);
            println!("n {}", g.n());
            println!("box {}", g.box_length());
            println!("time {}", snap.time);
            for (name, f) in &snap.fields {
                let (lo, hi) = f.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                println!("field {} mass {:.16e} min {:.16e} max {:.16e}", name.name(), f.mass(), lo, hi);
            }
            Ok(())
        }
        Command::Fit { series, mode, window, field } => {
            let records = output::parse_series_csv(&std::fs::read_to_string(&series)?)?;
            let mode = match mode {
                Mode::Log1pT => FitMode::Log1pT,
                Mode::Tau => FitMode::Tau,
            };
            print!("{}", output::fit_csv(&output::fit_series(&field, &records, mode, window)));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
