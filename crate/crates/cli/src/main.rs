use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use carfollow_cli::{CliError, FreqArgs, SimulateArgs, SweepArgs};

/// Nonlinear adaptive cruise control simulator.
#[derive(Parser)]
#[command(name = "carfollow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace as CSV.
    Simulate {
        /// Built-in scenario name (fig4, fig4-linear, ..., fig10b).
        #[arg(long)]
        scenario: Option<String>,
        /// Key-value scenario file; defaults to $CARFOLLOW_CONFIG.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a plot.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// nonlinear | linear
        #[arg(long)]
        controller: Option<String>,
        /// ideal | disturbed | lag | physics
        #[arg(long)]
        plant: Option<String>,
        /// predecessor | follower
        #[arg(long)]
        range_policy: Option<String>,
    },
    /// Plant and string stability over a (k1, k2) grid.
    Sweep {
        /// Comma-separated headways [s].
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.5, 0.4, 0.2])]
        t_h: Vec<f64>,
        /// Gain window `lo:hi` [1/s]; the lower end is excluded.
        #[arg(long, default_value = "0:4", value_parser = carfollow_cli::parse_range)]
        k1_range: (f64, f64),
        #[arg(long, default_value = "0:4", value_parser = carfollow_cli::parse_range)]
        k2_range: (f64, f64),
        /// Cells per axis.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Speed amplification magnitude of the linearized loop.
    Freq {
        #[arg(long)]
        k1: f64,
        #[arg(long)]
        k2: f64,
        #[arg(long)]
        t_h: f64,
        /// Add time-domain amplitude ratios at 0.02, 0.05, 0.1 and 0.2 Hz.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate the data and plots behind one figure.
    Reproduce {
        /// fig3 ... fig10
        #[arg(long)]
        figure: String,
        #[arg(long, default_value = "out")]
        outdir: PathBuf,
    },
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Simulate {
            scenario,
            config,
            out,
            svg,
            controller,
            plant,
            range_policy,
        } => carfollow_cli::simulate(&SimulateArgs {
            scenario,
            config,
            out,
            svg,
            controller,
            plant,
            range_policy,
        }),
        Command::Sweep {
            t_h,
            k1_range,
            k2_range,
            grid,
            out,
        } => carfollow_cli::sweep(&SweepArgs {
            t_h,
            k1_range,
            k2_range,
            grid,
            out,
        }),
        Command::Freq {
            k1,
            k2,
            t_h,
            oracle,
            out,
        } => carfollow_cli::freq(&FreqArgs {
            k1,
            k2,
            t_h,
            oracle,
            out,
        }),
        Command::Reproduce { figure, outdir } => carfollow_cli::reproduce(&figure, &outdir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
