use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glancing_cli::commands::{
    run_classify, run_reflect, run_render, run_rfm_check, run_trace, Format, RunConfig, EXIT_USAGE,
};

/// Reflected flow maps and grazing sets for waves hitting convex obstacles.
#[derive(Parser)]
#[command(name = "glancing", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Order of tangency, hypothesis checks and regularity verdict; writes report.txt
    Classify(Common),
    /// Trace the grazing curve; writes curve.csv and/or curve.svg
    Trace(Common),
    /// Sample the reflected flow map for diffeomorphism evidence; writes rfm.csv
    RfmCheck(Common),
    /// Reflect the incoming ray at one boundary point; writes reflect.csv
    Reflect(Common),
    /// Render the grazing curve (and optionally its flowout) to curve.svg
    Render(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
    Both,
}

#[derive(Args)]
struct Common {
    /// Obstacle spec file
    #[arg(long)]
    obstacle: PathBuf,
    /// Incoming phase spec file
    #[arg(long)]
    phase: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Largest ray parameter
    #[arg(long, default_value_t = 1.0)]
    s0: f64,
    /// Number of flow-map samples
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    /// Half-width of the traced or sampled region around the apex
    #[arg(long, default_value_t = 0.3)]
    window: f64,
    /// Residual tolerance for tracing and the grazing margin for reflect
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Seed for random sampling
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output format for trace
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Boundary point x2,..,xn for reflect
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    /// Draw the incoming rays through the curve up to this parameter (render)
    #[arg(long, value_name = "S")]
    flowout: Option<f64>,
}

impl From<Common> for RunConfig {
    fn from(c: Common) -> Self {
        RunConfig {
            obstacle: c.obstacle,
            phase: c.phase,
            out: c.out,
            s0: c.s0,
            budget: c.budget,
            window: c.window,
            tol: c.tol,
            seed: c.seed,
            format: match c.format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Svg => Format::Svg,
                FormatArg::Both => Format::Both,
            },
            point: c.point,
            flowout: c.flowout,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Classify(c) => run_classify(&c.into()),
        Command::Trace(c) => run_trace(&c.into()),
        Command::RfmCheck(c) => run_rfm_check(&c.into()),
        Command::Reflect(c) => run_reflect(&c.into()),
        Command::Render(c) => run_render(&c.into()),
    };
    match result {
        Ok(outcome) => {
            // A closed pipe (`| head`) is not an error worth a panic.
            let mut out = std::io::stdout().lock();
            for line in outcome.lines {
                if writeln!(out, "{line}").is_err() {
                    break;
                }
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
