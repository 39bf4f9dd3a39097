use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use reservoir_dyn::cli::{load_scenario, preset, run_to_dir, Command, RunOptions, Z0Sweep};
use reservoir_dyn::force::FmDenominator;
use reservoir_dyn::{Error, Result};

#[derive(Parser)]
#[command(name = "reservoir-dyn", version, about = "Non-Markovian atom dynamics and transient Casimir-Polder forces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario file (`key = value` lines).
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario's time step count.
    #[arg(long)]
    n_steps: Option<usize>,
    /// Also write an SVG per CSV.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    z0_min: Option<f64>,
    #[arg(long)]
    z0_max: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
}

impl SweepArgs {
    fn resolve(&self, d: Z0Sweep) -> Z0Sweep {
        Z0Sweep {
            z0_min: self.z0_min.unwrap_or(d.z0_min),
            z0_max: self.z0_max.unwrap_or(d.z0_max),
            count: self.count.unwrap_or(d.count),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Denominator {
    HalfGamma,
    FullGamma,
}

#[derive(Subcommand)]
enum Cmd {
    /// Atomic amplitude from the Volterra solve.
    Population {
        #[command(flatten)]
        c: Common,
        /// Add FM and PM population columns.
        #[arg(long)]
        markov: bool,
    },
    /// Exact force with the FM, PM2 and FM2 approximations.
    Force {
        #[command(flatten)]
        c: Common,
        #[arg(long, value_enum, default_value = "half-gamma")]
        fm_denominator: Denominator,
    },
    /// Long-time Casimir-Polder force across heights (fixed dipole).
    CpAsymptotic {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Ground-state pole, residue and asymptotic force.
    Poles {
        #[command(flatten)]
        c: Common,
    },
    MarkovSummary {
        #[command(flatten)]
        c: Common,
    },
    GreensDump {
        #[command(flatten)]
        c: Common,
    },
    SpectralDump {
        #[command(flatten)]
        c: Common,
    },
    /// Coupling, decay rate and ground shift across heights (fixed dipole).
    SweepZ0 {
        #[command(flatten)]
        c: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Run a built-in preset (fig2..fig9) into <out>/figN.
    Reproduce {
        fig: String,
        #[command(flatten)]
        out: OutArgs,
    },
}

const CP_SWEEP: Z0Sweep = Z0Sweep { z0_min: 0.5, z0_max: 1.0, count: 6 };
const G_SWEEP: Z0Sweep = Z0Sweep { z0_min: 0.1, z0_max: 1.0, count: 10 };

fn run(cli: Cli) -> Result<()> {
    let (c, cmd) = match cli.cmd {
        Cmd::Reproduce { fig, out } => {
            let n: u32 = fig
                .strip_prefix("fig")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Config(format!("expected figN, got `{fig}`")))?;
            let (s, cmd) = preset(n)?;
            let opts = RunOptions { n_steps: out.n_steps };
            run_to_dir(&cmd, &s, &opts, &out.out.join(&fig), out.plot)?;
            return Ok(());
        }
        Cmd::Population { c, markov } => (c, Command::Population { markov }),
        Cmd::Force { c, fm_denominator } => {
            let denominator = match fm_denominator {
                Denominator::HalfGamma => FmDenominator::HalfGamma,
                Denominator::FullGamma => FmDenominator::FullGamma,
            };
            (c, Command::Force { denominator })
        }
        Cmd::CpAsymptotic { c, sweep } => (c, Command::CpAsymptotic(sweep.resolve(CP_SWEEP))),
        Cmd::Poles { c } => (c, Command::Poles),
        Cmd::MarkovSummary { c } => (c, Command::MarkovSummary),
        Cmd::GreensDump { c } => (c, Command::GreensDump),
        Cmd::SpectralDump { c } => (c, Command::SpectralDump),
        Cmd::SweepZ0 { c, sweep } => (c, Command::SweepZ0(sweep.resolve(G_SWEEP))),
    };
    let s = load_scenario(&c.scenario)?;
    let opts = RunOptions { n_steps: c.out.n_steps };
    run_to_dir(&cmd, &s, &opts, &c.out.out, c.out.plot)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: 2: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.exit_code(), e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
