use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use convdom::config::{GroupSpec, OperatorSpec};
use convdom::{run, Experiment, ExperimentConfig, RunError, RunResult};

/// Convolution-dominated operator experiments.
#[derive(Debug, Parser)]
#[command(name = "convdom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed for random instances; recorded in every report.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Comma-separated window radii, increasing.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    window_radius: Option<Vec<usize>>,

    /// Directory for report.jsonl, profile.csv and summary.txt.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Named operator, used when no configuration is given.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Group line such as "Z^d d=2" or "Rd_grid d=1 q=4".
    #[arg(long, global = true, value_name = "SPEC")]
    group: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// cd norm, operator norm and decay profile of the operator.
    Norms,
    /// Products, actions and adjoints against dense matrices.
    MultiplyCheck,
    /// Finite-section inverses over growing windows.
    Invert,
    /// r_n = ‖Aⁿ‖^{1/n} against the operator spectral radius.
    Spectral,
    /// Følner sets with atom-level certificates.
    Folner,
    /// Overlap counts against their bound; block diagonal coincidence.
    Overlap,
    /// Isometry, homomorphism and intertwiner checks of the representation.
    Intertwine,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Norms => Experiment::Norms,
            Command::MultiplyCheck => Experiment::MultiplyCheck,
            Command::Invert => Experiment::Invert,
            Command::Spectral => Experiment::Spectral,
            Command::Folner => Experiment::Folner,
            Command::Overlap => Experiment::Overlap,
            Command::Intertwine => Experiment::Intertwine,
        }
    }
}

fn config(cli: &Cli) -> RunResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(cli.command.into()),
    };
    cfg.experiment = cli.command.into();
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = &cli.window_radius {
        cfg.window.radii = r.clone();
    }
    if let Some(p) = &cli.preset {
        cfg.operator = Some(OperatorSpec { preset: Some(p.clone()), ..OperatorSpec::default() });
    }
    if let Some(g) = &cli.group {
        cfg.group = Some(g.parse::<GroupSpec>()?);
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = Some(o.clone());
    }
    Ok(cfg)
}

fn main_inner(cli: &Cli) -> RunResult<i32> {
    let cfg = config(cli)?;
    let outcome = run(&cfg)?;
    match &cfg.output.dir {
        Some(dir) => {
            outcome.report.write(&cfg.resolve(dir))?;
            print!("{}", outcome.report.summary_text());
        }
        None => {
            print!("{}", outcome.report.records_text());
            eprint!("{}", outcome.report.summary_text());
        }
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match main_inner(&cli) {
        Ok(code) => code,
        Err(e @ RunError::Io(_)) | Err(e) => {
            eprintln!("convdom: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
