use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use snkf::config::parse_grid;
use snkf::output::write_or_print;
use snkf::{
    commands, reproduce_csv, CliError, CommandConfig, ConstraintArg, Csi, Experiment,
    ExperimentConfig,
};
use snkf_core::Scheme;

#[derive(Parser)]
#[command(
    name = "snkf",
    version,
    about = "Kalman filtering over wireless sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// mac or orth.
    #[arg(long)]
    scheme: Option<String>,
    /// full or none.
    #[arg(long, default_value = "full")]
    csi: String,
    /// D=<covariance target> or P=<total power budget>.
    #[arg(long)]
    constraint: Option<String>,
    /// a:b:step, a:b or a single M.
    #[arg(long)]
    m_grid: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Regenerate figure datasets. With --out, writes <out>/<dataset>.csv.
    Reproduce {
        /// fig1 .. fig6, or all.
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        realizations: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Steady-state SNR and covariance for the scenario's amplifications.
    SteadyState(Common),
    /// Exact and leading-order covariance for a symmetric scenario.
    Asymptotics(Common),
    /// Optimal amplifications for a scenario or a bare problem file.
    Allocate(Common),
    /// Run the filter on simulated data.
    Simulate(Common),
}

fn reproduce(experiment: &str, realizations: Option<usize>, c: &Common) -> Result<(), CliError> {
    let experiments: Vec<Experiment> = if experiment == "all" {
        Experiment::ALL.to_vec()
    } else {
        vec![experiment.parse()?]
    };
    for e in experiments {
        let mut cfg = ExperimentConfig::new(e, c.seed);
        if let Some(g) = &c.m_grid {
            cfg.m_grid = parse_grid(g)?;
        }
        if let Some(r) = realizations {
            cfg.realizations = r;
        }
        if let Some(s) = c.steps {
            cfg.steps = s;
        }
        for (name, csv) in reproduce_csv(&cfg)? {
            let path = c.out.as_ref().map(|dir| dir.join(format!("{name}.csv")));
            write_or_print(path.as_deref(), &csv)?;
        }
    }
    Ok(())
}

fn custom(name: &str, c: &Common) -> Result<(), CliError> {
    let cfg = CommandConfig {
        command: name.to_string(),
        scenario: c.scenario.clone(),
        scheme: c.scheme.as_deref().map(str::parse::<Scheme>).transpose()?,
        csi: c.csi.parse::<Csi>()?,
        constraint: c
            .constraint
            .as_deref()
            .map(str::parse::<ConstraintArg>)
            .transpose()?,
        m_grid: c.m_grid.as_deref().map(parse_grid).transpose()?,
        steps: c.steps.unwrap_or(100),
        seed: c.seed,
    };
    write_or_print(c.out.as_deref(), &commands::run_command(&cfg)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Reproduce {
            experiment,
            realizations,
            common,
        } => reproduce(experiment, *realizations, common),
        Command::SteadyState(c) => custom("steady-state", c),
        Command::Asymptotics(c) => custom("asymptotics", c),
        Command::Allocate(c) => custom("allocate", c),
        Command::Simulate(c) => custom("simulate", c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
