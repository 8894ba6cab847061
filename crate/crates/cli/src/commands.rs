//! Commands that run on a user-supplied scenario file.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use snkf_core::alloc::{
    self, build_static_problem, AllocationProblem, AllocationSolution, Constraint, Objective,
    StaticConstraint,
};
use snkf_core::asymptotics::{
    asympt_mac_noscale, asympt_mac_scaled, asympt_orth_noscale, asympt_orth_scaled_limit,
    exact_symmetric, Scaling, SymmetricParams,
};
use snkf_core::fading::{simulate_greedy, GreedyRunConfig, StepConstraint};
use snkf_core::kalman::{
    run_filter, snr, steady_state_from_snr, AmplificationSchedule, FilterConfig, MeasurementSource,
};
use snkf_core::model::ChannelRealization;
use snkf_core::nocsi::{
    allocate_nocsi, mean_beamform_alphas, simulate_nocsi, ChannelStatistics, GainMode,
};
use snkf_core::scenario::ScenarioFile;
use snkf_core::{Scenario, Scheme};

use crate::config::{CommandConfig, ConstraintArg, Csi};
use crate::error::CliError;
use crate::output::{fmt_f64, header, sha256_hex};

pub const STEADY_STATE_COLUMNS: &str = "scheme,S,P_inf";
pub const ASYMPTOTICS_COLUMNS: &str = "M,scheme,scaling,exact,asymptotic";
pub const NOCSI_SIM_COLUMNS: &str = "k,P,sq_error";

/// Default grid of the `asymptotics` command.
pub const DEFAULT_ASYMPTOTICS_GRID: (usize, usize) = (1, 100);

/// Runs a custom command and returns its full output.
pub fn run_command(cfg: &CommandConfig) -> Result<String, CliError> {
    match cfg.command.as_str() {
        "steady-state" => steady_state(cfg),
        "asymptotics" => asymptotics(cfg),
        "allocate" => allocate(cfg),
        "simulate" => simulate(cfg),
        other => Err(CliError::Config(format!("unknown command '{other}'"))),
    }
}

fn scenario_path(cfg: &CommandConfig) -> Result<&Path, CliError> {
    cfg.scenario
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("{} needs --scenario <file>", cfg.command)))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn command_header(cfg: &CommandConfig, text: &str) -> Result<String, CliError> {
    header(
        cfg,
        cfg.seed,
        &[("scenario_sha256", sha256_hex(text.as_bytes()))],
    )
}

struct Loaded {
    file: ScenarioFile,
    scenario: Scenario,
    text: String,
}

fn load(cfg: &CommandConfig) -> Result<Loaded, CliError> {
    let text = read_text(scenario_path(cfg)?)?;
    let file = ScenarioFile::from_toml(&text)?;
    let scenario = file.scenario()?;
    Ok(Loaded {
        file,
        scenario,
        text,
    })
}

fn schemes(cfg: &CommandConfig) -> Vec<Scheme> {
    match cfg.scheme {
        Some(s) => vec![s],
        None => vec![Scheme::MultiAccess, Scheme::Orthogonal],
    }
}

fn static_constraint(c: ConstraintArg) -> StaticConstraint {
    match c {
        ConstraintArg::MaxCovariance(d) => StaticConstraint::MaxCovariance(d),
        ConstraintArg::TotalPower(g) => StaticConstraint::TotalPower(g),
    }
}

fn require_constraint(cfg: &CommandConfig) -> Result<ConstraintArg, CliError> {
    cfg.constraint.ok_or_else(|| {
        CliError::Config(format!("{} needs --constraint D=<v> or P=<v>", cfg.command))
    })
}

fn unit_alphas(l: &Loaded) -> Vec<f64> {
    l.file.alphas().unwrap_or_else(|| vec![1.0; l.scenario.m()])
}

fn steady_state(cfg: &CommandConfig) -> Result<String, CliError> {
    let l = load(cfg)?;
    let alphas = unit_alphas(&l);
    let h = l.scenario.magnitudes();
    let mut out = command_header(cfg, &l.text)?;
    writeln!(out, "{STEADY_STATE_COLUMNS}").unwrap();
    for scheme in schemes(cfg) {
        let s = snr(scheme, &alphas, &h, &l.scenario.sensors, &l.scenario.noise)?.snr;
        let p = steady_state_from_snr(s, &l.scenario.model)?;
        writeln!(out, "{scheme},{},{}", fmt_f64(s), fmt_f64(p)).unwrap();
    }
    Ok(out)
}

/// Shared parameters when every sensor has the same `c`, `sigma_v2` and `|h|`.
fn symmetric_params(l: &Loaded) -> Result<SymmetricParams, CliError> {
    let s = l.scenario.sensors.as_slice();
    let h = l.scenario.magnitudes();
    let same = s
        .iter()
        .all(|x| x.c == s[0].c && x.sigma_v2 == s[0].sigma_v2)
        && h.iter().all(|&x| x == h[0]);
    if !same {
        return Err(CliError::Config(
            "asymptotics needs sensors with identical c, sigma_v2 and |h|".into(),
        ));
    }
    Ok(SymmetricParams::new(
        s[0].c,
        s[0].sigma_v2,
        h[0],
        l.scenario.model,
        l.scenario.noise.sigma_n2,
    )?)
}

fn asymptotics(cfg: &CommandConfig) -> Result<String, CliError> {
    let l = load(cfg)?;
    let p = symmetric_params(&l)?;
    let grid = cfg
        .m_grid
        .clone()
        .unwrap_or_else(|| (DEFAULT_ASYMPTOTICS_GRID.0..=DEFAULT_ASYMPTOTICS_GRID.1).collect());
    let orth_limit = asympt_orth_scaled_limit(&p)?;
    let mut out = command_header(cfg, &l.text)?;
    writeln!(out, "{ASYMPTOTICS_COLUMNS}").unwrap();
    for &m in &grid {
        for scheme in schemes(cfg) {
            for (scaling, label) in [(Scaling::None, "none"), (Scaling::InvSqrtM, "inv_sqrt_m")] {
                let exact = exact_symmetric(m, &p, scheme, scaling)?;
                let asym = match (scheme, scaling) {
                    (Scheme::MultiAccess, Scaling::None) => asympt_mac_noscale(m, &p)?,
                    (Scheme::Orthogonal, Scaling::None) => asympt_orth_noscale(m, &p)?,
                    (Scheme::MultiAccess, Scaling::InvSqrtM) => asympt_mac_scaled(m, &p)?,
                    (Scheme::Orthogonal, Scaling::InvSqrtM) => orth_limit.at(m),
                };
                writeln!(
                    out,
                    "{m},{scheme},{label},{},{}",
                    fmt_f64(exact),
                    fmt_f64(asym)
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}

/// A bare allocation problem: `scheme`, the per-sensor constants and either
/// `budget` or the target pair `x`, `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    pub kappa: Vec<f64>,
    pub rho: Vec<f64>,
    pub tau: Vec<f64>,
    pub sigma_n2: f64,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub x: Option<f64>,
    #[serde(default)]
    pub y: Option<f64>,
}

fn default_scheme() -> Scheme {
    Scheme::MultiAccess
}

impl ProblemFile {
    pub fn problem(&self) -> Result<AllocationProblem, CliError> {
        let (minimize_power, c) = match (self.budget, self.x, self.y) {
            (Some(g), None, None) => (false, Constraint::Budget(g)),
            (None, Some(x), Some(y)) => (true, Constraint::Target { x, y }),
            _ => {
                return Err(CliError::Config(
                    "problem file needs either `budget` or both `x` and `y`".into(),
                ))
            }
        };
        Ok(AllocationProblem::new(
            Objective::new(self.scheme, minimize_power),
            self.kappa.clone(),
            self.rho.clone(),
            self.tau.clone(),
            self.sigma_n2,
            c,
        )?)
    }
}

#[derive(Serialize)]
struct AllocationReport<'a> {
    alphas: &'a [f64],
    #[serde(flatten)]
    solution: &'a AllocationSolution,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_inf: Option<f64>,
}

fn report(solution: &AllocationSolution, p_inf: Option<f64>) -> Result<String, CliError> {
    toml::to_string(&AllocationReport {
        alphas: &solution.alphas,
        solution,
        p_inf,
    })
    .map_err(|e| CliError::Config(e.to_string()))
}

fn complex_channels(ch: &ChannelRealization) -> Vec<Complex64> {
    match ch {
        ChannelRealization::Magnitudes(h) => h.iter().map(|&h| Complex64::new(h, 0.0)).collect(),
        ChannelRealization::Complex(h) => h.clone(),
    }
}

fn allocate(cfg: &CommandConfig) -> Result<String, CliError> {
    let text = read_text(scenario_path(cfg)?)?;
    let head = command_header(cfg, &text)?;
    let scenario_doc = ScenarioFile::from_toml(&text);
    if scenario_doc.is_err() {
        if let Ok(pf) = toml::from_str::<ProblemFile>(&text) {
            let solution = alloc::solve(&pf.problem()?)?;
            return Ok(head + &report(&solution, None)?);
        }
    }
    let file = scenario_doc?;
    let sc = file.scenario()?;
    let constraint = static_constraint(require_constraint(cfg)?);
    let scheme = cfg.scheme.unwrap_or(Scheme::MultiAccess);
    let body = match cfg.csi {
        Csi::Full => {
            let problem = build_static_problem(
                &sc.model,
                &sc.sensors,
                &sc.magnitudes(),
                &sc.noise,
                constraint,
                scheme,
            )?;
            let solution = alloc::solve(&problem)?;
            let p = steady_state_from_snr(solution.snr, &sc.model)?;
            report(&solution, Some(p))?
        }
        Csi::None => {
            let stats = match file.fading_model()? {
                Some(f) => ChannelStatistics::from_fading(&f),
                None => ChannelStatistics::deterministic(&complex_channels(&sc.channels)),
            };
            let a = allocate_nocsi(
                &sc.model,
                &sc.sensors,
                &stats,
                &sc.noise,
                constraint,
                scheme,
            )?;
            report(&a.solution, Some(a.p_inf))?
        }
    };
    Ok(head + &body)
}

fn simulate(cfg: &CommandConfig) -> Result<String, CliError> {
    if cfg.steps == 0 {
        return Err(CliError::Config("simulate needs --steps >= 1".into()));
    }
    let l = load(cfg)?;
    let sc = &l.scenario;
    let scheme = cfg.scheme.unwrap_or(Scheme::MultiAccess);
    let mut out = command_header(cfg, &l.text)?;
    let mut buf = Vec::new();
    match (l.file.fading_model()?, cfg.csi) {
        (Some(fading), Csi::Full) => {
            let step = match require_constraint(cfg)? {
                ConstraintArg::MaxCovariance(d) => StepConstraint::MaxCovariance(d),
                ConstraintArg::TotalPower(g) => StepConstraint::TotalPower(g),
            };
            let gc = GreedyRunConfig::new(cfg.steps, step, scheme, cfg.seed);
            let run = simulate_greedy(&sc.model, &sc.sensors, &sc.noise, &fading, &gc)?;
            writeln!(out, "# infeasible_steps={}", run.infeasible_steps).unwrap();
            run.trace.write_csv_with_feasibility(&mut buf)?;
        }
        (Some(fading), Csi::None) => {
            let stats = ChannelStatistics::from_fading(&fading);
            let alphas = match cfg.constraint {
                Some(c) => {
                    allocate_nocsi(
                        &sc.model,
                        &sc.sensors,
                        &stats,
                        &sc.noise,
                        static_constraint(c),
                        scheme,
                    )?
                    .alphas
                }
                None => mean_beamform_alphas(&unit_alphas(&l), &stats)?,
            };
            let run = simulate_nocsi(
                &sc.model,
                &sc.sensors,
                &sc.noise,
                &fading,
                &alphas,
                scheme,
                cfg.steps,
                cfg.seed,
                0,
                GainMode::Mmse,
            )?;
            writeln!(out, "{NOCSI_SIM_COLUMNS}").unwrap();
            for (k, (p, e)) in run.p.iter().zip(&run.sq_errors).enumerate() {
                writeln!(out, "{k},{},{}", fmt_f64(*p), fmt_f64(*e)).unwrap();
            }
        }
        (None, Csi::None) => {
            return Err(CliError::Config(
                "--csi none needs per-sensor distance and mu in the scenario".into(),
            ))
        }
        (None, Csi::Full) => {
            let alphas = match cfg.constraint {
                Some(c) => {
                    let problem = build_static_problem(
                        &sc.model,
                        &sc.sensors,
                        &sc.magnitudes(),
                        &sc.noise,
                        static_constraint(c),
                        scheme,
                    )?;
                    alloc::solve(&problem)?.alphas
                }
                None => unit_alphas(&l),
            };
            let trace = run_filter(
                sc,
                &AmplificationSchedule::Static(alphas),
                &MeasurementSource::Simulate { seed: cfg.seed },
                &FilterConfig::new(scheme, cfg.steps),
            )?;
            trace.write_csv(&mut buf)?;
        }
    }
    out.push_str(&String::from_utf8(buf).expect("CSV is UTF-8"));
    Ok(out)
}
