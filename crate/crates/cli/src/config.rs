use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use snkf_core::Scheme;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Fig1,
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Fig5,
        Experiment::Fig6,
    ];

    pub fn default_grid(self) -> Vec<usize> {
        match self {
            Experiment::Fig1 => (1..=100).collect(),
            Experiment::Fig2 => (2..=100).step_by(2).collect(),
            _ => (5..=50).step_by(5).collect(),
        }
    }

    pub fn default_realizations(self) -> usize {
        match self {
            Experiment::Fig1 => 1,
            Experiment::Fig2 => 100,
            Experiment::Fig3 | Experiment::Fig4 => 1000,
            Experiment::Fig5 | Experiment::Fig6 => 100,
        }
    }

    pub fn default_steps(self) -> usize {
        match self {
            Experiment::Fig5 | Experiment::Fig6 => 1000,
            _ => 0,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Fig6 => "fig6",
        };
        f.write_str(s)
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| {
                CliError::Config(format!("unknown experiment '{s}' (expected fig1..fig6)"))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Csi {
    Full,
    None,
}

impl FromStr for Csi {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "full" => Ok(Csi::Full),
            "none" => Ok(Csi::None),
            _ => Err(CliError::Config(format!(
                "unknown CSI mode '{s}' (expected full or none)"
            ))),
        }
    }
}

/// `D=<v>` (covariance target) or `P=<v>` (total power budget).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ConstraintArg {
    #[serde(rename = "D")]
    MaxCovariance(f64),
    #[serde(rename = "P")]
    TotalPower(f64),
}

impl FromStr for ConstraintArg {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || {
            CliError::Config(format!(
                "constraint '{s}' must look like D=<value> or P=<value>"
            ))
        };
        let (k, v) = s.split_once('=').ok_or_else(bad)?;
        let v: f64 = v.trim().parse().map_err(|_| bad())?;
        if !v.is_finite() || v <= 0.0 {
            return Err(CliError::Config(format!(
                "constraint value must be positive, got {v}"
            )));
        }
        match k.trim() {
            "D" | "d" => Ok(ConstraintArg::MaxCovariance(v)),
            "P" | "p" => Ok(ConstraintArg::TotalPower(v)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ConstraintArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintArg::MaxCovariance(d) => write!(f, "D={d}"),
            ConstraintArg::TotalPower(p) => write!(f, "P={p}"),
        }
    }
}

/// `a:b:step` (inclusive), `a:b` (step 1), or a single `M`.
pub fn parse_grid(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Config(format!("M grid '{s}' must look like a:b:step"));
    let parts: Vec<usize> = s
        .split(':')
        .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let (a, b, step) = match parts[..] {
        [m] => (m, m, 1),
        [a, b] => (a, b, 1),
        [a, b, step] => (a, b, step),
        _ => return Err(bad()),
    };
    if a == 0 || step == 0 || b < a {
        return Err(CliError::Config(format!(
            "M grid '{s}' must satisfy 1 <= a <= b and step >= 1"
        )));
    }
    Ok((a..=b).step_by(step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub m_grid: Vec<usize>,
    pub realizations: usize,
    pub steps: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        Self {
            experiment,
            m_grid: experiment.default_grid(),
            realizations: experiment.default_realizations(),
            steps: experiment.default_steps(),
            seed,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.m_grid.is_empty() || self.m_grid.contains(&0) {
            return Err(CliError::Config(
                "M grid must be nonempty with M >= 1".into(),
            ));
        }
        if self.realizations == 0 {
            return Err(CliError::Config("realization count must be >= 1".into()));
        }
        if matches!(self.experiment, Experiment::Fig5 | Experiment::Fig6) && self.steps == 0 {
            return Err(CliError::Config("step count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Flags shared by the custom commands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandConfig {
    pub command: String,
    pub scenario: Option<PathBuf>,
    #[serde(serialize_with = "scheme_opt")]
    pub scheme: Option<Scheme>,
    pub csi: Csi,
    pub constraint: Option<ConstraintArg>,
    pub m_grid: Option<Vec<usize>>,
    pub steps: usize,
    pub seed: u64,
}

fn scheme_opt<S: serde::Serializer>(s: &Option<Scheme>, ser: S) -> Result<S::Ok, S::Error> {
    match s {
        Some(s) => ser.serialize_some(&s.to_string()),
        None => ser.serialize_none(),
    }
}
