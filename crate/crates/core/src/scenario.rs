//! Scenario documents in TOML.
//!
//! ```toml
//! a = 0.9
//! sigma_w2 = 1.0
//! sigma_n2 = 1.0
//!
//! [[sensors]]
//! c = 1.0
//! sigma_v2 = 0.5
//! h = 0.8            # magnitude, or [re, im]
//! alpha = 1.0        # optional
//! distance = 40.0    # optional, fading runs
//! mu = 0.7           # optional, fading runs
//!
//! [fading]           # optional
//! variance = 1.0
//! path_loss_exponent = 2.0
//! ```
//!
//! Vector systems use nested row-major arrays:
//!
//! ```toml
//! A = [[0.9, 0.1], [0.0, 0.8]]
//! Q = [[1.0, 0.0], [0.0, 1.0]]
//! N = [[0.1]]
//! [[sensors]]
//! C = [[1.0, 0.0]]
//! R = [[0.5]]
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::fading::FadingModel;
use crate::model::{
    validate_scenario, ChannelRealization, NoiseModel, Scenario, Sensor, SystemModel,
};
use crate::vecext::{VectorSensor, VectorSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelEntry {
    Magnitude(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorEntry {
    pub c: f64,
    pub sigma_v2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<ChannelEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingEntry {
    #[serde(default = "one")]
    pub variance: f64,
    #[serde(default = "two")]
    pub path_loss_exponent: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub a: f64,
    pub sigma_w2: f64,
    pub sigma_n2: f64,
    pub sensors: Vec<SensorEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fading: Option<FadingEntry>,
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

impl ScenarioFile {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(parse_err)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(parse_err)
    }

    pub fn model(&self) -> Result<SystemModel> {
        SystemModel::new(self.a, self.sigma_w2)
    }

    pub fn sensor_list(&self) -> Vec<Sensor> {
        self.sensors
            .iter()
            .map(|s| Sensor::new(s.c, s.sigma_v2))
            .collect()
    }

    /// Channels as given; a missing `h` reads as magnitude 1. Mixing real and
    /// complex entries promotes everything to complex.
    pub fn channels(&self) -> ChannelRealization {
        let entries: Vec<ChannelEntry> = self
            .sensors
            .iter()
            .map(|s| s.h.unwrap_or(ChannelEntry::Magnitude(1.0)))
            .collect();
        if entries
            .iter()
            .all(|e| matches!(e, ChannelEntry::Magnitude(_)))
        {
            ChannelRealization::Magnitudes(
                entries
                    .iter()
                    .map(|e| match e {
                        ChannelEntry::Magnitude(h) => *h,
                        ChannelEntry::Complex(_) => unreachable!(),
                    })
                    .collect(),
            )
        } else {
            ChannelRealization::Complex(
                entries
                    .iter()
                    .map(|e| match e {
                        ChannelEntry::Magnitude(h) => Complex64::new(*h, 0.0),
                        ChannelEntry::Complex([re, im]) => Complex64::new(*re, *im),
                    })
                    .collect(),
            )
        }
    }

    /// Validated scenario; collects every violation.
    pub fn scenario(&self) -> Result<Scenario> {
        let model = SystemModel {
            a: self.a,
            sigma_w2: self.sigma_w2,
        };
        let noise = NoiseModel {
            sigma_n2: self.sigma_n2,
        };
        validate_scenario(&model, &self.sensor_list(), &self.channels(), &noise)
    }

    /// Per-sensor amplifications if every sensor lists one.
    pub fn alphas(&self) -> Option<Vec<f64>> {
        self.sensors.iter().map(|s| s.alpha).collect()
    }

    /// Fading model from per-sensor `distance` and `mu`.
    pub fn fading_model(&self) -> Result<Option<FadingModel>> {
        let d: Option<Vec<f64>> = self.sensors.iter().map(|s| s.distance).collect();
        let mu: Option<Vec<f64>> = self.sensors.iter().map(|s| s.mu).collect();
        match (d, mu) {
            (Some(d), Some(mu)) => {
                let f = self.fading.clone().unwrap_or(FadingEntry {
                    variance: 1.0,
                    path_loss_exponent: 2.0,
                });
                Ok(Some(FadingModel::with_spread(
                    d,
                    mu,
                    f.variance,
                    f.path_loss_exponent,
                )?))
            }
            (None, None) if self.fading.is_none() => Ok(None),
            _ => Err(Error::InvalidScenario(vec![Violation::DimensionMismatch {
                field: "sensors[].distance / sensors[].mu".into(),
                expected: self.sensors.len(),
                got: self
                    .sensors
                    .iter()
                    .filter(|s| s.distance.is_some() && s.mu.is_some())
                    .count(),
            }])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorSensorEntry {
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorScenarioFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "N")]
    pub n: Vec<Vec<f64>>,
    pub sensors: Vec<VectorSensorEntry>,
}

/// Row-major nested array to a matrix.
pub fn matrix_from_rows(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Dimension(format!(
            "{name} must be a non-empty rectangular array"
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidScenario(vec![Violation::NonFinite {
            field: name.into(),
        }]));
    }
    Ok(DMatrix::from_row_iterator(
        r,
        c,
        rows.iter().flatten().copied(),
    ))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl VectorScenarioFile {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(parse_err)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(parse_err)
    }

    pub fn system(&self) -> Result<VectorSystem> {
        let sensors = self
            .sensors
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(VectorSensor {
                    c: matrix_from_rows(&s.c, &format!("sensors[{i}].C"))?,
                    r: matrix_from_rows(&s.r, &format!("sensors[{i}].R"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        VectorSystem::new(
            matrix_from_rows(&self.a, "A")?,
            matrix_from_rows(&self.q, "Q")?,
            sensors,
            matrix_from_rows(&self.n, "N")?,
        )
    }
}
