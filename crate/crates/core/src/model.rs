//! Domain model shared by every module: the scalar state process, the sensor
//! population, receiver noise, channel gains and transmit-power accounting.
//!
//! The state evolves as `x[k+1] = a x[k] + w[k]` and sensor `i` observes
//! `y[i,k] = c_i x[k] + v[i,k]`. Sensor `i` forwards `alpha_i * y[i,k]` over a
//! channel of magnitude `h_i`; the fusion center adds noise of variance
//! `sigma_n2` per real dimension.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Scalar linear dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub a: f64,
    pub sigma_w2: f64,
}

impl SystemModel {
    pub fn new(a: f64, sigma_w2: f64) -> Result<Self> {
        let mut v = Vec::new();
        check_finite("a", a, &mut v);
        check_positive("sigma_w2", sigma_w2, &mut v);
        if v.is_empty() {
            Ok(Self { a, sigma_w2 })
        } else {
            Err(Error::InvalidScenario(v))
        }
    }

    pub fn is_stable(&self) -> bool {
        self.a.abs() < 1.0
    }

    pub fn require_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::Unstable(self.a.abs()))
        }
    }

    /// `E[x^2] = sigma_w2 / (1 - a^2)` for the stationary process.
    pub fn stationary_state_variance(&self) -> Result<f64> {
        self.require_stable()?;
        Ok(self.sigma_w2 / (1.0 - self.a * self.a))
    }
}

/// One sensor: observation gain and measurement noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensor {
    pub c: f64,
    pub sigma_v2: f64,
}

impl Sensor {
    pub fn new(c: f64, sigma_v2: f64) -> Self {
        Self { c, sigma_v2 }
    }
}

/// Ordered, non-empty list of sensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensorSet {
    sensors: Vec<Sensor>,
}

impl SensorSet {
    pub fn new(sensors: Vec<Sensor>) -> Result<Self> {
        let v = sensor_violations(&sensors);
        if v.is_empty() {
            Ok(Self { sensors })
        } else {
            Err(Error::InvalidScenario(v))
        }
    }

    /// `M` copies of the same sensor.
    pub fn symmetric(m: usize, c: f64, sigma_v2: f64) -> Result<Self> {
        Self::new(vec![Sensor::new(c, sigma_v2); m])
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sensor> {
        self.sensors.iter()
    }

    pub fn as_slice(&self) -> &[Sensor] {
        &self.sensors
    }

    pub fn get(&self, i: usize) -> Option<&Sensor> {
        self.sensors.get(i)
    }
}

impl<'a> IntoIterator for &'a SensorSet {
    type Item = &'a Sensor;
    type IntoIter = std::slice::Iter<'a, Sensor>;

    fn into_iter(self) -> Self::IntoIter {
        self.sensors.iter()
    }
}

/// Receiver noise variance per real dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_n2: f64,
}

impl NoiseModel {
    pub fn new(sigma_n2: f64) -> Result<Self> {
        let mut v = Vec::new();
        check_positive("sigma_n2", sigma_n2, &mut v);
        if v.is_empty() {
            Ok(Self { sigma_n2 })
        } else {
            Err(Error::InvalidScenario(v))
        }
    }

    /// Noise-free fusion center; only scheme comparison accepts this.
    pub fn noiseless() -> Self {
        Self { sigma_n2: 0.0 }
    }
}

/// Channel gains for one time step.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelRealization {
    /// Beamformed magnitudes `h_i = |h~_i|` (CSI case).
    Magnitudes(Vec<f64>),
    /// Raw complex gains `h~_i`.
    Complex(Vec<Complex64>),
}

impl ChannelRealization {
    pub fn len(&self) -> usize {
        match self {
            ChannelRealization::Magnitudes(h) => h.len(),
            ChannelRealization::Complex(h) => h.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        match self {
            ChannelRealization::Magnitudes(h) => h.clone(),
            ChannelRealization::Complex(h) => h.iter().map(|g| g.norm()).collect(),
        }
    }
}

/// Real amplification factors `alpha_i`. With CSI the transmitted factor is
/// `alpha_i * conj(h~_i) / |h~_i|`, so only the real magnitude is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Amplification {
    pub alphas: Vec<f64>,
}

impl Amplification {
    pub fn new(alphas: Vec<f64>) -> Self {
        Self { alphas }
    }

    pub fn uniform(m: usize, alpha: f64) -> Self {
        Self {
            alphas: vec![alpha; m],
        }
    }
}

/// Free-function form of [`SystemModel::stationary_state_variance`].
pub fn stationary_state_variance(model: &SystemModel) -> Result<f64> {
    model.stationary_state_variance()
}

/// `kappa_i = c_i^2 sigma_w2 / (1 - a^2) + sigma_i^2`: the power spent per unit `alpha_i^2`.
pub fn power_factor(sensor: &Sensor, model: &SystemModel) -> Result<f64> {
    let ex2 = model.stationary_state_variance()?;
    Ok(sensor.c * sensor.c * ex2 + sensor.sigma_v2)
}

/// Transmit power `alpha^2 E[y^2]` of one sensor.
pub fn transmit_power(alpha: f64, sensor: &Sensor, model: &SystemModel) -> Result<f64> {
    Ok(alpha * alpha * power_factor(sensor, model)?)
}

/// A validated static scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: SystemModel,
    pub sensors: SensorSet,
    pub channels: ChannelRealization,
    pub noise: NoiseModel,
}

impl Scenario {
    pub fn m(&self) -> usize {
        self.sensors.len()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.channels.magnitudes()
    }
}

/// Checks every type invariant and returns either the scenario or the full
/// list of violations.
pub fn validate_scenario(
    model: &SystemModel,
    sensors: &[Sensor],
    channels: &ChannelRealization,
    noise: &NoiseModel,
) -> Result<Scenario> {
    let mut v = Vec::new();
    check_finite("a", model.a, &mut v);
    check_positive("sigma_w2", model.sigma_w2, &mut v);
    check_positive("sigma_n2", noise.sigma_n2, &mut v);
    v.extend(sensor_violations(sensors));
    v.extend(channel_violations(channels, sensors.len()));
    if !v.is_empty() {
        return Err(Error::InvalidScenario(v));
    }
    Ok(Scenario {
        model: *model,
        sensors: SensorSet {
            sensors: sensors.to_vec(),
        },
        channels: channels.clone(),
        noise: *noise,
    })
}

pub(crate) fn channel_violations(channels: &ChannelRealization, m: usize) -> Vec<Violation> {
    let mut v = Vec::new();
    if channels.len() != m {
        v.push(Violation::DimensionMismatch {
            field: "channels".into(),
            expected: m,
            got: channels.len(),
        });
    }
    match channels {
        ChannelRealization::Magnitudes(h) => {
            for (i, &g) in h.iter().enumerate() {
                if !g.is_finite() {
                    v.push(Violation::NonFinite {
                        field: format!("channels[{i}]"),
                    });
                } else if g < 0.0 {
                    v.push(Violation::NegativeMagnitude { index: i, value: g });
                }
            }
        }
        ChannelRealization::Complex(h) => {
            for (i, g) in h.iter().enumerate() {
                if !g.re.is_finite() || !g.im.is_finite() {
                    v.push(Violation::NonFinite {
                        field: format!("channels[{i}]"),
                    });
                }
            }
        }
    }
    v
}

fn sensor_violations(sensors: &[Sensor]) -> Vec<Violation> {
    let mut v = Vec::new();
    if sensors.is_empty() {
        v.push(Violation::NoSensors);
    }
    for (i, s) in sensors.iter().enumerate() {
        check_finite(&format!("sensors[{i}].c"), s.c, &mut v);
        check_positive(&format!("sensors[{i}].sigma_v2"), s.sigma_v2, &mut v);
    }
    v
}

fn check_finite(field: &str, x: f64, v: &mut Vec<Violation>) {
    if !x.is_finite() {
        v.push(Violation::NonFinite {
            field: field.to_string(),
        });
    }
}

fn check_positive(field: &str, x: f64, v: &mut Vec<Violation>) {
    if !x.is_finite() {
        v.push(Violation::NonFinite {
            field: field.to_string(),
        });
    } else if x <= 0.0 {
        v.push(Violation::NonpositiveVariance {
            field: field.to_string(),
            value: x,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> SystemModel {
        SystemModel::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn stationary_variance_examples() {
        assert_eq!(unit().stationary_state_variance().unwrap(), 1.0);
        let m = SystemModel::new(0.9, 1.0).unwrap();
        assert!((m.stationary_state_variance().unwrap() - 5.263158).abs() < 1e-6);
        let m = SystemModel::new(1.0, 1.0).unwrap();
        assert_eq!(m.stationary_state_variance(), Err(Error::Unstable(1.0)));
    }

    #[test]
    fn transmit_power_examples() {
        let s = Sensor::new(1.0, 1.0);
        assert_eq!(transmit_power(0.0, &s, &unit()).unwrap(), 0.0);
        assert_eq!(transmit_power(1.0, &s, &unit()).unwrap(), 2.0);
        let m = SystemModel::new(0.9, 1.0).unwrap();
        assert!((transmit_power(0.5, &s, &m).unwrap() - 1.565789).abs() < 1e-6);
        let m = SystemModel::new(-1.2, 1.0).unwrap();
        assert!(matches!(
            transmit_power(1.0, &s, &m),
            Err(Error::Unstable(_))
        ));
    }

    #[test]
    fn validate_accepts_consistent_scenario() {
        let s = validate_scenario(
            &SystemModel {
                a: 0.5,
                sigma_w2: 1.0,
            },
            &[Sensor::new(1.0, 1.0), Sensor::new(-0.5, 2.0)],
            &ChannelRealization::Magnitudes(vec![0.8, 0.3]),
            &NoiseModel { sigma_n2: 1.0 },
        )
        .unwrap();
        assert_eq!(s.m(), 2);
    }

    #[test]
    fn validate_reports_every_violation() {
        let err = validate_scenario(
            &SystemModel {
                a: f64::NAN,
                sigma_w2: 1.0,
            },
            &[Sensor::new(1.0, 0.0), Sensor::new(1.0, 1.0)],
            &ChannelRealization::Magnitudes(vec![1.0, 1.0, 1.0]),
            &NoiseModel { sigma_n2: 1.0 },
        )
        .unwrap_err();
        let Error::InvalidScenario(v) = err else {
            panic!("wrong error kind")
        };
        assert_eq!(v.len(), 3);
        let text: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        assert!(text.iter().any(|t| t.contains("nonpositive variance")));
        assert!(text.iter().any(|t| t.contains("dimension mismatch")));
        assert!(text.iter().any(|t| t.contains("non-finite")));
    }

    #[test]
    fn validate_rejects_zero_receiver_noise() {
        let err = validate_scenario(
            &unit(),
            &[Sensor::new(1.0, 1.0)],
            &ChannelRealization::Magnitudes(vec![1.0]),
            &NoiseModel::noiseless(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn complex_channel_magnitudes() {
        let ch = ChannelRealization::Complex(vec![Complex64::new(3.0, 4.0)]);
        assert_eq!(ch.magnitudes(), vec![5.0]);
    }
}
