//! Error-covariance recursions for the multi-access and orthogonal schemes.
//!
//! Both schemes reduce to the same scalar Riccati map once the received
//! signals are summarized by an SNR:
//!
//! ```text
//! P' = a^2 P / (1 + P S) + sigma_w2
//! ```
//!
//! with `S = c_bar^2 / r_bar` for the coherent multi-access sum and
//! `S^o = sum_i alpha_i^2 h_i^2 c_i^2 / (alpha_i^2 h_i^2 sigma_i^2 + sigma_n2)`
//! for orthogonal channels.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{power_factor, NoiseModel, Scenario, SensorSet, SystemModel};
use crate::rng;

/// Channel access scheme at the fusion center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[serde(rename = "mac")]
    MultiAccess,
    #[serde(rename = "orth")]
    Orthogonal,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::MultiAccess => f.write_str("mac"),
            Scheme::Orthogonal => f.write_str("orth"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mac" | "multi-access" => Ok(Scheme::MultiAccess),
            "orth" | "orthogonal" => Ok(Scheme::Orthogonal),
            other => Err(Error::Parse(format!("unknown scheme '{other}'"))),
        }
    }
}

/// The statistic through which the covariance recursion sees the sensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrDecomposition {
    pub scheme: Scheme,
    /// `sum alpha_i h_i c_i`; multi-access only.
    pub c_bar: Option<f64>,
    /// `sum alpha_i^2 h_i^2 sigma_i^2 + sigma_n2`; multi-access only.
    pub r_bar: Option<f64>,
    pub snr: f64,
}

fn check_lengths(alphas: &[f64], channels: &[f64], sensors: &SensorSet) -> Result<()> {
    if alphas.len() != sensors.len() || channels.len() != sensors.len() {
        return Err(Error::Dimension(format!(
            "{} alphas, {} channels, {} sensors",
            alphas.len(),
            channels.len(),
            sensors.len()
        )));
    }
    Ok(())
}

/// Multi-access SNR `S = c_bar^2 / r_bar`.
pub fn mac_snr(
    alphas: &[f64],
    channels: &[f64],
    sensors: &SensorSet,
    noise: &NoiseModel,
) -> Result<SnrDecomposition> {
    check_lengths(alphas, channels, sensors)?;
    let mut c_bar = 0.0;
    let mut r_bar = noise.sigma_n2;
    for ((&a, &h), s) in alphas.iter().zip(channels).zip(sensors) {
        c_bar += a * h * s.c;
        r_bar += a * a * h * h * s.sigma_v2;
    }
    if r_bar <= 0.0 {
        return Err(Error::DegenerateSnr);
    }
    Ok(SnrDecomposition {
        scheme: Scheme::MultiAccess,
        c_bar: Some(c_bar),
        r_bar: Some(r_bar),
        snr: c_bar * c_bar / r_bar,
    })
}

/// Orthogonal SNR, additive over sensors. A sensor with `alpha_i h_i = 0`
/// contributes nothing, including when `sigma_n2 = 0`.
pub fn orth_snr(
    alphas: &[f64],
    channels: &[f64],
    sensors: &SensorSet,
    noise: &NoiseModel,
) -> Result<SnrDecomposition> {
    check_lengths(alphas, channels, sensors)?;
    let mut snr = 0.0;
    for ((&a, &h), s) in alphas.iter().zip(channels).zip(sensors) {
        let g2 = a * a * h * h;
        if g2 == 0.0 {
            continue;
        }
        let r = g2 * s.sigma_v2 + noise.sigma_n2;
        if r <= 0.0 {
            return Err(Error::DegenerateSnr);
        }
        snr += g2 * s.c * s.c / r;
    }
    Ok(SnrDecomposition {
        scheme: Scheme::Orthogonal,
        c_bar: None,
        r_bar: None,
        snr,
    })
}

/// Dispatch on the scheme.
pub fn snr(
    scheme: Scheme,
    alphas: &[f64],
    channels: &[f64],
    sensors: &SensorSet,
    noise: &NoiseModel,
) -> Result<SnrDecomposition> {
    match scheme {
        Scheme::MultiAccess => mac_snr(alphas, channels, sensors, noise),
        Scheme::Orthogonal => orth_snr(alphas, channels, sensors, noise),
    }
}

/// One step of the multi-access recursion,
/// `P' = a^2 P r_bar / (c_bar^2 P + r_bar) + sigma_w2`.
pub fn riccati_step_mac(p: f64, c_bar: f64, r_bar: f64, model: &SystemModel) -> Result<f64> {
    if r_bar <= 0.0 {
        return Err(Error::DegenerateSnr);
    }
    if p < 0.0 {
        return Err(Error::Domain(format!("negative covariance {p}")));
    }
    let a2 = model.a * model.a;
    Ok(a2 * p * r_bar / (c_bar * c_bar * p + r_bar) + model.sigma_w2)
}

/// One step of the orthogonal recursion, `P' = a^2 P / (1 + P S^o) + sigma_w2`.
pub fn riccati_step_orth(p: f64, snr_o: f64, model: &SystemModel) -> f64 {
    riccati_step_snr(p, snr_o, model)
}

/// The shared SNR form of both recursions.
pub fn riccati_step_snr(p: f64, snr: f64, model: &SystemModel) -> f64 {
    model.a * model.a * p / (1.0 + p * snr) + model.sigma_w2
}

/// Steady-state covariance for a constant SNR (both schemes share the form).
///
/// For `S > 0` this is the positive root of `S P^2 - (a^2 - 1 + sigma_w2 S) P - sigma_w2 = 0`;
/// `S = 0` returns the open-loop value `sigma_w2 / (1 - a^2)`.
pub fn steady_state_from_snr(snr: f64, model: &SystemModel) -> Result<f64> {
    model.require_stable()?;
    if !(snr >= 0.0) {
        return Err(Error::Domain(format!(
            "SNR must be non-negative, got {snr}"
        )));
    }
    let a2 = model.a * model.a;
    let q = model.sigma_w2;
    if snr == 0.0 {
        return Ok(q / (1.0 - a2));
    }
    if snr.is_infinite() {
        return Ok(q);
    }
    let b = a2 - 1.0 + q * snr;
    let disc = (b * b + 4.0 * q * snr).sqrt();
    // The rationalized branch avoids cancellation when b < 0.
    if b >= 0.0 {
        Ok((b + disc) / (2.0 * snr))
    } else {
        Ok(2.0 * q / (disc - b))
    }
}

/// Amplifications applied over time.
#[derive(Debug, Clone, PartialEq)]
pub enum AmplificationSchedule {
    Static(Vec<f64>),
    PerStep(Vec<Vec<f64>>),
}

impl AmplificationSchedule {
    fn at(&self, k: usize) -> &[f64] {
        match self {
            AmplificationSchedule::Static(a) => a,
            AmplificationSchedule::PerStep(v) => &v[k],
        }
    }
}

/// What the fusion center receives at one step.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    /// Real part of the coherent multi-access sum.
    Mac(f64),
    /// Real parts of the per-sensor orthogonal channels.
    Orth(Vec<f64>),
}

/// Where measurements come from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementSource {
    /// Simulate the true state and all noises from a seed.
    Simulate { seed: u64 },
    /// Caller-supplied measurements, one per step.
    Provided(Vec<Measurement>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub scheme: Scheme,
    pub steps: usize,
    /// Initial prior covariance; defaults to the stationary state variance.
    pub p0: Option<f64>,
    /// Initial prior mean; 0 is the stationary mean.
    pub x0: f64,
}

impl FilterConfig {
    pub fn new(scheme: Scheme, steps: usize) -> Self {
        Self {
            scheme,
            steps,
            p0: None,
            x0: 0.0,
        }
    }
}

/// One row of a filter trace: prior estimate and covariance at time `k`
/// together with the powers spent at `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub k: usize,
    pub x_hat: f64,
    pub p: f64,
    pub powers: Vec<f64>,
    /// True state when the run was simulated.
    pub x_true: Option<f64>,
    /// Whether the per-step allocation met its target (greedy runs only).
    pub feasible: Option<bool>,
}

impl FilterStep {
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterTrace {
    pub scheme: Scheme,
    pub steps: Vec<FilterStep>,
}

impl FilterTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn covariances(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.p).collect()
    }

    /// Mean of `(x - x_hat)^2` over steps `from..`, when the true state is known.
    pub fn empirical_mse(&self, from: usize) -> Option<f64> {
        let errs: Vec<f64> = self.steps[from..]
            .iter()
            .map(|s| s.x_true.map(|x| (x - s.x_hat).powi(2)))
            .collect::<Option<_>>()?;
        Some(crate::stats::pairwise_sum(&errs) / errs.len() as f64)
    }

    fn m(&self) -> usize {
        self.steps.first().map_or(0, |s| s.powers.len())
    }

    /// CSV with header `k,x_hat,P,gamma_1,...,gamma_M`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        self.write_rows(w, false)
    }

    /// As [`write_csv`](Self::write_csv) plus `feasible,total_power` columns.
    pub fn write_csv_with_feasibility<W: Write>(&self, w: &mut W) -> io::Result<()> {
        self.write_rows(w, true)
    }

    fn write_rows<W: Write>(&self, w: &mut W, extended: bool) -> io::Result<()> {
        let m = self.m();
        write!(w, "k,x_hat,P")?;
        for i in 1..=m {
            write!(w, ",gamma_{i}")?;
        }
        if extended {
            write!(w, ",feasible,total_power")?;
        }
        writeln!(w)?;
        for s in &self.steps {
            write!(w, "{},{},{}", s.k, s.x_hat, s.p)?;
            for g in &s.powers {
                write!(w, ",{g}")?;
            }
            if extended {
                let f = s.feasible.unwrap_or(true);
                write!(w, ",{},{}", u8::from(f), s.total_power())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Runs the time-varying Kalman filter on a static-channel scenario.
///
/// The covariance sequence is exactly the Riccati iteration with the per-step
/// SNR; the estimate uses the standard gain consistent with that covariance.
pub fn run_filter(
    scenario: &Scenario,
    schedule: &AmplificationSchedule,
    source: &MeasurementSource,
    config: &FilterConfig,
) -> Result<FilterTrace> {
    let model = &scenario.model;
    model.require_stable()?;
    if config.steps == 0 {
        return Err(Error::Domain("steps must be >= 1".into()));
    }
    let m = scenario.m();
    if let AmplificationSchedule::PerStep(v) = schedule {
        if v.len() < config.steps {
            return Err(Error::Dimension(format!(
                "schedule has {} steps, {} requested",
                v.len(),
                config.steps
            )));
        }
    }
    if let MeasurementSource::Provided(z) = source {
        if z.len() < config.steps {
            return Err(Error::Dimension(format!(
                "{} measurements for {} steps",
                z.len(),
                config.steps
            )));
        }
    }
    let h = scenario.magnitudes();
    let kappa: Vec<f64> = scenario
        .sensors
        .iter()
        .map(|s| power_factor(s, model))
        .collect::<Result<_>>()?;
    let ex2 = model.stationary_state_variance()?;

    let mut sim = match source {
        MeasurementSource::Simulate { seed } => Some(Simulator::new(*seed, 0, ex2, m)),
        MeasurementSource::Provided(_) => None,
    };

    let mut p = config.p0.unwrap_or(ex2);
    let mut x_hat = config.x0;
    let mut steps = Vec::with_capacity(config.steps);
    for k in 0..config.steps {
        let alphas = schedule.at(k);
        if alphas.len() != m {
            return Err(Error::Dimension(format!(
                "step {k}: {} alphas for {m} sensors",
                alphas.len()
            )));
        }
        let powers: Vec<f64> = alphas
            .iter()
            .zip(&kappa)
            .map(|(a, kp)| a * a * kp)
            .collect();
        let x_true = sim.as_ref().map(|s| s.x);
        let z = match (&mut sim, source) {
            (Some(s), _) => s.measure(
                config.scheme,
                alphas,
                &h,
                &scenario.sensors,
                &scenario.noise,
            ),
            (None, MeasurementSource::Provided(z)) => z[k].clone(),
            (None, MeasurementSource::Simulate { .. }) => unreachable!(),
        };
        steps.push(FilterStep {
            k,
            x_hat,
            p,
            powers,
            x_true,
            feasible: None,
        });

        let (x_post, p_post) = correct(
            config.scheme,
            x_hat,
            p,
            &z,
            alphas,
            &h,
            &scenario.sensors,
            &scenario.noise,
        )?;
        x_hat = model.a * x_post;
        p = model.a * model.a * p_post + model.sigma_w2;
        if let Some(s) = &mut sim {
            s.advance(model);
        }
    }
    Ok(FilterTrace {
        scheme: config.scheme,
        steps,
    })
}

/// Measurement update. Returns the filtered mean and covariance.
#[allow(clippy::too_many_arguments)]
pub(crate) fn correct(
    scheme: Scheme,
    x_hat: f64,
    p: f64,
    z: &Measurement,
    alphas: &[f64],
    h: &[f64],
    sensors: &SensorSet,
    noise: &NoiseModel,
) -> Result<(f64, f64)> {
    let sn2 = noise.sigma_n2;
    match (scheme, z) {
        (Scheme::MultiAccess, Measurement::Mac(z)) => {
            let d = mac_snr(alphas, h, sensors, noise)?;
            let (c, r) = (d.c_bar.unwrap(), d.r_bar.unwrap());
            let s = c * c * p + r;
            let gain = p * c / s;
            Ok((x_hat + gain * (z - c * x_hat), p * r / s))
        }
        (Scheme::Orthogonal, Measurement::Orth(z)) => {
            if z.len() != alphas.len() {
                return Err(Error::Dimension(format!(
                    "{} orthogonal measurements for {} sensors",
                    z.len(),
                    alphas.len()
                )));
            }
            let mut info = 0.0;
            let mut weighted = 0.0;
            for (((&a, &g), s), &zi) in alphas.iter().zip(h).zip(sensors).zip(z) {
                let ci = a * g * s.c;
                let ri = a * a * g * g * s.sigma_v2 + sn2;
                if ri <= 0.0 {
                    return Err(Error::DegenerateSnr);
                }
                info += ci * ci / ri;
                weighted += ci / ri * (zi - ci * x_hat);
            }
            let p_post = p / (1.0 + p * info);
            Ok((x_hat + p_post * weighted, p_post))
        }
        _ => Err(Error::Domain(format!(
            "measurement kind does not match scheme {scheme}"
        ))),
    }
}

pub(crate) struct Simulator {
    pub(crate) x: f64,
    state_rng: rand_chacha::ChaCha8Rng,
    noise_rng: rand_chacha::ChaCha8Rng,
    sensor_rngs: Vec<rand_chacha::ChaCha8Rng>,
}

impl Simulator {
    pub(crate) fn new(seed: u64, realization: u64, ex2: f64, m: usize) -> Self {
        let mut state_rng = rng::stream(seed, realization, rng::purpose::STATE);
        let g: f64 = state_rng.sample(StandardNormal);
        Self {
            x: g * ex2.sqrt(),
            state_rng,
            noise_rng: rng::stream(seed, realization, rng::purpose::RECEIVER),
            sensor_rngs: (0..m as u64)
                .map(|i| rng::stream(seed, realization, rng::purpose::SENSOR_NOISE + i))
                .collect(),
        }
    }

    pub(crate) fn measure(
        &mut self,
        scheme: Scheme,
        alphas: &[f64],
        h: &[f64],
        sensors: &SensorSet,
        noise: &NoiseModel,
    ) -> Measurement {
        let sn = noise.sigma_n2.sqrt();
        let ys: Vec<f64> = sensors
            .iter()
            .zip(&mut self.sensor_rngs)
            .map(|(s, r)| {
                let v: f64 = r.sample(StandardNormal);
                s.c * self.x + v * s.sigma_v2.sqrt()
            })
            .collect();
        match scheme {
            Scheme::MultiAccess => {
                let n: f64 = self.noise_rng.sample(StandardNormal);
                let z: f64 = alphas
                    .iter()
                    .zip(h)
                    .zip(&ys)
                    .map(|((a, g), y)| a * g * y)
                    .sum();
                Measurement::Mac(z + sn * n)
            }
            Scheme::Orthogonal => Measurement::Orth(
                alphas
                    .iter()
                    .zip(h)
                    .zip(&ys)
                    .map(|((a, g), y)| {
                        let n: f64 = self.noise_rng.sample(StandardNormal);
                        a * g * y + sn * n
                    })
                    .collect(),
            ),
        }
    }

    pub(crate) fn advance(&mut self, model: &SystemModel) {
        let w: f64 = self.state_rng.sample(StandardNormal);
        self.x = model.a * self.x + w * model.sigma_w2.sqrt();
    }
}

/// Which scheme has the larger SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Mac,
    Orthogonal,
    Tie,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeComparison {
    pub snr_mac: f64,
    pub snr_orth: f64,
    pub p_mac: f64,
    pub p_orth: f64,
    pub dominance: Dominance,
    /// Sensors whose amplification sign was flipped so that `alpha_i c_i >= 0`.
    pub flipped: Vec<usize>,
}

/// Relative tie tolerance for [`compare_schemes`].
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Compares both schemes under the same amplifications and channels.
///
/// Unlike the rest of the crate this accepts `sigma_n2 = 0`. Signs are
/// normalized so every `alpha_i c_i` is non-negative before comparing.
pub fn compare_schemes(
    model: &SystemModel,
    sensors: &SensorSet,
    channels: &[f64],
    noise: &NoiseModel,
    alphas: &[f64],
) -> Result<SchemeComparison> {
    if !(noise.sigma_n2 >= 0.0) || !noise.sigma_n2.is_finite() {
        return Err(Error::Domain(format!(
            "sigma_n2 must be >= 0, got {}",
            noise.sigma_n2
        )));
    }
    let mut flipped = Vec::new();
    let signed: Vec<f64> = alphas
        .iter()
        .zip(sensors)
        .enumerate()
        .map(|(i, (&a, s))| {
            if a * s.c < 0.0 {
                flipped.push(i);
                -a
            } else {
                a
            }
        })
        .collect();
    let s = mac_snr(&signed, channels, sensors, noise)?.snr;
    let so = orth_snr(&signed, channels, sensors, noise)?.snr;
    let p_mac = steady_state_from_snr(s, model)?;
    let p_orth = steady_state_from_snr(so, model)?;
    let tol = TIE_TOLERANCE * s.max(so).max(1.0);
    let dominance = if (s - so).abs() <= tol {
        Dominance::Tie
    } else if s > so {
        Dominance::Mac
    } else {
        Dominance::Orthogonal
    };
    Ok(SchemeComparison {
        snr_mac: s,
        snr_orth: so,
        p_mac,
        p_orth,
        dominance,
        flipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChannelRealization, Sensor};

    fn m09() -> SystemModel {
        SystemModel::new(0.9, 1.0).unwrap()
    }

    fn example4(m: usize) -> (SensorSet, Vec<f64>, Vec<f64>, NoiseModel) {
        let half = m / 2;
        let sensors: Vec<Sensor> = (0..m)
            .map(|i| Sensor::new(if i < half { 1.0 } else { 2.0 }, 1.0))
            .collect();
        (
            SensorSet::new(sensors).unwrap(),
            vec![1.0; m],
            vec![1.0; m],
            NoiseModel::new(0.125).unwrap(),
        )
    }

    #[test]
    fn mac_snr_examples() {
        let s = SensorSet::symmetric(4, 1.0, 1.0).unwrap();
        let n = NoiseModel::new(1.0).unwrap();
        let d = mac_snr(&[1.0; 4], &[1.0; 4], &s, &n).unwrap();
        assert!((d.snr - 3.2).abs() < 1e-12);
        let d = mac_snr(&[0.0; 4], &[1.0; 4], &s, &n).unwrap();
        assert_eq!(d.snr, 0.0);
        let (s, a, h, n) = example4(10);
        let d = mac_snr(&a, &h, &s, &n).unwrap();
        assert!((d.snr - 225.0 / 10.125).abs() < 1e-12);
    }

    #[test]
    fn degenerate_snr_is_an_error() {
        let s = SensorSet::symmetric(2, 1.0, 1.0).unwrap();
        let r = mac_snr(&[0.0; 2], &[1.0; 2], &s, &NoiseModel::noiseless());
        assert_eq!(r, Err(Error::DegenerateSnr));
    }

    #[test]
    fn orth_snr_examples() {
        let s = SensorSet::symmetric(4, 1.0, 1.0).unwrap();
        let n = NoiseModel::new(1.0).unwrap();
        let d = orth_snr(&[1.0; 4], &[1.0; 4], &s, &n).unwrap();
        assert!((d.snr - 2.0).abs() < 1e-12);
        let (s, a, h, n) = example4(10);
        let so = orth_snr(&a, &h, &s, &n).unwrap().snr;
        let sm = mac_snr(&a, &h, &s, &n).unwrap().snr;
        assert!((so - 22.222_222_222).abs() < 1e-8);
        assert!((so - sm).abs() < 1e-12);
        let one = SensorSet::symmetric(1, -0.7, 0.3).unwrap();
        let so = orth_snr(&[1.3], &[0.4], &one, &n).unwrap().snr;
        let sm = mac_snr(&[1.3], &[0.4], &one, &n).unwrap().snr;
        assert!((so - sm).abs() < 1e-14 * sm);
    }

    #[test]
    fn riccati_examples() {
        let m = SystemModel::new(0.5, 1.0).unwrap();
        assert_eq!(riccati_step_mac(2.0, 0.0, 1.0, &m).unwrap(), 1.5);
        assert!((riccati_step_mac(2.0, 1.0, 1.0, &m09()).unwrap() - 1.54).abs() < 1e-12);
        let p = riccati_step_mac(1.0, 1e6, 1.0, &m09()).unwrap();
        assert!((p - 1.0).abs() < 1e-11);
        assert_eq!(riccati_step_orth(2.0, 0.0, &m09()), 0.81 * 2.0 + 1.0);
        assert!((riccati_step_orth(2.0, 0.5, &m09()) - 1.81).abs() < 1e-12);
        for r in [0.1, 1.0, 7.0] {
            let so: f64 = 0.5;
            let mac = riccati_step_mac(2.0, (so * r).sqrt(), r, &m09()).unwrap();
            assert!((mac - riccati_step_orth(2.0, so, &m09())).abs() < 1e-12);
        }
    }

    #[test]
    fn steady_state_examples() {
        assert!((steady_state_from_snr(0.0, &m09()).unwrap() - 5.263158).abs() < 1e-6);
        // Frozen from the fixed-point oracle (iterate until |dP| < 1e-12).
        assert!((steady_state_from_snr(1.0, &m09()).unwrap() - 1.483_899_902_678_65).abs() < 1e-9);
        let p = steady_state_from_snr(1e12, &m09()).unwrap();
        assert!((p - 1.0).abs() < 1e-11);
        let unstable = SystemModel::new(1.1, 1.0).unwrap();
        assert!(matches!(
            steady_state_from_snr(1.0, &unstable),
            Err(Error::Unstable(_))
        ));
    }

    #[test]
    fn compare_schemes_examples() {
        let m = m09();
        let s = SensorSet::new(vec![
            Sensor::new(1.0, 0.5),
            Sensor::new(-2.0, 1.5),
            Sensor::new(0.7, 0.2),
        ])
        .unwrap();
        let c = compare_schemes(
            &m,
            &s,
            &[0.9, 0.4, 1.2],
            &NoiseModel::noiseless(),
            &[1.0, 1.0, 0.5],
        )
        .unwrap();
        assert_eq!(c.flipped, vec![1]);
        assert_ne!(c.dominance, Dominance::Mac);

        let sym = SensorSet::symmetric(5, 1.0, 1.0).unwrap();
        let c = compare_schemes(
            &m,
            &sym,
            &[0.8; 5],
            &NoiseModel::new(0.3).unwrap(),
            &[1.0; 5],
        )
        .unwrap();
        assert_eq!(c.dominance, Dominance::Mac);
        assert!(c.p_mac < c.p_orth);

        for mm in (2..=30).step_by(2) {
            let (s, a, h, n) = example4(mm);
            let c = compare_schemes(&m, &s, &h, &n, &a).unwrap();
            let want = match mm.cmp(&10) {
                std::cmp::Ordering::Less => Dominance::Orthogonal,
                std::cmp::Ordering::Equal => Dominance::Tie,
                std::cmp::Ordering::Greater => Dominance::Mac,
            };
            assert_eq!(c.dominance, want, "M = {mm}");
        }
    }

    fn scenario(cs: &[f64], h: &[f64]) -> Scenario {
        let sensors: Vec<Sensor> = cs.iter().map(|&c| Sensor::new(c, 1.0)).collect();
        crate::model::validate_scenario(
            &m09(),
            &sensors,
            &ChannelRealization::Magnitudes(h.to_vec()),
            &NoiseModel::new(1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_gain_filter_is_open_loop() {
        let sc = scenario(&[0.0, 0.0], &[1.0, 1.0]);
        let mut cfg = FilterConfig::new(Scheme::MultiAccess, 300);
        cfg.x0 = 2.0;
        cfg.p0 = Some(0.5);
        let t = run_filter(
            &sc,
            &AmplificationSchedule::Static(vec![1.0, 1.0]),
            &MeasurementSource::Simulate { seed: 3 },
            &cfg,
        )
        .unwrap();
        for s in &t.steps[..20] {
            assert!((s.x_hat - 2.0 * 0.9f64.powi(s.k as i32)).abs() < 1e-12);
        }
        assert!((t.steps.last().unwrap().p - 1.0 / 0.19).abs() < 1e-9);
    }

    #[test]
    fn filter_covariance_converges_to_steady_state() {
        let sc = scenario(&[1.0; 4], &[1.0; 4]);
        for scheme in [Scheme::MultiAccess, Scheme::Orthogonal] {
            let t = run_filter(
                &sc,
                &AmplificationSchedule::Static(vec![1.0; 4]),
                &MeasurementSource::Simulate { seed: 1 },
                &FilterConfig::new(scheme, 201),
            )
            .unwrap();
            let s = snr(scheme, &[1.0; 4], &[1.0; 4], &sc.sensors, &sc.noise)
                .unwrap()
                .snr;
            let p_inf = steady_state_from_snr(s, &sc.model).unwrap();
            assert!((t.steps[200].p - p_inf).abs() < 1e-9);
            for w in t.steps.windows(2).skip(1) {
                assert!(w[1].p >= sc.model.sigma_w2);
            }
        }
    }

    #[test]
    fn provided_measurements_match_simulated_run() {
        let sc = scenario(&[1.0, -0.5], &[0.7, 1.1]);
        let alphas = vec![0.8, -1.2];
        let cfg = FilterConfig::new(Scheme::MultiAccess, 5);
        let t = run_filter(
            &sc,
            &AmplificationSchedule::Static(alphas.clone()),
            &MeasurementSource::Provided(vec![Measurement::Mac(0.0); 5]),
            &cfg,
        )
        .unwrap();
        assert!(t.steps.iter().all(|s| s.x_hat == 0.0));
        assert!(t.steps.iter().all(|s| s.x_true.is_none()));
        let bad = run_filter(
            &sc,
            &AmplificationSchedule::Static(alphas),
            &MeasurementSource::Provided(vec![Measurement::Orth(vec![0.0, 0.0]); 5]),
            &cfg,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn trace_csv_header() {
        let sc = scenario(&[1.0, 1.0, 1.0], &[1.0; 3]);
        let t = run_filter(
            &sc,
            &AmplificationSchedule::Static(vec![1.0; 3]),
            &MeasurementSource::Simulate { seed: 9 },
            &FilterConfig::new(Scheme::Orthogonal, 2),
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,x_hat,P,gamma_1,gamma_2,gamma_3\n0,"));
        assert_eq!(text.lines().count(), 3);
    }
}
