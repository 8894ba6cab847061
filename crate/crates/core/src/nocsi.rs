//! Linear MMSE filtering when only channel statistics are known.
//!
//! The fusion center stacks the real and imaginary parts of what it receives
//! and treats the random channel as multiplicative noise around its mean.
//! For a complex amplification `g = alpha~ h~` the received component pair
//! `(Re, Im)` of sensor `i` has effective observation `c_i (E Re g, E Im g)`
//! and noise covariance
//!
//! ```text
//! [ Var Re g c^2 Ex2 + E[Re^2 g] s2 + sn2     Cov(Re g, Im g) c^2 Ex2 + E[Re g Im g] s2 ]
//! [ (symmetric)                               Var Im g c^2 Ex2 + E[Im^2 g] s2 + sn2     ]
//! ```
//!
//! with `Ex2 = sigma_w2 / (1 - a^2)`. When the real and imaginary channel
//! parts have equal variance the covariance term vanishes.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::alloc::{
    self, AllocationProblem, AllocationSolution, Constraint, Objective, StaticConstraint,
};
use crate::error::{Error, Result};
use crate::fading::{sample_channels_for, FadingModel};
use crate::kalman::{steady_state_from_snr, Scheme};
use crate::model::{power_factor, ChannelRealization, NoiseModel, SensorSet, SystemModel};
use crate::rng;

/// First and second moments of one sensor's complex channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentStats {
    pub mean_re: f64,
    pub mean_im: f64,
    pub var_re: f64,
    pub var_im: f64,
}

impl ComponentStats {
    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.mean_re, self.mean_im)
    }

    /// `E[(Re h)^2]`.
    pub fn e2_re(&self) -> f64 {
        self.var_re + self.mean_re * self.mean_re
    }

    pub fn e2_im(&self) -> f64 {
        self.var_im + self.mean_im * self.mean_im
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelStatistics {
    pub sensors: Vec<ComponentStats>,
}

impl ChannelStatistics {
    pub fn new(sensors: Vec<ComponentStats>) -> Result<Self> {
        for (i, s) in sensors.iter().enumerate() {
            let vals = [s.mean_re, s.mean_im, s.var_re, s.var_im];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "non-finite statistics for sensor {i}"
                )));
            }
            if s.var_re < 0.0 || s.var_im < 0.0 {
                return Err(Error::Domain(format!(
                    "negative channel variance for sensor {i}"
                )));
            }
        }
        Ok(Self { sensors })
    }

    /// Deterministic channels equal to `h`.
    pub fn deterministic(h: &[Complex64]) -> Self {
        Self {
            sensors: h
                .iter()
                .map(|h| ComponentStats {
                    mean_re: h.re,
                    mean_im: h.im,
                    var_re: 0.0,
                    var_im: 0.0,
                })
                .collect(),
        }
    }

    pub fn from_fading(f: &FadingModel) -> Self {
        Self {
            sensors: (0..f.len())
                .map(|i| {
                    let m = f.mean(i);
                    let v = f.component_variance(i);
                    ComponentStats {
                        mean_re: m.re,
                        mean_im: m.im,
                        var_re: v,
                        var_im: v,
                    }
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }
}

/// `alpha~_i = alpha_i conj(E h_i) / |E h_i|`: rotate by the conjugate mean phase.
pub fn mean_beamform_alphas(alphas: &[f64], stats: &ChannelStatistics) -> Result<Vec<Complex64>> {
    if alphas.len() != stats.len() {
        return Err(Error::Dimension(format!(
            "{} alphas for {} channel statistics",
            alphas.len(),
            stats.len()
        )));
    }
    alphas
        .iter()
        .zip(&stats.sensors)
        .enumerate()
        .map(|(i, (&a, s))| {
            let m = s.mean();
            let n = m.norm();
            if n == 0.0 {
                return Err(Error::ZeroMeanChannel(i));
            }
            Ok(a * m.conj() / n)
        })
        .collect()
}

/// Moments of `g = alpha~ h` for one sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductMoments {
    pub e_re: f64,
    pub e_im: f64,
    pub var_re: f64,
    pub var_im: f64,
    pub cov: f64,
    pub e2_re: f64,
    pub e2_im: f64,
    /// `E[Re g Im g]`.
    pub e_re_im: f64,
}

/// Moments of `alpha~ h` for independent real and imaginary channel parts.
pub fn product_moments(alpha: Complex64, s: &ComponentStats) -> ProductMoments {
    let (p, q) = (alpha.re, alpha.im);
    let e_re = p * s.mean_re - q * s.mean_im;
    let e_im = p * s.mean_im + q * s.mean_re;
    let var_re = p * p * s.var_re + q * q * s.var_im;
    let var_im = p * p * s.var_im + q * q * s.var_re;
    let cov = p * q * (s.var_re - s.var_im);
    ProductMoments {
        e_re,
        e_im,
        var_re,
        var_im,
        cov,
        e2_re: var_re + e_re * e_re,
        e2_im: var_im + e_im * e_im,
        e_re_im: cov + e_re * e_im,
    }
}

/// Moments for every sensor.
pub fn derive_moments(
    stats: &ChannelStatistics,
    alphas: &[Complex64],
) -> Result<Vec<ProductMoments>> {
    if alphas.len() != stats.len() {
        return Err(Error::Dimension(format!(
            "{} alphas for {} channel statistics",
            alphas.len(),
            stats.len()
        )));
    }
    Ok(alphas
        .iter()
        .zip(&stats.sensors)
        .map(|(a, s)| product_moments(*a, s))
        .collect())
}

/// Beamformed moments in the printed closed form: mean `alpha |E h|`,
/// `Var = alpha^2 (mr^2 vr + mi^2 vi) / |m|^2`,
/// `E[Re^2] = alpha^2 (mr^2 E[Re^2 h] + 2 mr^2 mi^2 + mi^2 E[Im^2 h]) / |m|^2`.
pub fn beamformed_moments(alpha: f64, s: &ComponentStats) -> Result<(f64, f64, f64)> {
    let m2 = s.mean_re * s.mean_re + s.mean_im * s.mean_im;
    if m2 == 0.0 {
        return Err(Error::ZeroMeanChannel(0));
    }
    let (mr2, mi2) = (s.mean_re * s.mean_re, s.mean_im * s.mean_im);
    let a2 = alpha * alpha;
    let mean = alpha * m2.sqrt();
    let var = a2 / m2 * (mr2 * s.var_re + mi2 * s.var_im);
    let e2 = a2 / m2 * (mr2 * s.e2_re() + 2.0 * mr2 * mi2 + mi2 * s.e2_im());
    Ok((mean, var, e2))
}

/// Effective linear observation model: one 2x2 block for the multi-access
/// sum, one per sensor for orthogonal channels.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    pub scheme: Scheme,
    pub c: Vec<Vector2<f64>>,
    pub r: Vec<Matrix2<f64>>,
    /// `C' R^-1 C`.
    pub snr: f64,
}

const DET_FLOOR: f64 = 1e-300;

fn inverse2(m: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if !(det.abs() >= DET_FLOOR) {
        return Err(Error::Singular(format!(
            "2x2 noise covariance, determinant {det:e}"
        )));
    }
    Ok(Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det)
}

fn sensor_block(
    pm: &ProductMoments,
    c: f64,
    sigma_v2: f64,
    ex2: f64,
) -> (Vector2<f64>, Matrix2<f64>) {
    let c2x = c * c * ex2;
    let r11 = pm.var_re * c2x + pm.e2_re * sigma_v2;
    let r22 = pm.var_im * c2x + pm.e2_im * sigma_v2;
    let r12 = pm.cov * c2x + pm.e_re_im * sigma_v2;
    (
        Vector2::new(pm.e_re * c, pm.e_im * c),
        Matrix2::new(r11, r12, r12, r22),
    )
}

pub fn build_effective_model(
    model: &SystemModel,
    sensors: &SensorSet,
    stats: &ChannelStatistics,
    alphas: &[Complex64],
    noise: &NoiseModel,
    scheme: Scheme,
) -> Result<EffectiveModel> {
    let ex2 = model.stationary_state_variance()?;
    if sensors.len() != stats.len() {
        return Err(Error::Dimension(format!(
            "{} sensors, {} channel statistics",
            sensors.len(),
            stats.len()
        )));
    }
    let moments = derive_moments(stats, alphas)?;
    let noise_block = Matrix2::identity() * noise.sigma_n2;
    let blocks: Vec<(Vector2<f64>, Matrix2<f64>)> = moments
        .iter()
        .zip(sensors)
        .map(|(pm, s)| sensor_block(pm, s.c, s.sigma_v2, ex2))
        .collect();
    let (c, r) = match scheme {
        Scheme::MultiAccess => {
            let c = blocks.iter().fold(Vector2::zeros(), |acc, b| acc + b.0);
            let r = blocks.iter().fold(noise_block, |acc, b| acc + b.1);
            (vec![c], vec![r])
        }
        Scheme::Orthogonal => blocks
            .into_iter()
            .map(|(c, r)| (c, r + noise_block))
            .unzip(),
    };
    let mut snr = 0.0;
    for (ci, ri) in c.iter().zip(&r) {
        snr += (ci.transpose() * inverse2(ri)? * ci)[(0, 0)];
    }
    Ok(EffectiveModel { scheme, c, r, snr })
}

/// SNR of mean-beamformed amplifications through the scalar closed form
/// (valid when the effective noise has no Re/Im cross term).
pub fn simplified_snr(
    model: &SystemModel,
    sensors: &SensorSet,
    stats: &ChannelStatistics,
    alphas: &[f64],
    noise: &NoiseModel,
    scheme: Scheme,
) -> Result<f64> {
    let ex2 = model.stationary_state_variance()?;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut sum = 0.0;
    for (i, ((&a, s), st)) in alphas.iter().zip(sensors).zip(&stats.sensors).enumerate() {
        let (mean, var, e2) = beamformed_moments(a, st).map_err(|_| Error::ZeroMeanChannel(i))?;
        let signal = mean * s.c;
        let r = var * s.c * s.c * ex2 + e2 * s.sigma_v2;
        num += signal;
        den += r;
        sum += signal * signal / (r + noise.sigma_n2);
    }
    Ok(match scheme {
        Scheme::MultiAccess => num * num / (den + noise.sigma_n2),
        Scheme::Orthogonal => sum,
    })
}

pub fn steady_state_nocsi(eff: &EffectiveModel, model: &SystemModel) -> Result<f64> {
    steady_state_from_snr(eff.snr, model)
}

/// Measurement update with the stacked `(Re, Im)` observations followed by
/// the time update. Takes and returns the prior pair `(x_hat, P)`.
///
/// `z` holds one complex sample for the multi-access scheme and one per
/// sensor for orthogonal channels.
pub fn mmse_filter_step(
    (x_hat, p): (f64, f64),
    z: &[Complex64],
    eff: &EffectiveModel,
    model: &SystemModel,
) -> Result<(f64, f64)> {
    let (x_post, p_post) = correct_scaled(x_hat, p, z, eff, 1.0)?;
    Ok((
        model.a * x_post,
        model.a * model.a * p_post + model.sigma_w2,
    ))
}

fn correct_scaled(
    x_hat: f64,
    p: f64,
    z: &[Complex64],
    eff: &EffectiveModel,
    gain_scale: f64,
) -> Result<(f64, f64)> {
    if z.len() != eff.c.len() {
        return Err(Error::Dimension(format!(
            "{} received samples for {} blocks",
            z.len(),
            eff.c.len()
        )));
    }
    // Information form: the blocks are independent given x.
    let mut info = 0.0;
    let mut weighted = 0.0;
    for ((c, r), z) in eff.c.iter().zip(&eff.r).zip(z) {
        let w = inverse2(r)? * c;
        info += c.dot(&w);
        let innov = Vector2::new(z.re, z.im) - c * x_hat;
        weighted += w.dot(&innov);
    }
    let p_post = p / (1.0 + p * info);
    Ok((x_hat + gain_scale * p_post * weighted, p_post))
}

/// Gain of the filter: exact MMSE gain each step, or the steady-state gain
/// scaled by a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainMode {
    Mmse,
    SteadyState { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NocsiRun {
    /// Prior covariance used at each step (the filter's own prediction).
    pub p: Vec<f64>,
    /// `(x_k - x_hat_{k|k-1})^2`.
    pub sq_errors: Vec<f64>,
}

impl NocsiRun {
    pub fn empirical_mse(&self, burn_in: usize) -> f64 {
        let e = &self.sq_errors[burn_in.min(self.sq_errors.len())..];
        crate::stats::pairwise_sum(e) / e.len() as f64
    }
}

/// Simulates the state, sensor noise, fading channels and receiver noise,
/// and filters with fixed amplifications `alphas`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_nocsi(
    model: &SystemModel,
    sensors: &SensorSet,
    noise: &NoiseModel,
    fading: &FadingModel,
    alphas: &[Complex64],
    scheme: Scheme,
    steps: usize,
    seed: u64,
    realization: u64,
    gain: GainMode,
) -> Result<NocsiRun> {
    let stats = ChannelStatistics::from_fading(fading);
    let eff = build_effective_model(model, sensors, &stats, alphas, noise, scheme)?;
    let channels = sample_channels_for(fading, steps, seed, realization);
    simulate_with_channels(
        model,
        sensors,
        noise,
        &eff,
        alphas,
        &channels,
        seed,
        realization,
        gain,
    )
}

/// As [`simulate_nocsi`] with caller-supplied channel draws.
#[allow(clippy::too_many_arguments)]
pub fn simulate_with_channels(
    model: &SystemModel,
    sensors: &SensorSet,
    noise: &NoiseModel,
    eff: &EffectiveModel,
    alphas: &[Complex64],
    channels: &[ChannelRealization],
    seed: u64,
    realization: u64,
    gain: GainMode,
) -> Result<NocsiRun> {
    let ex2 = model.stationary_state_variance()?;
    let m = sensors.len();
    let mut state_rng = rng::stream(seed, realization, rng::purpose::STATE);
    let mut rx_rng = rng::stream(seed, realization, rng::purpose::RECEIVER);
    let mut sensor_rngs: Vec<_> = (0..m as u64)
        .map(|i| rng::stream(seed, realization, rng::purpose::SENSOR_NOISE + i))
        .collect();
    let sn = noise.sigma_n2.sqrt();
    let mut x = ex2.sqrt() * state_rng.sample::<f64, _>(StandardNormal);
    let p_inf = steady_state_from_snr(eff.snr, model)?;
    let (mut x_hat, mut p) = match gain {
        GainMode::Mmse => (0.0, ex2),
        GainMode::SteadyState { .. } => (0.0, p_inf),
    };
    let mut out = NocsiRun {
        p: Vec::with_capacity(channels.len()),
        sq_errors: Vec::with_capacity(channels.len()),
    };
    let mut rx = || {
        Complex64::new(
            sn * rx_rng.sample::<f64, _>(StandardNormal),
            sn * rx_rng.sample::<f64, _>(StandardNormal),
        )
    };
    for ch in channels {
        let ChannelRealization::Complex(h) = ch else {
            return Err(Error::Domain(
                "no-CSI simulation needs complex channels".into(),
            ));
        };
        if h.len() != m {
            return Err(Error::Dimension(format!(
                "{} channels for {m} sensors",
                h.len()
            )));
        }
        out.p.push(p);
        out.sq_errors.push((x - x_hat).powi(2));
        let contributions: Vec<Complex64> = (0..m)
            .map(|i| {
                let v: f64 = sensor_rngs[i].sample(StandardNormal);
                let s = sensors.as_slice()[i];
                alphas[i] * h[i] * (s.c * x + v * s.sigma_v2.sqrt())
            })
            .collect();
        let z: Vec<Complex64> = match eff.scheme {
            Scheme::MultiAccess => vec![contributions.iter().sum::<Complex64>() + rx()],
            Scheme::Orthogonal => contributions.iter().map(|c| c + rx()).collect(),
        };
        let (x_post, p_post) = match gain {
            GainMode::Mmse => correct_scaled(x_hat, p, &z, eff, 1.0)?,
            GainMode::SteadyState { scale } => {
                let (xp, _) = correct_scaled(x_hat, p_inf, &z, eff, scale)?;
                (xp, p_inf / (1.0 + p_inf * eff.snr))
            }
        };
        x_hat = model.a * x_post;
        p = model.a * model.a * p_post + model.sigma_w2;
        x = model.a * x + model.sigma_w2.sqrt() * state_rng.sample::<f64, _>(StandardNormal);
    }
    Ok(out)
}

/// Allocation for mean-beamformed amplifications, solved once from the
/// statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NocsiAllocation {
    pub solution: AllocationSolution,
    pub alphas: Vec<Complex64>,
    pub snr: f64,
    pub p_inf: f64,
}

/// Maps the beamformed SNR onto the generic allocation template with
/// `rho_i = |E h_i| c_i` and `tau_i` the per-unit-`alpha^2` effective noise.
pub fn nocsi_problem(
    model: &SystemModel,
    sensors: &SensorSet,
    stats: &ChannelStatistics,
    noise: &NoiseModel,
    constraint: StaticConstraint,
    scheme: Scheme,
) -> Result<AllocationProblem> {
    let ex2 = model.stationary_state_variance()?;
    if sensors.len() != stats.len() {
        return Err(Error::Dimension(format!(
            "{} sensors, {} channel statistics",
            sensors.len(),
            stats.len()
        )));
    }
    let mut rho = Vec::with_capacity(sensors.len());
    let mut tau = Vec::with_capacity(sensors.len());
    for (i, (s, st)) in sensors.iter().zip(&stats.sensors).enumerate() {
        let unit = beamformed_moments(1.0, st).map_err(|_| Error::ZeroMeanChannel(i))?;
        let twice = beamformed_moments(2.0, st).map_err(|_| Error::ZeroMeanChannel(i))?;
        let t1 = unit.1 * s.c * s.c * ex2 + unit.2 * s.sigma_v2;
        let t2 = twice.1 * s.c * s.c * ex2 + twice.2 * s.sigma_v2;
        if (t2 - 4.0 * t1).abs() > 1e-12 * t2.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Domain(format!(
                "effective noise of sensor {i} is not quadratic in alpha"
            )));
        }
        rho.push(unit.0 * s.c);
        tau.push(t1);
    }
    let kappa = sensors
        .iter()
        .map(|s| power_factor(s, model))
        .collect::<Result<Vec<_>>>()?;
    let (objective, c) = match constraint {
        StaticConstraint::MaxCovariance(d) => {
            let (x, y) = alloc::target_constants(model, d)?;
            (Objective::new(scheme, true), Constraint::Target { x, y })
        }
        StaticConstraint::TotalPower(g) => (Objective::new(scheme, false), Constraint::Budget(g)),
    };
    AllocationProblem::new(objective, kappa, rho, tau, noise.sigma_n2, c)
}

pub fn allocate_nocsi(
    model: &SystemModel,
    sensors: &SensorSet,
    stats: &ChannelStatistics,
    noise: &NoiseModel,
    constraint: StaticConstraint,
    scheme: Scheme,
) -> Result<NocsiAllocation> {
    let problem = nocsi_problem(model, sensors, stats, noise, constraint, scheme)?;
    let solution = alloc::solve(&problem)?;
    let alphas = mean_beamform_alphas(&solution.alphas, stats)?;
    let eff = build_effective_model(model, sensors, stats, &alphas, noise, scheme)?;
    let p_inf = steady_state_nocsi(&eff, model)?;
    Ok(NocsiAllocation {
        snr: eff.snr,
        solution,
        alphas,
        p_inf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kalman::{mac_snr, orth_snr};

    fn stat(mr: f64, mi: f64, v: f64) -> ComponentStats {
        ComponentStats {
            mean_re: mr,
            mean_im: mi,
            var_re: v,
            var_im: v,
        }
    }

    #[test]
    fn beamforming_rotations() {
        let s = ChannelStatistics::new(vec![stat(1.0, 0.0, 0.1), stat(0.0, 2.0, 0.1)]).unwrap();
        let a = mean_beamform_alphas(&[0.5, 0.7], &s).unwrap();
        assert_eq!(a[0], Complex64::new(0.5, 0.0));
        assert!((a[1] - Complex64::new(0.0, -0.7)).norm() < 1e-15);
        let z = ChannelStatistics::new(vec![stat(0.0, 0.0, 1.0)]).unwrap();
        assert_eq!(
            mean_beamform_alphas(&[1.0], &z),
            Err(Error::ZeroMeanChannel(0))
        );
    }

    #[test]
    fn moment_examples() {
        let det = stat(1.0, 0.0, 0.0);
        let pm = product_moments(Complex64::new(0.6, 0.0), &det);
        assert_eq!((pm.e_re, pm.var_re), (0.6, 0.0));
        assert!((pm.e2_re - 0.36).abs() < 1e-15);

        let s = stat(1.0, 1.0, 1.0);
        let a = mean_beamform_alphas(&[1.0], &ChannelStatistics::new(vec![s]).unwrap()).unwrap();
        let pm = product_moments(a[0], &s);
        assert!((pm.var_re - 1.0).abs() < 1e-12);
        assert!((pm.e2_re - 3.0).abs() < 1e-12);
        assert!(pm.e_im.abs() < 1e-15);
        let (mean, var, e2) = beamformed_moments(1.0, &s).unwrap();
        assert!((mean - 2f64.sqrt()).abs() < 1e-15);
        assert!((var - 1.0).abs() < 1e-15 && (e2 - 3.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_channels_match_csi() {
        let m = SystemModel::new(0.9, 1.0).unwrap();
        let sensors = SensorSet::new(vec![
            crate::model::Sensor::new(1.0, 0.5),
            crate::model::Sensor::new(-0.4, 1.5),
        ])
        .unwrap();
        let h = [0.8, 1.3];
        let stats =
            ChannelStatistics::deterministic(&[Complex64::new(0.8, 0.0), Complex64::new(1.3, 0.0)]);
        let n = NoiseModel::new(0.7).unwrap();
        let alphas = [1.1, -0.6];
        let cx: Vec<Complex64> = alphas.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        let eff =
            build_effective_model(&m, &sensors, &stats, &cx, &n, Scheme::MultiAccess).unwrap();
        let csi = mac_snr(&alphas, &h, &sensors, &n).unwrap().snr;
        assert!((eff.snr - csi).abs() < 1e-12 * csi);
        let eff = build_effective_model(&m, &sensors, &stats, &cx, &n, Scheme::Orthogonal).unwrap();
        let csi = orth_snr(&alphas, &h, &sensors, &n).unwrap().snr;
        assert!((eff.snr - csi).abs() < 1e-12 * csi);
    }

    #[test]
    fn zero_mean_channels_carry_nothing() {
        let m = SystemModel::new(0.9, 1.0).unwrap();
        let sensors = SensorSet::symmetric(2, 1.0, 1.0).unwrap();
        let stats = ChannelStatistics::new(vec![stat(0.0, 0.0, 1.0); 2]).unwrap();
        let a = vec![Complex64::new(1.0, 0.0); 2];
        let eff = build_effective_model(
            &m,
            &sensors,
            &stats,
            &a,
            &NoiseModel::new(1.0).unwrap(),
            Scheme::MultiAccess,
        )
        .unwrap();
        assert_eq!(eff.c[0], Vector2::zeros());
        assert_eq!(eff.snr, 0.0);
        assert!((steady_state_nocsi(&eff, &m).unwrap() - 1.0 / 0.19).abs() < 1e-9);
        let (_, p1) = mmse_filter_step((0.3, 2.0), &[Complex64::new(5.0, -1.0)], &eff, &m).unwrap();
        assert!((p1 - (0.81 * 2.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn information_form_matches_direct_gain() {
        let m = SystemModel::new(0.7, 0.5).unwrap();
        let sensors = SensorSet::symmetric(3, 0.9, 0.4).unwrap();
        let stats = ChannelStatistics::new(vec![
            stat(0.5, 0.2, 0.3),
            ComponentStats {
                mean_re: -0.3,
                mean_im: 0.8,
                var_re: 0.1,
                var_im: 0.6,
            },
            stat(1.0, -1.0, 0.05),
        ])
        .unwrap();
        let a = vec![
            Complex64::new(0.4, 0.3),
            Complex64::new(-0.2, 0.9),
            Complex64::new(1.0, 0.0),
        ];
        let n = NoiseModel::new(0.2).unwrap();
        let eff = build_effective_model(&m, &sensors, &stats, &a, &n, Scheme::MultiAccess).unwrap();
        let (c, r) = (eff.c[0], eff.r[0]);
        let p = 1.7;
        let z = Vector2::new(0.3, -0.9);
        let s = c * c.transpose() * p + r;
        let k = p * inverse2(&s).unwrap() * c;
        let x_direct = 0.2 + k.dot(&(z - c * 0.2));
        let p_direct = p - p * p * (c.transpose() * inverse2(&s).unwrap() * c)[(0, 0)];
        let (x, pp) = correct_scaled(0.2, p, &[Complex64::new(z.x, z.y)], &eff, 1.0).unwrap();
        assert!((x - x_direct).abs() < 1e-12);
        assert!((pp - p_direct).abs() < 1e-12);
    }
}
