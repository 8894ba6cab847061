//! Large-`M` behaviour of the steady-state covariance.
//!
//! The expansions here are leading-order only. Remainders are `O(1/M^2)` and
//! are checked by ratio tests against the exact closed form, never computed.

use crate::error::{Error, Result};
use crate::kalman::{mac_snr, orth_snr, steady_state_from_snr, Scheme};
use crate::model::{power_factor, Amplification, NoiseModel, Sensor, SensorSet, SystemModel};

/// Sensors that all share `c`, `sigma_v2` and channel gain `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricParams {
    pub c: f64,
    pub sigma_v2: f64,
    pub h: f64,
    pub model: SystemModel,
    /// May be zero here (noiseless fusion center).
    pub sigma_n2: f64,
}

impl SymmetricParams {
    pub fn new(c: f64, sigma_v2: f64, h: f64, model: SystemModel, sigma_n2: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::Domain(format!(
                "c must be nonzero and finite, got {c}"
            )));
        }
        if !(h > 0.0) || !(sigma_v2 > 0.0) || !(sigma_n2 >= 0.0) {
            return Err(Error::Domain(format!(
                "need h > 0, sigma_v2 > 0, sigma_n2 >= 0 (h = {h}, sigma_v2 = {sigma_v2}, sigma_n2 = {sigma_n2})"
            )));
        }
        Ok(Self {
            c,
            sigma_v2,
            h,
            model,
            sigma_n2,
        })
    }
}

/// Amplification rule as the network grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// `alpha_i = 1`.
    None,
    /// `alpha_i = 1/sqrt(M)`.
    InvSqrtM,
}

fn check(m: usize, p: &SymmetricParams) -> Result<()> {
    if m == 0 {
        return Err(Error::Domain("M must be >= 1".into()));
    }
    p.model.require_stable()
}

/// `sigma_w2 + a^2 sigma_v2 / (c^2 M)`.
pub fn asympt_mac_noscale(m: usize, p: &SymmetricParams) -> Result<f64> {
    check(m, p)?;
    let a2 = p.model.a * p.model.a;
    Ok(p.model.sigma_w2 + a2 * p.sigma_v2 / (p.c * p.c * m as f64))
}

/// `sigma_w2 + a^2 (sigma_v2 + sigma_n2 / h^2) / (c^2 M)`.
pub fn asympt_orth_noscale(m: usize, p: &SymmetricParams) -> Result<f64> {
    check(m, p)?;
    let a2 = p.model.a * p.model.a;
    Ok(p.model.sigma_w2 + a2 * (p.sigma_v2 + p.sigma_n2 / (p.h * p.h)) / (p.c * p.c * m as f64))
}

/// Multi-access with `alpha = 1/sqrt(M)`; same leading terms as the
/// unscaled orthogonal scheme.
pub fn asympt_mac_scaled(m: usize, p: &SymmetricParams) -> Result<f64> {
    asympt_orth_noscale(m, p)
}

/// Limit and `1/M` coefficient of the orthogonal scheme under `1/sqrt(M)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledLimit {
    pub limit: f64,
    pub coefficient: f64,
}

impl ScaledLimit {
    pub fn at(&self, m: usize) -> f64 {
        self.limit + self.coefficient / m as f64
    }
}

/// The orthogonal scheme with `alpha = 1/sqrt(M)` does not reach `sigma_w2`:
/// its SNR `h^2 c^2 / (h^2 sigma_v2 / M + sigma_n2)` saturates at
/// `h^2 c^2 / sigma_n2`.
pub fn asympt_orth_scaled_limit(p: &SymmetricParams) -> Result<ScaledLimit> {
    p.model.require_stable()?;
    let (a2, q) = (p.model.a * p.model.a, p.model.sigma_w2);
    let g = p.h * p.h * p.c * p.c;
    if p.sigma_n2 == 0.0 {
        return Ok(ScaledLimit {
            limit: q,
            coefficient: a2 * p.sigma_v2 / (p.c * p.c),
        });
    }
    let n = p.sigma_n2;
    let limit = ((a2 - 1.0) * n
        + g * q
        + ((a2 - 1.0).powi(2) * n * n + 2.0 * (a2 + 1.0) * n * g * q + g * g * q * q).sqrt())
        / (2.0 * g);
    // dP/dS from the implicit quadratic, times dS/d(1/M) at the limit.
    let s = g / n;
    let b = a2 - 1.0 + q * s;
    let dp_ds = -(limit * limit - q * limit) / (2.0 * s * limit - b);
    let ds_dinv_m = -g * p.h * p.h * p.sigma_v2 / (n * n);
    Ok(ScaledLimit {
        limit,
        coefficient: dp_ds * ds_dinv_m,
    })
}

/// Exact steady state of the symmetric network with `M` sensors.
pub fn exact_symmetric(
    m: usize,
    p: &SymmetricParams,
    scheme: Scheme,
    scaling: Scaling,
) -> Result<f64> {
    check(m, p)?;
    let mf = m as f64;
    let alpha2 = match scaling {
        Scaling::None => 1.0,
        Scaling::InvSqrtM => 1.0 / mf,
    };
    let g2 = alpha2 * p.h * p.h;
    let snr = match scheme {
        Scheme::MultiAccess => {
            let r = mf * g2 * p.sigma_v2 + p.sigma_n2;
            mf * mf * g2 * p.c * p.c / r
        }
        Scheme::Orthogonal => mf * g2 * p.c * p.c / (g2 * p.sigma_v2 + p.sigma_n2),
    };
    steady_state_from_snr(snr, &p.model)
}

/// Ranges of `|c_i|`, `sigma_i^2` and `h_i` over the population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub c_min: f64,
    pub c_max: f64,
    pub sigma_min2: f64,
    pub sigma_max2: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl ParamBounds {
    pub fn new(
        (c_min, c_max): (f64, f64),
        (sigma_min2, sigma_max2): (f64, f64),
        (h_min, h_max): (f64, f64),
    ) -> Result<Self> {
        for (name, lo, hi) in [
            ("c", c_min, c_max),
            ("sigma^2", sigma_min2, sigma_max2),
            ("h", h_min, h_max),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Domain(format!("bad {name} range [{lo}, {hi}]")));
            }
        }
        Ok(Self {
            c_min,
            c_max,
            sigma_min2,
            sigma_max2,
            h_min,
            h_max,
        })
    }

    pub fn contains(&self, s: &Sensor, h: f64) -> bool {
        let c = s.c.abs();
        (self.c_min..=self.c_max).contains(&c)
            && (self.sigma_min2..=self.sigma_max2).contains(&s.sigma_v2)
            && (self.h_min..=self.h_max).contains(&h)
    }
}

/// Leading-order sandwich for the multi-access scheme with `alpha_i c_i > 0`
/// and `|alpha_i|` equal to 1 or `1/sqrt(M)`. Returns `(lower, upper)`.
pub fn general_bounds(
    m: usize,
    b: &ParamBounds,
    model: &SystemModel,
    sigma_n2: f64,
    scaling: Scaling,
) -> Result<(f64, f64)> {
    if m == 0 {
        return Err(Error::Domain("M must be >= 1".into()));
    }
    model.require_stable()?;
    let n = match scaling {
        Scaling::None => 0.0,
        Scaling::InvSqrtM => sigma_n2,
    };
    let a2 = model.a * model.a;
    let mf = m as f64;
    let lower = model.sigma_w2
        + a2 * (b.h_min * b.h_min * b.sigma_min2 + n)
            / (b.h_max * b.h_max * b.c_max * b.c_max * mf);
    let upper = model.sigma_w2
        + a2 * (b.h_max * b.h_max * b.sigma_max2 + n)
            / (b.h_min * b.h_min * b.c_min * b.c_min * mf);
    Ok((lower, upper))
}

/// How equal power is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerBudget {
    /// Every sensor spends `gamma`.
    PerSensor(f64),
    /// `gamma_total` split evenly over the `M` sensors.
    Total(f64),
}

/// Amplifications giving every sensor the same transmit power. Signs follow
/// `c_i` so that the multi-access contributions add coherently.
pub fn equal_power_alphas(
    sensors: &SensorSet,
    model: &SystemModel,
    budget: PowerBudget,
) -> Result<Amplification> {
    let per = match budget {
        PowerBudget::PerSensor(g) => g,
        PowerBudget::Total(g) => g / sensors.len() as f64,
    };
    if !(per > 0.0) || !per.is_finite() {
        return Err(Error::Domain(format!(
            "power budget must be positive, got {budget:?}"
        )));
    }
    let alphas = sensors
        .iter()
        .map(|s| {
            let k = power_factor(s, model)?;
            let sign = if s.c < 0.0 { -1.0 } else { 1.0 };
            Ok(sign * (per / k).sqrt())
        })
        .collect::<Result<_>>()?;
    Ok(Amplification::new(alphas))
}

/// Constant `C` with `P - sigma_w2 <= C / M` for equal-power multi-access
/// allocations on a bounded population. `gamma` is the per-sensor power in
/// [`PowerBudget::PerSensor`] mode and the total in [`PowerBudget::Total`] mode.
///
/// Follows from `P - sigma_w2 < a^2 r_bar / c_bar^2` together with the
/// extreme values of `alpha_i` implied by the bounds.
pub fn equal_power_rate_constant(
    b: &ParamBounds,
    model: &SystemModel,
    sigma_n2: f64,
    budget: PowerBudget,
) -> Result<f64> {
    model.require_stable()?;
    let g = match budget {
        PowerBudget::PerSensor(g) | PowerBudget::Total(g) => g,
    };
    let f = model.sigma_w2 / (1.0 - model.a * model.a);
    let kappa_min = b.c_min * b.c_min * f + b.sigma_min2;
    let kappa_max = b.c_max * b.c_max * f + b.sigma_max2;
    let a2 = model.a * model.a;
    Ok(
        a2 * (g * b.h_max * b.h_max * b.sigma_max2 / kappa_min + sigma_n2)
            / (g * b.h_min * b.h_min * b.c_min * b.c_min / kappa_max),
    )
}

/// Best possible covariance for these sensors: noiseless fusion center,
/// unit channels and unit amplification, `S = sum c_i^2 / sigma_i^2`.
pub fn ideal_rate_bound(sensors: &SensorSet, model: &SystemModel) -> Result<f64> {
    let s: f64 = sensors.iter().map(|s| s.c * s.c / s.sigma_v2).sum();
    steady_state_from_snr(s, model)
}

/// One parameter set of the alternating-blocks construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockParams {
    pub c: f64,
    pub sigma_v2: f64,
    pub h: f64,
}

/// Orthogonal scheme, `alpha = 1/sqrt(M)`, with consecutive blocks of
/// `10^j` sensors alternating between two parameter sets.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingBlocks {
    pub first: BlockParams,
    pub second: BlockParams,
    pub model: SystemModel,
    pub sigma_n2: f64,
    pub exponents: std::ops::RangeInclusive<u32>,
}

impl Default for AlternatingBlocks {
    fn default() -> Self {
        Self {
            first: BlockParams {
                c: 1.0,
                sigma_v2: 1.0,
                h: 1.0,
            },
            second: BlockParams {
                c: 1.0,
                sigma_v2: 1.0,
                h: 0.5,
            },
            model: SystemModel {
                a: 0.9,
                sigma_w2: 1.0,
            },
            sigma_n2: 1.0,
            exponents: 1..=5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// `(M, P^o)` at the end of every block.
    pub points: Vec<(usize, f64)>,
    /// Smallest jump between consecutive block ends.
    pub gap: f64,
}

/// Steady states at the end of each block. A sequence converging to a limit
/// would have consecutive jumps shrinking to zero; here they do not.
pub fn nonconvergence_witness(cfg: &AlternatingBlocks) -> Result<Witness> {
    let mut sensors = Vec::new();
    let mut h = Vec::new();
    let mut ends = Vec::new();
    for (j, e) in cfg.exponents.clone().enumerate() {
        let p = if j % 2 == 0 { cfg.first } else { cfg.second };
        let n = 10usize.pow(e);
        sensors.extend(std::iter::repeat(Sensor::new(p.c, p.sigma_v2)).take(n));
        h.extend(std::iter::repeat(p.h).take(n));
        ends.push(sensors.len());
    }
    let noise = NoiseModel::new(cfg.sigma_n2)?;
    let mut points = Vec::with_capacity(ends.len());
    for &m in &ends {
        let set = SensorSet::new(sensors[..m].to_vec())?;
        let alpha = vec![1.0 / (m as f64).sqrt(); m];
        let s = orth_snr(&alpha, &h[..m], &set, &noise)?.snr;
        points.push((m, steady_state_from_snr(s, &cfg.model)?));
    }
    let gap = points
        .windows(2)
        .map(|w| (w[1].1 - w[0].1).abs())
        .fold(f64::INFINITY, f64::min);
    Ok(Witness { points, gap })
}

/// Exact multi-access steady state for given amplifications and channels.
pub fn exact_mac(
    alphas: &[f64],
    h: &[f64],
    sensors: &SensorSet,
    noise: &NoiseModel,
    model: &SystemModel,
) -> Result<f64> {
    steady_state_from_snr(mac_snr(alphas, h, sensors, noise)?.snr, model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> SymmetricParams {
        SymmetricParams::new(1.0, 1.0, 0.8, SystemModel::new(0.8, 1.5).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn leading_terms() {
        let p = fig1();
        assert!((asympt_mac_noscale(20, &p).unwrap() - 1.532).abs() < 1e-12);
        assert!((asympt_orth_noscale(20, &p).unwrap() - 1.582).abs() < 1e-12);
        assert_eq!(
            asympt_mac_scaled(20, &p).unwrap(),
            asympt_orth_noscale(20, &p).unwrap()
        );
        let memoryless = SymmetricParams {
            model: SystemModel::new(0.0, 1.5).unwrap(),
            ..p
        };
        assert_eq!(asympt_mac_noscale(7, &memoryless).unwrap(), 1.5);
        let quiet = SymmetricParams { sigma_n2: 0.0, ..p };
        assert_eq!(
            asympt_orth_noscale(13, &quiet).unwrap(),
            asympt_mac_noscale(13, &quiet).unwrap()
        );
    }

    #[test]
    fn scaled_orth_limit() {
        let p = fig1();
        let l = asympt_orth_scaled_limit(&p).unwrap();
        let via_snr = steady_state_from_snr(0.64, &p.model).unwrap();
        assert!((l.limit - via_snr).abs() < 1e-12);
        assert!(l.limit > 1.5);
        let quiet = SymmetricParams { sigma_n2: 0.0, ..p };
        assert_eq!(asympt_orth_scaled_limit(&quiet).unwrap().limit, 1.5);
    }

    #[test]
    fn equal_power_examples() {
        let s = SensorSet::symmetric(3, 1.0, 1.0).unwrap();
        let a = equal_power_alphas(
            &s,
            &SystemModel::new(0.0, 1.0).unwrap(),
            PowerBudget::PerSensor(1.0),
        )
        .unwrap();
        assert!(a.alphas.iter().all(|x| (x - 0.5f64.sqrt()).abs() < 1e-15));
        let m = SystemModel::new(0.9, 1.0).unwrap();
        let a = equal_power_alphas(&s, &m, PowerBudget::PerSensor(2.0)).unwrap();
        assert!((a.alphas[0].powi(2) - 2.0 * 0.19 / 1.19).abs() < 1e-12);
        let t = equal_power_alphas(&s, &m, PowerBudget::Total(6.0)).unwrap();
        assert_eq!(a, t);
    }

    #[test]
    fn fig2_bounds_at_100() {
        let b = ParamBounds::new((0.5, 1.0), (0.5, 1.0), (0.5, 1.0)).unwrap();
        let m = SystemModel::new(0.9, 1.0).unwrap();
        let (lo, hi) = general_bounds(100, &b, &m, 1.0, Scaling::InvSqrtM).unwrap();
        assert!((lo - (1.0 + 0.81 * (0.25 * 0.5 + 1.0) / 100.0)).abs() < 1e-12);
        assert!((hi - 1.2592).abs() < 1e-12);
    }

    #[test]
    fn ideal_bound_example() {
        let s = SensorSet::symmetric(10, 1.0, 1.0).unwrap();
        let p = ideal_rate_bound(&s, &SystemModel::new(0.9, 1.0).unwrap()).unwrap();
        // Fixed-point oracle of the Riccati map at S = 10.
        assert!((p - 1.074_101_1).abs() < 1e-7);
    }
}
