//! Power allocation for amplify-and-forward sensors.
//!
//! All four problems are stated on generic constants `(x, y, kappa, rho, tau,
//! sigma_n2)`; [`build_static_problem`] maps a static scenario onto them:
//!
//! ```text
//! x = a^2 D + sigma_w2 - D      y = D (D - sigma_w2)
//! rho_i = h_i c_i               tau_i = h_i^2 sigma_i^2
//! kappa_i = c_i^2 sigma_w2 / (1 - a^2) + sigma_i^2
//! ```
//!
//! | objective               | minimize        | subject to                          |
//! |-------------------------|-----------------|-------------------------------------|
//! | `MinPowerMac`           | sum a^2 kappa   | (sum a^2 tau + sn2) x <= (sum a rho)^2 y |
//! | `MinCovarianceMac`      | -S              | sum a^2 kappa <= gamma              |
//! | `MinPowerOrth`          | sum a^2 kappa   | sum a^2 rho^2 / (a^2 tau + sn2) >= x/y |
//! | `MinCovarianceOrth`     | -S^o            | sum a^2 kappa <= gamma              |

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kalman::Scheme;
use crate::model::{power_factor, NoiseModel, SensorSet, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    MinPowerMac,
    MinCovarianceMac,
    MinPowerOrth,
    MinCovarianceOrth,
}

impl Objective {
    pub fn scheme(self) -> Scheme {
        match self {
            Objective::MinPowerMac | Objective::MinCovarianceMac => Scheme::MultiAccess,
            Objective::MinPowerOrth | Objective::MinCovarianceOrth => Scheme::Orthogonal,
        }
    }

    pub fn is_power_objective(self) -> bool {
        matches!(self, Objective::MinPowerMac | Objective::MinPowerOrth)
    }

    pub fn new(scheme: Scheme, minimize_power: bool) -> Self {
        match (scheme, minimize_power) {
            (Scheme::MultiAccess, true) => Objective::MinPowerMac,
            (Scheme::MultiAccess, false) => Objective::MinCovarianceMac,
            (Scheme::Orthogonal, true) => Objective::MinPowerOrth,
            (Scheme::Orthogonal, false) => Objective::MinCovarianceOrth,
        }
    }
}

/// Right-hand side of the problem: an SNR target or a power budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    Target { x: f64, y: f64 },
    Budget(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    pub objective: Objective,
    pub kappa: Vec<f64>,
    pub rho: Vec<f64>,
    pub tau: Vec<f64>,
    pub sigma_n2: f64,
    pub constraint: Constraint,
}

impl AllocationProblem {
    pub fn new(
        objective: Objective,
        kappa: Vec<f64>,
        rho: Vec<f64>,
        tau: Vec<f64>,
        sigma_n2: f64,
        constraint: Constraint,
    ) -> Result<Self> {
        let m = kappa.len();
        if m == 0 {
            return Err(Error::Domain(
                "allocation problem needs at least one sensor".into(),
            ));
        }
        if rho.len() != m || tau.len() != m {
            return Err(Error::Dimension(format!(
                "kappa has {m} entries, rho {}, tau {}",
                rho.len(),
                tau.len()
            )));
        }
        if kappa
            .iter()
            .chain(&tau)
            .any(|v| !(*v > 0.0) || !v.is_finite())
        {
            return Err(Error::Domain(
                "kappa and tau must be positive and finite".into(),
            ));
        }
        if rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::Domain("rho must be finite".into()));
        }
        if !(sigma_n2 > 0.0) || !sigma_n2.is_finite() {
            return Err(Error::Domain(format!(
                "sigma_n2 must be positive, got {sigma_n2}"
            )));
        }
        match (objective.is_power_objective(), constraint) {
            (true, Constraint::Target { x, y }) => {
                if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
                    return Err(Error::Domain(format!(
                        "need x > 0 and y > 0, got x = {x}, y = {y}"
                    )));
                }
            }
            (false, Constraint::Budget(g)) => {
                if !(g > 0.0) || !g.is_finite() {
                    return Err(Error::Domain(format!(
                        "power budget must be positive, got {g}"
                    )));
                }
            }
            _ => {
                return Err(Error::Domain(format!(
                    "{objective:?} does not take constraint {constraint:?}"
                )))
            }
        }
        Ok(Self {
            objective,
            kappa,
            rho,
            tau,
            sigma_n2,
            constraint,
        })
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// The SNR the constraint demands, `x / y`.
    pub fn required_snr(&self) -> Option<f64> {
        match self.constraint {
            Constraint::Target { x, y } => Some(x / y),
            Constraint::Budget(_) => None,
        }
    }

    pub fn budget(&self) -> Option<f64> {
        match self.constraint {
            Constraint::Budget(g) => Some(g),
            Constraint::Target { .. } => None,
        }
    }

    /// Same constants with a different objective and constraint.
    pub fn with(&self, objective: Objective, constraint: Constraint) -> Result<Self> {
        Self::new(
            objective,
            self.kappa.clone(),
            self.rho.clone(),
            self.tau.clone(),
            self.sigma_n2,
            constraint,
        )
    }

    /// Sensor indices sorted by `rho^2 / kappa`, best first; ties keep index
    /// order and `rho = 0` sensors are left out.
    pub fn quality_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.rho[i] != 0.0).collect();
        let q = |i: usize| self.rho[i] * self.rho[i] / self.kappa[i];
        idx.sort_by(|&i, &j| q(j).total_cmp(&q(i)));
        idx
    }
}

/// `x` and `y` for a covariance target `D`, which must lie strictly between
/// `sigma_w2` and the open-loop variance.
pub fn target_constants(model: &SystemModel, d: f64) -> Result<(f64, f64)> {
    model.require_stable()?;
    let q = model.sigma_w2;
    let hi = q / (1.0 - model.a * model.a);
    if !(d > q && d < hi) {
        return Err(Error::Domain(format!(
            "covariance target D = {d} outside the open interval ({q}, {hi})"
        )));
    }
    Ok((model.a * model.a * d + q - d, d * (d - q)))
}

/// Constraint of a static problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticConstraint {
    /// Steady-state covariance at most `D`; minimizes total power.
    MaxCovariance(f64),
    /// Total power at most `gamma_total`; minimizes covariance.
    TotalPower(f64),
}

/// Maps a static scenario onto the generic problem.
pub fn build_static_problem(
    model: &SystemModel,
    sensors: &SensorSet,
    channels: &[f64],
    noise: &NoiseModel,
    constraint: StaticConstraint,
    scheme: Scheme,
) -> Result<AllocationProblem> {
    if channels.len() != sensors.len() {
        return Err(Error::Dimension(format!(
            "{} channels for {} sensors",
            channels.len(),
            sensors.len()
        )));
    }
    let kappa = sensors
        .iter()
        .map(|s| power_factor(s, model))
        .collect::<Result<Vec<_>>>()?;
    let rho = sensors.iter().zip(channels).map(|(s, h)| h * s.c).collect();
    let tau = sensors
        .iter()
        .zip(channels)
        .map(|(s, h)| h * h * s.sigma_v2)
        .collect();
    let (objective, c) = match constraint {
        StaticConstraint::MaxCovariance(d) => {
            let (x, y) = target_constants(model, d)?;
            (Objective::new(scheme, true), Constraint::Target { x, y })
        }
        StaticConstraint::TotalPower(g) => (Objective::new(scheme, false), Constraint::Budget(g)),
    };
    AllocationProblem::new(objective, kappa, rho, tau, noise.sigma_n2, c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// `available - required`.
    pub margin: f64,
    pub required: f64,
    /// `sum rho^2 / tau`, the SNR reached with unlimited power.
    pub available: f64,
}

impl Feasibility {
    fn into_error(self) -> Error {
        Error::Infeasible {
            margin: self.margin,
            required: self.required,
            available: self.available,
        }
    }
}

/// Whether an SNR target is reachable with finite power: `sum rho^2/tau > x/y`
/// (strict). Problems with a power budget are always feasible.
pub fn feasibility(problem: &AllocationProblem) -> Feasibility {
    let available: f64 = problem
        .rho
        .iter()
        .zip(&problem.tau)
        .map(|(r, t)| r * r / t)
        .sum();
    match problem.required_snr() {
        Some(required) => Feasibility {
            feasible: available > required,
            margin: available - required,
            required,
            available,
        },
        None => Feasibility {
            feasible: true,
            margin: f64::INFINITY,
            required: 0.0,
            available,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationSolution {
    #[serde(skip)]
    pub objective: Option<Objective>,
    /// Signed amplifications: sign of `rho_i` for multi-access, non-negative
    /// for orthogonal. The global negation of a multi-access solution is
    /// equally optimal.
    #[serde(skip)]
    pub alphas: Vec<f64>,
    pub alphas_sq: Vec<f64>,
    pub powers: Vec<f64>,
    pub total_power: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// `mu` from the closed-form sum; differs from `mu` only by rounding.
    #[serde(skip)]
    pub mu_closed_form: Option<f64>,
    #[serde(rename = "M1", skip_serializing_if = "Option::is_none")]
    pub m1: Option<usize>,
    /// Achieved SNR for power objectives, total power for budget objectives.
    pub constraint_value: f64,
    /// Achieved `S` or `S^o`.
    #[serde(skip)]
    pub snr: f64,
    /// Quality ordering used by the orthogonal solvers.
    #[serde(skip)]
    pub order: Option<Vec<usize>>,
}

impl AllocationSolution {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Plain evaluation of amplifications against a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Total power for power objectives; achieved SNR for covariance
    /// objectives (which is maximized).
    pub objective: f64,
    /// Achieved SNR for power objectives; total power for covariance objectives.
    pub constraint: f64,
    pub powers: Vec<f64>,
    pub total_power: f64,
    pub snr: f64,
}

/// Multi-access SNR `(sum a rho)^2 / (sum a^2 tau + sn2)`.
pub fn generic_mac_snr(p: &AllocationProblem, alphas: &[f64]) -> f64 {
    let s: f64 = alphas.iter().zip(&p.rho).map(|(a, r)| a * r).sum();
    let r: f64 = alphas
        .iter()
        .zip(&p.tau)
        .map(|(a, t)| a * a * t)
        .sum::<f64>()
        + p.sigma_n2;
    s * s / r
}

/// Orthogonal SNR `sum a^2 rho^2 / (a^2 tau + sn2)`.
pub fn generic_orth_snr(p: &AllocationProblem, alphas_sq: &[f64]) -> f64 {
    alphas_sq
        .iter()
        .zip(&p.rho)
        .zip(&p.tau)
        .map(|((a2, r), t)| a2 * r * r / (a2 * t + p.sigma_n2))
        .sum()
}

pub fn evaluate_allocation(problem: &AllocationProblem, alphas: &[f64]) -> Result<Evaluation> {
    if alphas.len() != problem.len() {
        return Err(Error::Dimension(format!(
            "{} alphas for {} sensors",
            alphas.len(),
            problem.len()
        )));
    }
    let powers: Vec<f64> = alphas
        .iter()
        .zip(&problem.kappa)
        .map(|(a, k)| a * a * k)
        .collect();
    let total_power: f64 = powers.iter().sum();
    let snr = match problem.objective.scheme() {
        Scheme::MultiAccess => generic_mac_snr(problem, alphas),
        Scheme::Orthogonal => {
            let sq: Vec<f64> = alphas.iter().map(|a| a * a).collect();
            generic_orth_snr(problem, &sq)
        }
    };
    let (objective, constraint) = if problem.objective.is_power_objective() {
        (total_power, snr)
    } else {
        (snr, total_power)
    };
    Ok(Evaluation {
        objective,
        constraint,
        powers,
        total_power,
        snr,
    })
}

fn require(problem: &AllocationProblem, objective: Objective) -> Result<()> {
    if problem.objective != objective {
        return Err(Error::Domain(format!(
            "problem is {:?}, solver expects {objective:?}",
            problem.objective
        )));
    }
    Ok(())
}

fn finish(
    problem: &AllocationProblem,
    alphas: Vec<f64>,
    lambda: f64,
    mu: Option<f64>,
    mu_closed_form: Option<f64>,
    m1: Option<usize>,
    order: Option<Vec<usize>>,
) -> Result<AllocationSolution> {
    let e = evaluate_allocation(problem, &alphas)?;
    Ok(AllocationSolution {
        objective: Some(problem.objective),
        alphas_sq: alphas.iter().map(|a| a * a).collect(),
        alphas,
        powers: e.powers,
        total_power: e.total_power,
        lambda,
        mu,
        mu_closed_form,
        m1,
        constraint_value: e.constraint,
        snr: e.snr,
        order,
    })
}

/// Root of an increasing function on `(0, inf)` with `f(0+) < 0`.
fn increasing_root(f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut lo = 1e-12;
    while f(lo) > 0.0 {
        lo *= 0.1;
        if lo < 1e-300 {
            return Err(Error::Domain("no sign change near zero".into()));
        }
    }
    let mut hi = 1.0f64.max(lo * 10.0);
    while f(hi) <= 0.0 {
        hi *= 10.0;
        if !hi.is_finite() || hi > 1e300 {
            return Err(Error::Domain("root bracket did not close".into()));
        }
    }
    for _ in 0..400 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimum total power for the multi-access scheme under an SNR target.
///
/// Solves `sum lambda rho^2 / (kappa + lambda tau x) = 1/y` by bisection and
/// takes `alpha_i = mu rho_i / (2 (kappa_i + lambda tau_i x))` with the
/// positive `mu` that makes the constraint active. The optimal total power
/// equals `lambda sigma_n2 x`.
pub fn solve_p1(problem: &AllocationProblem) -> Result<AllocationSolution> {
    require(problem, Objective::MinPowerMac)?;
    let f = feasibility(problem);
    if !f.feasible {
        return Err(f.into_error());
    }
    let Constraint::Target { x, y } = problem.constraint else {
        unreachable!()
    };
    let (k, r, t, sn2) = (&problem.kappa, &problem.rho, &problem.tau, problem.sigma_n2);
    let lhs = |lam: f64| -> f64 {
        (0..k.len())
            .map(|i| lam * r[i] * r[i] / (k[i] + lam * t[i] * x))
            .sum::<f64>()
            - 1.0 / y
    };
    let lambda = increasing_root(lhs)?;
    let w: Vec<f64> = (0..k.len())
        .map(|i| r[i] / (2.0 * (k[i] + lambda * t[i] * x)))
        .collect();
    let s: f64 = w.iter().zip(r).map(|(w, r)| w * r).sum();
    let wtw: f64 = w.iter().zip(t).map(|(w, t)| w * w * t).sum();
    let denom = s * s * y - x * wtw;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "constraint cannot be made active at lambda = {lambda}"
        )));
    }
    let mu = (sn2 * x / denom).sqrt();
    let closed_sum: f64 = (0..k.len())
        .map(|i| r[i] * r[i] * k[i] / (4.0 * lambda * (k[i] + lambda * t[i] * x).powi(2)))
        .sum();
    let mu_closed = (sn2 * x / closed_sum).sqrt();
    let alphas = w.iter().map(|w| mu * w).collect();
    finish(
        problem,
        alphas,
        lambda,
        Some(mu),
        Some(mu_closed),
        None,
        None,
    )
}

/// Maximum multi-access SNR under a total power budget:
/// `alpha_i^2 = gamma u_i / sum_j u_j kappa_j`, `u_i = rho_i^2 / (kappa_i + gamma tau_i / sigma_n2)^2`,
/// with the sign of `rho_i`. `lambda` reports the normalizer `gamma / sum u_j kappa_j`.
pub fn solve_p2(problem: &AllocationProblem) -> Result<AllocationSolution> {
    require(problem, Objective::MinCovarianceMac)?;
    let g = problem.budget().unwrap();
    let theta = g / problem.sigma_n2;
    let u: Vec<f64> = (0..problem.len())
        .map(|i| {
            let d = problem.kappa[i] + theta * problem.tau[i];
            problem.rho[i] * problem.rho[i] / (d * d)
        })
        .collect();
    let norm: f64 = u.iter().zip(&problem.kappa).map(|(u, k)| u * k).sum();
    if !(norm > 0.0) {
        // All rho vanish: no allocation produces any SNR; spend nothing.
        return finish(
            problem,
            vec![0.0; problem.len()],
            0.0,
            None,
            None,
            None,
            None,
        );
    }
    let scale = g / norm;
    let alphas = u
        .iter()
        .zip(&problem.rho)
        .map(|(u, r)| r.signum() * (scale * u).sqrt())
        .collect();
    finish(problem, alphas, scale, None, None, None, None)
}

/// `alpha_i^2 = (t |rho_i| sigma_n / sqrt(kappa_i) - sigma_n2)^+ / tau_i`.
fn waterfill(p: &AllocationProblem, level: f64) -> Vec<f64> {
    let sn = p.sigma_n2.sqrt();
    (0..p.len())
        .map(|i| {
            let v = level * p.rho[i].abs() * sn / p.kappa[i].sqrt() - p.sigma_n2;
            v.max(0.0) / p.tau[i]
        })
        .collect()
}

/// Quality `|rho_i| / sqrt(kappa_i)`; sensor `i` is active iff `level * q_i > sigma_n`.
fn quality(p: &AllocationProblem, i: usize) -> f64 {
    p.rho[i].abs() / p.kappa[i].sqrt()
}

/// Water level for the first `m` sensors of `order`, or `None` if the prefix
/// cannot meet the constraint.
fn prefix_level(p: &AllocationProblem, order: &[usize], m: usize) -> Option<f64> {
    let sn = p.sigma_n2.sqrt();
    let b: f64 = order[..m]
        .iter()
        .map(|&i| p.rho[i].abs() * p.kappa[i].sqrt() * sn / p.tau[i])
        .sum();
    match p.constraint {
        Constraint::Target { x, y } => {
            let a: f64 = order[..m]
                .iter()
                .map(|&i| p.rho[i] * p.rho[i] / p.tau[i])
                .sum::<f64>()
                - x / y;
            (a > 0.0).then(|| b / a)
        }
        Constraint::Budget(g) => {
            let c: f64 = order[..m]
                .iter()
                .map(|&i| p.kappa[i] * p.sigma_n2 / p.tau[i])
                .sum();
            Some((g + c) / b)
        }
    }
}

/// The active-set conditions for `M1 = m`: prefix feasible (always true for a
/// budget), the `m`-th sensor above threshold, the `(m+1)`-th not above it.
pub fn m1_conditions(problem: &AllocationProblem, order: &[usize], m: usize) -> [bool; 3] {
    if m == 0 || m > order.len() {
        return [false; 3];
    }
    let sn = problem.sigma_n2.sqrt();
    match prefix_level(problem, order, m) {
        None => [false, false, false],
        Some(level) => {
            let last = level * quality(problem, order[m - 1]) > sn;
            let next = match order.get(m) {
                Some(&j) => {
                    // The (m+1)-prefix level is what the printed condition uses.
                    match prefix_level(problem, order, m + 1) {
                        Some(l2) => l2 * quality(problem, j) <= sn,
                        None => true,
                    }
                }
                None => true,
            };
            [true, last, next]
        }
    }
}

fn solve_orth(problem: &AllocationProblem) -> Result<AllocationSolution> {
    let order = problem.quality_order();
    let p = problem;
    let sn = p.sigma_n2.sqrt();
    if order.is_empty() {
        return finish(p, vec![0.0; p.len()], 0.0, None, None, Some(0), Some(order));
    }
    let mut found = None;
    for m in 1..=order.len() {
        if m1_conditions(p, &order, m) == [true; 3] {
            found = Some((m, prefix_level(p, &order, m).unwrap()));
            break;
        }
    }
    let (m1, level) = match found {
        Some(v) => v,
        None => {
            // Rounding at a threshold can defeat the scan; fall back to the
            // monotone dual equation in the water level.
            let level = dual_level(p)?;
            let m = order
                .iter()
                .take_while(|&&i| level * quality(p, i) > sn)
                .count();
            (m, level)
        }
    };
    let alphas: Vec<f64> = waterfill(p, level).iter().map(|a| a.sqrt()).collect();
    let lambda = match p.constraint {
        Constraint::Target { .. } => level * level,
        Constraint::Budget(_) => 1.0 / (level * level),
    };
    finish(p, alphas, lambda, None, None, Some(m1), Some(order))
}

fn dual_level(p: &AllocationProblem) -> Result<f64> {
    match p.constraint {
        Constraint::Target { x, y } => {
            increasing_root(|l| generic_orth_snr(p, &waterfill(p, l)) - x / y)
        }
        Constraint::Budget(g) => increasing_root(|l| {
            waterfill(p, l)
                .iter()
                .zip(&p.kappa)
                .map(|(a, k)| a * k)
                .sum::<f64>()
                - g
        }),
    }
}

/// Minimum total power for the orthogonal scheme under an SNR target
/// (water-filling over the `rho^2/kappa` ordering). `lambda` is the squared
/// water level.
pub fn solve_p3(problem: &AllocationProblem) -> Result<AllocationSolution> {
    require(problem, Objective::MinPowerOrth)?;
    let f = feasibility(problem);
    if !f.feasible {
        return Err(f.into_error());
    }
    solve_orth(problem)
}

/// Maximum orthogonal SNR under a total power budget.
pub fn solve_p4(problem: &AllocationProblem) -> Result<AllocationSolution> {
    require(problem, Objective::MinCovarianceOrth)?;
    solve_orth(problem)
}

/// Dispatch on the objective.
pub fn solve(problem: &AllocationProblem) -> Result<AllocationSolution> {
    match problem.objective {
        Objective::MinPowerMac => solve_p1(problem),
        Objective::MinCovarianceMac => solve_p2(problem),
        Objective::MinPowerOrth => solve_p3(problem),
        Objective::MinCovarianceOrth => solve_p4(problem),
    }
}

/// Equal per-sensor power baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualPower {
    /// Power spent by each sensor.
    pub per_sensor: f64,
    pub alphas: Vec<f64>,
    pub total_power: f64,
    pub snr: f64,
}

/// Equal power split: the whole budget for covariance objectives, the
/// smallest common power meeting the target for power objectives.
pub fn equal_power(problem: &AllocationProblem) -> Result<EqualPower> {
    let m = problem.len() as f64;
    let alphas_for = |g: f64| -> Vec<f64> {
        problem
            .kappa
            .iter()
            .zip(&problem.rho)
            .map(|(k, r)| {
                let sign = if *r < 0.0 { -1.0 } else { 1.0 };
                sign * (g / k).sqrt()
            })
            .collect()
    };
    let per_sensor = match problem.constraint {
        Constraint::Budget(g) => g / m,
        Constraint::Target { x, y } => {
            let req = x / y;
            match problem.objective.scheme() {
                Scheme::MultiAccess => {
                    let b: f64 = problem
                        .rho
                        .iter()
                        .zip(&problem.kappa)
                        .map(|(r, k)| r.abs() / k.sqrt())
                        .sum();
                    let t: f64 = problem
                        .tau
                        .iter()
                        .zip(&problem.kappa)
                        .map(|(t, k)| t / k)
                        .sum();
                    let d = b * b - req * t;
                    if !(d > 0.0) {
                        return Err(Error::Infeasible {
                            margin: d,
                            required: req,
                            available: b * b / t,
                        });
                    }
                    problem.sigma_n2 * req / d
                }
                Scheme::Orthogonal => {
                    let f = feasibility(problem);
                    if !f.feasible {
                        return Err(f.into_error());
                    }
                    increasing_root(|g| {
                        let sq: Vec<f64> = problem.kappa.iter().map(|k| g / k).collect();
                        generic_orth_snr(problem, &sq) - req
                    })?
                }
            }
        }
    };
    let alphas = alphas_for(per_sensor);
    let snr = evaluate_allocation(problem, &alphas)?.snr;
    Ok(EqualPower {
        per_sensor,
        alphas,
        total_power: per_sensor * m,
        snr,
    })
}
