//! Fading channels with full CSI and greedy per-step power allocation.
//!
//! Each sensor rotates its transmission by the conjugate channel phase, so
//! with CSI only `|h_{i,k}|` enters the filter. At every step the static
//! allocation problem is re-solved with the current prior covariance `P_k`
//! in place of `D` on the left of the covariance constraint.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::alloc::{self, AllocationProblem, AllocationSolution, Constraint, Objective};
use crate::error::{Error, Result};
use crate::kalman::{correct, riccati_step_snr, FilterStep, FilterTrace, Scheme, Simulator};
use crate::model::{power_factor, ChannelRealization, NoiseModel, SensorSet, SystemModel};
use crate::rng;

/// Rician fading through Gaussian components: real and imaginary parts are
/// `d_i^-exponent * N(mu_i, variance)`, independent over time and sensors.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingModel {
    pub distances: Vec<f64>,
    pub means: Vec<f64>,
    pub variance: f64,
    pub path_loss_exponent: f64,
}

impl FadingModel {
    pub fn new(distances: Vec<f64>, means: Vec<f64>) -> Result<Self> {
        Self::with_spread(distances, means, 1.0, 2.0)
    }

    pub fn with_spread(
        distances: Vec<f64>,
        means: Vec<f64>,
        variance: f64,
        path_loss_exponent: f64,
    ) -> Result<Self> {
        if distances.len() != means.len() {
            return Err(Error::Dimension(format!(
                "{} distances, {} means",
                distances.len(),
                means.len()
            )));
        }
        if distances.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::Domain("distances must be positive".into()));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Domain("channel means must be finite".into()));
        }
        if !(variance > 0.0) || !variance.is_finite() || !path_loss_exponent.is_finite() {
            return Err(Error::Domain(format!(
                "need variance > 0 and finite exponent, got {variance}, {path_loss_exponent}"
            )));
        }
        Ok(Self {
            distances,
            means,
            variance,
            path_loss_exponent,
        })
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// `d_i^-exponent`.
    pub fn gain(&self, i: usize) -> f64 {
        self.distances[i].powf(-self.path_loss_exponent)
    }

    /// Mean of the complex channel, `g_i (mu_i + i mu_i)`.
    pub fn mean(&self, i: usize) -> Complex64 {
        let g = self.gain(i);
        Complex64::new(g * self.means[i], g * self.means[i])
    }

    /// Variance of each of the real and imaginary parts.
    pub fn component_variance(&self, i: usize) -> f64 {
        let g = self.gain(i);
        g * g * self.variance
    }
}

/// Channel draws for one realization, independent per sensor stream.
pub fn sample_channels_for(
    fading: &FadingModel,
    steps: usize,
    seed: u64,
    realization: u64,
) -> Vec<ChannelRealization> {
    let m = fading.len();
    let sd = fading.variance.sqrt();
    let mut per_sensor: Vec<Vec<Complex64>> = (0..m)
        .map(|i| {
            let mut r = rng::stream(seed, realization, rng::purpose::CHANNEL + i as u64);
            let n = Normal::new(fading.means[i], sd).expect("validated variance");
            let g = fading.gain(i);
            (0..steps)
                .map(|_| Complex64::new(g * n.sample(&mut r), g * n.sample(&mut r)))
                .collect()
        })
        .collect();
    (0..steps)
        .map(|k| {
            ChannelRealization::Complex(
                per_sensor
                    .iter_mut()
                    .map(|v| std::mem::take(&mut v[k]))
                    .collect(),
            )
        })
        .collect()
}

/// `steps` channel realizations; deterministic in `seed`.
pub fn sample_channels(fading: &FadingModel, steps: usize, seed: u64) -> Vec<ChannelRealization> {
    sample_channels_for(fading, steps, seed, 0)
}

/// What to do when a step cannot meet the covariance target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfeasiblePolicy {
    /// Abort with the infeasibility error.
    Strict,
    /// Spend `power_cap` as well as possible and flag the step.
    BestEffort { power_cap: f64 },
}

impl Default for InfeasiblePolicy {
    fn default() -> Self {
        InfeasiblePolicy::BestEffort { power_cap: 1.0 }
    }
}

/// Per-step constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepConstraint {
    /// Keep the next prior covariance at most `D`.
    MaxCovariance(f64),
    /// Spend exactly `gamma_total` per step.
    TotalPower(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyRunConfig {
    pub steps: usize,
    pub constraint: StepConstraint,
    pub scheme: Scheme,
    pub seed: u64,
    pub realization: u64,
    /// Covariance before the first allocation; defaults to the stationary prior.
    pub p0: Option<f64>,
    pub policy: InfeasiblePolicy,
}

impl GreedyRunConfig {
    pub fn new(steps: usize, constraint: StepConstraint, scheme: Scheme, seed: u64) -> Self {
        Self {
            steps,
            constraint,
            scheme,
            seed,
            realization: 0,
            p0: None,
            policy: InfeasiblePolicy::default(),
        }
    }
}

/// Outcome of one greedy step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub solution: AllocationSolution,
    pub p_next: f64,
    pub feasible: bool,
}

fn generic_problem(
    model: &SystemModel,
    sensors: &SensorSet,
    h: &[f64],
    noise: &NoiseModel,
    objective: Objective,
    constraint: Constraint,
) -> Result<AllocationProblem> {
    if h.len() != sensors.len() {
        return Err(Error::Dimension(format!(
            "{} channels for {} sensors",
            h.len(),
            sensors.len()
        )));
    }
    let kappa = sensors
        .iter()
        .map(|s| power_factor(s, model))
        .collect::<Result<Vec<_>>>()?;
    let rho = sensors.iter().zip(h).map(|(s, h)| h * s.c).collect();
    let tau = sensors
        .iter()
        .zip(h)
        .map(|(s, h)| h * h * s.sigma_v2)
        .collect();
    AllocationProblem::new(objective, kappa, rho, tau, noise.sigma_n2, constraint)
}

fn zero_solution(problem: &AllocationProblem) -> Result<AllocationSolution> {
    let m = problem.len();
    let e = alloc::evaluate_allocation(problem, &vec![0.0; m])?;
    Ok(AllocationSolution {
        objective: Some(problem.objective),
        alphas: vec![0.0; m],
        alphas_sq: vec![0.0; m],
        powers: vec![0.0; m],
        total_power: 0.0,
        lambda: 0.0,
        mu: None,
        mu_closed_form: None,
        m1: matches!(problem.objective.scheme(), Scheme::Orthogonal).then_some(0),
        constraint_value: e.constraint,
        snr: 0.0,
        order: None,
    })
}

/// Cheapest allocation keeping `P_{k+1} <= D`, given channel magnitudes `h`.
///
/// The constraint becomes `S_k >= x / y` with `x = a^2 P_k + sigma_w2 - D`
/// and `y = P_k (D - sigma_w2)`. If `x <= 0` no transmission is needed.
pub fn greedy_min_power_step(
    p_k: f64,
    model: &SystemModel,
    sensors: &SensorSet,
    h: &[f64],
    noise: &NoiseModel,
    d: f64,
    scheme: Scheme,
) -> Result<(AllocationSolution, f64)> {
    model.require_stable()?;
    if !(d > model.sigma_w2) {
        return Err(Error::Domain(format!(
            "covariance target D = {d} must exceed sigma_w2 = {}",
            model.sigma_w2
        )));
    }
    if !(p_k > 0.0) {
        return Err(Error::Domain(format!(
            "prior covariance must be positive, got {p_k}"
        )));
    }
    let x = model.a * model.a * p_k + model.sigma_w2 - d;
    let y = p_k * (d - model.sigma_w2);
    let objective = Objective::new(scheme, true);
    if x <= 0.0 {
        let placeholder = Constraint::Target { x: 1.0, y };
        let problem = generic_problem(model, sensors, h, noise, objective, placeholder)?;
        return Ok((zero_solution(&problem)?, riccati_step_snr(p_k, 0.0, model)));
    }
    let problem = generic_problem(
        model,
        sensors,
        h,
        noise,
        objective,
        Constraint::Target { x, y },
    )?;
    let sol = alloc::solve(&problem)?;
    let p_next = riccati_step_snr(p_k, sol.snr, model);
    Ok((sol, p_next))
}

/// Smallest next covariance for a per-step power budget.
pub fn greedy_min_cov_step(
    p_k: f64,
    model: &SystemModel,
    sensors: &SensorSet,
    h: &[f64],
    noise: &NoiseModel,
    gamma_total: f64,
    scheme: Scheme,
) -> Result<(AllocationSolution, f64)> {
    model.require_stable()?;
    let objective = Objective::new(scheme, false);
    let problem = generic_problem(
        model,
        sensors,
        h,
        noise,
        objective,
        Constraint::Budget(gamma_total),
    )?;
    let sol = alloc::solve(&problem)?;
    let p_next = riccati_step_snr(p_k, sol.snr, model);
    Ok((sol, p_next))
}

/// One greedy step under the configured constraint and policy.
#[allow(clippy::too_many_arguments)]
pub fn greedy_step(
    p_k: f64,
    model: &SystemModel,
    sensors: &SensorSet,
    h: &[f64],
    noise: &NoiseModel,
    constraint: StepConstraint,
    scheme: Scheme,
    policy: InfeasiblePolicy,
) -> Result<StepOutcome> {
    match constraint {
        StepConstraint::TotalPower(g) => {
            let (solution, p_next) = greedy_min_cov_step(p_k, model, sensors, h, noise, g, scheme)?;
            Ok(StepOutcome {
                solution,
                p_next,
                feasible: true,
            })
        }
        StepConstraint::MaxCovariance(d) => {
            match greedy_min_power_step(p_k, model, sensors, h, noise, d, scheme) {
                Ok((solution, p_next)) => Ok(StepOutcome {
                    solution,
                    p_next,
                    feasible: true,
                }),
                Err(e @ Error::Infeasible { .. }) => match policy {
                    InfeasiblePolicy::Strict => Err(e),
                    InfeasiblePolicy::BestEffort { power_cap } => {
                        let (solution, p_next) =
                            greedy_min_cov_step(p_k, model, sensors, h, noise, power_cap, scheme)?;
                        Ok(StepOutcome {
                            solution,
                            p_next,
                            feasible: false,
                        })
                    }
                },
                Err(e) => Err(e),
            }
        }
    }
}

/// A greedy trajectory. Trace row `k` holds the prior `P_k` and the powers
/// spent at `k`; `final_p` is the prior after the last step.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyRun {
    pub trace: FilterTrace,
    pub final_p: f64,
    pub infeasible_steps: usize,
}

impl GreedyRun {
    /// Mean of `P_1 .. P_steps`, the covariances produced by the allocations.
    pub fn time_average_covariance(&self) -> f64 {
        let mut ps: Vec<f64> = self.trace.steps[1..].iter().map(|s| s.p).collect();
        ps.push(self.final_p);
        crate::stats::pairwise_sum(&ps) / ps.len() as f64
    }

    pub fn time_average_power(&self) -> f64 {
        let t: Vec<f64> = self.trace.steps.iter().map(|s| s.total_power()).collect();
        crate::stats::pairwise_sum(&t) / t.len() as f64
    }

    /// Covariances after each allocation, `P_1 .. P_steps`.
    pub fn produced_covariances(&self) -> Vec<f64> {
        let mut ps: Vec<f64> = self.trace.steps[1..].iter().map(|s| s.p).collect();
        ps.push(self.final_p);
        ps
    }
}

/// Runs the greedy allocation along a seeded fading trajectory, filtering
/// simulated measurements with the per-step allocations.
pub fn simulate_greedy(
    model: &SystemModel,
    sensors: &SensorSet,
    noise: &NoiseModel,
    fading: &FadingModel,
    config: &GreedyRunConfig,
) -> Result<GreedyRun> {
    model.require_stable()?;
    if config.steps == 0 {
        return Err(Error::Domain("steps must be >= 1".into()));
    }
    if fading.len() != sensors.len() {
        return Err(Error::Dimension(format!(
            "fading model has {} sensors, sensor set {}",
            fading.len(),
            sensors.len()
        )));
    }
    if let StepConstraint::MaxCovariance(d) = config.constraint {
        alloc::target_constants(model, d)?;
    }
    let channels = sample_channels_for(fading, config.steps, config.seed, config.realization);
    let ex2 = model.stationary_state_variance()?;
    let mut sim = Simulator::new(config.seed, config.realization, ex2, sensors.len());
    let mut p = config.p0.unwrap_or(ex2);
    let mut x_hat = 0.0;
    let mut steps = Vec::with_capacity(config.steps);
    let mut infeasible = 0;
    for (k, ch) in channels.iter().enumerate() {
        let h = ch.magnitudes();
        let out = greedy_step(
            p,
            model,
            sensors,
            &h,
            noise,
            config.constraint,
            config.scheme,
            config.policy,
        )?;
        infeasible += usize::from(!out.feasible);
        let alphas = &out.solution.alphas;
        let z = sim.measure(config.scheme, alphas, &h, sensors, noise);
        steps.push(FilterStep {
            k,
            x_hat,
            p,
            powers: out.solution.powers.clone(),
            x_true: Some(sim.x),
            feasible: Some(out.feasible),
        });
        let (x_post, p_post) = correct(config.scheme, x_hat, p, &z, alphas, &h, sensors, noise)?;
        x_hat = model.a * x_post;
        p = model.a * model.a * p_post + model.sigma_w2;
        debug_assert!((p - out.p_next).abs() <= 1e-9 * p.max(1.0));
        p = out.p_next;
        sim.advance(model);
    }
    Ok(GreedyRun {
        trace: FilterTrace {
            scheme: config.scheme,
            steps,
        },
        final_p: p,
        infeasible_steps: infeasible,
    })
}

/// Draws `mu_i ~ U[lo, hi]` and `d_i ~ U[d_lo, d_hi]`.
pub fn random_fading(
    r: &mut impl Rng,
    m: usize,
    (d_lo, d_hi): (f64, f64),
    (mu_lo, mu_hi): (f64, f64),
) -> Result<FadingModel> {
    let d = (0..m).map(|_| r.gen_range(d_lo..=d_hi)).collect();
    let mu = (0..m).map(|_| r.gen_range(mu_lo..=mu_hi)).collect();
    FadingModel::new(d, mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m09() -> SystemModel {
        SystemModel::new(0.9, 1.0).unwrap()
    }

    #[test]
    fn degenerate_channel_is_its_mean() {
        let f = FadingModel::with_spread(vec![2.0], vec![0.7], 1e-18, 2.0).unwrap();
        for ch in sample_channels(&f, 5, 1) {
            let ChannelRealization::Complex(v) = ch else {
                panic!()
            };
            assert!((v[0] - Complex64::new(0.175, 0.175)).norm() < 1e-9);
        }
    }

    #[test]
    fn seeded_channels_repeat() {
        let f = FadingModel::new(vec![20.0, 50.0], vec![0.5, 1.0]).unwrap();
        assert_eq!(sample_channels(&f, 10, 4), sample_channels(&f, 10, 4));
        assert_ne!(sample_channels(&f, 10, 4), sample_channels(&f, 10, 5));
    }

    #[test]
    fn min_power_step_mapping() {
        let s = SensorSet::symmetric(3, 1.0, 1.0).unwrap();
        let n = NoiseModel::new(1.0).unwrap();
        let p0 = m09().stationary_state_variance().unwrap();
        let (sol, p1) =
            greedy_min_power_step(p0, &m09(), &s, &[1.0; 3], &n, 2.0, Scheme::MultiAccess).unwrap();
        assert!((p1 - 2.0).abs() < 1e-9);
        let x = 0.81 * p0 + 1.0 - 2.0;
        assert!((x - 3.263158).abs() < 1e-6);
        assert!((sol.constraint_value - x / p0).abs() < 1e-9);
    }

    #[test]
    fn weak_prior_needs_no_power() {
        let s = SensorSet::symmetric(2, 1.0, 1.0).unwrap();
        let n = NoiseModel::new(1.0).unwrap();
        let (sol, p1) =
            greedy_min_power_step(1.0, &m09(), &s, &[1.0; 2], &n, 2.0, Scheme::Orthogonal).unwrap();
        assert_eq!(sol.total_power, 0.0);
        assert!((p1 - 1.81).abs() < 1e-12);
    }

    #[test]
    fn tiny_budget_is_open_loop() {
        let s = SensorSet::symmetric(2, 1.0, 1.0).unwrap();
        let n = NoiseModel::new(1.0).unwrap();
        let (_, p1) =
            greedy_min_cov_step(3.0, &m09(), &s, &[1.0; 2], &n, 1e-14, Scheme::MultiAccess)
                .unwrap();
        assert!((p1 - (0.81 * 3.0 + 1.0)).abs() < 1e-10);
    }

    #[test]
    fn constant_channels_give_constant_powers() {
        let s = SensorSet::symmetric(3, 1.0, 1.0).unwrap();
        let n = NoiseModel::new(0.01).unwrap();
        let f = FadingModel::with_spread(vec![1.0; 3], vec![0.6, 0.8, 1.0], 1e-18, 2.0).unwrap();
        let cfg =
            GreedyRunConfig::new(6, StepConstraint::MaxCovariance(2.0), Scheme::Orthogonal, 3);
        let run = simulate_greedy(&m09(), &s, &n, &f, &cfg).unwrap();
        let t = &run.trace.steps;
        for w in t[1..].windows(2) {
            for (a, b) in w[0].powers.iter().zip(&w[1].powers) {
                assert!((a - b).abs() < 1e-6 * a.max(1e-12));
            }
        }
        assert_eq!(run.infeasible_steps, 0);
    }

    #[test]
    fn strict_policy_surfaces_infeasibility() {
        let s = SensorSet::symmetric(1, 1.0, 10.0).unwrap();
        let n = NoiseModel::new(1.0).unwrap();
        let f = FadingModel::new(vec![50.0], vec![0.5]).unwrap();
        let mut cfg = GreedyRunConfig::new(
            3,
            StepConstraint::MaxCovariance(1.05),
            Scheme::MultiAccess,
            1,
        );
        cfg.policy = InfeasiblePolicy::Strict;
        assert!(matches!(
            simulate_greedy(&m09(), &s, &n, &f, &cfg),
            Err(Error::Infeasible { .. })
        ));
        cfg.policy = InfeasiblePolicy::default();
        let run = simulate_greedy(&m09(), &s, &n, &f, &cfg).unwrap();
        assert_eq!(run.infeasible_steps, 3);
        assert!(run.trace.steps.iter().all(|s| s.feasible == Some(false)));
    }
}
