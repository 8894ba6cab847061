//! The six figure experiments.
//!
//! Figures 3 to 6 draw sensor noise variances from chi-square(1), distances
//! uniformly in [20, 100] m with channel gain `d^-2`, and (for fading) channel
//! means uniformly in [1/2, 1]. Each realization draws one population of the
//! largest grid size and uses its first `M` sensors at every grid point, so
//! curves are paired across `M` as well as across methods.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use snkf_core::alloc::{self, build_static_problem, StaticConstraint};
use snkf_core::asymptotics::{
    asympt_mac_scaled, exact_mac, exact_symmetric, general_bounds, ParamBounds, Scaling,
    SymmetricParams,
};
use snkf_core::fading::{simulate_greedy, FadingModel, GreedyRunConfig, StepConstraint};
use snkf_core::kalman::steady_state_from_snr;
use snkf_core::nocsi::{allocate_nocsi, ChannelStatistics};
use snkf_core::rng::{self, purpose};
use snkf_core::stats::summarize;
use snkf_core::{Error, NoiseModel, Scheme, Sensor, SensorSet, SystemModel};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::output::Dataset;

/// Covariance target of the (a) panels of figures 3 to 6.
pub const FIG_TARGET_D: f64 = 2.0;
/// Power budget of the (b) panels of figures 3 to 6.
pub const FIG_BUDGET: f64 = 1e-3;
/// Draws of chi-square(1) below this are redrawn.
pub const CHI2_FLOOR: f64 = 1e-8;

pub fn reproduce(cfg: &ExperimentConfig) -> Result<Vec<Dataset>, CliError> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Fig1 => fig1(cfg),
        Experiment::Fig2 => fig2(cfg),
        Experiment::Fig3 => static_allocation(cfg, Scheme::MultiAccess),
        Experiment::Fig4 => static_allocation(cfg, Scheme::Orthogonal),
        Experiment::Fig5 => fading_comparison(cfg, Scheme::MultiAccess),
        Experiment::Fig6 => fading_comparison(cfg, Scheme::Orthogonal),
    }
}

/// Parameters of the symmetric network in figure 1.
pub fn fig1_params() -> SymmetricParams {
    SymmetricParams::new(
        1.0,
        1.0,
        0.8,
        SystemModel::new(0.8, 1.5).expect("valid"),
        1.0,
    )
    .expect("valid")
}

fn fig1(cfg: &ExperimentConfig) -> Result<Vec<Dataset>, CliError> {
    let p = fig1_params();
    let q = p.model.sigma_w2;
    let coefficient = p.model.a.powi(2) * (p.sigma_v2 + p.sigma_n2 / (p.h * p.h)) / (p.c * p.c);
    let mut a = Dataset::new("fig1a");
    let mut b = Dataset::new("fig1b");
    for &m in &cfg.m_grid {
        let exact = exact_symmetric(m, &p, Scheme::MultiAccess, Scaling::InvSqrtM)?;
        a.push(m, exact, 0.0, "exact");
        a.push(m, asympt_mac_scaled(m, &p)?, 0.0, "asymptotic");
        b.push(m, exact - q, 0.0, "exact_gap");
        b.push(m, coefficient / m as f64, 0.0, "asymptotic_gap");
    }
    Ok(vec![a, b])
}

fn max_m(cfg: &ExperimentConfig) -> usize {
    cfg.m_grid.iter().copied().max().unwrap_or(0)
}

fn fig2(cfg: &ExperimentConfig) -> Result<Vec<Dataset>, CliError> {
    let model = SystemModel::new(0.9, 1.0)?;
    let noise = NoiseModel::new(1.0)?;
    let bounds = ParamBounds::new((0.5, 1.0), (0.5, 1.0), (0.5, 1.0))?;
    let n = max_m(cfg);
    let per_realization: Vec<Result<Vec<f64>, Error>> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(cfg.seed, r, purpose::PARAMETERS);
            let draws: Vec<(f64, f64, f64)> = (0..n)
                .map(|_| {
                    (
                        g.gen_range(0.5..=1.0),
                        g.gen_range(0.5..=1.0),
                        g.gen_range(0.5..=1.0),
                    )
                })
                .collect();
            cfg.m_grid
                .iter()
                .map(|&m| {
                    let sensors =
                        SensorSet::new(draws[..m].iter().map(|d| Sensor::new(d.0, d.1)).collect())?;
                    let h: Vec<f64> = draws[..m].iter().map(|d| d.2).collect();
                    let alphas = vec![1.0 / (m as f64).sqrt(); m];
                    exact_mac(&alphas, &h, &sensors, &noise, &model)
                })
                .collect()
        })
        .collect();
    let per_realization: Vec<Vec<f64>> = per_realization.into_iter().collect::<Result<_, _>>()?;
    let mut d = Dataset::new("fig2");
    let mut violations = 0usize;
    for (j, &m) in cfg.m_grid.iter().enumerate() {
        let (lo, hi) = general_bounds(m, &bounds, &model, 1.0, Scaling::InvSqrtM)?;
        let xs: Vec<f64> = per_realization.iter().map(|v| v[j]).collect();
        violations += xs.iter().filter(|&&x| x < lo || x > hi).count();
        let s = summarize(&xs);
        d.push(m, s.mean, s.stderr, "exact");
        d.push(m, lo, 0.0, "lower");
        d.push(m, hi, 0.0, "upper");
    }
    d.notes.push(format!("sandwich_violations={violations}"));
    Ok(vec![d])
}

/// One drawn sensor population.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub sigma2: Vec<f64>,
    pub distances: Vec<f64>,
    pub means: Vec<f64>,
    /// Chi-square draws rejected for falling below [`CHI2_FLOOR`].
    pub resamples: usize,
}

fn chi2_1(g: &mut ChaCha8Rng, resamples: &mut usize) -> f64 {
    loop {
        let z: f64 = g.sample(StandardNormal);
        let v = z * z;
        if v >= CHI2_FLOOR {
            return v;
        }
        *resamples += 1;
    }
}

pub fn draw_population(seed: u64, realization: u64, m: usize) -> Population {
    let mut g = rng::stream(seed, realization, purpose::PARAMETERS);
    let mut resamples = 0;
    let mut p = Population {
        sigma2: Vec::with_capacity(m),
        distances: Vec::with_capacity(m),
        means: Vec::with_capacity(m),
        resamples: 0,
    };
    for _ in 0..m {
        p.sigma2.push(chi2_1(&mut g, &mut resamples));
        p.distances.push(g.gen_range(20.0..=100.0));
        p.means.push(g.gen_range(0.5..=1.0));
    }
    p.resamples = resamples;
    p
}

fn fig_model() -> (SystemModel, NoiseModel) {
    (
        SystemModel::new(0.9, 1.0).expect("valid"),
        NoiseModel::new(1e-9).expect("valid"),
    )
}

fn sensors_of(pop: &Population, m: usize) -> Result<SensorSet, Error> {
    SensorSet::new(
        pop.sigma2[..m]
            .iter()
            .map(|&s| Sensor::new(1.0, s))
            .collect(),
    )
}

/// `None` when either method is infeasible for this draw.
type Pair = Option<(f64, f64)>;

fn skip_infeasible(r: Result<Pair, Error>) -> Result<Pair, Error> {
    match r {
        Err(Error::Infeasible { .. }) => Ok(None),
        other => other,
    }
}

/// Values of (optimal, equal power) for one population and `M`.
pub fn static_pair(
    pop: &Population,
    m: usize,
    scheme: Scheme,
    constraint: StaticConstraint,
) -> Result<Pair, Error> {
    let (model, noise) = fig_model();
    let sensors = sensors_of(pop, m)?;
    let h: Vec<f64> = pop.distances[..m].iter().map(|d| d.powi(-2)).collect();
    let p = build_static_problem(&model, &sensors, &h, &noise, constraint, scheme)?;
    skip_infeasible((|| {
        let opt = alloc::solve(&p)?;
        let eq = alloc::equal_power(&p)?;
        Ok(Some(match constraint {
            StaticConstraint::MaxCovariance(_) => (opt.total_power, eq.total_power),
            StaticConstraint::TotalPower(_) => (
                steady_state_from_snr(opt.snr, &model)?,
                steady_state_from_snr(eq.snr, &model)?,
            ),
        }))
    })())
}

/// Values of (full CSI, no CSI) for one population and `M`.
pub fn fading_pair(
    pop: &Population,
    m: usize,
    scheme: Scheme,
    constraint: StaticConstraint,
    steps: usize,
    seed: u64,
    realization: u64,
) -> Result<Pair, Error> {
    let (model, noise) = fig_model();
    let sensors = sensors_of(pop, m)?;
    let fading = FadingModel::new(pop.distances[..m].to_vec(), pop.means[..m].to_vec())?;
    let stats = ChannelStatistics::from_fading(&fading);
    let step = match constraint {
        StaticConstraint::MaxCovariance(d) => StepConstraint::MaxCovariance(d),
        StaticConstraint::TotalPower(g) => StepConstraint::TotalPower(g),
    };
    let mut gc = GreedyRunConfig::new(steps, step, scheme, seed);
    gc.realization = realization;
    skip_infeasible((|| {
        let no = allocate_nocsi(&model, &sensors, &stats, &noise, constraint, scheme)?;
        let run = simulate_greedy(&model, &sensors, &noise, &fading, &gc)?;
        Ok(Some(match constraint {
            StaticConstraint::MaxCovariance(_) => {
                (run.time_average_power(), no.solution.total_power)
            }
            StaticConstraint::TotalPower(_) => (run.time_average_covariance(), no.p_inf),
        }))
    })())
}

/// Summarizes paired per-realization values into `first`, `second` and
/// `paired_gap = second - first` curves.
fn paired_dataset(
    name: &str,
    grid: &[usize],
    values: &[Vec<Pair>],
    labels: (&str, &str),
    resamples: usize,
) -> Dataset {
    let mut d = Dataset::new(name);
    let mut excluded = Vec::new();
    for (j, &m) in grid.iter().enumerate() {
        let ok: Vec<(f64, f64)> = values.iter().filter_map(|v| v[j]).collect();
        if ok.len() < values.len() {
            excluded.push(format!("{m}:{}", values.len() - ok.len()));
        }
        if ok.is_empty() {
            continue;
        }
        let first: Vec<f64> = ok.iter().map(|p| p.0).collect();
        let second: Vec<f64> = ok.iter().map(|p| p.1).collect();
        let gap: Vec<f64> = ok.iter().map(|p| p.1 - p.0).collect();
        for (label, xs) in [
            (labels.0, &first),
            (labels.1, &second),
            ("paired_gap", &gap),
        ] {
            let s = summarize(xs);
            d.push(m, s.mean, s.stderr, label);
        }
    }
    d.notes.push(format!("realizations={}", values.len()));
    d.notes.push(format!(
        "excluded_infeasible={}",
        if excluded.is_empty() {
            "none".to_string()
        } else {
            excluded.join(";")
        }
    ));
    d.notes.push(format!("chi2_resamples={resamples}"));
    d
}

fn run_grid(
    cfg: &ExperimentConfig,
    eval: impl Fn(&Population, usize, u64) -> Result<Pair, Error> + Sync,
) -> Result<(Vec<Vec<Pair>>, usize), CliError> {
    let n = max_m(cfg);
    let out: Vec<Result<(Vec<Pair>, usize), Error>> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let pop = draw_population(cfg.seed, r, n);
            let v = cfg
                .m_grid
                .iter()
                .map(|&m| eval(&pop, m, r))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((v, pop.resamples))
        })
        .collect();
    let mut values = Vec::with_capacity(out.len());
    let mut resamples = 0;
    for o in out {
        let (v, k) = o?;
        values.push(v);
        resamples += k;
    }
    Ok((values, resamples))
}

fn static_allocation(cfg: &ExperimentConfig, scheme: Scheme) -> Result<Vec<Dataset>, CliError> {
    let fig = cfg.experiment;
    let mut sets = Vec::new();
    for (panel, c) in [
        ("a", StaticConstraint::MaxCovariance(FIG_TARGET_D)),
        ("b", StaticConstraint::TotalPower(FIG_BUDGET)),
    ] {
        let (values, resamples) = run_grid(cfg, |pop, m, _| static_pair(pop, m, scheme, c))?;
        sets.push(paired_dataset(
            &format!("{fig}{panel}"),
            &cfg.m_grid,
            &values,
            ("optimal", "equal"),
            resamples,
        ));
    }
    Ok(sets)
}

fn fading_comparison(cfg: &ExperimentConfig, scheme: Scheme) -> Result<Vec<Dataset>, CliError> {
    let fig = cfg.experiment;
    let mut sets = Vec::new();
    for (panel, c) in [
        ("a", StaticConstraint::MaxCovariance(FIG_TARGET_D)),
        ("b", StaticConstraint::TotalPower(FIG_BUDGET)),
    ] {
        let (values, resamples) = run_grid(cfg, |pop, m, r| {
            fading_pair(pop, m, scheme, c, cfg.steps, cfg.seed, r)
        })?;
        sets.push(paired_dataset(
            &format!("{fig}{panel}"),
            &cfg.m_grid,
            &values,
            ("full_csi", "no_csi"),
            resamples,
        ));
    }
    Ok(sets)
}
