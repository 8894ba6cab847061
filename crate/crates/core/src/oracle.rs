//! Slow, independent reference computations.
//!
//! Nothing here shares code paths with the solvers it checks: steady states
//! come from iterating the Riccati map, multi-access allocations from
//! multi-start local search on the unit sphere, orthogonal allocations from
//! enumerating every active set.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::alloc::{AllocationProblem, Constraint};
use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::rng;

/// Iterates `P <- a^2 P / (1 + P S) + sigma_w2` from `sigma_w2` until the
/// relative change drops below `tol`.
pub fn fixed_point_steady_state(snr: f64, model: &SystemModel, tol: f64) -> Result<f64> {
    model.require_stable()?;
    let a2 = model.a * model.a;
    let mut p = model.sigma_w2;
    for _ in 0..10_000_000 {
        let next = a2 * p / (1.0 + p * snr) + model.sigma_w2;
        if (next - p).abs() <= tol * next {
            return Ok(next);
        }
        p = next;
    }
    Err(Error::Oracle("Riccati iteration did not settle".into()))
}

/// Best value found by a multi-start search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub value: f64,
    pub alphas: Vec<f64>,
    /// Starts whose value agrees with the best within the acceptance tolerance.
    pub agreeing: usize,
}

pub const STARTS: usize = 64;
const AGREEMENT: f64 = 1e-6;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> bool {
    let n = dot(v, v).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Minimizes `f` on the unit sphere by projected gradient descent with
/// backtracking. `f` returns `None` outside its domain.
fn sphere_descent(
    f: &dyn Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
    mut u: Vec<f64>,
) -> Option<(f64, Vec<f64>)> {
    let (mut val, mut grad) = f(&u)?;
    let mut step = 1.0;
    let mut stalled = 0;
    for _ in 0..20_000 {
        let radial = dot(&grad, &u);
        let pg: Vec<f64> = grad.iter().zip(&u).map(|(g, x)| g - radial * x).collect();
        let gnorm = dot(&pg, &pg).sqrt();
        if gnorm <= 1e-14 * val.abs().max(1e-300) {
            break;
        }
        let mut improved = false;
        while step > 1e-18 {
            let mut cand: Vec<f64> = u.iter().zip(&pg).map(|(x, g)| x - step * g).collect();
            if normalize(&mut cand) {
                if let Some((v, g)) = f(&cand) {
                    if v <= val - 1e-4 * step * gnorm * gnorm {
                        // Stop once several steps in a row gain almost nothing.
                        if val - v <= 1e-13 * val.abs() {
                            stalled += 1;
                        } else {
                            stalled = 0;
                        }
                        u = cand;
                        val = v;
                        grad = g;
                        improved = true;
                        step *= 2.0;
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        if !improved || stalled >= 5 {
            break;
        }
    }
    Some((val, u))
}

fn random_unit(r: &mut impl Rng, m: usize, toward: &[f64], spread: f64) -> Vec<f64> {
    let mut v: Vec<f64> = toward
        .iter()
        .map(|t| t + spread * r.sample::<f64, _>(StandardNormal))
        .collect();
    if !normalize(&mut v) {
        v = vec![1.0 / (m as f64).sqrt(); m];
    }
    v
}

fn multistart(
    m: usize,
    seed: u64,
    anchor: &[f64],
    f: &(dyn Fn(&[f64]) -> Option<(f64, Vec<f64>)> + Sync),
) -> Result<(f64, Vec<f64>, usize)> {
    let mut anchor = anchor.to_vec();
    if !normalize(&mut anchor) {
        anchor = vec![0.0; m];
    }
    let runs: Vec<Option<(f64, Vec<f64>)>> = (0..STARTS as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k, rng::purpose::ORACLE);
            // Half the starts are spread around the anchor, half are uniform.
            let spread = if k % 2 == 0 {
                0.5 / (m as f64).sqrt()
            } else {
                1e6
            };
            // Start 0 is the anchor itself.
            let mut u = if k == 0 {
                anchor.clone()
            } else {
                random_unit(&mut r, m, &anchor, spread)
            };
            for _ in 0..100 {
                if f(&u).is_some() {
                    break;
                }
                u = random_unit(&mut r, m, &anchor, spread);
            }
            sphere_descent(f, u)
        })
        .collect();
    let ok: Vec<(f64, Vec<f64>)> = runs.into_iter().flatten().collect();
    let best = ok
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::Oracle("no start reached the feasible region".into()))?;
    let agreeing = ok
        .iter()
        .filter(|(v, _)| (v - best.0).abs() <= AGREEMENT * best.0.abs().max(1e-300))
        .count();
    if agreeing < 2 {
        return Err(Error::Oracle(format!(
            "only {agreeing} of {} starts agree on the optimum",
            ok.len()
        )));
    }
    Ok((best.0, best.1.clone(), agreeing))
}

/// Minimum multi-access power for an SNR target.
///
/// For a direction `u`, the cheapest feasible point is `t u` with
/// `t^2 = sn2 x / ((u.rho)^2 y - x u'Tu)`, so the problem reduces to
/// minimizing `sn2 x u'Ku / ((u.rho)^2 y - x u'Tu)` over the sphere.
pub fn p1_multistart(problem: &AllocationProblem, seed: u64) -> Result<SearchResult> {
    let Constraint::Target { x, y } = problem.constraint else {
        return Err(Error::Domain("P1 oracle needs an SNR target".into()));
    };
    let (k, r, t, sn2) = (&problem.kappa, &problem.rho, &problem.tau, problem.sigma_n2);
    let f = move |u: &[f64]| -> Option<(f64, Vec<f64>)> {
        let s = dot(u, r);
        let utu: f64 = u.iter().zip(t).map(|(a, b)| a * a * b).sum();
        let uku: f64 = u.iter().zip(k).map(|(a, b)| a * a * b).sum();
        let den = s * s * y - x * utu;
        if !(den > 0.0) {
            return None;
        }
        let val = sn2 * x * uku / den;
        let grad = (0..u.len())
            .map(|i| {
                let dn = 2.0 * k[i] * u[i];
                let dd = 2.0 * y * s * r[i] - 2.0 * x * t[i] * u[i];
                sn2 * x * (dn * den - uku * dd) / (den * den)
            })
            .collect();
        Some((val, grad))
    };
    // Every feasible direction lies near `T^-1 rho`, the direction of largest SNR.
    let anchor: Vec<f64> = r.iter().zip(t).map(|(a, b)| a / b).collect();
    let (value, u, agreeing) = multistart(problem.len(), seed, &anchor, &f)?;
    let s = dot(&u, r);
    let utu: f64 = u.iter().zip(t).map(|(a, b)| a * a * b).sum();
    let scale = (sn2 * x / (s * s * y - x * utu)).sqrt();
    Ok(SearchResult {
        value,
        alphas: u.iter().map(|v| v * scale).collect(),
        agreeing,
    })
}

/// Maximum multi-access SNR for a power budget. With `v_i = alpha_i sqrt(kappa_i / gamma)`
/// on the unit sphere, `S = gamma (b.v)^2 / v'(gamma D + sn2 I)v` where
/// `b_i = rho_i / sqrt(kappa_i)` and `D_ii = tau_i / kappa_i`.
pub fn p2_multistart(problem: &AllocationProblem, seed: u64) -> Result<SearchResult> {
    let Constraint::Budget(g) = problem.constraint else {
        return Err(Error::Domain("P2 oracle needs a power budget".into()));
    };
    let b: Vec<f64> = problem
        .rho
        .iter()
        .zip(&problem.kappa)
        .map(|(r, k)| r / k.sqrt())
        .collect();
    let d: Vec<f64> = problem
        .tau
        .iter()
        .zip(&problem.kappa)
        .map(|(t, k)| g * t / k + problem.sigma_n2)
        .collect();
    let f = |v: &[f64]| -> Option<(f64, Vec<f64>)> {
        let s = dot(&b, v);
        let q: f64 = v.iter().zip(&d).map(|(a, w)| a * a * w).sum();
        // Negated so that descent maximizes.
        let val = -g * s * s / q;
        let grad = (0..v.len())
            .map(|i| -g * (2.0 * s * b[i] * q - s * s * 2.0 * d[i] * v[i]) / (q * q))
            .collect();
        Some((val, grad))
    };
    let (value, v, agreeing) = multistart(problem.len(), seed, &b, &f)?;
    Ok(SearchResult {
        value: -value,
        alphas: v
            .iter()
            .zip(&problem.kappa)
            .map(|(v, k)| v * (g / k).sqrt())
            .collect(),
        agreeing,
    })
}

/// Orthogonal optimum by trying every active set. On a set `A` with all
/// members strictly active the stationarity conditions fix the water level;
/// sets that would force a non-positive allocation are skipped.
pub fn orth_enumerate(problem: &AllocationProblem) -> Result<SearchResult> {
    let m = problem.len();
    if m > 20 {
        return Err(Error::Domain(format!(
            "active-set enumeration over {m} sensors"
        )));
    }
    let sn2 = problem.sigma_n2;
    let sn = sn2.sqrt();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let set: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        if set.iter().any(|&i| problem.rho[i] == 0.0) {
            continue;
        }
        let alloc = |level: f64| -> Vec<f64> {
            let mut a2 = vec![0.0; m];
            for &i in &set {
                a2[i] = (level * problem.rho[i].abs() * sn / problem.kappa[i].sqrt() - sn2)
                    / problem.tau[i];
            }
            a2
        };
        let level = match problem.constraint {
            Constraint::Target { x, y } => {
                let target = x / y;
                // The SNR over the set rises monotonically with the level.
                let snr = |l: f64| -> f64 {
                    alloc(l)
                        .iter()
                        .zip(&problem.rho)
                        .zip(&problem.tau)
                        .map(|((a, r), t)| {
                            let a = a.max(0.0);
                            a * r * r / (a * t + sn2)
                        })
                        .sum()
                };
                let sup: f64 = set
                    .iter()
                    .map(|&i| problem.rho[i].powi(2) / problem.tau[i])
                    .sum();
                if sup <= target {
                    continue;
                }
                bisect_increasing(|l| snr(l) - target)
            }
            Constraint::Budget(g) => {
                let power = |l: f64| -> f64 {
                    alloc(l)
                        .iter()
                        .zip(&problem.kappa)
                        .map(|(a, k)| a.max(0.0) * k)
                        .sum()
                };
                bisect_increasing(|l| power(l) - g)
            }
        };
        let a2 = alloc(level);
        if set.iter().any(|&i| !(a2[i] > 0.0)) {
            continue;
        }
        let value = match problem.constraint {
            Constraint::Target { .. } => a2.iter().zip(&problem.kappa).map(|(a, k)| a * k).sum(),
            Constraint::Budget(_) => -a2
                .iter()
                .zip(&problem.rho)
                .zip(&problem.tau)
                .map(|((a, r), t)| a * r * r / (a * t + sn2))
                .sum::<f64>(),
        };
        if best.as_ref().map_or(true, |b| value < b.0) {
            best = Some((value, a2));
        }
    }
    let (value, a2) = best.ok_or_else(|| Error::Oracle("no admissible active set".into()))?;
    let value = match problem.constraint {
        Constraint::Target { .. } => value,
        Constraint::Budget(_) => -value,
    };
    Ok(SearchResult {
        value,
        alphas: a2.iter().map(|a| a.sqrt()).collect(),
        agreeing: 1,
    })
}

fn bisect_increasing(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while f(hi) < 0.0 && hi < 1e300 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Stationary covariance `sum_k A^k Q (A')^k`, truncated once the terms stop
/// contributing.
pub fn lyapunov_series(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut sum = q.clone();
    let mut term = q.clone();
    for _ in 0..1_000_000 {
        term = a * &term * a.transpose();
        sum += &term;
        if term.norm() <= 1e-17 * sum.norm() {
            return Ok(sum);
        }
        if !term.norm().is_finite() {
            break;
        }
    }
    Err(Error::Oracle("Lyapunov series did not converge".into()))
}
