//! Vector-state models: matrix Riccati recursions for both access schemes,
//! stationary state covariance, trace transmit power and the stacking of a
//! multi-antenna receiver into an equivalent vector observation.
//!
//! The power-constrained trace minimizations are only evaluated here, with
//! a random-search baseline. Nothing in this module claims optimality.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kalman::Scheme;
use crate::rng;

/// Systems up to this state dimension solve the Lyapunov equation through
/// the Kronecker form, larger ones by doubling.
pub const KRONECKER_MAX_DIM: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorSensor {
    /// `m x n`.
    pub c: DMatrix<f64>,
    /// `m x m`, PSD.
    pub r: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorSystem {
    pub a: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub sensors: Vec<VectorSensor>,
    /// Receiver noise covariance, `m x m`, positive definite.
    pub n: DMatrix<f64>,
}

fn symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let tol = 1e-12 * m.norm().max(1.0);
    if (m - m.transpose()).norm() > tol {
        return Err(Error::Domain(format!("{what} is not symmetric")));
    }
    Ok(())
}

fn psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    symmetric(m, what)?;
    let min = m.clone().symmetric_eigenvalues().min();
    if min < -1e-12 * m.norm().max(1.0) {
        return Err(Error::Domain(format!(
            "{what} has negative eigenvalue {min:e}"
        )));
    }
    Ok(())
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

impl VectorSystem {
    pub fn new(
        a: DMatrix<f64>,
        q: DMatrix<f64>,
        sensors: Vec<VectorSensor>,
        n: DMatrix<f64>,
    ) -> Result<Self> {
        let dim = a.nrows();
        if !a.is_square() || q.shape() != (dim, dim) {
            return Err(Error::Dimension(format!(
                "A is {:?}, Q is {:?}",
                a.shape(),
                q.shape()
            )));
        }
        psd(&q, "Q")?;
        symmetric(&n, "N")?;
        if n.clone().cholesky().is_none() {
            return Err(Error::Domain("N is not positive definite".into()));
        }
        let m = n.nrows();
        for (i, s) in sensors.iter().enumerate() {
            if s.c.shape() != (m, dim) || s.r.shape() != (m, m) {
                return Err(Error::Dimension(format!(
                    "sensor {i}: C is {:?}, R is {:?}, expected {m}x{dim} and {m}x{m}",
                    s.c.shape(),
                    s.r.shape()
                )));
            }
            psd(&s.r, &format!("R_{i}"))?;
        }
        Ok(Self { a, q, sensors, n })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn meas_dim(&self) -> usize {
        self.n.nrows()
    }

    /// `E[x x']` of the stationary state.
    pub fn state_covariance(&self) -> Result<DMatrix<f64>> {
        lyapunov_state_covariance(&self.a, &self.q)
    }
}

/// Channel and amplification matrices for one time step, both `m x m` per sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMatrices {
    pub h: Vec<DMatrix<f64>>,
    pub alpha: Vec<DMatrix<f64>>,
}

impl StepMatrices {
    fn check(&self, sys: &VectorSystem) -> Result<()> {
        let (m, k) = (sys.meas_dim(), sys.sensors.len());
        if self.h.len() != k || self.alpha.len() != k {
            return Err(Error::Dimension(format!(
                "{} channel and {} amplification matrices for {k} sensors",
                self.h.len(),
                self.alpha.len()
            )));
        }
        if self
            .h
            .iter()
            .chain(&self.alpha)
            .any(|x| x.shape() != (m, m))
        {
            return Err(Error::Dimension(format!("step matrices must be {m}x{m}")));
        }
        Ok(())
    }
}

/// Solves `S - A S A' = Q`.
pub fn lyapunov_state_covariance(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || q.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "A is {:?}, Q is {:?}",
            a.shape(),
            q.shape()
        )));
    }
    let rho = spectral_radius(a);
    if rho >= 1.0 {
        return Err(Error::Unstable(rho));
    }
    let sigma = if n <= KRONECKER_MAX_DIM {
        // Column-major vec: vec(A S A') = (A kron A) vec(S).
        let lhs = DMatrix::identity(n * n, n * n) - a.kronecker(a);
        let rhs = DVector::from_column_slice(q.as_slice());
        let x = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("Lyapunov system".into()))?;
        DMatrix::from_column_slice(n, n, x.as_slice())
    } else {
        let mut s = q.clone();
        let mut ak = a.clone();
        for _ in 0..64 {
            let step = &ak * &s * ak.transpose();
            s += &step;
            ak = &ak * &ak;
            if step.norm() <= f64::EPSILON * s.norm() {
                break;
            }
        }
        s
    };
    Ok(symmetrize(sigma))
}

/// `Tr(alpha (C S C' + R) alpha')`.
pub fn vector_transmit_power(
    alpha: &DMatrix<f64>,
    c: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> f64 {
    (alpha * (c * sigma * c.transpose() + r) * alpha.transpose()).trace()
}

/// Effective observation `(C, R)` of the summed multi-access signal.
pub fn mac_observation(
    sys: &VectorSystem,
    step: &StepMatrices,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    step.check(sys)?;
    let mut c = DMatrix::zeros(sys.meas_dim(), sys.state_dim());
    let mut r = sys.n.clone();
    for ((s, h), al) in sys.sensors.iter().zip(&step.h).zip(&step.alpha) {
        let g = h * al;
        c += &g * &s.c;
        r += &g * &s.r * g.transpose();
    }
    Ok((c, symmetrize(r)))
}

/// Per-sensor blocks `(H alpha C, H alpha R alpha' H' + N)` of the orthogonal scheme.
pub fn orth_blocks(
    sys: &VectorSystem,
    step: &StepMatrices,
) -> Result<Vec<(DMatrix<f64>, DMatrix<f64>)>> {
    step.check(sys)?;
    Ok(sys
        .sensors
        .iter()
        .zip(&step.h)
        .zip(&step.alpha)
        .map(|((s, h), al)| {
            let g = h * al;
            (&g * &s.c, symmetrize(&g * &s.r * g.transpose() + &sys.n))
        })
        .collect())
}

/// Joseph-form measurement update.
pub fn joseph_update(p: &DMatrix<f64>, c: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = symmetrize(c * p * c.transpose() + r);
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Singular("innovation covariance".into()))?;
    // K = P C' S^-1, computed as (S^-1 C P)'.
    let k = chol.solve(&(c * p)).transpose();
    let i_kc = DMatrix::identity(p.nrows(), p.nrows()) - &k * c;
    Ok(symmetrize(
        &i_kc * p * i_kc.transpose() + &k * r * k.transpose(),
    ))
}

fn predict(p_post: &DMatrix<f64>, a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(a * p_post * a.transpose() + q)
}

/// `A P A' - A P C'(C P C' + R)^-1 C P A' + Q` exactly as written, for
/// cross-checking the Joseph form.
pub fn riccati_step_printed(
    p: &DMatrix<f64>,
    a: &DMatrix<f64>,
    q: &DMatrix<f64>,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let s_inv = (c * p * c.transpose() + r)
        .try_inverse()
        .ok_or_else(|| Error::Singular("innovation covariance".into()))?;
    Ok(a * p * a.transpose() - a * p * c.transpose() * s_inv * c * p * a.transpose() + q)
}

pub fn vector_riccati_step_mac(
    p: &DMatrix<f64>,
    sys: &VectorSystem,
    step: &StepMatrices,
) -> Result<DMatrix<f64>> {
    let (c, r) = mac_observation(sys, step)?;
    Ok(predict(&joseph_update(p, &c, &r)?, &sys.a, &sys.q))
}

/// Sensors are processed one block at a time; their noises are independent,
/// so this equals the stacked update without forming the stacked inverse.
pub fn vector_riccati_step_orth(
    p: &DMatrix<f64>,
    sys: &VectorSystem,
    step: &StepMatrices,
) -> Result<DMatrix<f64>> {
    let mut post = p.clone();
    for (c, r) in orth_blocks(sys, step)? {
        post = joseph_update(&post, &c, &r)?;
    }
    Ok(predict(&post, &sys.a, &sys.q))
}

pub fn vector_riccati_step(
    p: &DMatrix<f64>,
    sys: &VectorSystem,
    step: &StepMatrices,
    scheme: Scheme,
) -> Result<DMatrix<f64>> {
    match scheme {
        Scheme::MultiAccess => vector_riccati_step_mac(p, sys, step),
        Scheme::Orthogonal => vector_riccati_step_orth(p, sys, step),
    }
}

/// Stacks the per-sensor orthogonal blocks into one observation. Used as a
/// reference for the blockwise update.
pub fn stack_blocks(blocks: &[(DMatrix<f64>, DMatrix<f64>)]) -> (DMatrix<f64>, DMatrix<f64>) {
    let rows: usize = blocks.iter().map(|b| b.0.nrows()).sum();
    let n = blocks.first().map_or(0, |b| b.0.ncols());
    let mut c = DMatrix::zeros(rows, n);
    let mut r = DMatrix::zeros(rows, rows);
    let mut at = 0;
    for (cb, rb) in blocks {
        let k = cb.nrows();
        c.view_mut((at, 0), (k, n)).copy_from(cb);
        r.view_mut((at, at), (k, k)).copy_from(rb);
        at += k;
    }
    (c, r)
}

/// Scalar-measurement sensors observed through `L` receive antennas over
/// orthogonal channels.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoLayout {
    /// Row vectors `c_i`, each of length `n`.
    pub c: Vec<DVector<f64>>,
    pub sigma_v2: Vec<f64>,
    /// `h[i][j]`: gain from sensor `i` to antenna `j`.
    pub h: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    /// Per-antenna receiver noise variance.
    pub sigma_n2: f64,
}

impl MimoLayout {
    pub fn antennas(&self) -> usize {
        self.h.first().map_or(0, Vec::len)
    }

    fn check(&self) -> Result<(usize, usize)> {
        let m = self.c.len();
        let l = self.antennas();
        let n = self.c.first().map_or(0, |c| c.len());
        if m == 0 || l == 0 || n == 0 {
            return Err(Error::Dimension("empty MIMO layout".into()));
        }
        if self.sigma_v2.len() != m || self.h.len() != m || self.alphas.len() != m {
            return Err(Error::Dimension(format!(
                "layout lists disagree on M = {m}"
            )));
        }
        if self.c.iter().any(|c| c.len() != n) || self.h.iter().any(|h| h.len() != l) {
            return Err(Error::Dimension("ragged MIMO layout".into()));
        }
        if !(self.sigma_n2 > 0.0) || self.sigma_v2.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Domain(
                "noise variances must be non-negative, receiver noise positive".into(),
            ));
        }
        Ok((m, l))
    }

    /// Per-sensor blocks: `L x n` observation `h_i alpha_i c_i` and noise
    /// `alpha_i^2 sigma_v2 h_i h_i' + sigma_n2 I`. The sensor noise is common
    /// to all antennas.
    pub fn blocks(&self) -> Result<Vec<(DMatrix<f64>, DMatrix<f64>)>> {
        let (_, l) = self.check()?;
        Ok((0..self.c.len())
            .map(|i| {
                let h = DVector::from_column_slice(&self.h[i]);
                let a = self.alphas[i];
                let c = &h * (a * self.c[i].transpose());
                let r = &h * h.transpose() * (a * a * self.sigma_v2[i])
                    + DMatrix::identity(l, l) * self.sigma_n2;
                (c, r)
            })
            .collect())
    }
}

/// Stacked `ML x n` observation and its noise covariance.
pub fn mimo_to_vector(layout: &MimoLayout) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    Ok(stack_blocks(&layout.blocks()?))
}

/// `C' R^-1 C` of an observation.
pub fn information(c: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("observation noise covariance".into()))?;
    Ok(symmetrize(c.transpose() * chol.solve(c)))
}

/// Closed-form SNR of a scalar state (`n = 1`) through the stacked system:
/// `sum_i alpha_i^2 c_i^2 |h_i|^2 / (alpha_i^2 sigma_v2_i |h_i|^2 + sigma_n2)`.
pub fn mimo_scalar_snr(layout: &MimoLayout) -> Result<f64> {
    layout.check()?;
    if layout.c[0].len() != 1 {
        return Err(Error::Dimension("scalar SNR needs a scalar state".into()));
    }
    Ok((0..layout.c.len())
        .map(|i| {
            let h2: f64 = layout.h[i].iter().map(|h| h * h).sum();
            let a2 = layout.alphas[i] * layout.alphas[i];
            a2 * layout.c[i][0].powi(2) * h2 / (a2 * layout.sigma_v2[i] * h2 + layout.sigma_n2)
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorEvaluation {
    /// `Tr(P')` after one step.
    pub trace: f64,
    pub power: f64,
    pub feasible: bool,
}

/// Evaluates one step of the trace-minimization problems: the trace of the
/// next prior covariance and the sum transmit power against `budget`.
pub fn evaluate_p5_p6(
    p: &DMatrix<f64>,
    sys: &VectorSystem,
    step: &StepMatrices,
    budget: f64,
    scheme: Scheme,
) -> Result<VectorEvaluation> {
    let sigma = sys.state_covariance()?;
    let next = vector_riccati_step(p, sys, step, scheme)?;
    let power: f64 = sys
        .sensors
        .iter()
        .zip(&step.alpha)
        .map(|(s, al)| vector_transmit_power(al, &s.c, &sigma, &s.r))
        .sum();
    Ok(VectorEvaluation {
        trace: next.trace(),
        power,
        feasible: power <= budget * (1.0 + 1e-12),
    })
}

/// Best of a set of random amplifications scaled onto the power budget.
/// A baseline, not an optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSearch {
    pub best: VectorEvaluation,
    pub best_alpha: Vec<DMatrix<f64>>,
    pub traces: Vec<f64>,
}

pub fn random_search(
    p: &DMatrix<f64>,
    sys: &VectorSystem,
    h: &[DMatrix<f64>],
    budget: f64,
    scheme: Scheme,
    draws: usize,
    seed: u64,
) -> Result<RandomSearch> {
    if draws == 0 {
        return Err(Error::Domain(
            "random search needs at least one draw".into(),
        ));
    }
    let sigma = sys.state_covariance()?;
    let m = sys.meas_dim();
    let results: Vec<Result<(VectorEvaluation, Vec<DMatrix<f64>>)>> = (0..draws as u64)
        .into_par_iter()
        .map(|d| {
            let mut r = rng::stream(seed, d, rng::purpose::ORACLE);
            let mut alpha: Vec<DMatrix<f64>> = (0..sys.sensors.len())
                .map(|_| DMatrix::from_fn(m, m, |_, _| r.sample::<f64, _>(StandardNormal)))
                .collect();
            let power: f64 = sys
                .sensors
                .iter()
                .zip(&alpha)
                .map(|(s, al)| vector_transmit_power(al, &s.c, &sigma, &s.r))
                .sum();
            if power > 0.0 {
                let scale = (budget / power).sqrt();
                alpha.iter_mut().for_each(|a| *a *= scale);
            }
            let step = StepMatrices {
                h: h.to_vec(),
                alpha,
            };
            let e = evaluate_p5_p6(p, sys, &step, budget, scheme)?;
            Ok((e, step.alpha))
        })
        .collect();
    let mut traces = Vec::with_capacity(draws);
    let mut best: Option<(VectorEvaluation, Vec<DMatrix<f64>>)> = None;
    for res in results {
        let (e, al) = res?;
        traces.push(e.trace);
        if e.feasible && best.as_ref().map_or(true, |b| e.trace < b.0.trace) {
            best = Some((e, al));
        }
    }
    let (best, best_alpha) =
        best.ok_or_else(|| Error::Domain("no feasible draw in random search".into()))?;
    Ok(RandomSearch {
        best,
        best_alpha,
        traces,
    })
}
