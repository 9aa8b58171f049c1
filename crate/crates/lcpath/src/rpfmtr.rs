//! The RPFMTr solver: residual-regularized path-following with a
//! trust-region rule for the continuation time step.
//!
//! Each iteration solves the continuation Newton system
//!
//! ```text
//!   -M_v dx + dy = -r_q,        r_q = y - (M_v x + q)
//!    Y dx + X dy = -r_c,        r_c = x∘y - sigma*mu*e
//! ```
//!
//! and steps by `alpha = dt/(1+dt)`. The step is scored by the ratio of
//! actual to predicted reduction of the merit `phi = x'y + ||r_q||`; the
//! ratio doubles, keeps, or halves `dt`. `mu = (x'y + ||r_q||)/(2n)` folds
//! the feasibility residual into the usual duality measure, and the matrix
//! is regularized to `M + upsilon*I` until `mu` drops below `upsilon`.
//!
//! Termination always tests against the original `M`, while the step
//! direction uses the regularized matrix; the two are intentionally
//! different and easy to conflate.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::linalg::{self, DenseMatrix, LinalgError};
use crate::problem::{self, LcpProblem};

/// Algorithm parameters, preloaded with the published defaults.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Acceptance threshold for the reduction ratio.
    pub eta_a: f64,
    /// Lower trust threshold: keep the time step above it.
    pub eta_1: f64,
    /// Upper trust threshold: double the time step above it.
    pub eta_2: f64,
    /// Termination tolerance on the residual max-norm.
    pub epsilon: f64,
    /// Initial time step.
    pub delta_t0: f64,
    /// Initial point scale: `x0 = big_m_fac * e`.
    pub big_m_fac: f64,
    /// Regularization weight added to the diagonal of `M`.
    pub upsilon: f64,
    /// Initial centering parameter.
    pub sigma_0: f64,
    /// Iteration budget (counts residual/step computations, not trials).
    pub maxit: usize,
    /// Centering after a long accepted step.
    pub sigma_large: f64,
    /// Centering after a short accepted step.
    pub sigma_small: f64,
    /// Step-length threshold separating the two centering resets.
    pub step_threshold: f64,
    /// Capture full per-step vectors so diagnostics can replay the run.
    pub record_steps: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta_a: 1e-6,
            eta_1: 0.25,
            eta_2: 0.75,
            epsilon: 1e-6,
            delta_t0: 1e-2,
            big_m_fac: 10.0,
            upsilon: 1e-3,
            sigma_0: 0.5,
            maxit: 600,
            sigma_large: 0.5,
            sigma_small: 0.1,
            step_threshold: 0.1,
            record_steps: false,
        }
    }
}

impl SolverConfig {
    /// Panics if the parameter ordering constraints are violated.
    pub fn validate(&self) {
        assert!(
            0.0 < self.eta_a && self.eta_a < self.eta_1 && self.eta_1 < self.eta_2 && self.eta_2 < 1.0,
            "need 0 < eta_a < eta_1 < eta_2 < 1"
        );
        assert!(self.epsilon > 0.0, "epsilon must be positive");
        assert!(self.delta_t0 > 0.0, "delta_t0 must be positive");
        assert!(
            0.0 < self.sigma_small && self.sigma_small <= self.sigma_large && self.sigma_large < 1.0,
            "need 0 < sigma_small <= sigma_large < 1"
        );
        assert!(self.maxit >= 1, "maxit must be at least 1");
        assert!(self.upsilon >= 0.0, "upsilon must be nonnegative");
    }
}

/// Continuation Newton direction.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

#[derive(Debug, Error)]
#[error("predicted reduction {pred:.3e} is below the degeneracy floor; mu is effectively zero")]
pub struct DegenerateRatio {
    pub pred: f64,
}

const PRED_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LinearSolveFailure,
    /// Damped-Newton baseline only: backtracking hit its halving cap.
    LineSearchStall,
}

/// One row of the scalar iteration trace (recorded at every trial, accepted
/// or not).
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub k: usize,
    pub itc: usize,
    pub mu: f64,
    pub sigma: f64,
    pub delta_t: f64,
    pub rho: f64,
    pub merit: f64,
    pub resk: f64,
    pub accepted: bool,
}

/// Full data of one accepted step, captured when
/// [`SolverConfig::record_steps`] is set. Everything diagnostics needs to
/// re-derive the per-step identities without touching solver behavior.
#[derive(Debug, Clone)]
pub struct StepSnapshot {
    pub itc: usize,
    /// Iterate before the step.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    /// Residual the step was computed from (regularized matrix).
    pub r_q: Vec<f64>,
    /// Residual at the accepted point, with the same matrix the step used.
    pub r_q_after: Vec<f64>,
    pub alpha: f64,
    pub sigma: f64,
    pub mu: f64,
    pub merit_before: f64,
    pub merit_after: f64,
    /// Whether the step used `M + upsilon*I` (true) or plain `M`.
    pub regularized: bool,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Count of residual/step computations (`itc` in the trace).
    pub iterations: usize,
    /// Count of trial evaluations including rejections (`k` in the trace).
    pub total_loops: usize,
    /// Final `max(feas_inf, comp_inf)` against the original matrix.
    pub terr: f64,
    pub feas_inf: f64,
    pub comp_inf: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub trace: Vec<IterRecord>,
    pub snapshots: Vec<StepSnapshot>,
    /// Line-search halvings per iteration; empty for the trust-region solver.
    pub backtracks: Vec<usize>,
    pub wall_time: Duration,
}

/// Mutable solver state threaded through the main loop.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub delta_t: f64,
    pub sigma: f64,
    pub mu: f64,
    pub r_q: Vec<f64>,
    pub cached_step: Option<NewtonStep>,
    pub regularized: bool,
    pub itc: usize,
    pub k: usize,
    pub trial_success: bool,
}

/// Starting point: `x0 = big_m_fac * e`; `y0_i = (M x0 + q)_i` where that is
/// strictly positive, `1e-3` otherwise. Both components come out strictly
/// positive.
pub fn initial_point(p: &LcpProblem, cfg: &SolverConfig) -> (Vec<f64>, Vec<f64>) {
    let n = p.n();
    let x0 = vec![cfg.big_m_fac; n];
    let v0 = p.m.mat_vec(&x0).expect("problem dimensions are consistent");
    let y0 = v0
        .iter()
        .zip(&p.q)
        .map(|(mi, qi)| {
            let v = mi + qi;
            if v > 0.0 {
                v
            } else {
                1e-3
            }
        })
        .collect();
    (x0, y0)
}

/// `M + upsilon * I`.
pub fn regularize(m: &DenseMatrix, upsilon: f64) -> DenseMatrix {
    if upsilon == 0.0 {
        m.clone()
    } else {
        m.add_diagonal(upsilon)
    }
}

/// The residual-regularization parameter `mu = (x'y + ||r_q||_2) / (2n)`.
pub fn compute_mu(x: &[f64], y: &[f64], r_q: &[f64]) -> f64 {
    let n = x.len();
    debug_assert!(n >= 1 && y.len() == n && r_q.len() == n);
    (linalg::dot(x, y) + linalg::norm_2(r_q)) / (2.0 * n as f64)
}

/// Merit `phi = x'y + ||r_q||_2`.
pub fn merit(x: &[f64], y: &[f64], r_q: &[f64]) -> f64 {
    linalg::dot(x, y) + linalg::norm_2(r_q)
}

/// Solve the continuation Newton system by the two-subsystem reduction:
/// `(M_v + X^{-1} Y) dx = r_q - X^{-1} r_c`, then `dy = M_v dx - r_q`,
/// where `r_c = x∘y - sigma_mu * e`.
pub fn newton_step(
    m_upsilon: &DenseMatrix,
    x: &[f64],
    y: &[f64],
    r_q: &[f64],
    sigma_mu: f64,
) -> Result<NewtonStep, LinalgError> {
    let n = x.len();
    assert!(
        x.iter().all(|&v| v > 0.0),
        "newton_step requires strictly positive x"
    );
    assert_eq!(y.len(), n);
    assert_eq!(r_q.len(), n);

    let mut g = m_upsilon.clone();
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let r_c = x[i] * y[i] - sigma_mu;
        rhs[i] = r_q[i] - r_c / x[i];
        let d = g.get(i, i) + y[i] / x[i];
        g.set(i, i, d);
    }
    let dx = g.lu_factor()?.solve(&rhs)?;
    let m_dx = m_upsilon.mat_vec(&dx)?;
    let dy = m_dx.iter().zip(r_q).map(|(m, r)| m - r).collect();
    Ok(NewtonStep { dx, dy })
}

/// Scaled residuals of the two Newton-system equations for a computed step:
/// `||-M_v dx + dy + r_q|| / max(1, ||r_q||, ||M_v|| ||dx||)` and
/// `||Y dx + X dy + r_c|| / max(1, ||r_c||)`, both in the max norm.
pub fn newton_step_residuals(
    m_upsilon: &DenseMatrix,
    x: &[f64],
    y: &[f64],
    r_q: &[f64],
    sigma_mu: f64,
    step: &NewtonStep,
) -> (f64, f64) {
    let m_dx = m_upsilon
        .mat_vec(&step.dx)
        .expect("step dimensions match the matrix");
    let res16: Vec<f64> = m_dx
        .iter()
        .zip(step.dy.iter().zip(r_q))
        .map(|(mdx, (dy, r))| -mdx + dy + r)
        .collect();
    let scale16 = 1.0_f64
        .max(linalg::norm_inf(r_q))
        .max(m_upsilon.norm_inf() * linalg::norm_inf(&step.dx));

    let mut res17_max = 0.0_f64;
    let mut rc_max = 0.0_f64;
    for i in 0..x.len() {
        let r_c = x[i] * y[i] - sigma_mu;
        rc_max = rc_max.max(r_c.abs());
        let r = y[i] * step.dx[i] + x[i] * step.dy[i] + r_c;
        res17_max = res17_max.max(r.abs());
    }
    (
        linalg::norm_inf(&res16) / scale16,
        res17_max / rc_max.max(1.0),
    )
}

/// Predicted merit reduction of the linear model,
/// `alpha * (||r_q|| - y' dx - x' dy)`.
pub fn predicted_reduction(
    alpha: f64,
    x: &[f64],
    y: &[f64],
    step: &NewtonStep,
    r_q: &[f64],
) -> f64 {
    alpha * (linalg::norm_2(r_q) - linalg::dot(y, &step.dx) - linalg::dot(x, &step.dy))
}

/// Trust-region ratio `rho = Ared/Pred = 1 - alpha*(dx'dy)/(||r_q|| - y'dx - x'dy)`.
pub fn rho(
    alpha: f64,
    x: &[f64],
    y: &[f64],
    step: &NewtonStep,
    r_q: &[f64],
) -> Result<f64, DegenerateRatio> {
    let denom = linalg::norm_2(r_q) - linalg::dot(y, &step.dx) - linalg::dot(x, &step.dy);
    let pred = alpha * denom;
    if pred.abs() < PRED_FLOOR {
        return Err(DegenerateRatio { pred });
    }
    Ok(1.0 - alpha * linalg::dot(&step.dx, &step.dy) / denom)
}

/// Time-step schedule: double on a high ratio with a positive trial point,
/// keep on a middling one, halve otherwise.
pub fn update_time_step(delta_t: f64, rho: f64, positive: bool, cfg: &SolverConfig) -> f64 {
    debug_assert!(delta_t > 0.0);
    if positive && rho >= cfg.eta_2 {
        2.0 * delta_t
    } else if positive && rho >= cfg.eta_1 {
        delta_t
    } else {
        0.5 * delta_t
    }
}

/// Centering reset after an accepted step: the large value after a long step
/// (`||x_new - x_old||_inf` strictly above the threshold), the small one
/// otherwise.
pub fn update_sigma(step_inf: f64, cfg: &SolverConfig) -> f64 {
    if step_inf > cfg.step_threshold {
        cfg.sigma_large
    } else {
        cfg.sigma_small
    }
}

fn strictly_positive(v: &[f64]) -> bool {
    v.iter().all(|&a| a > 0.0)
}

/// Run RPFMTr on a problem. Infallible at the type level: numeric failure
/// modes are reported through [`SolveReport::status`].
pub fn solve(p: &LcpProblem, cfg: &SolverConfig) -> SolveReport {
    cfg.validate();
    let start = Instant::now();
    let n = p.n();

    let (x0, y0) = initial_point(p, cfg);
    let mut st = SolverState {
        x: x0,
        y: y0,
        delta_t: cfg.delta_t0,
        sigma: cfg.sigma_0,
        mu: 0.0,
        r_q: vec![0.0; n],
        cached_step: None,
        regularized: cfg.upsilon > 0.0,
        itc: 0,
        k: 0,
        trial_success: true,
    };
    let mut m_v = regularize(&p.m, cfg.upsilon);

    let mut trace: Vec<IterRecord> = Vec::new();
    let mut snapshots: Vec<StepSnapshot> = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    let mut resk = f64::INFINITY;

    while st.itc < cfg.maxit {
        if st.trial_success {
            st.itc += 1;
            let m_v_x = m_v.mat_vec(&st.x).expect("dimensions fixed at entry");
            st.r_q = st
                .y
                .iter()
                .zip(m_v_x.iter().zip(&p.q))
                .map(|(yi, (mi, qi))| yi - (mi + qi))
                .collect();
            st.mu = compute_mu(&st.x, &st.y, &st.r_q);
            let (feas, comp) =
                problem::termination_residual(p, &st.x, &st.y).expect("dimensions fixed at entry");
            resk = feas.max(comp);
            if resk < cfg.epsilon {
                status = SolveStatus::Converged;
                break;
            }
            st.sigma = st.sigma.min(st.mu);
            match newton_step(&m_v, &st.x, &st.y, &st.r_q, st.sigma * st.mu) {
                Ok(step) => st.cached_step = Some(step),
                Err(_) => {
                    status = SolveStatus::LinearSolveFailure;
                    break;
                }
            }
        }

        let step = st.cached_step.as_ref().expect("step cached before trials");
        let alpha = st.delta_t / (1.0 + st.delta_t);
        let x_new: Vec<f64> = st
            .x
            .iter()
            .zip(&step.dx)
            .map(|(xi, di)| xi + alpha * di)
            .collect();
        let y_new: Vec<f64> = st
            .y
            .iter()
            .zip(&step.dy)
            .map(|(yi, di)| yi + alpha * di)
            .collect();

        let ratio = match rho(alpha, &st.x, &st.y, step, &st.r_q) {
            Ok(r) => r,
            Err(_) => {
                // Pred underflowed: mu is numerically zero, which the
                // convergence test ahead of the step rules out at any
                // realistic tolerance. Surface it as a numeric failure.
                status = SolveStatus::LinearSolveFailure;
                break;
            }
        };
        let positive = strictly_positive(&x_new) && strictly_positive(&y_new);
        let delta_t_next = update_time_step(st.delta_t, ratio, positive, cfg);
        let accepted = ratio >= cfg.eta_a && positive;

        trace.push(IterRecord {
            k: st.k,
            itc: st.itc,
            mu: st.mu,
            sigma: st.sigma,
            delta_t: st.delta_t,
            rho: ratio,
            merit: merit(&st.x, &st.y, &st.r_q),
            resk,
            accepted,
        });

        if accepted {
            if cfg.record_steps {
                let m_v_x_new = m_v.mat_vec(&x_new).expect("dimensions fixed at entry");
                let r_q_after: Vec<f64> = y_new
                    .iter()
                    .zip(m_v_x_new.iter().zip(&p.q))
                    .map(|(yi, (mi, qi))| yi - (mi + qi))
                    .collect();
                snapshots.push(StepSnapshot {
                    itc: st.itc,
                    x: st.x.clone(),
                    y: st.y.clone(),
                    dx: step.dx.clone(),
                    dy: step.dy.clone(),
                    r_q: st.r_q.clone(),
                    merit_after: merit(&x_new, &y_new, &r_q_after),
                    r_q_after,
                    alpha,
                    sigma: st.sigma,
                    mu: st.mu,
                    merit_before: merit(&st.x, &st.y, &st.r_q),
                    regularized: st.regularized,
                });
            }
            let step_inf = linalg::norm_inf(
                &x_new
                    .iter()
                    .zip(&st.x)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            st.x = x_new;
            st.y = y_new;
            st.trial_success = true;
            st.sigma = update_sigma(step_inf, cfg);
            // one-way de-regularization once mu is small
            if st.mu < cfg.upsilon && st.regularized {
                m_v = p.m.clone();
                st.regularized = false;
            }
        } else {
            st.trial_success = false;
        }
        st.delta_t = delta_t_next;
        st.k += 1;
    }

    let (feas_inf, comp_inf) =
        problem::termination_residual(p, &st.x, &st.y).expect("dimensions fixed at entry");
    SolveReport {
        status,
        iterations: st.itc,
        total_loops: st.k,
        terr: feas_inf.max(comp_inf),
        feas_inf,
        comp_inf,
        x: st.x,
        y: st.y,
        trace,
        snapshots,
        backtracks: Vec::new(),
        wall_time: start.elapsed(),
    }
}
