//! Reference integrator for the constrained continuous Newton flow
//!
//! ```text
//!   -M dx/dt + dy/dt = -r_q(x, y)
//!    Y dx/dt + X dy/dt = -(x∘y - mu(t) e),   (x, y) > 0
//! ```
//!
//! along which `||r_q(t)|| = ||r_q(0)|| e^{-t}` exactly and, for
//! `0 <= mu(t) <= sigma*min_i x_i y_i`, every product `x_i(t) y_i(t)` stays
//! inside the envelope `[x_i^0 y_i^0 e^{-t}, x_i^0 y_i^0 e^{-(1-sigma)t}]`.
//! A fixed-step classical 4th-order scheme keeps the error budget easy to
//! reason about; this module exists to verify the decay laws at small scale,
//! not to integrate in production.
//!
//! Also hosts the damped-Newton line-search baseline the trust-region rule
//! is measured against.

use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::linalg::{self, LinalgError};
use crate::problem::{self, LcpProblem};
use crate::rpfmtr::{
    self, IterRecord, NewtonStep, SolveReport, SolveStatus, SolverConfig,
};

/// How the flow's perturbation parameter is chosen along the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuSchedule {
    /// `mu(t) = sigma * min_i x_i(t) y_i(t)`, re-evaluated at every stage.
    Proportional,
    /// `mu(t) = 0`.
    Zero,
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Envelope parameter in (0,1); also scales the proportional schedule.
    pub sigma: f64,
    /// Fixed integrator step.
    pub h: f64,
    pub t_end: f64,
    pub mu_schedule: MuSchedule,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            h: 1e-4,
            t_end: 1.0,
            mu_schedule: MuSchedule::Proportional,
        }
    }
}

/// Components may not approach the boundary closer than this before the
/// integrator gives up; beyond it the Jacobian conditioning would drown the
/// quantities the checks measure.
const BOUNDARY_GUARD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("trajectory component {component} reached the positivity boundary at t = {t}")]
    BoundaryApproach { t: f64, component: usize },
    #[error("linear solve failed along the trajectory: {0}")]
    LinearSolve(#[from] LinalgError),
}

#[derive(Debug, Clone)]
pub struct FlowSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub norm_rq: f64,
    pub min_xy: f64,
    pub max_xy: f64,
}

/// Time-stamped trajectory, sampled at every integrator step.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub samples: Vec<FlowSample>,
}

impl FlowTrajectory {
    /// Plot-ready CSV: `t,norm_rq,min_xy,max_xy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,norm_rq,min_xy,max_xy\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{},{}", s.t, s.norm_rq, s.min_xy, s.max_xy);
        }
        out
    }
}

fn residual(p: &LcpProblem, x: &[f64], y: &[f64]) -> Vec<f64> {
    let mx = p.m.mat_vec(x).expect("dimensions fixed at entry");
    y.iter()
        .zip(mx.iter().zip(&p.q))
        .map(|(yi, (mi, qi))| yi - (mi + qi))
        .collect()
}

/// Right-hand side of the flow at `(x, y)` with perturbation `mu_t`: the
/// same two-subsystem reduction as the solver's Newton step, with
/// `sigma*mu` replaced by `mu(t)`.
pub fn flow_rhs(
    p: &LcpProblem,
    x: &[f64],
    y: &[f64],
    mu_t: f64,
) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    let r_q = residual(p, x, y);
    let step = rpfmtr::newton_step(&p.m, x, y, &r_q, mu_t)?;
    Ok((step.dx, step.dy))
}

fn min_product(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| a * b)
        .fold(f64::INFINITY, f64::min)
}

fn schedule_mu(cfg: &FlowConfig, x: &[f64], y: &[f64]) -> f64 {
    match cfg.mu_schedule {
        MuSchedule::Proportional => cfg.sigma * min_product(x, y),
        MuSchedule::Zero => 0.0,
    }
}

fn guard_positive(t: f64, x: &[f64], y: &[f64]) -> Result<(), FlowError> {
    for (i, v) in x.iter().chain(y.iter()).enumerate() {
        if *v < BOUNDARY_GUARD {
            return Err(FlowError::BoundaryApproach {
                t,
                component: i % x.len(),
            });
        }
    }
    Ok(())
}

/// Integrate the flow from a strictly positive state with the classical
/// 4th-order scheme, sampling after every step.
pub fn integrate(
    p: &LcpProblem,
    x0: &[f64],
    y0: &[f64],
    cfg: &FlowConfig,
) -> Result<FlowTrajectory, FlowError> {
    assert!(cfg.sigma > 0.0 && cfg.sigma < 1.0, "sigma must be in (0,1)");
    assert!(cfg.h > 0.0 && cfg.t_end > 0.0);
    let n = p.n();
    assert!(x0.len() == n && y0.len() == n);

    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut t = 0.0;
    guard_positive(t, &x, &y)?;

    let sample = |t: f64, x: &[f64], y: &[f64]| FlowSample {
        t,
        x: x.to_vec(),
        y: y.to_vec(),
        norm_rq: linalg::norm_2(&residual(p, x, y)),
        min_xy: min_product(x, y),
        max_xy: x.iter().zip(y).map(|(a, b)| a * b).fold(0.0, f64::max),
    };

    let steps = (cfg.t_end / cfg.h).round() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(sample(t, &x, &y));

    let eval = |t: f64, x: &[f64], y: &[f64]| -> Result<(Vec<f64>, Vec<f64>), FlowError> {
        guard_positive(t, x, y)?;
        let mu = schedule_mu(cfg, x, y);
        Ok(flow_rhs(p, x, y, mu)?)
    };
    let shifted = |x: &[f64], d: &[f64], s: f64| -> Vec<f64> {
        x.iter().zip(d).map(|(a, b)| a + s * b).collect()
    };

    for step in 0..steps {
        let h = cfg.h;
        let (k1x, k1y) = eval(t, &x, &y)?;
        let (k2x, k2y) = eval(
            t + 0.5 * h,
            &shifted(&x, &k1x, 0.5 * h),
            &shifted(&y, &k1y, 0.5 * h),
        )?;
        let (k3x, k3y) = eval(
            t + 0.5 * h,
            &shifted(&x, &k2x, 0.5 * h),
            &shifted(&y, &k2y, 0.5 * h),
        )?;
        let (k4x, k4y) = eval(t + h, &shifted(&x, &k3x, h), &shifted(&y, &k3y, h))?;
        for i in 0..n {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            y[i] += h / 6.0 * (k1y[i] + 2.0 * k2y[i] + 2.0 * k3y[i] + k4y[i]);
        }
        t = (step + 1) as f64 * h;
        guard_positive(t, &x, &y)?;
        samples.push(sample(t, &x, &y));
    }

    Ok(FlowTrajectory { samples })
}

/// Deviations of a trajectory from the analytic decay laws.
#[derive(Debug, Clone)]
pub struct DecayReport {
    /// Max deviation of `||r_q(t)||` from `||r_q(0)|| e^{-t}`, relative when
    /// the initial residual is nonzero, absolute otherwise.
    pub residual_law_max_dev: f64,
    /// Worst relative shortfall below the lower envelope `x0 y0 e^{-t}`.
    pub lower_envelope_max_violation: f64,
    /// Worst relative excess above the upper envelope `x0 y0 e^{-(1-sigma)t}`.
    pub upper_envelope_max_violation: f64,
}

impl DecayReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.residual_law_max_dev <= tol
            && self.lower_envelope_max_violation <= tol
            && self.upper_envelope_max_violation <= tol
    }
}

/// Compare every sample of a trajectory against the exponential residual law
/// and the componentwise product envelope for the given `sigma`.
pub fn check_decay(traj: &FlowTrajectory, sigma: f64) -> DecayReport {
    let first = traj.samples.first().expect("trajectory has samples");
    let r0 = first.norm_rq;
    let p0: Vec<f64> = first.x.iter().zip(&first.y).map(|(a, b)| a * b).collect();

    let mut res_dev = 0.0_f64;
    let mut lower_viol = 0.0_f64;
    let mut upper_viol = 0.0_f64;
    for s in &traj.samples {
        let expected = r0 * (-s.t).exp();
        let dev = if r0 > 0.0 {
            (s.norm_rq - expected).abs() / expected
        } else {
            s.norm_rq
        };
        res_dev = res_dev.max(dev);

        for (i, p0i) in p0.iter().enumerate() {
            let prod = s.x[i] * s.y[i];
            let lower = p0i * (-s.t).exp();
            let upper = p0i * (-(1.0 - sigma) * s.t).exp();
            if prod < lower {
                lower_viol = lower_viol.max((lower - prod) / lower);
            }
            if prod > upper {
                upper_viol = upper_viol.max((prod - upper) / upper);
            }
        }
    }
    DecayReport {
        residual_law_max_dev: res_dev,
        lower_envelope_max_violation: lower_viol,
        upper_envelope_max_violation: upper_viol,
    }
}

const BACKTRACK_CAP: usize = 50;

/// Damped-Newton baseline: the same step direction with fixed centering
/// `sigma_0`, step size tried from 1 and halved until the merit decreases
/// and the trial point stays strictly positive. Same termination test as
/// the trust-region solver; backtrack counts end up in the report so the
/// cost of the line search is observable.
pub fn damped_newton_solve(p: &LcpProblem, cfg: &SolverConfig) -> SolveReport {
    cfg.validate();
    let start = Instant::now();
    let (mut x, mut y) = rpfmtr::initial_point(p, cfg);
    let mut m_v = rpfmtr::regularize(&p.m, cfg.upsilon);
    let mut regularized = cfg.upsilon > 0.0;

    let mut itc = 0usize;
    let mut trace: Vec<IterRecord> = Vec::new();
    let mut backtracks: Vec<usize> = Vec::new();
    let status;

    loop {
        let m_v_x = m_v.mat_vec(&x).expect("dimensions fixed at entry");
        let r_q: Vec<f64> = y
            .iter()
            .zip(m_v_x.iter().zip(&p.q))
            .map(|(yi, (mi, qi))| yi - (mi + qi))
            .collect();
        let mu = rpfmtr::compute_mu(&x, &y, &r_q);
        let (feas, comp) =
            problem::termination_residual(p, &x, &y).expect("dimensions fixed at entry");
        let resk = feas.max(comp);
        if resk < cfg.epsilon {
            status = SolveStatus::Converged;
            break;
        }
        if itc >= cfg.maxit {
            status = SolveStatus::MaxIterations;
            break;
        }
        itc += 1;

        let step: NewtonStep = match rpfmtr::newton_step(&m_v, &x, &y, &r_q, cfg.sigma_0 * mu) {
            Ok(s) => s,
            Err(_) => {
                status = SolveStatus::LinearSolveFailure;
                break;
            }
        };
        let phi0 = rpfmtr::merit(&x, &y, &r_q);

        let mut alpha = 1.0;
        let mut halvings = 0usize;
        let accepted = loop {
            let x_t: Vec<f64> = x.iter().zip(&step.dx).map(|(a, d)| a + alpha * d).collect();
            let y_t: Vec<f64> = y.iter().zip(&step.dy).map(|(a, d)| a + alpha * d).collect();
            let positive = x_t.iter().all(|&v| v > 0.0) && y_t.iter().all(|&v| v > 0.0);
            if positive {
                let r_t = {
                    let m_v_xt = m_v.mat_vec(&x_t).expect("dimensions fixed at entry");
                    y_t.iter()
                        .zip(m_v_xt.iter().zip(&p.q))
                        .map(|(yi, (mi, qi))| yi - (mi + qi))
                        .collect::<Vec<_>>()
                };
                if rpfmtr::merit(&x_t, &y_t, &r_t) < phi0 {
                    break Some((x_t, y_t));
                }
            }
            halvings += 1;
            if halvings > BACKTRACK_CAP {
                break None;
            }
            alpha *= 0.5;
        };
        backtracks.push(halvings);
        trace.push(IterRecord {
            k: trace.len(),
            itc,
            mu,
            sigma: cfg.sigma_0,
            // for the baseline this column carries the accepted line-search alpha
            delta_t: alpha,
            rho: 0.0,
            merit: phi0,
            resk,
            accepted: accepted.is_some(),
        });
        match accepted {
            Some((x_t, y_t)) => {
                x = x_t;
                y = y_t;
                if mu < cfg.upsilon && regularized {
                    m_v = p.m.clone();
                    regularized = false;
                }
            }
            None => {
                status = SolveStatus::LineSearchStall;
                break;
            }
        }
    }

    let (feas_inf, comp_inf) =
        problem::termination_residual(p, &x, &y).expect("dimensions fixed at entry");
    let total_loops = itc + backtracks.iter().sum::<usize>();
    SolveReport {
        status,
        iterations: itc,
        total_loops,
        terr: feas_inf.max(comp_inf),
        feas_inf,
        comp_inf,
        x,
        y,
        trace,
        snapshots: Vec::new(),
        backtracks,
        wall_time: start.elapsed(),
    }
}
