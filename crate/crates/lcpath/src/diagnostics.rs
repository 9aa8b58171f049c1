//! Post-hoc monitors for the solver's convergence-theory quantities.
//!
//! The solver itself never enforces any of these conditions; the monitors
//! replay a recorded run (see [`SolverConfig::record_steps`]) and report
//! whether the theory's standing assumptions happened to hold:
//!
//! - gamma-centrality `x_i y_i >= gamma * mu`, which keeps iterates away
//!   from the boundary of the positive orthant;
//! - the auxiliary feasible sequence `(u, v)` contracting toward the
//!   iterates by `(1 - alpha)` per accepted step;
//! - the per-step algebraic identities for predicted and actual reduction.
//!
//! Violations are warnings, not errors.

use crate::linalg::{self, DenseMatrix};
use crate::problem::LcpProblem;
use crate::rpfmtr::{self, NewtonStep, SolveReport, SolverConfig, StepSnapshot};

#[derive(Debug, Clone)]
pub struct TheoryMonitorConfig {
    /// Centrality constant in (0, 1); see [`gamma_default`].
    pub gamma: f64,
    /// Track the auxiliary feasible sequence seeded at `(u0, v0)`.
    pub aux_enabled: bool,
    pub u0: Option<Vec<f64>>,
    pub v0: Option<Vec<f64>>,
}

impl TheoryMonitorConfig {
    pub fn centrality_only(gamma: f64) -> Self {
        Self {
            gamma,
            aux_enabled: false,
            u0: None,
            v0: None,
        }
    }
}

/// One index where the centrality condition failed at some iteration.
#[derive(Debug, Clone, Copy)]
pub struct CentralityViolation {
    pub itc: usize,
    pub index: usize,
    pub product: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct MonitorReport {
    pub gamma: f64,
    pub centrality_violations: Vec<CentralityViolation>,
    /// Whether aux-sequence monitoring ran (seeds present and valid).
    pub aux_active: bool,
    /// Why the aux monitor shut itself off, if it did.
    pub aux_disabled_reason: Option<String>,
    pub aux_feasibility_max: f64,
    pub ordering_ok: bool,
    /// Worst relative error of `(x - u)` contraction vs `(1 - alpha)`.
    pub gap_contraction_max_err: f64,
    pub pred_identity_max_err: f64,
    pub ared_closed_form_max_err: f64,
    pub steps_monitored: usize,
}

impl MonitorReport {
    /// Plain-text section for appending to a trace CSV.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# monitor report\n");
        s.push_str(&format!("# gamma = {}\n", self.gamma));
        s.push_str(&format!("# steps_monitored = {}\n", self.steps_monitored));
        s.push_str(&format!(
            "# centrality_violations = {}\n",
            self.centrality_violations.len()
        ));
        for v in self.centrality_violations.iter().take(20) {
            s.push_str(&format!(
                "#   itc {} index {}: x*y = {:.6e} < gamma*mu = {:.6e}\n",
                v.itc, v.index, v.product, v.bound
            ));
        }
        if self.aux_active {
            s.push_str(&format!(
                "# aux_feasibility_max = {:.6e}\n# ordering_ok = {}\n# gap_contraction_max_err = {:.6e}\n",
                self.aux_feasibility_max, self.ordering_ok, self.gap_contraction_max_err
            ));
        } else if let Some(reason) = &self.aux_disabled_reason {
            s.push_str(&format!("# aux monitoring disabled: {reason}\n"));
        }
        s.push_str(&format!(
            "# pred_identity_max_err = {:.6e}\n# ared_closed_form_max_err = {:.6e}\n",
            self.pred_identity_max_err, self.ared_closed_form_max_err
        ));
        s
    }
}

/// Default centrality constant: half the admissible upper bound
/// `mu0 / min_i x0_i y0_i`, capped at 1e-3 (any value in the interval works;
/// small is safer).
pub fn gamma_default(x0: &[f64], y0: &[f64], mu0: f64) -> f64 {
    assert!(mu0 > 0.0);
    let min_prod = x0
        .iter()
        .zip(y0)
        .map(|(a, b)| a * b)
        .fold(f64::INFINITY, f64::min);
    assert!(min_prod > 0.0, "gamma_default needs strictly positive products");
    (0.5 * mu0 / min_prod).min(1e-3)
}

/// Indices where `x_i y_i < gamma * mu`. Empty means the centrality
/// condition held at this iterate.
pub fn centrality_check(x: &[f64], y: &[f64], mu: f64, gamma: f64) -> Vec<usize> {
    x.iter()
        .zip(y)
        .enumerate()
        .filter(|(_, (a, b))| *a * *b < gamma * mu)
        .map(|(i, _)| i)
        .collect()
}

/// Auxiliary-sequence recursion `u+ = u + alpha*(x + dx - u)`,
/// `v+ = v + alpha*(y + dy - v)`, applied on accepted iterations only.
pub fn aux_update(
    u: &[f64],
    v: &[f64],
    x: &[f64],
    y: &[f64],
    step: &NewtonStep,
    alpha: f64,
) -> (Vec<f64>, Vec<f64>) {
    let u_next = u
        .iter()
        .zip(x.iter().zip(&step.dx))
        .map(|(ui, (xi, di))| ui + alpha * (xi + di - ui))
        .collect();
    let v_next = v
        .iter()
        .zip(y.iter().zip(&step.dy))
        .map(|(vi, (yi, di))| vi + alpha * (yi + di - vi))
        .collect();
    (u_next, v_next)
}

/// Feasibility error `||v - (M u + q)||_inf` (with the matrix the step used)
/// and whether the iterates still dominate the aux pair componentwise (with
/// 1e-12 slack).
pub fn aux_invariants(
    m_step: &DenseMatrix,
    q: &[f64],
    u: &[f64],
    v: &[f64],
    x: &[f64],
    y: &[f64],
) -> (f64, bool) {
    let mu_vec = m_step.mat_vec(u).expect("dimensions fixed at entry");
    let feas = linalg::norm_inf(
        &v.iter()
            .zip(mu_vec.iter().zip(q))
            .map(|(vi, (mi, qi))| vi - (mi + qi))
            .collect::<Vec<_>>(),
    );
    let slack = 1e-12;
    let ordering = x.iter().zip(u).all(|(a, b)| a - b >= -slack)
        && y.iter().zip(v).all(|(a, b)| a - b >= -slack);
    (feas, ordering)
}

/// Relative errors of the two reduction identities for one accepted step:
/// `Pred = alpha*(2 - sigma)*n*mu` and closed-form Ared vs the direct merit
/// difference.
pub fn identity_checks(s: &StepSnapshot) -> (f64, f64) {
    let n = s.x.len() as f64;
    let step = NewtonStep {
        dx: s.dx.clone(),
        dy: s.dy.clone(),
    };
    let pred = rpfmtr::predicted_reduction(s.alpha, &s.x, &s.y, &step, &s.r_q);
    let pred_closed = s.alpha * (2.0 - s.sigma) * n * s.mu;
    let pred_err = (pred - pred_closed).abs() / pred.abs().max(1.0);

    let ared_closed = pred - s.alpha * s.alpha * linalg::dot(&s.dx, &s.dy);
    let ared_direct = s.merit_before - s.merit_after;
    let ared_err = (ared_closed - ared_direct).abs() / ared_direct.abs().max(1.0);
    (pred_err, ared_err)
}

/// Replay a recorded solve and produce the full monitor report.
///
/// The aux monitor validates its seeds against the first recorded state
/// (feasibility under the first step's matrix, ordering under the initial
/// iterate) and disables itself with a reason if they do not qualify.
pub fn run_monitors(
    p: &LcpProblem,
    cfg: &SolverConfig,
    report: &SolveReport,
    monitor: &TheoryMonitorConfig,
) -> MonitorReport {
    assert!(
        !report.snapshots.is_empty() || report.trace.is_empty(),
        "run_monitors needs a solve recorded with record_steps"
    );
    let mut out = MonitorReport {
        gamma: monitor.gamma,
        centrality_violations: Vec::new(),
        aux_active: false,
        aux_disabled_reason: None,
        aux_feasibility_max: 0.0,
        ordering_ok: true,
        gap_contraction_max_err: 0.0,
        pred_identity_max_err: 0.0,
        ared_closed_form_max_err: 0.0,
        steps_monitored: report.snapshots.len(),
    };

    let matrix_for = |regularized: bool| -> DenseMatrix {
        if regularized {
            rpfmtr::regularize(&p.m, cfg.upsilon)
        } else {
            p.m.clone()
        }
    };

    // aux seed validation
    let mut aux: Option<(Vec<f64>, Vec<f64>)> = None;
    if monitor.aux_enabled {
        match (&monitor.u0, &monitor.v0, report.snapshots.first()) {
            (Some(u0), Some(v0), Some(first)) => {
                let m0 = matrix_for(first.regularized);
                let (feas, _) = aux_invariants(&m0, &p.q, u0, v0, &first.x, &first.y);
                let scale = m0.norm_inf() * linalg::norm_inf(u0) + linalg::norm_inf(&p.q);
                let ordering = first.x.iter().zip(u0).all(|(a, b)| a >= b)
                    && first.y.iter().zip(v0).all(|(a, b)| a >= b);
                if feas > 1e-10 * scale.max(1.0) {
                    out.aux_disabled_reason =
                        Some(format!("seed feasibility error {feas:.3e} too large"));
                } else if !ordering {
                    out.aux_disabled_reason =
                        Some("seed is not dominated by the initial iterate".into());
                } else {
                    aux = Some((u0.clone(), v0.clone()));
                    out.aux_active = true;
                }
            }
            (None, _, _) | (_, None, _) => {
                out.aux_disabled_reason = Some("aux seeds not supplied".into());
            }
            _ => {
                out.aux_disabled_reason = Some("run recorded no steps".into());
            }
        }
    }

    // centrality at the initial iterate
    if let Some(first) = report.snapshots.first() {
        for i in centrality_check(&first.x, &first.y, first.mu, monitor.gamma) {
            out.centrality_violations.push(CentralityViolation {
                itc: 0,
                index: i,
                product: first.x[i] * first.y[i],
                bound: monitor.gamma * first.mu,
            });
        }
    }

    for s in &report.snapshots {
        // identities
        let (pred_err, ared_err) = identity_checks(s);
        out.pred_identity_max_err = out.pred_identity_max_err.max(pred_err);
        out.ared_closed_form_max_err = out.ared_closed_form_max_err.max(ared_err);

        // accepted point and its mu
        let x_after: Vec<f64> = s
            .x
            .iter()
            .zip(&s.dx)
            .map(|(a, d)| a + s.alpha * d)
            .collect();
        let y_after: Vec<f64> = s
            .y
            .iter()
            .zip(&s.dy)
            .map(|(a, d)| a + s.alpha * d)
            .collect();
        let mu_after = rpfmtr::compute_mu(&x_after, &y_after, &s.r_q_after);
        for i in centrality_check(&x_after, &y_after, mu_after, monitor.gamma) {
            out.centrality_violations.push(CentralityViolation {
                itc: s.itc,
                index: i,
                product: x_after[i] * y_after[i],
                bound: monitor.gamma * mu_after,
            });
        }

        // aux sequence
        if let Some((u, v)) = aux.take() {
            let step = NewtonStep {
                dx: s.dx.clone(),
                dy: s.dy.clone(),
            };
            let (u_next, v_next) = aux_update(&u, &v, &s.x, &s.y, &step, s.alpha);

            let m_step = matrix_for(s.regularized);
            let (feas, ordering) =
                aux_invariants(&m_step, &p.q, &u_next, &v_next, &x_after, &y_after);
            out.aux_feasibility_max = out.aux_feasibility_max.max(feas);
            out.ordering_ok &= ordering;

            // gap contraction (x+ - u+) = (1 - alpha)(x - u)
            let mut gap_err = 0.0_f64;
            for i in 0..u.len() {
                let expect_x = (1.0 - s.alpha) * (s.x[i] - u[i]);
                let expect_y = (1.0 - s.alpha) * (s.y[i] - v[i]);
                let scale_x = expect_x.abs().max(1.0);
                let scale_y = expect_y.abs().max(1.0);
                gap_err = gap_err
                    .max((x_after[i] - u_next[i] - expect_x).abs() / scale_x)
                    .max((y_after[i] - v_next[i] - expect_y).abs() / scale_y);
            }
            out.gap_contraction_max_err = out.gap_contraction_max_err.max(gap_err);
            aux = Some((u_next, v_next));
        }
    }

    out
}
