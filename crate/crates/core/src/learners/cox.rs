//! Cox proportional hazards regression for cause-specific hazards.
//!
//! Maximizes the Breslow-tie log partial likelihood by Newton-Raphson
//! with step-halving, starting from zero coefficients on internally
//! standardized covariates. Competing causes and censoring are treated
//! as censoring for the fitted cause. The baseline cumulative hazard is
//! the Breslow estimator, which reduces to Nelson-Aalen at zero
//! coefficients.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hazard::{CumulativeHazard, StepHazard};
use crate::learners::nelson_aalen::breslow_baseline;

#[derive(Debug, Clone)]
pub struct CoxOptions {
    /// Relative log partial likelihood change declaring convergence.
    pub tol: f64,
    /// Newton-Raphson step budget; 0 returns the zero-coefficient fit.
    pub max_iter: usize,
    /// Bound on standardized coefficients before declaring monotone
    /// likelihood divergence.
    pub beta_cap: f64,
}

impl Default for CoxOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 50,
            beta_cap: 500.0,
        }
    }
}

/// Fitted proportional hazards model: Λ(t | x) = Λ0(t) exp(β'x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxPhHazard {
    pub coefficients: Vec<f64>,
    pub baseline: StepHazard,
}

impl CoxPhHazard {
    pub fn relative_risk(&self, x: &[f64]) -> f64 {
        let lp: f64 = self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum();
        lp.exp()
    }
}

impl CumulativeHazard for CoxPhHazard {
    fn cumulative(&self, t: f64, x: &[f64]) -> f64 {
        self.baseline.value_at(t) * self.relative_risk(x)
    }

    fn jump_times(&self) -> &[f64] {
        &self.baseline.times
    }

    fn increments(&self, x: &[f64]) -> Vec<f64> {
        let rr = self.relative_risk(x);
        self.baseline.jumps.iter().map(|dj| dj * rr).collect()
    }
}

/// Fitting problem with rows ordered by descending time, so risk sums
/// accumulate in a fixed order.
pub(crate) struct Problem {
    pub(crate) times: Vec<f64>,
    pub(crate) is_event: Vec<bool>,
    x: Vec<f64>, // row-major n x p, aligned with `times`
    pub(crate) n: usize,
    pub(crate) p: usize,
}

impl Problem {
    pub(crate) fn from_frame(
        d: &Dataset,
        cause: u8,
        columns: &[usize],
        center: &[f64],
        scale: &[f64],
    ) -> Problem {
        let n = d.len();
        let p = columns.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            d.observation(b)
                .time
                .total_cmp(&d.observation(a).time)
                .then(a.cmp(&b))
        });
        let mut times = Vec::with_capacity(n);
        let mut is_event = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n * p);
        for &i in &order {
            let o = d.observation(i);
            times.push(o.time);
            is_event.push(o.status == cause);
            for (j, &col) in columns.iter().enumerate() {
                x.push((o.covariates[col] - center[j]) / scale[j]);
            }
        }
        Problem {
            times,
            is_event,
            x,
            n,
            p,
        }
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    /// Subset of rows (indices into this problem's ordering) as a new
    /// problem; the descending-time order is preserved.
    pub(crate) fn subset(&self, rows: &[usize]) -> Problem {
        let mut sorted: Vec<usize> = rows.to_vec();
        sorted.sort_unstable();
        let mut times = Vec::with_capacity(sorted.len());
        let mut is_event = Vec::with_capacity(sorted.len());
        let mut x = Vec::with_capacity(sorted.len() * self.p);
        for &i in &sorted {
            times.push(self.times[i]);
            is_event.push(self.is_event[i]);
            x.extend_from_slice(self.row(i));
        }
        Problem {
            times,
            is_event,
            x,
            n: sorted.len(),
            p: self.p,
        }
    }

    /// Per-observation first and negated second derivatives of the
    /// Breslow log partial likelihood with respect to the linear
    /// predictor, aligned with the problem's row order.
    pub(crate) fn eta_derivatives(&self, eta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let eta_max = eta
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        let w: Vec<f64> = eta.iter().map(|e| (e - eta_max).exp()).collect();

        // Distinct times descending with event counts and risk sums.
        let mut blocks: Vec<(usize, usize, f64, f64)> = Vec::new(); // (start, end, d, s0)
        let mut s0 = 0.0;
        let mut i = 0;
        while i < self.n {
            let t = self.times[i];
            let mut j = i;
            let mut events = 0.0;
            while j < self.n && self.times[j] == t {
                s0 += w[j];
                if self.is_event[j] {
                    events += 1.0;
                }
                j += 1;
            }
            blocks.push((i, j, events, s0));
            i = j;
        }

        // Ascending sweep: rows at time t accumulate event terms with
        // event time <= t.
        let mut g = vec![0.0; self.n];
        let mut h = vec![0.0; self.n];
        let mut cum1 = 0.0;
        let mut cum2 = 0.0;
        for &(start, end, events, s0) in blocks.iter().rev() {
            if events > 0.0 {
                cum1 += events / s0;
                cum2 += events / (s0 * s0);
            }
            for r in start..end {
                let delta = f64::from(u8::from(self.is_event[r]));
                g[r] = delta - w[r] * cum1;
                h[r] = w[r] * cum1 - w[r] * w[r] * cum2;
            }
        }
        (g, h)
    }

    pub(crate) fn linear_predictors(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(beta)
                    .map(|(v, b)| v * b)
                    .sum::<f64>()
            })
            .collect()
    }

    /// Breslow log partial likelihood only.
    pub(crate) fn log_likelihood(&self, beta: &[f64]) -> f64 {
        let eta = self.linear_predictors(beta);
        let eta_max = eta
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        let mut ll = 0.0;
        let mut s0 = 0.0;
        let mut i = 0;
        while i < self.n {
            let t = self.times[i];
            let mut j = i;
            let mut events = 0u32;
            while j < self.n && self.times[j] == t {
                s0 += (eta[j] - eta_max).exp();
                if self.is_event[j] {
                    events += 1;
                    ll += eta[j];
                }
                j += 1;
            }
            if events > 0 {
                ll -= f64::from(events) * (eta_max + s0.ln());
            }
            i = j;
        }
        ll
    }

    /// Log partial likelihood, score vector and Hessian in one pass.
    fn stats(&self, beta: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let p = self.p;
        let eta = self.linear_predictors(beta);
        let eta_max = eta
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        let mut ll = 0.0;
        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![0.0; p * p];
        let mut i = 0;
        while i < self.n {
            let t = self.times[i];
            let mut j = i;
            let mut events = 0u32;
            while j < self.n && self.times[j] == t {
                let w = (eta[j] - eta_max).exp();
                let xj = self.row(j);
                s0 += w;
                for a in 0..p {
                    s1[a] += w * xj[a];
                    for b in a..p {
                        s2[a * p + b] += w * xj[a] * xj[b];
                    }
                }
                if self.is_event[j] {
                    events += 1;
                    ll += eta[j];
                    for a in 0..p {
                        grad[a] += xj[a];
                    }
                }
                j += 1;
            }
            if events > 0 {
                let d = f64::from(events);
                ll -= d * (eta_max + s0.ln());
                for a in 0..p {
                    let mean_a = s1[a] / s0;
                    grad[a] -= d * mean_a;
                    for b in a..p {
                        let mean_b = s1[b] / s0;
                        let h = d * (s2[a * p + b] / s0 - mean_a * mean_b);
                        hess[(a, b)] -= h;
                        if a != b {
                            hess[(b, a)] -= h;
                        }
                    }
                }
            }
            i = j;
        }
        (ll, grad, hess)
    }
}

pub(crate) fn standardization(d: &Dataset) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = d.len() as f64;
    let p = d.n_covariates();
    let mut columns = Vec::new();
    let mut center = Vec::new();
    let mut scale = Vec::new();
    for j in 0..p {
        let mean = d
            .observations()
            .iter()
            .map(|o| o.covariates[j])
            .sum::<f64>()
            / n;
        let var = d
            .observations()
            .iter()
            .map(|o| {
                let c = o.covariates[j] - mean;
                c * c
            })
            .sum::<f64>()
            / n;
        let sd = var.sqrt();
        if sd > 0.0 {
            columns.push(j);
            center.push(mean);
            scale.push(sd);
        }
    }
    (columns, center, scale)
}

fn format_trace(trace: &[f64]) -> String {
    let body: Vec<String> = trace.iter().map(|v| format!("{v:.6}")).collect();
    format!("log partial likelihood trace [{}]", body.join(", "))
}

pub(crate) fn fit(frame: &Dataset, cause: u8, opts: &CoxOptions) -> Result<CoxPhHazard> {
    fit_traced(frame, cause, opts).map(|(model, _)| model)
}

fn fit_traced(frame: &Dataset, cause: u8, opts: &CoxOptions) -> Result<(CoxPhHazard, Vec<f64>)> {
    let p = frame.n_covariates();
    if p == 0 {
        return Err(Error::InvalidConfig(
            "cox regression requires at least one covariate".into(),
        ));
    }
    let n_events = frame
        .observations()
        .iter()
        .filter(|o| o.status == cause)
        .count();
    if n_events == 0 {
        return Err(Error::Fit {
            learner: "cox".into(),
            message: "no events of the target cause".into(),
        });
    }

    let (columns, center, scale) = standardization(frame);
    let mut beta_std = vec![0.0; columns.len()];
    let mut trace = Vec::new();

    if !columns.is_empty() && opts.max_iter > 0 {
        let problem = Problem::from_frame(frame, cause, &columns, &center, &scale);
        let mut ll = problem.log_likelihood(&beta_std);
        trace.push(ll);
        let mut converged = false;
        for _ in 0..opts.max_iter {
            let (_, grad, hess) = problem.stats(&beta_std);
            let info = -hess;
            let chol = Cholesky::new(info).ok_or_else(|| Error::Fit {
                learner: "cox".into(),
                message: format!(
                    "singular information matrix; consider removing collinear covariates ({})",
                    format_trace(&trace)
                ),
            })?;
            let direction = chol.solve(&grad);

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..=10 {
                let cand: Vec<f64> = beta_std
                    .iter()
                    .zip(direction.iter())
                    .map(|(b, d)| b + step * d)
                    .collect();
                let cand_ll = problem.log_likelihood(&cand);
                if cand_ll.is_finite() && cand_ll >= ll {
                    accepted = Some((cand, cand_ll));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, cand_ll)) = accepted else {
                // No ascent direction improves the likelihood: at the
                // numerical optimum.
                converged = true;
                break;
            };
            let delta = cand_ll - ll;
            beta_std = cand;
            ll = cand_ll;
            trace.push(ll);

            if beta_std.iter().any(|b| b.abs() > opts.beta_cap) {
                return Err(Error::Fit {
                    learner: "cox".into(),
                    message: format!(
                        "monotone likelihood: standardized coefficient exceeded {} ({})",
                        opts.beta_cap,
                        format_trace(&trace)
                    ),
                });
            }
            if delta.abs() < opts.tol * ll.abs().max(1e-10) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Fit {
                learner: "cox".into(),
                message: format!(
                    "did not converge in {} iterations ({})",
                    opts.max_iter,
                    format_trace(&trace)
                ),
            });
        }
    }

    // Back to the original scale; excluded constant columns keep beta 0.
    let mut coefficients = vec![0.0; p];
    for (slot, &j) in columns.iter().enumerate() {
        coefficients[j] = beta_std[slot] / scale[slot];
    }
    let scores: Vec<f64> = frame
        .observations()
        .iter()
        .map(|o| {
            coefficients
                .iter()
                .zip(&o.covariates)
                .map(|(b, v)| b * v)
                .sum::<f64>()
                .exp()
        })
        .collect();
    let baseline = breslow_baseline(frame, cause, &scores);
    Ok((
        CoxPhHazard {
            coefficients,
            baseline,
        },
        trace,
    ))
}

/// Fit and return the accepted log partial likelihood trace alongside
/// the model, for ascent diagnostics.
pub fn fit_cox_with_trace(
    d: &Dataset,
    target: crate::learners::Target,
    opts: &CoxOptions,
) -> Result<(CoxPhHazard, Vec<f64>)> {
    let (frame, cause) = crate::learners::fitting_frame(d, target);
    fit_traced(&frame, cause, opts)
}

/// Breslow log partial likelihood at `beta` (original covariate scale).
/// Exposed for diagnostics and finite-difference checks.
pub fn cox_log_partial_likelihood(d: &Dataset, cause: u8, beta: &[f64]) -> f64 {
    let p = d.n_covariates();
    let columns: Vec<usize> = (0..p).collect();
    let problem = Problem::from_frame(d, cause, &columns, &vec![0.0; p], &vec![1.0; p]);
    problem.log_likelihood(beta)
}

/// Log partial likelihood, analytic gradient and Hessian at `beta`
/// (original covariate scale).
pub fn cox_score_stats(d: &Dataset, cause: u8, beta: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let p = d.n_covariates();
    let columns: Vec<usize> = (0..p).collect();
    let problem = Problem::from_frame(d, cause, &columns, &vec![0.0; p], &vec![1.0; p]);
    let (ll, grad, hess) = problem.stats(beta);
    let grad = grad.iter().cloned().collect();
    let hess = (0..p)
        .map(|a| (0..p).map(|b| hess[(a, b)]).collect())
        .collect();
    (ll, grad, hess)
}
