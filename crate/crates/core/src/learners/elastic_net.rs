#![allow(clippy::needless_range_loop)]

//! Elastic-net penalized Cox regression.
//!
//! Cyclic coordinate descent on an iterated quadratic approximation of
//! the Breslow log partial likelihood, following the usual glmnet-style
//! scheme with per-observation working weights from the diagonal of the
//! Hessian. The penalty on standardized coefficients is
//! `lambda * (alpha * |b|_1 + (1 - alpha)/2 * |b|_2^2)`; the lambda path
//! runs log-spaced from lambda_max down by a factor of 1e-3, and lambda
//! is chosen by inner cross-validated partial-likelihood deviance
//! (Verweij-van Houwelingen), i.e. by maximizing
//! `sum_k [ ll(all) - ll(train_k) ]` at the fold fits.

use crate::data::{make_folds, Dataset};
use crate::error::{Error, Result};
use crate::learners::cox::{standardization, CoxPhHazard, Problem};
use crate::learners::nelson_aalen::breslow_baseline;
use crate::learners::{fitting_frame, Target};
use crate::seeding;

#[derive(Debug, Clone)]
pub struct ElasticNetOptions {
    /// Mixing parameter: 1 is the lasso, 0 is ridge.
    pub alpha: f64,
    /// Number of lambda values on the path.
    pub lambda_grid_size: usize,
    /// Folds for the inner cross-validation selecting lambda.
    pub inner_folds: usize,
    /// Seed for the inner fold split.
    pub seed: u64,
}

impl Default for ElasticNetOptions {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            lambda_grid_size: 50,
            inner_folds: 5,
            seed: 0,
        }
    }
}

const CD_TOL: f64 = 1e-8;
const CD_MAX_SWEEPS: usize = 2000;
const OUTER_TOL: f64 = 1e-9;
const OUTER_MAX_ITER: usize = 50;
const LAMBDA_MIN_RATIO: f64 = 1e-3;

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// One penalized fit at a fixed lambda, warm-started from `beta`.
fn fit_at(problem: &Problem, alpha: f64, lambda: f64, beta: &mut [f64]) {
    let n = problem.n as f64;
    let p = problem.p;
    let mut ll = problem.log_likelihood(beta);
    for _ in 0..OUTER_MAX_ITER {
        let eta = problem.linear_predictors(beta);
        let (g, h) = problem.eta_derivatives(&eta);
        // Working residual u_i = h_i (z_i - eta_i); equals g_i at the
        // linearization point, so no division by h_i is ever needed.
        let mut u = g;
        let xh2: Vec<f64> = (0..p)
            .map(|j| {
                (0..problem.n)
                    .map(|i| h[i] * problem.row(i)[j] * problem.row(i)[j])
                    .sum::<f64>()
            })
            .collect();
        for _ in 0..CD_MAX_SWEEPS {
            let mut max_step = 0.0f64;
            for j in 0..p {
                let denom = xh2[j] / n + lambda * (1.0 - alpha);
                if denom <= 0.0 {
                    continue;
                }
                let mut xu = 0.0;
                for i in 0..problem.n {
                    xu += problem.row(i)[j] * u[i];
                }
                let num = xu / n + (xh2[j] / n) * beta[j];
                let updated = soft_threshold(num, lambda * alpha) / denom;
                let delta = updated - beta[j];
                if delta != 0.0 {
                    for i in 0..problem.n {
                        u[i] -= h[i] * problem.row(i)[j] * delta;
                    }
                    beta[j] = updated;
                    max_step = max_step.max(delta.abs());
                }
            }
            if max_step < CD_TOL {
                break;
            }
        }
        let new_ll = problem.log_likelihood(beta);
        let delta = (new_ll - ll).abs();
        ll = new_ll;
        if delta < OUTER_TOL * ll.abs().max(1.0) {
            break;
        }
    }
}

fn lambda_path(problem: &Problem, alpha: f64, grid_size: usize) -> Vec<f64> {
    let n = problem.n as f64;
    let (g0, _) = problem.eta_derivatives(&vec![0.0; problem.n]);
    let mut max_score = 0.0f64;
    for j in 0..problem.p {
        let mut s = 0.0;
        for i in 0..problem.n {
            s += problem.row(i)[j] * g0[i];
        }
        max_score = max_score.max((s / n).abs());
    }
    // With alpha near zero the l1 part cannot pin lambda_max; use the
    // conventional 1e-3 floor for path construction only.
    let lambda_max = max_score / alpha.max(1e-3);
    if lambda_max <= 0.0 || !lambda_max.is_finite() {
        return vec![0.0];
    }
    if grid_size == 1 {
        return vec![lambda_max];
    }
    (0..grid_size)
        .map(|l| lambda_max * LAMBDA_MIN_RATIO.powf(l as f64 / (grid_size - 1) as f64))
        .collect()
}

pub(crate) fn fit(frame: &Dataset, cause: u8, opts: &ElasticNetOptions) -> Result<CoxPhHazard> {
    let p = frame.n_covariates();
    if p == 0 {
        return Err(Error::InvalidConfig(
            "elastic net requires at least one covariate".into(),
        ));
    }
    let n_events = frame
        .observations()
        .iter()
        .filter(|o| o.status == cause)
        .count();
    if n_events == 0 {
        return Err(Error::Fit {
            learner: "elastic-net".into(),
            message: "no events of the target cause".into(),
        });
    }

    let (columns, center, scale) = standardization(frame);
    if columns.is_empty() {
        // No covariate information: zero-coefficient model.
        return Ok(zero_model(frame, cause, p));
    }
    let problem = Problem::from_frame(frame, cause, &columns, &center, &scale);
    let path = lambda_path(&problem, opts.alpha, opts.lambda_grid_size);
    if path == vec![0.0] {
        return Ok(zero_model(frame, cause, p));
    }

    // Inner cross-validated partial log-likelihood per lambda
    // (Verweij-van Houwelingen), with per-fold contributions kept for
    // the one-standard-error rule.
    let n = problem.n;
    let folds = opts.inner_folds.min(n).max(2);
    let mut fold_cvpl: Vec<Vec<f64>> = Vec::new();
    if n >= 2 * folds {
        let plan = make_folds(
            n,
            folds,
            1,
            seeding::derive_seed(opts.seed, &[seeding::tag("inner-cv")]),
        )?;
        for fold in 1..=folds as u32 {
            let (train_rows, _) = plan.split(0, fold);
            let train = problem.subset(&train_rows);
            if !train.is_event.iter().any(|&e| e) {
                continue;
            }
            let mut beta = vec![0.0; problem.p];
            let mut contributions = Vec::with_capacity(path.len());
            for &lambda in &path {
                fit_at(&train, opts.alpha, lambda, &mut beta);
                contributions.push(problem.log_likelihood(&beta) - train.log_likelihood(&beta));
            }
            fold_cvpl.push(contributions);
        }
    }
    // Maximize the cross-validated likelihood, then back off to the
    // largest lambda whose deficit against the maximum is within one
    // (paired, per-fold) standard error. The path is descending, so a
    // smaller index means more shrinkage.
    let mut best = 0;
    if !fold_cvpl.is_empty() {
        let k = fold_cvpl.len() as f64;
        let totals: Vec<f64> = (0..path.len())
            .map(|l| fold_cvpl.iter().map(|f| f[l]).sum())
            .collect();
        let mut max_l = 0;
        for l in 1..path.len() {
            if totals[l] > totals[max_l] {
                max_l = l;
            }
        }
        best = max_l;
        for l in 0..=max_l {
            let deficit = totals[max_l] - totals[l];
            let mean_diff = deficit / k;
            let var_diff = fold_cvpl
                .iter()
                .map(|f| {
                    let d = (f[max_l] - f[l]) - mean_diff;
                    d * d
                })
                .sum::<f64>()
                / (k - 1.0).max(1.0);
            let se_of_total = (var_diff * k).sqrt();
            if deficit <= se_of_total {
                best = l;
                break;
            }
        }
    }

    // Final path fit on the full data, stopping at the selected lambda.
    let mut beta = vec![0.0; problem.p];
    for &lambda in path.iter().take(best + 1) {
        fit_at(&problem, opts.alpha, lambda, &mut beta);
    }

    finish(frame, cause, p, &columns, &center, &scale, &beta)
}

/// Penalized fit at one fixed lambda (standardized penalty scale),
/// without any path or cross-validation. Diagnostic entry point.
pub fn fit_elastic_net_at_lambda(
    d: &Dataset,
    target: Target,
    alpha: f64,
    lambda: f64,
) -> Result<CoxPhHazard> {
    let (frame, cause) = fitting_frame(d, target);
    let p = frame.n_covariates();
    if p == 0 {
        return Err(Error::InvalidConfig(
            "elastic net requires at least one covariate".into(),
        ));
    }
    let (columns, center, scale) = standardization(&frame);
    if columns.is_empty() {
        return Ok(zero_model(&frame, cause, p));
    }
    let problem = Problem::from_frame(&frame, cause, &columns, &center, &scale);
    let mut beta = vec![0.0; problem.p];
    fit_at(&problem, alpha, lambda, &mut beta);
    finish(&frame, cause, p, &columns, &center, &scale, &beta)
}

fn zero_model(frame: &Dataset, cause: u8, p: usize) -> CoxPhHazard {
    let baseline = breslow_baseline(frame, cause, &vec![1.0; frame.len()]);
    CoxPhHazard {
        coefficients: vec![0.0; p],
        baseline,
    }
}

fn finish(
    frame: &Dataset,
    cause: u8,
    p: usize,
    columns: &[usize],
    _center: &[f64],
    scale: &[f64],
    beta_std: &[f64],
) -> Result<CoxPhHazard> {
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
    Ok(CoxPhHazard {
        coefficients,
        baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;
    use crate::hazard::CumulativeHazard;
    use crate::learners::{fit_cox, fit_nelson_aalen, CoxOptions, FittedHazard};
    use rand::Rng;

    fn sim_dataset(n: usize, beta: &[f64], seed: u64) -> Dataset {
        // Exponential event times with rate exp(beta'x), uniform censoring.
        let mut rng = seeding::rng_from(seed, &[seeding::tag("en-test")]);
        let p = beta.len();
        let mut obs = Vec::with_capacity(n);
        for _ in 0..n {
            let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lp: f64 = beta.iter().zip(&x).map(|(b, v)| b * v).sum();
            let u: f64 = rng.gen_range(0.0f64..1.0).max(1e-12);
            let t = -u.ln() / lp.exp();
            let c: f64 = rng.gen_range(0.0..2.0);
            let (time, status) = if t <= c { (t, 1) } else { (c, 0) };
            obs.push(Observation::new(time, status, x).unwrap());
        }
        Dataset::new(obs, (0..p).map(|j| format!("x{j}")).collect()).unwrap()
    }

    #[test]
    fn full_shrinkage_equals_nelson_aalen() {
        let d = sim_dataset(60, &[0.8], 1);
        let fit = fit_elastic_net_at_lambda(&d, Target::Cause1, 1.0, 1e6).unwrap();
        assert_eq!(fit.coefficients, vec![0.0]);
        let na = match fit_nelson_aalen(&d, Target::Cause1).unwrap() {
            FittedHazard::NelsonAalen { hazard } => hazard,
            _ => unreachable!(),
        };
        assert_eq!(fit.baseline.times, na.times);
        for (a, b) in fit.baseline.jumps.iter().zip(&na.jumps) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn ridge_at_tiny_lambda_matches_unpenalized_cox() {
        let d = sim_dataset(50, &[0.7], 2);
        let ridge = fit_elastic_net_at_lambda(&d, Target::Cause1, 0.0, 1e-8).unwrap();
        let cox = match fit_cox(&d, Target::Cause1, &CoxOptions::default()).unwrap() {
            FittedHazard::CoxPh(m) => m,
            _ => unreachable!(),
        };
        assert!(
            (ridge.coefficients[0] - cox.coefficients[0]).abs() < 1e-3,
            "ridge {} vs cox {}",
            ridge.coefficients[0],
            cox.coefficients[0]
        );
    }

    #[test]
    fn increments_scale_with_relative_risk() {
        let d = sim_dataset(40, &[0.5], 3);
        let fit = fit_elastic_net_at_lambda(&d, Target::Cause1, 0.5, 0.01).unwrap();
        let x = vec![0.4];
        let inc = fit.increments(&x);
        let rr = fit.relative_risk(&x);
        for (i, t) in fit.baseline.times.iter().enumerate() {
            assert!((inc[i] - fit.baseline.jumps[i] * rr).abs() < 1e-15);
            assert!(fit.cumulative(*t, &x) >= fit.cumulative(t - 1e-9, &x));
        }
    }
}
