//! Monte Carlo verification of the scoring rule.
//!
//! Two checks against a simulated ground truth: (1) properness — the
//! expected integrated Brier score is strictly smaller at the true state
//! occupation function than at perturbed variants; (2) the excess-risk
//! identity — the expected score gap between a perturbed model and the
//! truth equals the squared weighted distance between the two state
//! occupation functions.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::{compose, mc_norm_squared, ComposedStateModel, StateOccupation};
use crate::error::Result;
use crate::hazard::{CumulativeHazard, FrozenCovariateHazard, ScaledHazard, ZeroHazard};
use crate::scoring::integrated_brier_eval;
use crate::seeding;
use crate::simulation::{
    simulate_dataset, true_state_occupation, SimulationScenario, WeibullHazard,
};

/// One perturbation's excess risk and distance, with standard errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub label: String,
    /// Paired Monte Carlo mean of B(F_eps, O) - B(F_true, O).
    pub mean_excess: f64,
    pub excess_se: f64,
    /// Monte Carlo estimate of the squared distance between the models.
    pub norm_sq: f64,
    pub norm_se: f64,
}

impl PerturbationReport {
    /// Properness at the 3 standard error level.
    pub fn properness_holds(&self) -> bool {
        self.mean_excess > 3.0 * self.excess_se
    }

    /// Excess-risk identity at 3 combined standard errors.
    pub fn excess_identity_holds(&self) -> bool {
        let combined = (self.excess_se * self.excess_se + self.norm_se * self.norm_se).sqrt();
        (self.mean_excess - self.norm_sq).abs() <= 3.0 * combined
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationOutcome {
    pub rows: Vec<PerturbationReport>,
    pub n_observations: usize,
    pub n_norm_draws: usize,
}

impl VerificationOutcome {
    pub fn all_proper(&self) -> bool {
        self.rows.iter().all(PerturbationReport::properness_holds)
    }

    pub fn all_identities_hold(&self) -> bool {
        self.rows
            .iter()
            .all(PerturbationReport::excess_identity_holds)
    }
}

fn scaled(scenario: &SimulationScenario, factor: f64) -> ComposedStateModel {
    let wrap = |params: &crate::simulation::WeibullParams| -> Arc<dyn CumulativeHazard> {
        Arc::new(ScaledHazard {
            inner: WeibullHazard {
                params: params.clone(),
            },
            factor,
        })
    };
    let cause2: Arc<dyn CumulativeHazard> = match &scenario.cause2 {
        Some(p) => wrap(p),
        None => Arc::new(ZeroHazard),
    };
    compose(wrap(&scenario.cause1), cause2, wrap(&scenario.censoring))
}

fn covariate_blind(scenario: &SimulationScenario) -> ComposedStateModel {
    let at = scenario.covariate_means();
    let wrap = |params: &crate::simulation::WeibullParams| -> Arc<dyn CumulativeHazard> {
        Arc::new(FrozenCovariateHazard {
            inner: WeibullHazard {
                params: params.clone(),
            },
            at: at.clone(),
        })
    };
    let cause2: Arc<dyn CumulativeHazard> = match &scenario.cause2 {
        Some(p) => wrap(p),
        None => Arc::new(ZeroHazard),
    };
    compose(wrap(&scenario.cause1), cause2, wrap(&scenario.censoring))
}

/// The five perturbed models probed by the verification suite: the
/// hazards scaled by 0.5, 0.8, 1.25, 2.0, and a covariate-blind variant
/// evaluated at the mean covariate vector.
pub fn perturbed_models(scenario: &SimulationScenario) -> Vec<(String, ComposedStateModel)> {
    let mut models: Vec<(String, ComposedStateModel)> = [0.5, 0.8, 1.25, 2.0]
        .iter()
        .map(|&c| (format!("hazards x {c}"), scaled(scenario, c)))
        .collect();
    models.push(("covariate-blind".to_string(), covariate_blind(scenario)));
    models
}

/// Run both Monte Carlo checks: `n_observations` simulated records for
/// the paired score gaps and `n_norm_draws` covariate draws for the
/// distance estimates.
pub fn verify_scoring_rule(
    scenario: &SimulationScenario,
    n_observations: usize,
    n_norm_draws: usize,
    seed: u64,
) -> Result<VerificationOutcome> {
    let scenario = scenario.clone().validated()?;
    let tau = scenario.tau;
    let truth = true_state_occupation(&scenario);
    let perturbed = perturbed_models(&scenario);

    let (data, _) = simulate_dataset(&scenario, n_observations, seed)?;

    // Paired differences per observation, reduced in index order.
    let diffs: Vec<Vec<f64>> = data
        .observations()
        .par_iter()
        .map(|o| {
            let truth_eval = truth.eval(&o.covariates, tau);
            let base = integrated_brier_eval(&truth_eval, o, tau);
            perturbed
                .iter()
                .map(|(_, model)| {
                    let eval = model.eval(&o.covariates, tau);
                    integrated_brier_eval(&eval, o, tau) - base
                })
                .collect()
        })
        .collect();

    let n = n_observations as f64;
    let norm_seed = seeding::derive_seed(seed, &[seeding::tag("norm-draws")]);
    let rows: Vec<PerturbationReport> = perturbed
        .iter()
        .enumerate()
        .map(|(pi, (label, model))| {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for d in &diffs {
                sum += d[pi];
                sum_sq += d[pi] * d[pi];
            }
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0);
            let se = (var / (n - 1.0)).sqrt();

            let norm = mc_norm_squared(
                model,
                &truth,
                |i| scenario.draw_covariates(norm_seed, i),
                n_norm_draws,
                200,
                tau,
            );
            PerturbationReport {
                label: label.clone(),
                mean_excess: mean,
                excess_se: se,
                norm_sq: norm.value,
                norm_se: norm.std_error,
            }
        })
        .collect();

    Ok(VerificationOutcome {
        rows,
        n_observations,
        n_norm_draws,
    })
}
