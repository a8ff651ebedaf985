//! Library of conditional cumulative hazard learners.
//!
//! Each learner maps a dataset to a fitted conditional cumulative hazard
//! for a designated target: cause 1, cause 2, or censoring. Censoring
//! targets are fitted by exchanging the roles of censoring and outcome
//! and fitting the cause-1 machinery on the modified data, so the two
//! routes agree exactly.

mod cox;
mod elastic_net;
mod forest;
mod nelson_aalen;

pub use cox::{
    cox_log_partial_likelihood, cox_score_stats, fit_cox_with_trace, CoxOptions, CoxPhHazard,
};
pub use elastic_net::{fit_elastic_net_at_lambda, ElasticNetOptions};
pub use forest::{ForestHazard, ForestOptions};
pub use nelson_aalen::breslow_baseline;

use std::borrow::Cow;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{reverse_roles, Dataset};
use crate::error::{Error, Result};
use crate::hazard::{CumulativeHazard, StepHazard};

/// Which hazard a learner estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Cause1,
    Cause2,
    Censoring,
}

impl Target {
    pub fn label(self) -> &'static str {
        match self {
            Target::Cause1 => "cause1",
            Target::Cause2 => "cause2",
            Target::Censoring => "censoring",
        }
    }
}

/// Reduce a fitting problem to (dataset, event cause): censoring targets
/// fit cause 1 on the role-reversed data.
pub fn fitting_frame(d: &Dataset, target: Target) -> (Cow<'_, Dataset>, u8) {
    match target {
        Target::Cause1 => (Cow::Borrowed(d), 1),
        Target::Cause2 => (Cow::Borrowed(d), 2),
        Target::Censoring => (Cow::Owned(reverse_roles(d)), 1),
    }
}

/// Supported learner kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    NelsonAalen,
    Cox,
    CoxElasticNet,
    SurvivalForest,
}

/// Declarative learner description, as found in library config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub hyperparameters: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl LearnerSpec {
    pub fn of_kind(kind: LearnerKind) -> LearnerSpec {
        LearnerSpec {
            kind,
            target: None,
            hyperparameters: BTreeMap::new(),
            name: None,
        }
    }

    fn hyper_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.hyperparameters.get(key) {
            None => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| {
                Error::InvalidConfig(format!("hyperparameter `{key}` must be numeric"))
            }),
        }
    }

    fn hyper_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.hyper_f64(key)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(Some(v as usize)),
            Some(v) => Err(Error::InvalidConfig(format!(
                "hyperparameter `{key}` must be a non-negative integer, got {v}"
            ))),
        }
    }

    fn hyper_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.hyperparameters.get(key) {
            None => Ok(None),
            Some(v) => v.as_bool().map(Some).ok_or_else(|| {
                Error::InvalidConfig(format!("hyperparameter `{key}` must be a boolean"))
            }),
        }
    }

    /// Validate hyperparameters and bind the spec to a target role.
    pub fn build(&self, target: Target) -> Result<BoundLearner> {
        if let Some(declared) = self.target {
            if declared != target {
                return Err(Error::InvalidConfig(format!(
                    "learner declares target {} but is listed under {}",
                    declared.label(),
                    target.label()
                )));
            }
        }
        let config = match self.kind {
            LearnerKind::NelsonAalen => LearnerConfig::NelsonAalen,
            LearnerKind::Cox => {
                let mut opts = CoxOptions::default();
                if let Some(tol) = self.hyper_f64("tol")? {
                    if tol <= 0.0 {
                        return Err(Error::InvalidConfig("tol must be positive".into()));
                    }
                    opts.tol = tol;
                }
                if let Some(m) = self.hyper_usize("max_iter")? {
                    opts.max_iter = m;
                }
                LearnerConfig::Cox(opts)
            }
            LearnerKind::CoxElasticNet => {
                let mut opts = ElasticNetOptions::default();
                if let Some(alpha) = self.hyper_f64("alpha")? {
                    if !(0.0..=1.0).contains(&alpha) {
                        return Err(Error::InvalidConfig(format!(
                            "alpha must be in [0, 1], got {alpha}"
                        )));
                    }
                    opts.alpha = alpha;
                }
                if let Some(g) = self.hyper_usize("lambda_grid_size")? {
                    if g == 0 {
                        return Err(Error::InvalidConfig(
                            "lambda_grid_size must be positive".into(),
                        ));
                    }
                    opts.lambda_grid_size = g;
                }
                if let Some(f) = self.hyper_usize("inner_folds")? {
                    if f < 2 {
                        return Err(Error::InvalidConfig(
                            "inner_folds must be at least 2".into(),
                        ));
                    }
                    opts.inner_folds = f;
                }
                LearnerConfig::ElasticNet(opts)
            }
            LearnerKind::SurvivalForest => {
                let mut opts = ForestOptions::default();
                if let Some(v) = self.hyper_usize("n_trees")? {
                    if v == 0 {
                        return Err(Error::InvalidConfig("n_trees must be positive".into()));
                    }
                    opts.n_trees = v;
                }
                if let Some(v) = self.hyper_usize("mtry")? {
                    opts.mtry = Some(v);
                }
                if let Some(v) = self.hyper_usize("min_node_size")? {
                    if v == 0 {
                        return Err(Error::InvalidConfig(
                            "min_node_size must be positive".into(),
                        ));
                    }
                    opts.min_node_size = v;
                }
                if let Some(v) = self.hyper_bool("bootstrap")? {
                    opts.bootstrap = v;
                }
                if let Some(v) = self.hyper_f64("seed")? {
                    opts.seed = v as u64;
                }
                LearnerConfig::Forest(opts)
            }
        };
        let name = self.name.clone().unwrap_or_else(|| match &config {
            LearnerConfig::NelsonAalen => "nelson-aalen".to_string(),
            LearnerConfig::Cox(_) => "cox".to_string(),
            LearnerConfig::ElasticNet(o) if o.alpha == 1.0 => "lasso".to_string(),
            LearnerConfig::ElasticNet(_) => "elastic-net".to_string(),
            LearnerConfig::Forest(_) => "forest".to_string(),
        });
        Ok(BoundLearner {
            name,
            target,
            config,
        })
    }
}

#[derive(Debug, Clone)]
enum LearnerConfig {
    NelsonAalen,
    Cox(CoxOptions),
    ElasticNet(ElasticNetOptions),
    Forest(ForestOptions),
}

/// A learner bound to a target role with validated hyperparameters.
#[derive(Debug, Clone)]
pub struct BoundLearner {
    name: String,
    target: Target,
    config: LearnerConfig,
}

/// A map `Dataset -> FittedHazard` with a display name. Cross-validation
/// passes a derived per-fit seed; deterministic learners ignore it.
pub trait HazardLearner: Send + Sync {
    fn name(&self) -> &str;
    fn fit(&self, d: &Dataset, seed: u64) -> Result<FittedHazard>;
}

impl HazardLearner for BoundLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn fit(&self, d: &Dataset, seed: u64) -> Result<FittedHazard> {
        match &self.config {
            LearnerConfig::NelsonAalen => fit_nelson_aalen(d, self.target),
            LearnerConfig::Cox(opts) => fit_cox(d, self.target, opts),
            LearnerConfig::ElasticNet(opts) => {
                let mut opts = opts.clone();
                opts.seed = seed;
                fit_cox_elastic_net(d, self.target, &opts)
            }
            LearnerConfig::Forest(opts) => {
                let mut opts = opts.clone();
                opts.seed = seed;
                fit_survival_forest(d, self.target, &opts)
            }
        }
        .map_err(|e| match e {
            Error::Fit { message, .. } => Error::Fit {
                learner: self.name.clone(),
                message,
            },
            other => other,
        })
    }
}

/// Fit the Nelson-Aalen estimator for the target hazard; covariates are
/// ignored.
pub fn fit_nelson_aalen(d: &Dataset, target: Target) -> Result<FittedHazard> {
    if d.is_empty() {
        return Err(Error::EmptyInput("cannot fit on an empty dataset".into()));
    }
    let (frame, cause) = fitting_frame(d, target);
    let scores = vec![1.0; frame.len()];
    let baseline = breslow_baseline(&frame, cause, &scores);
    Ok(FittedHazard::NelsonAalen { hazard: baseline })
}

/// Fit a cause-specific Cox proportional hazards model by Newton-Raphson
/// on the Breslow-tie log partial likelihood, with a Breslow baseline.
pub fn fit_cox(d: &Dataset, target: Target, opts: &CoxOptions) -> Result<FittedHazard> {
    if d.is_empty() {
        return Err(Error::EmptyInput("cannot fit on an empty dataset".into()));
    }
    let (frame, cause) = fitting_frame(d, target);
    cox::fit(&frame, cause, opts).map(FittedHazard::CoxPh)
}

/// Fit an elastic-net penalized Cox model along a lambda path, selecting
/// lambda by inner cross-validated partial-likelihood deviance.
pub fn fit_cox_elastic_net(
    d: &Dataset,
    target: Target,
    opts: &ElasticNetOptions,
) -> Result<FittedHazard> {
    if d.is_empty() {
        return Err(Error::EmptyInput("cannot fit on an empty dataset".into()));
    }
    let (frame, cause) = fitting_frame(d, target);
    elastic_net::fit(&frame, cause, opts).map(FittedHazard::CoxPh)
}

/// Fit a random survival forest with log-rank splitting; terminal nodes
/// hold Nelson-Aalen estimates and predictions average over trees.
pub fn fit_survival_forest(
    d: &Dataset,
    target: Target,
    opts: &ForestOptions,
) -> Result<FittedHazard> {
    if d.is_empty() {
        return Err(Error::EmptyInput("cannot fit on an empty dataset".into()));
    }
    let (frame, cause) = fitting_frame(d, target);
    Ok(FittedHazard::Forest(forest::fit(&frame, cause, opts)))
}

/// A fitted conditional cumulative hazard, serializable for manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FittedHazard {
    Zero,
    NelsonAalen { hazard: StepHazard },
    CoxPh(CoxPhHazard),
    Forest(ForestHazard),
}

impl CumulativeHazard for FittedHazard {
    fn cumulative(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            FittedHazard::Zero => 0.0,
            FittedHazard::NelsonAalen { hazard } => hazard.cumulative(t, x),
            FittedHazard::CoxPh(m) => m.cumulative(t, x),
            FittedHazard::Forest(m) => m.cumulative(t, x),
        }
    }

    fn jump_times(&self) -> &[f64] {
        match self {
            FittedHazard::Zero => &[],
            FittedHazard::NelsonAalen { hazard } => hazard.jump_times(),
            FittedHazard::CoxPh(m) => m.jump_times(),
            FittedHazard::Forest(m) => m.jump_times(),
        }
    }

    fn increments(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FittedHazard::Zero => Vec::new(),
            FittedHazard::NelsonAalen { hazard } => hazard.increments(x),
            FittedHazard::CoxPh(m) => m.increments(x),
            FittedHazard::Forest(m) => m.increments(x),
        }
    }
}
