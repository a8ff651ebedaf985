//! Cox-Weibull ground-truth simulation.
//!
//! Event and censoring times follow conditional Weibull hazards
//! `H(t | x) = scale * t^shape * exp(coef' x)`; covariates are drawn from
//! independent marginals. Latent cause-specific times compete through
//! `T = min(T1, T2)` and the observed record is `(min(T, C, admin),
//! status)`. Scenario scales can be calibrated by bisection against
//! target marginal event and censoring rates at the horizon.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::{compose, ComposedStateModel};
use crate::data::{Dataset, Observation};
use crate::error::{io_err, Error, Result};
use crate::hazard::{CumulativeHazard, ZeroHazard};
use crate::seeding;

/// Marginal distribution of one covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CovariateSpec {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Bernoulli {
        p: f64,
    },
    Categorical {
        probabilities: Vec<f64>,
        /// Values taken by the categories; defaults to 0..k-1.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
    },
}

impl CovariateSpec {
    fn validate(&self) -> Result<()> {
        match self {
            CovariateSpec::Gaussian { sd, .. } if *sd < 0.0 => Err(Error::InvalidConfig(
                "gaussian sd must be non-negative".into(),
            )),
            CovariateSpec::Bernoulli { p } if !(0.0..=1.0).contains(p) => {
                Err(Error::InvalidConfig("bernoulli p must be in [0, 1]".into()))
            }
            CovariateSpec::Categorical {
                probabilities,
                values,
            } => {
                if probabilities.is_empty()
                    || probabilities.iter().any(|p| *p < 0.0)
                    || (probabilities.iter().sum::<f64>() - 1.0).abs() > 1e-9
                {
                    return Err(Error::InvalidConfig(
                        "categorical probabilities must be non-negative and sum to 1".into(),
                    ));
                }
                if let Some(v) = values {
                    if v.len() != probabilities.len() {
                        return Err(Error::InvalidConfig(
                            "categorical values must match probabilities in length".into(),
                        ));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            CovariateSpec::Gaussian { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            CovariateSpec::Bernoulli { p } => f64::from(u8::from(rng.gen::<f64>() < *p)),
            CovariateSpec::Categorical {
                probabilities,
                values,
            } => {
                let u: f64 = rng.gen();
                let mut cum = 0.0;
                let mut idx = probabilities.len() - 1;
                for (i, p) in probabilities.iter().enumerate() {
                    cum += p;
                    if u < cum {
                        idx = i;
                        break;
                    }
                }
                values.as_ref().map_or(idx as f64, |v| v[idx])
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            CovariateSpec::Gaussian { mean, .. } => *mean,
            CovariateSpec::Bernoulli { p } => *p,
            CovariateSpec::Categorical {
                probabilities,
                values,
            } => probabilities
                .iter()
                .enumerate()
                .map(|(i, p)| p * values.as_ref().map_or(i as f64, |v| v[i]))
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateDef {
    pub name: String,
    #[serde(flatten)]
    pub spec: CovariateSpec,
}

/// Scale, shape, and log-linear covariate effects of one Weibull hazard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub scale: f64,
    pub shape: f64,
    pub coefficients: Vec<f64>,
}

impl WeibullParams {
    fn validate(&self, p: usize, label: &str) -> Result<()> {
        if self.scale <= 0.0 || self.shape <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "{label}: scale and shape must be strictly positive"
            )));
        }
        if self.coefficients.len() != p {
            return Err(Error::InvalidConfig(format!(
                "{label}: expected {p} coefficients, got {}",
                self.coefficients.len()
            )));
        }
        Ok(())
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum()
    }

    /// H(t | x) = scale * t^shape * exp(coef' x).
    pub fn cumulative(&self, t: f64, x: &[f64]) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.scale * t.powf(self.shape) * self.linear_predictor(x).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensoringMode {
    Dependent,
    Independent,
}

/// Ground-truth generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationScenario {
    pub covariates: Vec<CovariateDef>,
    pub cause1: WeibullParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause2: Option<WeibullParams>,
    pub censoring: WeibullParams,
    pub censoring_mode: CensoringMode,
    pub tau: f64,
    /// Administrative censoring; defaults to 2 * tau.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admin_censoring_time: Option<f64>,
}

impl SimulationScenario {
    /// Validate and normalize: independent censoring forces the
    /// censoring coefficients to zero.
    pub fn validated(mut self) -> Result<SimulationScenario> {
        let p = self.covariates.len();
        for c in &self.covariates {
            c.spec.validate()?;
        }
        self.cause1.validate(p, "cause1")?;
        if let Some(c2) = &self.cause2 {
            c2.validate(p, "cause2")?;
        }
        self.censoring.validate(p, "censoring")?;
        if self.tau <= 0.0 {
            return Err(Error::InvalidConfig("tau must be positive".into()));
        }
        if self.censoring_mode == CensoringMode::Independent {
            for b in &mut self.censoring.coefficients {
                *b = 0.0;
            }
        }
        if let Some(admin) = self.admin_censoring_time {
            if admin < self.tau {
                return Err(Error::InvalidConfig(
                    "administrative censoring must not precede the horizon tau".into(),
                ));
            }
        }
        Ok(self)
    }

    pub fn admin_time(&self) -> f64 {
        self.admin_censoring_time.unwrap_or(2.0 * self.tau)
    }

    pub fn covariate_names(&self) -> Vec<String> {
        self.covariates.iter().map(|c| c.name.clone()).collect()
    }

    pub fn covariate_means(&self) -> Vec<f64> {
        self.covariates.iter().map(|c| c.spec.mean()).collect()
    }

    pub fn draw_covariates(&self, seed: u64, record: usize) -> Vec<f64> {
        let mut rng = seeding::rng_from(seed, &[seeding::tag("covariates"), record as u64]);
        self.covariates
            .iter()
            .map(|c| c.spec.draw(&mut rng))
            .collect()
    }

    pub fn from_json_file(path: &Path) -> Result<SimulationScenario> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let scenario: SimulationScenario = serde_json::from_str(&text)?;
        scenario.validated()
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| io_err(path, e))
    }
}

/// Invert the conditional Weibull survival function: the time t with
/// exp(-scale * t^shape * exp(lp)) = u.
pub fn invert_weibull(u: f64, scale: f64, shape: f64, linear_predictor: f64) -> Result<f64> {
    if !(0.0 < u && u < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "uniform draw must lie strictly in (0, 1), got {u}"
        )));
    }
    if scale <= 0.0 || shape <= 0.0 {
        return Err(Error::InvalidConfig(
            "scale and shape must be strictly positive".into(),
        ));
    }
    Ok((-u.ln() / (scale * linear_predictor.exp())).powf(1.0 / shape))
}

/// Latent ground truth behind one observed record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatentRecord {
    pub event_time: f64,
    pub cause: u8,
    pub censoring_time: f64,
    pub covariates: Vec<f64>,
    pub observed: Observation,
}

/// Draw a dataset of `n` records; deterministic given the seed and
/// independent of batching because every record derives its own stream.
pub fn simulate_dataset(
    scenario: &SimulationScenario,
    n: usize,
    seed: u64,
) -> Result<(Dataset, Vec<LatentRecord>)> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample size must be positive".into()));
    }
    let scenario = scenario.clone().validated()?;
    let admin = scenario.admin_time();
    let latent: Vec<LatentRecord> = (0..n)
        .into_par_iter()
        .map(|i| {
            let covariates = scenario.draw_covariates(seed, i);
            let mut rng = seeding::rng_from(seed, &[seeding::tag("times"), i as u64]);
            let mut draw = |params: &WeibullParams| -> f64 {
                let u: f64 = loop {
                    let v = rng.gen::<f64>();
                    if v > 0.0 {
                        break v;
                    }
                };
                invert_weibull(
                    u,
                    params.scale,
                    params.shape,
                    params.linear_predictor(&covariates),
                )
                .expect("validated parameters")
            };
            let t1 = draw(&scenario.cause1);
            let t2 = scenario.cause2.as_ref().map(&mut draw);
            let censoring_time = draw(&scenario.censoring);
            let (event_time, cause) = match t2 {
                Some(t2) if t2 < t1 => (t2, 2),
                _ => (t1, 1),
            };
            let time = event_time.min(censoring_time).min(admin);
            let status = if event_time <= censoring_time && event_time <= admin {
                cause
            } else {
                0
            };
            LatentRecord {
                event_time,
                cause,
                censoring_time,
                covariates: covariates.clone(),
                observed: Observation {
                    time,
                    status,
                    covariates,
                },
            }
        })
        .collect();
    let dataset = Dataset::new(
        latent.iter().map(|r| r.observed.clone()).collect(),
        scenario.covariate_names(),
    )?;
    Ok((dataset, latent))
}

/// Analytic Weibull hazard as a [`CumulativeHazard`].
#[derive(Debug, Clone)]
pub struct WeibullHazard {
    pub params: WeibullParams,
}

impl CumulativeHazard for WeibullHazard {
    fn cumulative(&self, t: f64, x: &[f64]) -> f64 {
        self.params.cumulative(t, x)
    }

    fn jump_times(&self) -> &[f64] {
        &[]
    }

    fn increments(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    fn rate(&self, t: f64, x: &[f64]) -> f64 {
        // Integrable singularity at zero when shape < 1.
        let t = t.max(1e-12);
        self.params.scale
            * self.params.shape
            * t.powf(self.params.shape - 1.0)
            * self.params.linear_predictor(x).exp()
    }

    fn has_continuous_part(&self) -> bool {
        true
    }
}

/// The true state occupation model of a scenario (administrative
/// censoring sits beyond the horizon and does not enter).
pub fn true_state_occupation(scenario: &SimulationScenario) -> ComposedStateModel {
    let cause2: Arc<dyn CumulativeHazard> = match &scenario.cause2 {
        Some(params) => Arc::new(WeibullHazard {
            params: params.clone(),
        }),
        None => Arc::new(ZeroHazard),
    };
    compose(
        Arc::new(WeibullHazard {
            params: scenario.cause1.clone(),
        }),
        cause2,
        Arc::new(WeibullHazard {
            params: scenario.censoring.clone(),
        }),
    )
}

/// Calibration targets: marginal latent rates at the horizon.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationTargets {
    /// P(min(T1, T2) <= horizon).
    pub event_rate: f64,
    /// P(C <= horizon).
    pub censor_rate: f64,
    pub horizon: f64,
}

const CALIBRATION_DRAWS: usize = 50_000;
const CALIBRATION_TOL: f64 = 1e-4;

/// Adjust the cause-1 and censoring scales by bisection until the Monte
/// Carlo marginal rates at the horizon match the targets. The rates are
/// Rao-Blackwellized: conditional probabilities are analytic and only
/// the covariates are drawn (n = 50,000), so the search is deterministic
/// given the seed.
pub fn calibrate_scenario(
    targets: CalibrationTargets,
    template: &SimulationScenario,
    seed: u64,
) -> Result<SimulationScenario> {
    if !(0.0..1.0).contains(&targets.event_rate)
        || !(0.0..1.0).contains(&targets.censor_rate)
        || targets.event_rate <= 0.0
        || targets.censor_rate <= 0.0
    {
        return Err(Error::InvalidConfig(
            "calibration targets must lie strictly in (0, 1)".into(),
        ));
    }
    let mut scenario = template.clone().validated()?;
    let h = targets.horizon;
    let xs: Vec<Vec<f64>> = (0..CALIBRATION_DRAWS)
        .map(|i| {
            scenario.draw_covariates(seeding::derive_seed(seed, &[seeding::tag("calibrate")]), i)
        })
        .collect();

    // Event rate: monotone in the cause-1 scale with cause 2 fixed.
    let event_rate = |scale: f64| -> f64 {
        let mut sum = 0.0;
        for x in &xs {
            let mut hazard =
                scale * h.powf(scenario.cause1.shape) * scenario.cause1.linear_predictor(x).exp();
            if let Some(c2) = &scenario.cause2 {
                hazard += c2.cumulative(h, x);
            }
            sum += 1.0 - (-hazard).exp();
        }
        sum / xs.len() as f64
    };
    scenario.cause1.scale = bisect_scale(&event_rate, targets.event_rate, "event rate")?;

    let censor_rate = |scale: f64| -> f64 {
        let mut sum = 0.0;
        for x in &xs {
            let hazard = scale
                * h.powf(scenario.censoring.shape)
                * scenario.censoring.linear_predictor(x).exp();
            sum += 1.0 - (-hazard).exp();
        }
        sum / xs.len() as f64
    };
    scenario.censoring.scale = bisect_scale(&censor_rate, targets.censor_rate, "censoring rate")?;
    Ok(scenario)
}

fn bisect_scale(rate: &dyn Fn(f64) -> f64, target: f64, label: &str) -> Result<f64> {
    let (mut lo, mut hi) = (1e-15, 1e8);
    let (rate_lo, rate_hi) = (rate(lo), rate(hi));
    if !(rate_lo <= target && target <= rate_hi) {
        return Err(Error::Calibration(format!(
            "{label} target {target:.4} outside achievable range [{rate_lo:.4}, {rate_hi:.4}]"
        )));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let r = rate(mid);
        if (r - target).abs() < CALIBRATION_TOL {
            return Ok(mid);
        }
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::StateOccupation;
    use crate::data::StateLabel;

    pub(crate) fn toy_scenario() -> SimulationScenario {
        SimulationScenario {
            covariates: vec![
                CovariateDef {
                    name: "x1".into(),
                    spec: CovariateSpec::Gaussian { mean: 0.0, sd: 1.0 },
                },
                CovariateDef {
                    name: "x2".into(),
                    spec: CovariateSpec::Bernoulli { p: 0.4 },
                },
            ],
            cause1: WeibullParams {
                scale: 0.02,
                shape: 1.2,
                coefficients: vec![0.5, -0.3],
            },
            cause2: None,
            censoring: WeibullParams {
                scale: 0.01,
                shape: 1.0,
                coefficients: vec![0.2, 0.0],
            },
            censoring_mode: CensoringMode::Dependent,
            tau: 36.0,
            admin_censoring_time: None,
        }
    }

    #[test]
    fn inversion_examples() {
        let t = invert_weibull(0.5, 1.0, 1.0, 0.0).unwrap();
        assert!((t - core::f64::consts::LN_2).abs() < 1e-12);
        let t = invert_weibull((-4.0f64).exp(), 1.0, 2.0, 0.0).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        // Proportional hazards: lp = ln 2 halves the exponential time.
        let base = invert_weibull(0.3, 1.0, 1.0, 0.0).unwrap();
        let scaled = invert_weibull(0.3, 1.0, 1.0, 2.0f64.ln()).unwrap();
        assert!((scaled - base / 2.0).abs() < 1e-12);
        assert!(invert_weibull(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(invert_weibull(1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn simulation_is_deterministic_and_consistent() {
        let scenario = toy_scenario();
        let (d1, l1) = simulate_dataset(&scenario, 500, 7).unwrap();
        let (d2, _) = simulate_dataset(&scenario, 500, 7).unwrap();
        assert_eq!(d1, d2);
        let admin = scenario.admin_time();
        for r in &l1 {
            let expect_time = r.event_time.min(r.censoring_time).min(admin);
            assert_eq!(r.observed.time.to_bits(), expect_time.to_bits());
            let expect_status = if r.event_time <= r.censoring_time && r.event_time <= admin {
                r.cause
            } else {
                0
            };
            assert_eq!(r.observed.status, expect_status);
        }
        let (d3, _) = simulate_dataset(&scenario, 500, 8).unwrap();
        assert_ne!(d1, d3);
    }

    #[test]
    fn vanishing_censoring_scale_observes_all_events() {
        let mut scenario = toy_scenario();
        scenario.censoring.scale = 1e-12;
        let (d, _) = simulate_dataset(&scenario, 400, 3).unwrap();
        let admin = scenario.admin_time();
        for o in d.observations() {
            assert!(o.status != 0 || o.time == admin, "only admin censoring");
        }
        let events = d.observations().iter().filter(|o| o.status != 0).count();
        assert!(events as f64 / 400.0 > 0.5);
    }

    #[test]
    fn independent_mode_zeroes_censoring_coefficients() {
        let mut scenario = toy_scenario();
        scenario.censoring_mode = CensoringMode::Independent;
        let validated = scenario.validated().unwrap();
        assert!(validated.censoring.coefficients.iter().all(|b| *b == 0.0));

        let (_, latent) = simulate_dataset(&validated, 4000, 11).unwrap();
        let n = latent.len() as f64;
        for j in 0..2 {
            let mean_x = latent.iter().map(|r| r.covariates[j]).sum::<f64>() / n;
            let mean_c = latent.iter().map(|r| r.censoring_time).sum::<f64>() / n;
            let mut cov = 0.0;
            let mut var_x = 0.0;
            let mut var_c = 0.0;
            for r in &latent {
                let dx = r.covariates[j] - mean_x;
                let dc = r.censoring_time - mean_c;
                cov += dx * dc;
                var_x += dx * dx;
                var_c += dc * dc;
            }
            let rho = cov / (var_x.sqrt() * var_c.sqrt());
            assert!(
                rho.abs() < 3.0 / n.sqrt() + 0.02,
                "rho {rho} for covariate {j}"
            );
        }
    }

    #[test]
    fn true_states_sum_to_one_for_continuous_hazards() {
        let scenario = toy_scenario();
        let truth = true_state_occupation(&scenario);
        let x = vec![0.5, 1.0];
        let eval = truth.eval(&x, scenario.tau);
        for t in [0.0, 5.0, 18.0, 36.0] {
            let total: f64 = StateLabel::ALL.iter().map(|&l| eval.value(t, l)).sum();
            assert!((total - 1.0).abs() < 1e-6, "t={t}: {total}");
        }
    }

    #[test]
    fn exponential_special_cases() {
        // All shapes 1 with rates summing to r: F(t, 0, x) = exp(-r t).
        let scenario = SimulationScenario {
            covariates: vec![],
            cause1: WeibullParams {
                scale: 0.03,
                shape: 1.0,
                coefficients: vec![],
            },
            cause2: Some(WeibullParams {
                scale: 0.01,
                shape: 1.0,
                coefficients: vec![],
            }),
            censoring: WeibullParams {
                scale: 0.02,
                shape: 1.0,
                coefficients: vec![],
            },
            censoring_mode: CensoringMode::Dependent,
            tau: 36.0,
            admin_censoring_time: None,
        };
        let truth = true_state_occupation(&scenario);
        for t in [1.0, 10.0, 30.0] {
            let f0 = truth.probability(t, StateLabel::AtRisk, &[]);
            assert!((f0 - (-0.06 * t).exp()).abs() < 1e-9);
        }

        // Single cause, negligible censoring: F(t, 1, x) = 1 - exp(-H1).
        let mut single = toy_scenario();
        single.censoring.scale = 1e-300;
        let truth = true_state_occupation(&single);
        let x = vec![0.2, 0.0];
        for t in [4.0, 12.0, 30.0] {
            let f1 = truth.probability(t, StateLabel::Cause1, &x);
            let expect = 1.0 - (-single.cause1.cumulative(t, &x)).exp();
            assert!((f1 - expect).abs() < 1e-6, "t={t}: {f1} vs {expect}");
            assert!(truth.probability(t, StateLabel::Cause2, &x).abs() < 1e-12);
            assert!(truth.probability(t, StateLabel::Censored, &x).abs() < 1e-9);
        }
    }

    #[test]
    fn calibration_reaches_targets_and_fixed_point() {
        let template = toy_scenario();
        let targets = CalibrationTargets {
            event_rate: 0.246,
            censor_rate: 0.619,
            horizon: 36.0,
        };
        let calibrated = calibrate_scenario(targets, &template, 99).unwrap();
        let (_, latent) = simulate_dataset(&calibrated, 50_000, 123).unwrap();
        let n = latent.len() as f64;
        let event = latent.iter().filter(|r| r.event_time <= 36.0).count() as f64 / n;
        let censor = latent.iter().filter(|r| r.censoring_time <= 36.0).count() as f64 / n;
        assert!((event - 0.246).abs() < 0.015, "event rate {event}");
        assert!((censor - 0.619).abs() < 0.02, "censor rate {censor}");

        // Re-calibrating an already calibrated scenario moves nothing.
        let again = calibrate_scenario(targets, &calibrated, 99).unwrap();
        assert!((again.cause1.scale / calibrated.cause1.scale - 1.0).abs() < 0.05);
        assert!((again.censoring.scale / calibrated.censoring.scale - 1.0).abs() < 0.05);
    }

    #[test]
    fn unreachable_targets_error_with_range() {
        let mut template = toy_scenario();
        template.cause2 = Some(WeibullParams {
            scale: 1.0,
            shape: 1.0,
            coefficients: vec![0.0, 0.0],
        });
        // Cause 2 alone already exceeds a 1% any-event target.
        let err = calibrate_scenario(
            CalibrationTargets {
                event_rate: 0.01,
                censor_rate: 0.5,
                horizon: 36.0,
            },
            &template,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Calibration(_)));
    }
}
