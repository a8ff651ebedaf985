//! User-facing predictions from a selected hazard triple: cause-specific
//! absolute risks, event-free survival, and censoring survival.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hazard::CumulativeHazard;
use crate::quadrature::adaptive_simpson;

const SIMPSON_TOL: f64 = 1e-8;

/// Cumulative cause-specific risk as a right-continuous step function
/// over the merged jump grid of both hazards, for one covariate vector.
/// Only defined for pure step hazards.
#[derive(Debug, Clone)]
pub struct RiskCurve {
    pub times: Vec<f64>,
    /// risk(times[i]), cumulative.
    pub values: [Vec<f64>; 2],
}

impl RiskCurve {
    pub fn value(&self, t: f64, cause: u8) -> f64 {
        let slot = usize::from(cause == 2);
        let i = self.times.partition_point(|s| *s <= t);
        if i == 0 {
            0.0
        } else {
            self.values[slot][i - 1]
        }
    }
}

/// Build the exact risk curve for step hazards: one merged ascending
/// pass with running jump mass, so the whole curve costs O(J).
pub fn cause_specific_risk_curve(
    lambda1: &dyn CumulativeHazard,
    lambda2: &dyn CumulativeHazard,
    x: &[f64],
) -> Option<RiskCurve> {
    if lambda1.has_continuous_part() || lambda2.has_continuous_part() {
        return None;
    }
    let (t1, i1) = (lambda1.jump_times(), lambda1.increments(x));
    let (t2, i2) = (lambda2.jump_times(), lambda2.increments(x));
    let mut times = Vec::with_capacity(t1.len() + t2.len());
    let mut inc = [
        Vec::with_capacity(t1.len() + t2.len()),
        Vec::with_capacity(t1.len() + t2.len()),
    ];
    let (mut a, mut b) = (0usize, 0usize);
    while a < t1.len() || b < t2.len() {
        let ta = t1.get(a).copied().unwrap_or(f64::INFINITY);
        let tb = t2.get(b).copied().unwrap_or(f64::INFINITY);
        let s = ta.min(tb);
        let mut d = [0.0, 0.0];
        if ta == s {
            d[0] = i1[a];
            a += 1;
        }
        if tb == s {
            d[1] = i2[b];
            b += 1;
        }
        if s > 0.0 {
            times.push(s);
            inc[0].push(d[0]);
            inc[1].push(d[1]);
        }
    }
    let mut cum_hazard = 0.0f64;
    let mut values = [
        Vec::with_capacity(times.len()),
        Vec::with_capacity(times.len()),
    ];
    let mut acc = [0.0f64, 0.0f64];
    for (d1, d2) in inc[0].iter().zip(&inc[1]) {
        let survival_left = (-cum_hazard).exp();
        acc[0] += survival_left * d1;
        acc[1] += survival_left * d2;
        values[0].push(acc[0]);
        values[1].push(acc[1]);
        cum_hazard += d1 + d2;
    }
    Some(RiskCurve { times, values })
}

/// Absolute risk of cause `j` by time `t` given covariates:
/// the integral of exp{-L1(u-|x) - L2(u-|x)} dL_j(u|x) over (0, t].
///
/// Exact Lebesgue-Stieltjes sum for step hazards (left limits in the
/// survival factor); adaptive Simpson with absolute tolerance 1e-8 for
/// continuous hazards.
pub fn cause_specific_risk(
    lambda1: &dyn CumulativeHazard,
    lambda2: &dyn CumulativeHazard,
    t: f64,
    x: &[f64],
    cause: u8,
) -> Result<f64> {
    if cause != 1 && cause != 2 {
        return Err(Error::InvalidConfig(format!(
            "cause must be 1 or 2, got {cause}"
        )));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    if let Some(curve) = cause_specific_risk_curve(lambda1, lambda2, x) {
        return Ok(curve.value(t, cause));
    }

    // Mixed or continuous hazards: jump part plus quadrature of the
    // absolutely continuous part.
    let survival = |u: f64| (-(lambda1.cumulative(u, x) + lambda2.cumulative(u, x))).exp();
    let mut total = 0.0;
    let jumps = |h: &dyn CumulativeHazard| -> Vec<(f64, f64)> {
        h.jump_times()
            .iter()
            .copied()
            .zip(h.increments(x))
            .filter(|&(s, _)| s > 0.0 && s <= t)
            .collect()
    };
    let j1 = jumps(lambda1);
    let j2 = jumps(lambda2);
    let target = if cause == 1 { &j1 } else { &j2 };
    for &(s, inc) in target {
        // Left limit of the survival factor: strip both components'
        // jump mass at s.
        let mass_at_s: f64 = j1
            .iter()
            .chain(j2.iter())
            .filter(|&&(u, _)| u == s)
            .map(|&(_, dj)| dj)
            .sum();
        let s_left = survival(s) * mass_at_s.exp();
        total += s_left * inc;
    }

    let target_hazard = if cause == 1 { lambda1 } else { lambda2 };
    if target_hazard.has_continuous_part() {
        total += adaptive_simpson(
            &|u| survival(u) * target_hazard.rate(u, x),
            0.0,
            t,
            SIMPSON_TOL,
        );
    }
    Ok(total)
}

/// exp{-L1(t|x) - L2(t|x)}.
pub fn event_free_survival(
    lambda1: &dyn CumulativeHazard,
    lambda2: &dyn CumulativeHazard,
    t: f64,
    x: &[f64],
) -> f64 {
    (-(lambda1.cumulative(t, x) + lambda2.cumulative(t, x))).exp()
}

/// exp{-G(t|x)} for the censoring hazard G.
pub fn censoring_survival(gamma: &dyn CumulativeHazard, t: f64, x: &[f64]) -> f64 {
    (-gamma.cumulative(t, x)).exp()
}

/// A risk prediction model: the two cause-specific hazards of a selected
/// triple, with predictions refused outside [0, tau].
pub struct RiskPredictionModel {
    pub lambda1: Arc<dyn CumulativeHazard>,
    pub lambda2: Arc<dyn CumulativeHazard>,
    pub tau: f64,
}

impl RiskPredictionModel {
    pub fn new(
        lambda1: Arc<dyn CumulativeHazard>,
        lambda2: Arc<dyn CumulativeHazard>,
        tau: f64,
    ) -> RiskPredictionModel {
        RiskPredictionModel {
            lambda1,
            lambda2,
            tau,
        }
    }

    fn check_horizon(&self, t: f64) -> Result<()> {
        if !(0.0..=self.tau).contains(&t) {
            return Err(Error::InvalidConfig(format!(
                "prediction time {t} outside [0, {}]; learners carry no information beyond the horizon",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn risk(&self, t: f64, x: &[f64], cause: u8) -> Result<f64> {
        self.check_horizon(t)?;
        cause_specific_risk(self.lambda1.as_ref(), self.lambda2.as_ref(), t, x, cause)
    }

    /// Per-covariate view with O(log) repeated time queries.
    pub fn risk_view<'a>(&'a self, x: &'a [f64]) -> RiskView<'a> {
        match cause_specific_risk_curve(self.lambda1.as_ref(), self.lambda2.as_ref(), x) {
            Some(curve) => RiskView::Curve {
                curve,
                tau: self.tau,
            },
            None => RiskView::Direct { model: self, x },
        }
    }

    pub fn event_free_survival(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_horizon(t)?;
        Ok(event_free_survival(
            self.lambda1.as_ref(),
            self.lambda2.as_ref(),
            t,
            x,
        ))
    }
}

/// Reusable per-covariate risk evaluator.
pub enum RiskView<'a> {
    Curve {
        curve: RiskCurve,
        tau: f64,
    },
    Direct {
        model: &'a RiskPredictionModel,
        x: &'a [f64],
    },
}

impl<'a> RiskView<'a> {
    pub fn value(&self, t: f64, cause: u8) -> Result<f64> {
        if cause != 1 && cause != 2 {
            return Err(Error::InvalidConfig(format!(
                "cause must be 1 or 2, got {cause}"
            )));
        }
        match self {
            RiskView::Curve { curve, tau } => {
                if !(0.0..=*tau).contains(&t) {
                    return Err(Error::InvalidConfig(format!(
                        "prediction time {t} outside [0, {tau}]"
                    )));
                }
                Ok(curve.value(t, cause))
            }
            RiskView::Direct { model, x } => model.risk(t, x, cause),
        }
    }
}
