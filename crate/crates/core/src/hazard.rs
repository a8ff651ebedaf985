//! Conditional cumulative hazard functions.
//!
//! A fitted or analytic hazard is a map `(t, x) -> Λ(t | x)` that is
//! non-decreasing and right-continuous in `t` with `Λ(0 | x) = 0`.
//! Step hazards expose their jump grid and per-`x` jump sizes; absolutely
//! continuous hazards expose an instantaneous rate instead.

use serde::{Deserialize, Serialize};

/// Interface shared by fitted step hazards and analytic hazards.
pub trait CumulativeHazard: Send + Sync {
    /// Λ(t | x); right-continuous and non-decreasing in `t`.
    fn cumulative(&self, t: f64, x: &[f64]) -> f64;

    /// Potential jump times, sorted ascending; empty for absolutely
    /// continuous hazards.
    fn jump_times(&self) -> &[f64];

    /// Jump sizes at `jump_times()` for this `x` (same length, entries >= 0).
    fn increments(&self, x: &[f64]) -> Vec<f64>;

    /// Instantaneous rate of the absolutely continuous part; zero for
    /// pure step hazards.
    fn rate(&self, _t: f64, _x: &[f64]) -> f64 {
        0.0
    }

    /// True when the hazard has an absolutely continuous component.
    fn has_continuous_part(&self) -> bool {
        false
    }
}

/// The identically-zero hazard.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZeroHazard;

impl CumulativeHazard for ZeroHazard {
    fn cumulative(&self, _t: f64, _x: &[f64]) -> f64 {
        0.0
    }

    fn jump_times(&self) -> &[f64] {
        &[]
    }

    fn increments(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

/// A covariate-free right-continuous step function with non-negative
/// jumps, e.g. a Nelson-Aalen estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepHazard {
    /// Sorted distinct jump locations (never at 0).
    pub times: Vec<f64>,
    /// Jump sizes, aligned with `times`.
    pub jumps: Vec<f64>,
}

impl StepHazard {
    pub fn new(times: Vec<f64>, jumps: Vec<f64>) -> StepHazard {
        debug_assert_eq!(times.len(), jumps.len());
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        StepHazard { times, jumps }
    }

    pub fn zero() -> StepHazard {
        StepHazard {
            times: Vec::new(),
            jumps: Vec::new(),
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let mut total = 0.0;
        for (s, dj) in self.times.iter().zip(&self.jumps) {
            if *s > t {
                break;
            }
            total += dj;
        }
        total
    }
}

impl CumulativeHazard for StepHazard {
    fn cumulative(&self, t: f64, _x: &[f64]) -> f64 {
        self.value_at(t)
    }

    fn jump_times(&self) -> &[f64] {
        &self.times
    }

    fn increments(&self, _x: &[f64]) -> Vec<f64> {
        self.jumps.clone()
    }
}

/// Multiply another hazard by a positive constant.
pub struct ScaledHazard<H> {
    pub inner: H,
    pub factor: f64,
}

impl<H: CumulativeHazard> CumulativeHazard for ScaledHazard<H> {
    fn cumulative(&self, t: f64, x: &[f64]) -> f64 {
        self.factor * self.inner.cumulative(t, x)
    }

    fn jump_times(&self) -> &[f64] {
        self.inner.jump_times()
    }

    fn increments(&self, x: &[f64]) -> Vec<f64> {
        let mut inc = self.inner.increments(x);
        for v in &mut inc {
            *v *= self.factor;
        }
        inc
    }

    fn rate(&self, t: f64, x: &[f64]) -> f64 {
        self.factor * self.inner.rate(t, x)
    }

    fn has_continuous_part(&self) -> bool {
        self.inner.has_continuous_part()
    }
}

/// Evaluate another hazard at a frozen covariate vector, ignoring the
/// covariates supplied by the caller. Used for covariate-blind variants.
pub struct FrozenCovariateHazard<H> {
    pub inner: H,
    pub at: Vec<f64>,
}

impl<H: CumulativeHazard> CumulativeHazard for FrozenCovariateHazard<H> {
    fn cumulative(&self, t: f64, _x: &[f64]) -> f64 {
        self.inner.cumulative(t, &self.at)
    }

    fn jump_times(&self) -> &[f64] {
        self.inner.jump_times()
    }

    fn increments(&self, _x: &[f64]) -> Vec<f64> {
        self.inner.increments(&self.at)
    }

    fn rate(&self, t: f64, _x: &[f64]) -> f64 {
        self.inner.rate(t, &self.at)
    }

    fn has_continuous_part(&self) -> bool {
        self.inner.has_continuous_part()
    }
}

/// Per-covariate view of a hazard with O(log n) cumulative queries and
/// left limits. Step hazards are materialized as prefix sums; hazards
/// with a continuous part are queried directly.
pub enum HazardCurve<'a> {
    Step {
        times: Vec<f64>,
        cum: Vec<f64>,
    },
    Direct {
        hazard: &'a dyn CumulativeHazard,
        x: &'a [f64],
    },
}

impl<'a> HazardCurve<'a> {
    pub fn new(hazard: &'a dyn CumulativeHazard, x: &'a [f64]) -> HazardCurve<'a> {
        if hazard.has_continuous_part() {
            return HazardCurve::Direct { hazard, x };
        }
        let times = hazard.jump_times().to_vec();
        let mut cum = Vec::with_capacity(times.len());
        let mut acc = 0.0;
        for dj in hazard.increments(x) {
            acc += dj;
            cum.push(acc);
        }
        HazardCurve::Step { times, cum }
    }

    /// Λ(t | x), right-continuous.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            HazardCurve::Step { times, cum } => match times.binary_search_by(|s| s.total_cmp(&t)) {
                Ok(i) => cum[i],
                Err(0) => 0.0,
                Err(i) => cum[i - 1],
            },
            HazardCurve::Direct { hazard, x } => hazard.cumulative(t, x),
        }
    }

    /// Λ(t- | x): cumulative strictly before t.
    pub fn value_left(&self, t: f64) -> f64 {
        match self {
            HazardCurve::Step { times, cum } => {
                let i = times.partition_point(|s| *s < t);
                if i == 0 {
                    0.0
                } else {
                    cum[i - 1]
                }
            }
            // Continuous hazards have no atoms.
            HazardCurve::Direct { hazard, x } => hazard.cumulative(t, x),
        }
    }
}

impl<H: CumulativeHazard + ?Sized> CumulativeHazard for std::sync::Arc<H> {
    fn cumulative(&self, t: f64, x: &[f64]) -> f64 {
        (**self).cumulative(t, x)
    }

    fn jump_times(&self) -> &[f64] {
        (**self).jump_times()
    }

    fn increments(&self, x: &[f64]) -> Vec<f64> {
        (**self).increments(x)
    }

    fn rate(&self, t: f64, x: &[f64]) -> f64 {
        (**self).rate(t, x)
    }

    fn has_continuous_part(&self) -> bool {
        (**self).has_continuous_part()
    }
}
