//! Composition of hazard triples into observed-data state occupation
//! functions.
//!
//! A triple (cause-1 hazard, cause-2 hazard, censoring hazard) determines
//! the probability F(t, l, x) of occupying state l at time t given
//! covariates x, where the states are at-risk (0), observed cause 1 (1),
//! observed cause 2 (2), and censored (-1):
//!
//! ```text
//! F(t, 0, x)  = exp{ -L1(t|x) - L2(t|x) - G(t|x) }
//! F(t, l, x)  = integral_0^t F(s-, 0, x) dL_l(s|x)      for l != 0
//! ```
//!
//! For step hazards the integrals are Lebesgue-Stieltjes sums over the
//! merged jump grid, exact by construction. For absolutely continuous
//! hazards they are computed by adaptive composite Simpson quadrature
//! with absolute tolerance 1e-8.

use std::sync::Arc;

use crate::data::{Observation, StateLabel};
use crate::hazard::CumulativeHazard;
use crate::quadrature::CumulativeIntegral;

pub const QUADRATURE_TOL: f64 = 1e-8;

/// How the survival factor treats jump mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompositionRule {
    /// exp(-cumulative hazard); the four states then sum to slightly
    /// more than one for step hazards, bounded by 1 + sum(dA^2)/2.
    #[default]
    Exponential,
    /// Product-limit survival factor prod(1 - dA); states sum to one
    /// exactly for step hazards. Sensitivity variant.
    ProductLimit,
}

/// Probability of each observed state as a function of time, given
/// covariates.
pub trait StateOccupation: Send + Sync {
    fn probability(&self, t: f64, state: StateLabel, x: &[f64]) -> f64;

    /// Times in (0, tau] where `t -> F(t, ., x)` may jump; empty when the
    /// model is constant or continuous in time.
    fn jump_grid(&self, _x: &[f64], _tau: f64) -> Vec<f64> {
        Vec::new()
    }

    fn has_continuous_time_part(&self) -> bool {
        false
    }

    /// Evaluation handle over `[0, tau]` at fixed covariates. The default
    /// builds an exact step table from `probability`, which is correct
    /// for step and constant models; models continuous in time must
    /// override it.
    fn eval(&self, x: &[f64], tau: f64) -> StateEval {
        debug_assert!(
            !self.has_continuous_time_part(),
            "continuous-time models must override eval"
        );
        let mut breaks = vec![0.0];
        breaks.extend(self.jump_grid(x, tau));
        let values = StateLabel::ALL.map(|l| {
            breaks
                .iter()
                .map(|&b| self.probability(b, l, x))
                .collect::<Vec<f64>>()
        });
        StateEval::Step(StateCurve { breaks, values })
    }
}

/// Piecewise-constant right-continuous state curves: `values[l][i]` holds
/// on `[breaks[i], breaks[i+1])`.
#[derive(Debug, Clone)]
pub struct StateCurve {
    pub breaks: Vec<f64>,
    pub values: [Vec<f64>; 4],
}

impl StateCurve {
    pub fn value(&self, t: f64, state: StateLabel) -> f64 {
        let idx = match self.breaks.binary_search_by(|b| b.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        self.values[state.index()][idx]
    }
}

/// Cached evaluator for models with an absolutely continuous time part.
pub struct SmoothCurves {
    components: [Arc<dyn CumulativeHazard>; 3],
    x: Vec<f64>,
    tables: [CumulativeIntegral; 3],
    /// Merged jump contributions: jump times plus, per state, the
    /// cumulative sum of F(s-, 0, x) * jump(s).
    jump_times: Vec<f64>,
    jump_cumsums: [Vec<f64>; 3],
}

impl SmoothCurves {
    fn survival(&self, t: f64) -> f64 {
        let total: f64 = self
            .components
            .iter()
            .map(|c| c.cumulative(t, &self.x))
            .sum();
        (-total).exp()
    }

    fn value(&self, t: f64, state: StateLabel) -> f64 {
        if state == StateLabel::AtRisk {
            return self.survival(t);
        }
        let slot = transient_slot(state);
        let component = &self.components[slot];
        let continuous =
            self.tables[slot].value(&|s| self.survival(s) * component.rate(s, &self.x), t);
        let jump_part = match self.jump_times.binary_search_by(|j| j.total_cmp(&t)) {
            Ok(i) => self.jump_cumsums[slot][i],
            Err(0) => 0.0,
            Err(i) => self.jump_cumsums[slot][i - 1],
        };
        continuous + jump_part
    }
}

fn transient_slot(state: StateLabel) -> usize {
    match state {
        StateLabel::Cause1 => 0,
        StateLabel::Cause2 => 1,
        StateLabel::Censored => 2,
        StateLabel::AtRisk => unreachable!("state 0 has no transient slot"),
    }
}

/// Evaluation handle produced by [`StateOccupation::eval`].
pub enum StateEval {
    Step(StateCurve),
    Smooth(Box<SmoothCurves>),
}

impl StateEval {
    pub fn value(&self, t: f64, state: StateLabel) -> f64 {
        match self {
            StateEval::Step(curve) => curve.value(t, state),
            StateEval::Smooth(sc) => sc.value(t, state),
        }
    }

    /// Breakpoints (including 0) between which the curves are either
    /// constant (step) or smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            StateEval::Step(curve) => curve.breaks.clone(),
            StateEval::Smooth(sc) => {
                let mut b = vec![0.0];
                b.extend_from_slice(&sc.jump_times);
                b
            }
        }
    }

    pub fn is_step(&self) -> bool {
        matches!(self, StateEval::Step(_))
    }
}

/// A composed hazard triple.
pub struct ComposedStateModel {
    pub cause1: Arc<dyn CumulativeHazard>,
    pub cause2: Arc<dyn CumulativeHazard>,
    pub censoring: Arc<dyn CumulativeHazard>,
    pub rule: CompositionRule,
}

/// Compose a hazard triple with the exponential survival factor.
pub fn compose(
    cause1: Arc<dyn CumulativeHazard>,
    cause2: Arc<dyn CumulativeHazard>,
    censoring: Arc<dyn CumulativeHazard>,
) -> ComposedStateModel {
    compose_with(cause1, cause2, censoring, CompositionRule::Exponential)
}

pub fn compose_with(
    cause1: Arc<dyn CumulativeHazard>,
    cause2: Arc<dyn CumulativeHazard>,
    censoring: Arc<dyn CumulativeHazard>,
    rule: CompositionRule,
) -> ComposedStateModel {
    ComposedStateModel {
        cause1,
        cause2,
        censoring,
        rule,
    }
}

/// Merged jump schedule of up to three step components.
pub(crate) struct MergedJumps {
    pub(crate) times: Vec<f64>,
    /// Per slot (cause1, cause2, censoring), increments aligned with `times`.
    pub(crate) increments: [Vec<f64>; 3],
}

/// Compose step components given directly as (jump times, increments)
/// pairs; used by the scoring engine to reuse per-observation increments
/// across triples.
pub(crate) fn compose_step_parts(
    parts: [(&[f64], Vec<f64>); 3],
    tau: f64,
    rule: CompositionRule,
) -> StateCurve {
    step_curve_from_merged(&merge_jumps(parts, tau), rule)
}

fn step_curve_from_merged(merged: &MergedJumps, rule: CompositionRule) -> StateCurve {
    let m = merged.times.len();
    let mut breaks = Vec::with_capacity(m + 1);
    breaks.push(0.0);
    breaks.extend_from_slice(&merged.times);
    let mut survival = Vec::with_capacity(m + 1);
    let mut transient = [
        Vec::with_capacity(m + 1),
        Vec::with_capacity(m + 1),
        Vec::with_capacity(m + 1),
    ];
    survival.push(1.0);
    for slot in &mut transient {
        slot.push(0.0);
    }
    let mut cum_hazard = 0.0;
    let mut f0 = 1.0;
    let mut acc = [0.0; 3];
    for k in 0..m {
        let f0_left = f0;
        let total_jump: f64 = (0..3).map(|s| merged.increments[s][k]).sum();
        f0 = match rule {
            CompositionRule::Exponential => {
                cum_hazard += total_jump;
                (-cum_hazard).exp()
            }
            CompositionRule::ProductLimit => f0 * (1.0 - total_jump).max(0.0),
        };
        survival.push(f0);
        for slot in 0..3 {
            acc[slot] += f0_left * merged.increments[slot][k];
            transient[slot].push(acc[slot]);
        }
    }
    let [cause1, cause2, censored] = transient;
    StateCurve {
        breaks,
        // Order: Censored, AtRisk, Cause1, Cause2.
        values: [censored, survival, cause1, cause2],
    }
}

pub(crate) fn merge_jumps(parts: [(&[f64], Vec<f64>); 3], tau: f64) -> MergedJumps {
    let mut times: Vec<f64> = parts
        .iter()
        .flat_map(|(t, _)| t.iter().copied())
        .filter(|&t| t > 0.0 && t <= tau)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut increments = [
        vec![0.0; times.len()],
        vec![0.0; times.len()],
        vec![0.0; times.len()],
    ];
    for (slot, (jt, inc)) in parts.iter().enumerate() {
        for (t, dj) in jt.iter().zip(inc) {
            if *t > 0.0 && *t <= tau {
                let k = times.binary_search_by(|v| v.total_cmp(t)).unwrap();
                increments[slot][k] += dj;
            }
        }
    }
    MergedJumps { times, increments }
}

impl ComposedStateModel {
    fn components(&self) -> [&Arc<dyn CumulativeHazard>; 3] {
        [&self.cause1, &self.cause2, &self.censoring]
    }

    fn merged(&self, x: &[f64], tau: f64) -> MergedJumps {
        merge_jumps(
            [
                (self.cause1.jump_times(), self.cause1.increments(x)),
                (self.cause2.jump_times(), self.cause2.increments(x)),
                (self.censoring.jump_times(), self.censoring.increments(x)),
            ],
            tau,
        )
    }

    fn step_curve(&self, x: &[f64], tau: f64) -> StateCurve {
        let merged = self.merged(x, tau);
        step_curve_from_merged(&merged, self.rule)
    }

    fn smooth_curves(&self, x: &[f64], tau: f64) -> SmoothCurves {
        let components: [Arc<dyn CumulativeHazard>; 3] = [
            Arc::clone(&self.cause1),
            Arc::clone(&self.cause2),
            Arc::clone(&self.censoring),
        ];
        let survival = |t: f64| -> f64 {
            let total: f64 = components.iter().map(|c| c.cumulative(t, x)).sum();
            (-total).exp()
        };
        let tables = [0, 1, 2].map(|slot| {
            let comp = &components[slot];
            if comp.has_continuous_part() {
                CumulativeIntegral::build(&|s| survival(s) * comp.rate(s, x), tau, QUADRATURE_TOL)
            } else {
                CumulativeIntegral::build(&|_| 0.0, 0.0, QUADRATURE_TOL)
            }
        });

        let merged = self.merged(x, tau);
        // Left limit of the survival factor at a jump: remove the jump
        // mass of every component at that time.
        let mut jump_cumsums = [
            Vec::with_capacity(merged.times.len()),
            Vec::with_capacity(merged.times.len()),
            Vec::with_capacity(merged.times.len()),
        ];
        let mut acc = [0.0; 3];
        for (k, &s) in merged.times.iter().enumerate() {
            let total_jump: f64 = (0..3).map(|slot| merged.increments[slot][k]).sum();
            let f0_left = survival(s) * total_jump.exp();
            for slot in 0..3 {
                acc[slot] += f0_left * merged.increments[slot][k];
                jump_cumsums[slot].push(acc[slot]);
            }
        }
        SmoothCurves {
            components,
            x: x.to_vec(),
            tables,
            jump_times: merged.times,
            jump_cumsums,
        }
    }
}

impl StateOccupation for ComposedStateModel {
    fn probability(&self, t: f64, state: StateLabel, x: &[f64]) -> f64 {
        self.eval(x, t.max(0.0)).value(t, state)
    }

    fn jump_grid(&self, x: &[f64], tau: f64) -> Vec<f64> {
        self.merged(x, tau).times
    }

    fn has_continuous_time_part(&self) -> bool {
        self.components().iter().any(|c| c.has_continuous_part())
    }

    fn eval(&self, x: &[f64], tau: f64) -> StateEval {
        if self.has_continuous_time_part() {
            StateEval::Smooth(Box::new(self.smooth_curves(x, tau)))
        } else {
            StateEval::Step(self.step_curve(x, tau))
        }
    }
}

/// Export state occupation curves for plotting: one row per
/// (time, state, covariate row) with columns (t, l, x_id, F).
pub fn write_state_curves_csv<W: std::io::Write>(
    model: &dyn StateOccupation,
    xs: &[Vec<f64>],
    tau: f64,
    grid_size: usize,
    writer: W,
) -> crate::error::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "l", "x_id", "F"])?;
    for (x_id, x) in xs.iter().enumerate() {
        let eval = model.eval(x, tau);
        for step in 0..grid_size.max(2) {
            let t = tau * step as f64 / (grid_size.max(2) - 1) as f64;
            for l in StateLabel::ALL {
                w.write_record(&[
                    t.to_string(),
                    l.value().to_string(),
                    x_id.to_string(),
                    eval.value(t, l).to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| crate::error::Error::Io {
        path: "<state curves>".into(),
        source: e,
    })?;
    Ok(())
}

/// State of the observed process for one record at time `t`
/// (right-continuous at the record's endpoint).
pub fn observed_state(o: &Observation, t: f64) -> StateLabel {
    if t < o.time {
        StateLabel::AtRisk
    } else {
        StateLabel::terminal(o.status)
    }
}

/// Monte Carlo estimate of the squared distance
/// `sum_l integral_0^tau E[(F - G)^2(t, l, X)] dt`
/// between two state occupation models.
#[derive(Debug, Clone, Copy)]
pub struct NormEstimate {
    pub value: f64,
    pub std_error: f64,
}

pub fn mc_norm_squared<FX>(
    f: &dyn StateOccupation,
    g: &dyn StateOccupation,
    draw_x: FX,
    samples: usize,
    grid_size: usize,
    tau: f64,
) -> NormEstimate
where
    FX: Fn(usize) -> Vec<f64> + Sync,
{
    assert!(samples >= 1 && grid_size >= 2);
    let grid: Vec<f64> = (0..grid_size)
        .map(|j| tau * j as f64 / (grid_size - 1) as f64)
        .collect();
    use rayon::prelude::*;
    let integrals: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x = draw_x(i);
            let ef = f.eval(&x, tau);
            let eg = g.eval(&x, tau);
            let integrand: Vec<f64> = grid
                .iter()
                .map(|&t| {
                    StateLabel::ALL
                        .iter()
                        .map(|&l| {
                            let d = ef.value(t, l) - eg.value(t, l);
                            d * d
                        })
                        .sum::<f64>()
                })
                .collect();
            let mut integral = 0.0;
            for w in integrand.windows(2) {
                integral += 0.5 * (w[0] + w[1]);
            }
            integral * tau / (grid_size - 1) as f64
        })
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for integral in &integrals {
        sum += integral;
        sum_sq += integral * integral;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    let std_error = if samples > 1 {
        (var / (samples as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    NormEstimate {
        value: mean,
        std_error,
    }
}
