//! Integrated Brier score over the four observed states, cross-validated
//! risk of composed triples, and discrete selection over the Cartesian
//! product of three learner libraries.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::{
    compose_step_parts, observed_state, CompositionRule, StateEval, StateOccupation,
};
use crate::data::{Dataset, FoldPlan, Observation, StateLabel};
use crate::error::{Error, Result};
use crate::hazard::CumulativeHazard;
use crate::learners::{FittedHazard, HazardLearner, Target};
use crate::quadrature::adaptive_simpson;
use crate::seeding;

/// Integrated Brier score of a state occupation model at one observation:
/// the time integral over [0, tau] of the squared distance between the
/// predicted state probabilities and the observed state indicators.
///
/// Exact piecewise evaluation for step models; per-interval adaptive
/// Simpson (absolute tolerance 1e-8) when the model is continuous in
/// time. The value lies in [0, 4 tau].
pub fn integrated_brier(f: &dyn StateOccupation, o: &Observation, tau: f64) -> Result<f64> {
    if tau <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "horizon tau must be positive, got {tau}"
        )));
    }
    let eval = f.eval(&o.covariates, tau);
    Ok(integrated_brier_eval(&eval, o, tau))
}

/// As [`integrated_brier`], over a prebuilt evaluation handle.
pub fn integrated_brier_eval(eval: &StateEval, o: &Observation, tau: f64) -> f64 {
    let mut breaks = eval.breakpoints();
    if o.time > 0.0 && o.time < tau {
        breaks.push(o.time);
    }
    breaks.push(tau);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (start, end) = (w[0], w[1]);
        if end <= start {
            continue;
        }
        let mid = 0.5 * (start + end);
        let state = observed_state(o, mid);
        if eval.is_step() {
            let mut sq = 0.0;
            for l in StateLabel::ALL {
                let d = eval.value(mid, l) - f64::from(u8::from(l == state));
                sq += d * d;
            }
            total += (end - start) * sq;
        } else {
            for l in StateLabel::ALL {
                let ind = f64::from(u8::from(l == state));
                total += adaptive_simpson(
                    &|t| {
                        let d = eval.value(t, l) - ind;
                        d * d
                    },
                    start,
                    end,
                    crate::composition::QUADRATURE_TOL,
                );
            }
        }
    }
    total
}

/// Indices of one triple in the (cause1, cause2, censoring) libraries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripleKey {
    pub a1: usize,
    pub a2: usize,
    pub b: usize,
}

/// One learner library per hazard role.
pub struct Libraries {
    pub cause1: Vec<Arc<dyn HazardLearner>>,
    pub cause2: Vec<Arc<dyn HazardLearner>>,
    pub censoring: Vec<Arc<dyn HazardLearner>>,
}

impl Libraries {
    pub fn n_triples(&self) -> usize {
        self.cause1.len() * self.cause2.len() * self.censoring.len()
    }

    /// All triples in lexicographic (a1, a2, b) order.
    pub fn all_triples(&self) -> Vec<TripleKey> {
        let mut keys = Vec::with_capacity(self.n_triples());
        for a1 in 0..self.cause1.len() {
            for a2 in 0..self.cause2.len() {
                for b in 0..self.censoring.len() {
                    keys.push(TripleKey { a1, a2, b });
                }
            }
        }
        keys
    }

    pub fn names(&self, key: TripleKey) -> [String; 3] {
        [
            self.cause1[key.a1].name().to_string(),
            self.cause2[key.a2].name().to_string(),
            self.censoring[key.b].name().to_string(),
        ]
    }
}

/// A learner fit failure inside one cross-validation cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitFailure {
    pub repetition: usize,
    pub fold: u32,
    pub role: String,
    pub learner: String,
    pub message: String,
}

/// Cross-validated loss of one triple.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub mean: f64,
    pub per_repetition: Vec<f64>,
    pub failures: Vec<FitFailure>,
}

/// One ranked row of the selection table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskRow {
    pub rank: usize,
    pub key: TripleKey,
    pub cause1: String,
    pub cause2: String,
    pub censoring: String,
    pub loss: f64,
    pub sd: f64,
    pub per_repetition: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FitFailure>,
}

/// Full ranking of the library product by mean cross-validated loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskTable {
    pub tau: f64,
    pub k: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub rows: Vec<RiskRow>,
}

impl RiskTable {
    /// CSV layout: rank, cause1, cause2, censoring, loss, sd.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rank", "cause1", "cause2", "censoring", "loss", "sd"])?;
        for row in &self.rows {
            w.write_record(&[
                row.rank.to_string(),
                row.cause1.clone(),
                row.cause2.clone(),
                row.censoring.clone(),
                row.loss.to_string(),
                row.sd.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<risk table>".into(),
            source: e,
        })?;
        Ok(())
    }
}

type FitSlot = std::result::Result<Arc<FittedHazard>, String>;

struct FoldFits {
    repetition: usize,
    fold: u32,
    cause1: Vec<Option<FitSlot>>,
    cause2: Vec<Option<FitSlot>>,
    censoring: Vec<Option<FitSlot>>,
}

fn fit_role(
    learners: &[Arc<dyn HazardLearner>],
    used: &[bool],
    train: &Dataset,
    seed: u64,
    repetition: usize,
    fold: u32,
    role: Target,
) -> Vec<Option<FitSlot>> {
    learners
        .iter()
        .zip(used)
        .map(|(learner, &wanted)| {
            if !wanted {
                return None;
            }
            let fit_seed = seeding::derive_seed(
                seed,
                &[
                    seeding::tag("fit"),
                    repetition as u64,
                    u64::from(fold),
                    seeding::tag(role.label()),
                    seeding::tag(learner.name()),
                ],
            );
            Some(
                learner
                    .fit(train, fit_seed)
                    .map(Arc::new)
                    .map_err(|e| e.to_string()),
            )
        })
        .collect()
}

/// Shared engine: cross-validated loss for each requested triple, fitting
/// each library member once per (repetition, fold).
fn cv_losses(
    libs: &Libraries,
    d: &Dataset,
    plan: &FoldPlan,
    tau: f64,
    triples: &[TripleKey],
) -> Result<Vec<CvOutcome>> {
    if plan.n() != d.len() {
        return Err(Error::InvalidConfig(format!(
            "fold plan covers {} observations, dataset has {}",
            plan.n(),
            d.len()
        )));
    }
    if tau <= 0.0 {
        return Err(Error::InvalidConfig("tau must be positive".into()));
    }
    let mut used1 = vec![false; libs.cause1.len()];
    let mut used2 = vec![false; libs.cause2.len()];
    let mut used_b = vec![false; libs.censoring.len()];
    for t in triples {
        used1[t.a1] = true;
        used2[t.a2] = true;
        used_b[t.b] = true;
    }

    let cells: Vec<(usize, u32)> = (0..plan.n_repetitions())
        .flat_map(|r| (1..=plan.k as u32).map(move |f| (r, f)))
        .collect();

    let fold_fits: Vec<FoldFits> = cells
        .par_iter()
        .map(|&(repetition, fold)| {
            let (train_idx, _) = plan.split(repetition, fold);
            let train = d.subset(&train_idx);
            FoldFits {
                repetition,
                fold,
                cause1: fit_role(
                    &libs.cause1,
                    &used1,
                    &train,
                    plan.seed,
                    repetition,
                    fold,
                    Target::Cause1,
                ),
                cause2: fit_role(
                    &libs.cause2,
                    &used2,
                    &train,
                    plan.seed,
                    repetition,
                    fold,
                    Target::Cause2,
                ),
                censoring: fit_role(
                    &libs.censoring,
                    &used_b,
                    &train,
                    plan.seed,
                    repetition,
                    fold,
                    Target::Censoring,
                ),
            }
        })
        .collect();

    // Fold means per cell and triple, computed in parallel over cells and
    // reduced in (repetition, fold) order afterwards.
    let cell_means: Vec<Vec<f64>> = fold_fits
        .par_iter()
        .map(|fits| {
            let (_, test_idx) = plan.split(fits.repetition, fits.fold);
            let mut sums = vec![0.0; triples.len()];
            let mut valid = vec![true; triples.len()];
            for (ti, t) in triples.iter().enumerate() {
                let ok = matches!(&fits.cause1[t.a1], Some(Ok(_)))
                    && matches!(&fits.cause2[t.a2], Some(Ok(_)))
                    && matches!(&fits.censoring[t.b], Some(Ok(_)));
                valid[ti] = ok;
            }
            for &obs_idx in &test_idx {
                let o = d.observation(obs_idx);
                let x = &o.covariates;
                let inc1: Vec<Option<Vec<f64>>> = fits
                    .cause1
                    .iter()
                    .map(|s| match s {
                        Some(Ok(h)) => Some(h.increments(x)),
                        _ => None,
                    })
                    .collect();
                let inc2: Vec<Option<Vec<f64>>> = fits
                    .cause2
                    .iter()
                    .map(|s| match s {
                        Some(Ok(h)) => Some(h.increments(x)),
                        _ => None,
                    })
                    .collect();
                let inc_b: Vec<Option<Vec<f64>>> = fits
                    .censoring
                    .iter()
                    .map(|s| match s {
                        Some(Ok(h)) => Some(h.increments(x)),
                        _ => None,
                    })
                    .collect();
                for (ti, t) in triples.iter().enumerate() {
                    if !valid[ti] {
                        continue;
                    }
                    let h1 = match &fits.cause1[t.a1] {
                        Some(Ok(h)) => h,
                        _ => unreachable!(),
                    };
                    let h2 = match &fits.cause2[t.a2] {
                        Some(Ok(h)) => h,
                        _ => unreachable!(),
                    };
                    let hb = match &fits.censoring[t.b] {
                        Some(Ok(h)) => h,
                        _ => unreachable!(),
                    };
                    let curve = compose_step_parts(
                        [
                            (h1.jump_times(), inc1[t.a1].clone().unwrap()),
                            (h2.jump_times(), inc2[t.a2].clone().unwrap()),
                            (hb.jump_times(), inc_b[t.b].clone().unwrap()),
                        ],
                        tau,
                        CompositionRule::Exponential,
                    );
                    sums[ti] += integrated_brier_eval(&StateEval::Step(curve), o, tau);
                }
            }
            let n_test = test_idx.len() as f64;
            sums.iter()
                .zip(&valid)
                .map(|(s, &ok)| if ok { s / n_test } else { f64::INFINITY })
                .collect()
        })
        .collect();

    // Collect failures once per (cell, learner).
    let mut outcomes: Vec<CvOutcome> = triples
        .iter()
        .map(|_| CvOutcome {
            mean: 0.0,
            per_repetition: vec![0.0; plan.n_repetitions()],
            failures: Vec::new(),
        })
        .collect();

    for (cell_pos, fits) in fold_fits.iter().enumerate() {
        let record_failures = |slots: &[Option<FitSlot>],
                               learners: &[Arc<dyn HazardLearner>],
                               role: Target,
                               pick: &dyn Fn(&TripleKey) -> usize,
                               outcomes: &mut [CvOutcome]| {
            for (idx, slot) in slots.iter().enumerate() {
                if let Some(Err(message)) = slot {
                    for (ti, t) in triples.iter().enumerate() {
                        if pick(t) == idx {
                            outcomes[ti].failures.push(FitFailure {
                                repetition: fits.repetition,
                                fold: fits.fold,
                                role: role.label().to_string(),
                                learner: learners[idx].name().to_string(),
                                message: message.clone(),
                            });
                        }
                    }
                }
            }
        };
        record_failures(
            &fits.cause1,
            &libs.cause1,
            Target::Cause1,
            &|t| t.a1,
            &mut outcomes,
        );
        record_failures(
            &fits.cause2,
            &libs.cause2,
            Target::Cause2,
            &|t| t.a2,
            &mut outcomes,
        );
        record_failures(
            &fits.censoring,
            &libs.censoring,
            Target::Censoring,
            &|t| t.b,
            &mut outcomes,
        );

        for (ti, outcome) in outcomes.iter_mut().enumerate() {
            outcome.per_repetition[fits.repetition] += cell_means[cell_pos][ti];
        }
    }

    let k = plan.k as f64;
    for outcome in &mut outcomes {
        for v in &mut outcome.per_repetition {
            *v /= k;
        }
        // A failure in any fold poisons the whole triple.
        if !outcome.failures.is_empty() {
            for v in &mut outcome.per_repetition {
                *v = f64::INFINITY;
            }
        }
        outcome.mean =
            outcome.per_repetition.iter().sum::<f64>() / outcome.per_repetition.len() as f64;
    }
    Ok(outcomes)
}

/// Cross-validated risk of one triple; learner fit errors propagate with
/// their (repetition, fold, learner) context.
pub fn cv_risk(
    triple: TripleKey,
    libs: &Libraries,
    d: &Dataset,
    plan: &FoldPlan,
    tau: f64,
) -> Result<CvOutcome> {
    let mut outcomes = cv_losses(libs, d, plan, tau, &[triple])?;
    let outcome = outcomes.pop().unwrap();
    if let Some(first) = outcome.failures.first() {
        return Err(Error::FitInFold {
            learner: format!("{} ({})", first.learner, first.role),
            repetition: first.repetition,
            fold: first.fold as usize,
            message: first.message.clone(),
        });
    }
    Ok(outcome)
}

/// Rank every triple in the library product by mean cross-validated
/// integrated Brier score and select the argmin, breaking ties by
/// lexicographic (a1, a2, b) index order. Each library member is fitted
/// once per (repetition, fold), not once per triple.
pub fn select_discrete_jssl(
    libs: &Libraries,
    d: &Dataset,
    plan: &FoldPlan,
    tau: f64,
) -> Result<(TripleKey, RiskTable)> {
    if libs.cause1.is_empty() || libs.cause2.is_empty() || libs.censoring.is_empty() {
        return Err(Error::InvalidConfig(
            "all three learner libraries must be non-empty".into(),
        ));
    }
    let triples = libs.all_triples();
    let outcomes = cv_losses(libs, d, plan, tau, &triples)?;
    if outcomes.iter().all(|o| o.mean.is_infinite()) {
        return Err(Error::AllTriplesFailed(triples.len()));
    }

    let mut order: Vec<usize> = (0..triples.len()).collect();
    order.sort_by(|&a, &b| {
        outcomes[a]
            .mean
            .total_cmp(&outcomes[b].mean)
            .then(triples[a].a1.cmp(&triples[b].a1))
            .then(triples[a].a2.cmp(&triples[b].a2))
            .then(triples[a].b.cmp(&triples[b].b))
    });

    let rows: Vec<RiskRow> = order
        .iter()
        .enumerate()
        .map(|(pos, &ti)| {
            let key = triples[ti];
            let names = libs.names(key);
            let o = &outcomes[ti];
            let r = o.per_repetition.len() as f64;
            let sd = if o.per_repetition.len() > 1 && o.mean.is_finite() {
                let m = o.mean;
                (o.per_repetition
                    .iter()
                    .map(|v| (v - m) * (v - m))
                    .sum::<f64>()
                    / (r - 1.0))
                    .sqrt()
            } else {
                0.0
            };
            RiskRow {
                rank: pos + 1,
                key,
                cause1: names[0].clone(),
                cause2: names[1].clone(),
                censoring: names[2].clone(),
                loss: o.mean,
                sd,
                per_repetition: o.per_repetition.clone(),
                failures: o.failures.clone(),
            }
        })
        .collect();

    let best = rows[0].key;
    Ok((
        best,
        RiskTable {
            tau,
            k: plan.k,
            repetitions: plan.n_repetitions(),
            seed: plan.seed,
            rows,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::compose;
    use crate::data::{make_folds, Observation};
    use crate::hazard::{StepHazard, ZeroHazard};
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct FixedLearner {
        name: String,
        hazard: StepHazard,
        fits: AtomicUsize,
    }

    impl FixedLearner {
        fn new(name: &str, hazard: StepHazard) -> Arc<dyn HazardLearner> {
            Arc::new(FixedLearner {
                name: name.to_string(),
                hazard,
                fits: AtomicUsize::new(0),
            })
        }
    }

    impl HazardLearner for FixedLearner {
        fn name(&self) -> &str {
            &self.name
        }

        fn fit(&self, _d: &Dataset, _seed: u64) -> Result<FittedHazard> {
            self.fits.fetch_add(1, Ordering::SeqCst);
            Ok(FittedHazard::NelsonAalen {
                hazard: self.hazard.clone(),
            })
        }
    }

    fn zero_learner(name: &str) -> Arc<dyn HazardLearner> {
        FixedLearner::new(name, StepHazard::zero())
    }

    fn censored_pair() -> Dataset {
        Dataset::new(
            vec![
                Observation::new(2.0, 0, vec![]).unwrap(),
                Observation::new(2.0, 0, vec![]).unwrap(),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn perfect_constant_prediction_scores_zero() {
        let model = compose(
            Arc::new(ZeroHazard),
            Arc::new(ZeroHazard),
            Arc::new(ZeroHazard),
        );
        let o = Observation::new(5.0, 0, vec![]).unwrap();
        let value = integrated_brier(&model, &o, 1.0).unwrap();
        assert_eq!(value, 0.0);
    }

    struct ConstantStateModel;

    impl StateOccupation for ConstantStateModel {
        fn probability(&self, _t: f64, state: StateLabel, _x: &[f64]) -> f64 {
            f64::from(u8::from(state == StateLabel::Cause1))
        }
    }

    #[test]
    fn constant_wrong_state_scores_two() {
        // F(t,1) == 1 while the record sits in state 0 then -1: two unit
        // squared errors at every t, so the integral over [0,1] is 2.
        let o = Observation::new(0.5, 0, vec![]).unwrap();
        let value = integrated_brier(&ConstantStateModel, &o, 1.0).unwrap();
        assert!((value - 2.0).abs() < 1e-12, "value {value}");
    }

    #[test]
    fn piecewise_integration_matches_riemann_oracle() {
        // Composed single-jump model scored against a dense midpoint
        // Riemann sum.
        let model = compose(
            Arc::new(StepHazard::new(vec![1.0], vec![0.5])),
            Arc::new(ZeroHazard),
            Arc::new(ZeroHazard),
        );
        let o = Observation::new(2.0, 1, vec![]).unwrap();
        let tau = 2.0;
        let exact = integrated_brier(&model, &o, tau).unwrap();
        let n = 1_000_000;
        let mut riemann = 0.0;
        let eval = model.eval(&[], tau);
        for i in 0..n {
            let t = (i as f64 + 0.5) * tau / n as f64;
            let state = observed_state(&o, t);
            for l in StateLabel::ALL {
                let d = eval.value(t, l) - f64::from(u8::from(l == state));
                riemann += d * d;
            }
        }
        riemann *= tau / n as f64;
        assert!(
            (exact - riemann).abs() < 1e-6,
            "exact {exact} vs riemann {riemann}"
        );
    }

    #[test]
    fn invalid_tau_rejected() {
        let o = Observation::new(1.0, 0, vec![]).unwrap();
        assert!(integrated_brier(&ConstantStateModel, &o, 0.0).is_err());
    }

    #[test]
    fn cv_risk_of_fixed_learner_is_sample_mean() {
        // A learner ignoring training data: the fold-mean average equals
        // the plain mean of per-observation scores when folds have equal
        // size.
        let obs: Vec<Observation> = (0..8)
            .map(|i| {
                Observation::new(0.3 + 0.25 * f64::from(i as u8), 1 - (i % 2) as u8, vec![])
                    .unwrap()
            })
            .collect();
        let d = Dataset::new(obs, vec![]).unwrap();
        let libs = Libraries {
            cause1: vec![FixedLearner::new(
                "fix",
                StepHazard::new(vec![0.6], vec![0.4]),
            )],
            cause2: vec![zero_learner("zero")],
            censoring: vec![zero_learner("zero")],
        };
        let plan = make_folds(8, 2, 1, 11).unwrap();
        let triple = TripleKey { a1: 0, a2: 0, b: 0 };
        let out = cv_risk(triple, &libs, &d, &plan, 1.5).unwrap();

        let model = compose(
            Arc::new(StepHazard::new(vec![0.6], vec![0.4])),
            Arc::new(ZeroHazard),
            Arc::new(ZeroHazard),
        );
        let mut mean = 0.0;
        for o in d.observations() {
            mean += integrated_brier(&model, o, 1.5).unwrap();
        }
        mean /= d.len() as f64;
        assert!((out.mean - mean).abs() < 1e-12);
    }

    #[test]
    fn argmin_picks_smaller_hand_computed_loss() {
        // Two stub cause-1 hazards with single jumps h at t=0.25 against
        // fully censored data (state 0 then -1 is never reached within
        // tau): loss = 0.75 * ((exp(-h) - 1)^2 + h^2).
        let loss = |h: f64| 0.75 * (((-h).exp() - 1.0).powi(2) + h * h);
        let d = censored_pair();
        let libs = Libraries {
            cause1: vec![
                FixedLearner::new("small", StepHazard::new(vec![0.25], vec![0.5])),
                FixedLearner::new("large", StepHazard::new(vec![0.25], vec![1.0])),
            ],
            cause2: vec![zero_learner("zero")],
            censoring: vec![zero_learner("zero")],
        };
        let plan = make_folds(2, 2, 1, 5).unwrap();
        let (best, table) = select_discrete_jssl(&libs, &d, &plan, 1.0).unwrap();
        assert_eq!(best, TripleKey { a1: 0, a2: 0, b: 0 });
        assert!((table.rows[0].loss - loss(0.5)).abs() < 1e-12);
        assert!((table.rows[1].loss - loss(1.0)).abs() < 1e-12);
        assert!(table.rows[0].sd == 0.0, "single repetition has sd 0");
    }

    #[test]
    fn singleton_libraries_select_the_only_triple() {
        let d = censored_pair();
        let libs = Libraries {
            cause1: vec![zero_learner("only")],
            cause2: vec![zero_learner("only")],
            censoring: vec![zero_learner("only")],
        };
        let plan = make_folds(2, 2, 1, 5).unwrap();
        let (best, table) = select_discrete_jssl(&libs, &d, &plan, 1.0).unwrap();
        assert_eq!(best, TripleKey { a1: 0, a2: 0, b: 0 });
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].rank, 1);
    }

    #[test]
    fn fit_sharing_is_one_fit_per_cell_per_learner() {
        let mk = |name: &str| {
            Arc::new(FixedLearner {
                name: name.to_string(),
                hazard: StepHazard::zero(),
                fits: AtomicUsize::new(0),
            })
        };
        let a1: Vec<Arc<FixedLearner>> = (0..5).map(|i| mk(&format!("a{i}"))).collect();
        let a2: Vec<Arc<FixedLearner>> = (0..5).map(|i| mk(&format!("b{i}"))).collect();
        let b: Vec<Arc<FixedLearner>> = (0..5).map(|i| mk(&format!("c{i}"))).collect();
        let libs = Libraries {
            cause1: a1
                .iter()
                .map(|l| l.clone() as Arc<dyn HazardLearner>)
                .collect(),
            cause2: a2
                .iter()
                .map(|l| l.clone() as Arc<dyn HazardLearner>)
                .collect(),
            censoring: b
                .iter()
                .map(|l| l.clone() as Arc<dyn HazardLearner>)
                .collect(),
        };
        let obs: Vec<Observation> = (0..10)
            .map(|i| Observation::new(1.0 + f64::from(i as u8), 0, vec![]).unwrap())
            .collect();
        let d = Dataset::new(obs, vec![]).unwrap();
        let plan = make_folds(10, 2, 2, 3).unwrap();
        let (_, table) = select_discrete_jssl(&libs, &d, &plan, 1.0).unwrap();
        assert_eq!(table.rows.len(), 125);
        let cells = 2 * 2; // repetitions x folds
        let total: usize = a1
            .iter()
            .chain(&a2)
            .chain(&b)
            .map(|l| l.fits.load(Ordering::SeqCst))
            .sum();
        assert_eq!(total, 15 * cells, "15 fits per (repetition, fold)");
        // Ranks are a permutation of 1..=125.
        let mut ranks: Vec<usize> = table.rows.iter().map(|r| r.rank).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, (1..=125).collect::<Vec<_>>());
    }

    #[test]
    fn failing_learner_gets_infinite_loss_not_abort() {
        struct FailingLearner;
        impl HazardLearner for FailingLearner {
            fn name(&self) -> &str {
                "broken"
            }
            fn fit(&self, _d: &Dataset, _seed: u64) -> Result<FittedHazard> {
                Err(Error::Fit {
                    learner: "broken".into(),
                    message: "synthetic failure".into(),
                })
            }
        }
        let d = censored_pair();
        let libs = Libraries {
            cause1: vec![zero_learner("ok"), Arc::new(FailingLearner)],
            cause2: vec![zero_learner("zero")],
            censoring: vec![zero_learner("zero")],
        };
        let plan = make_folds(2, 2, 1, 5).unwrap();
        let (best, table) = select_discrete_jssl(&libs, &d, &plan, 1.0).unwrap();
        assert_eq!(best.a1, 0);
        assert!(table.rows[1].loss.is_infinite());
        assert!(!table.rows[1].failures.is_empty());
        // Direct cv_risk on the failing triple propagates the error.
        let err = cv_risk(TripleKey { a1: 1, a2: 0, b: 0 }, &libs, &d, &plan, 1.0).unwrap_err();
        assert!(matches!(err, Error::FitInFold { .. }));
    }

    #[test]
    fn row_shuffle_with_matching_plan_is_invariant() {
        let obs: Vec<Observation> = (0..9)
            .map(|i| {
                Observation::new(0.2 + 0.3 * f64::from(i as u8), (i % 3) as u8, vec![]).unwrap()
            })
            .collect();
        let d = Dataset::new(obs, vec![]).unwrap();
        let libs = Libraries {
            cause1: vec![FixedLearner::new(
                "f",
                StepHazard::new(vec![0.5], vec![0.3]),
            )],
            cause2: vec![zero_learner("z")],
            censoring: vec![FixedLearner::new(
                "g",
                StepHazard::new(vec![0.8], vec![0.2]),
            )],
        };
        let plan = make_folds(9, 3, 1, 2).unwrap();
        let key = TripleKey { a1: 0, a2: 0, b: 0 };
        let before = cv_risk(key, &libs, &d, &plan, 1.0).unwrap();

        // Rotate rows and rotate the assignments identically.
        let perm: Vec<usize> = (0..9).map(|i| (i + 4) % 9).collect();
        let shuffled = d.subset(&perm);
        let mut plan2 = plan.clone();
        plan2.repetitions[0] = perm.iter().map(|&i| plan.repetitions[0][i]).collect();
        let after = cv_risk(key, &libs, &shuffled, &plan2, 1.0).unwrap();
        assert!((before.mean - after.mean).abs() < 1e-15);
    }
}
