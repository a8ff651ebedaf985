//! Evaluation machinery: IPCW-weighted Brier scores, the IPCW baseline
//! super learners, the index of prediction accuracy (IPA), and the
//! oracle selector.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::hazard::{CumulativeHazard, HazardCurve, ZeroHazard};
use crate::learners::{fit_cox, fit_nelson_aalen, CoxOptions, FittedHazard, HazardLearner, Target};
use crate::prediction::RiskPredictionModel;
use crate::seeding;

/// Performance of one risk prediction method at a horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    pub ipa: f64,
    pub brier: f64,
    pub null_brier: f64,
    pub n_test: usize,
    /// Monte Carlo standard error across benchmark repetitions, when
    /// this row aggregates several runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct IpcwOptions {
    /// Hard positivity floor for the censoring survival.
    pub positivity_floor: f64,
    /// Truncate weights at the floor instead of erroring.
    pub truncate: bool,
    /// Grid size of the integrated variant on (0, t*].
    pub grid_size: usize,
}

impl Default for IpcwOptions {
    fn default() -> Self {
        Self {
            positivity_floor: 1e-6,
            truncate: false,
            grid_size: 100,
        }
    }
}

/// Which censoring model the IPCW baselines use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensorKind {
    /// exp(-Nelson-Aalen) without covariates.
    Km,
    /// Cox regression on the role-reversed data.
    Cox,
}

fn censor_survival_checked(
    curve: &HazardCurve,
    t: f64,
    left: bool,
    observation: usize,
    opts: &IpcwOptions,
) -> Result<f64> {
    let cum = if left {
        curve.value_left(t)
    } else {
        curve.value(t)
    };
    let g = (-cum).exp();
    if g <= opts.positivity_floor {
        if opts.truncate {
            return Ok(opts.positivity_floor);
        }
        return Err(Error::Positivity {
            observation,
            value: g,
            floor: opts.positivity_floor,
        });
    }
    Ok(g)
}

/// IPCW Brier score of event-by-`t_star` predictions on `d`:
///
/// ```text
/// (1/n) sum_i [ 1{time_i <= t*, status_i != 0} (1 - r_i)^2 / G(time_i- | x_i)
///             + 1{time_i > t*} r_i^2 / G(t* | x_i) ]
/// ```
///
/// with `r_i` the model risk at (t*, x_i). Graf-style weights; records
/// censored by t* drop out. If every record is censored before t* the
/// score is an empty sum and 0 is returned.
pub fn ipcw_brier(
    risk_model: &RiskPredictionModel,
    d: &Dataset,
    censor_model: &dyn CumulativeHazard,
    t_star: f64,
    opts: &IpcwOptions,
) -> Result<f64> {
    if t_star <= 0.0 {
        return Err(Error::InvalidConfig("t_star must be positive".into()));
    }
    let mut total = 0.0;
    for (i, o) in d.observations().iter().enumerate() {
        let curve = HazardCurve::new(censor_model, &o.covariates);
        let risk = risk_model.risk_view(&o.covariates);
        total += ipcw_term(&risk, o, &curve, i, t_star, opts)?;
    }
    Ok(total / d.len() as f64)
}

fn ipcw_term(
    risk: &crate::prediction::RiskView,
    o: &crate::data::Observation,
    censor_curve: &HazardCurve,
    index: usize,
    t: f64,
    opts: &IpcwOptions,
) -> Result<f64> {
    let r = risk.value(t, 1)?;
    if o.time <= t && o.status != 0 {
        let g = censor_survival_checked(censor_curve, o.time, true, index, opts)?;
        Ok((1.0 - r) * (1.0 - r) / g)
    } else if o.time > t {
        let g = censor_survival_checked(censor_curve, t, false, index, opts)?;
        Ok(r * r / g)
    } else {
        Ok(0.0)
    }
}

/// Integrated IPCW Brier: the average of [`ipcw_brier`] over the grid
/// `t = k t*/m`, k = 1..m (m = `opts.grid_size`).
pub fn ipcw_integrated_brier(
    risk_model: &RiskPredictionModel,
    d: &Dataset,
    censor_model: &dyn CumulativeHazard,
    t_star: f64,
    opts: &IpcwOptions,
) -> Result<f64> {
    if t_star <= 0.0 {
        return Err(Error::InvalidConfig("t_star must be positive".into()));
    }
    let m = opts.grid_size.max(1);
    let mut total = 0.0;
    for (i, o) in d.observations().iter().enumerate() {
        let curve = HazardCurve::new(censor_model, &o.covariates);
        let risk = risk_model.risk_view(&o.covariates);
        for k in 1..=m {
            let t = t_star * k as f64 / m as f64;
            total += ipcw_term(&risk, o, &curve, i, t, opts)?;
        }
    }
    Ok(total / (d.len() * m) as f64)
}

/// Outcome of an IPCW super learner run.
#[derive(Debug, Clone)]
pub struct IpcwSelection {
    pub selected: usize,
    /// Mean integrated IPCW loss per event learner (across repetitions
    /// and folds).
    pub losses: Vec<f64>,
}

fn censor_fit(train: &Dataset, kind: CensorKind) -> Result<FittedHazard> {
    // With no censored records the censoring survival is identically 1.
    if train.observations().iter().all(|o| o.status != 0) {
        return Ok(FittedHazard::Zero);
    }
    match kind {
        CensorKind::Km => fit_nelson_aalen(train, Target::Censoring),
        CensorKind::Cox => fit_cox(train, Target::Censoring, &CoxOptions::default()),
    }
}

/// IPCW discrete super learner over an event-learner library: per fold,
/// fit the censoring model of `censor_kind` and every event learner on
/// the training part, score held-out records with the integrated IPCW
/// Brier on (0, t*], and select the argmin (index tie-break).
pub fn select_ipcw_sl(
    event_learners: &[Arc<dyn HazardLearner>],
    censor_kind: CensorKind,
    d: &Dataset,
    plan: &FoldPlan,
    t_star: f64,
    opts: &IpcwOptions,
) -> Result<IpcwSelection> {
    if event_learners.is_empty() {
        return Err(Error::InvalidConfig(
            "event learner library must be non-empty".into(),
        ));
    }
    let cells: Vec<(usize, u32)> = (0..plan.n_repetitions())
        .flat_map(|r| (1..=plan.k as u32).map(move |f| (r, f)))
        .collect();
    let mut losses = vec![0.0; event_learners.len()];
    for &(repetition, fold) in &cells {
        let (train_idx, test_idx) = plan.split(repetition, fold);
        let train = d.subset(&train_idx);
        let test = d.subset(&test_idx);
        let censor =
            censor_fit(&train, censor_kind).map_err(|e| e.in_fold(repetition, fold as usize))?;
        for (li, learner) in event_learners.iter().enumerate() {
            let fit_seed = seeding::derive_seed(
                plan.seed,
                &[
                    seeding::tag("ipcw-fit"),
                    repetition as u64,
                    u64::from(fold),
                    seeding::tag(learner.name()),
                ],
            );
            let event = learner
                .fit(&train, fit_seed)
                .map_err(|e| e.in_fold(repetition, fold as usize))?;
            let model = RiskPredictionModel::new(Arc::new(event), Arc::new(ZeroHazard), t_star);
            let loss = ipcw_integrated_brier(&model, &test, &censor, t_star, opts)
                .map_err(|e| e.in_fold(repetition, fold as usize))?;
            losses[li] += loss;
        }
    }
    for l in &mut losses {
        *l /= cells.len() as f64;
    }
    let selected = losses
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.total_cmp(b))
        .map(|(i, _)| i)
        .unwrap();
    Ok(IpcwSelection { selected, losses })
}

/// Index of prediction accuracy on an uncensored test set:
/// `1 - Brier(model) / Brier(null)` for the event {T <= t*, D = 1},
/// where the null model is the covariate-free empirical cumulative
/// incidence of cause 1 on the same test set.
pub fn ipa(
    risk_model: &RiskPredictionModel,
    test: &Dataset,
    t_star: f64,
    method: &str,
) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput("empty test set".into()));
    }
    if test.observations().iter().any(|o| o.status == 0) {
        return Err(Error::InvalidConfig(
            "IPA requires uncensored test data with latent event times".into(),
        ));
    }
    let n = test.len() as f64;
    let indicators: Vec<f64> = test
        .observations()
        .iter()
        .map(|o| f64::from(u8::from(o.time <= t_star && o.status == 1)))
        .collect();
    let incidence = indicators.iter().sum::<f64>() / n;

    use rayon::prelude::*;
    let terms: Vec<crate::error::Result<f64>> = test
        .observations()
        .par_iter()
        .zip(&indicators)
        .map(|(o, ind)| {
            let r = risk_model.risk(t_star, &o.covariates, 1)?;
            Ok((ind - r) * (ind - r))
        })
        .collect();
    let mut brier = 0.0;
    for term in terms {
        brier += term?;
    }
    brier /= n;

    let null_brier = indicators
        .iter()
        .map(|ind| (ind - incidence) * (ind - incidence))
        .sum::<f64>()
        / n;
    if null_brier == 0.0 {
        return Err(Error::UndefinedIpa);
    }
    Ok(EvaluationReport {
        method: method.to_string(),
        ipa: 1.0 - brier / null_brier,
        brier,
        null_brier,
        n_test: test.len(),
        std_error: None,
    })
}

/// Pick the candidate with the highest IPA; ties go to the lower index.
pub fn oracle_select(
    candidates: &[RiskPredictionModel],
    test: &Dataset,
    t_star: f64,
) -> Result<(usize, Vec<EvaluationReport>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig(
            "oracle selection needs at least one candidate".into(),
        ));
    }
    let reports: Vec<EvaluationReport> = candidates
        .iter()
        .enumerate()
        .map(|(i, m)| ipa(m, test, t_star, &format!("candidate-{i}")))
        .collect::<Result<_>>()?;
    let best = reports
        .iter()
        .enumerate()
        .max_by(|(ai, a), (bi, b)| a.ipa.total_cmp(&b.ipa).then(bi.cmp(ai)))
        .map(|(i, _)| i)
        .unwrap();
    Ok((best, reports))
}
