//! Monte Carlo benchmark harness: simulate training sets of varying
//! size, run each method (joint selection, IPCW baselines, oracle), and
//! evaluate everything by IPA on one shared large uncensored test set
//! per scenario.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_folds, Dataset};
use crate::error::{io_err, Error, Result};
use crate::evaluation::{ipa, select_ipcw_sl, CensorKind, IpcwOptions};
use crate::learners::{FittedHazard, HazardLearner, LearnerKind, LearnerSpec, Target};
use crate::prediction::RiskPredictionModel;
use crate::scoring::{select_discrete_jssl, Libraries};
use crate::seeding::{self, tag};
use crate::simulation::{simulate_dataset, SimulationScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Jssl,
    IpcwKm,
    IpcwCox,
    Oracle,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Jssl => "jssl",
            Method::IpcwKm => "ipcw_km",
            Method::IpcwCox => "ipcw_cox",
            Method::Oracle => "oracle",
        }
    }
}

/// Learner specs per hazard role, as written in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LibraryConfig {
    pub cause1: Vec<LearnerSpec>,
    /// Empty means the covariate-free Nelson-Aalen singleton, which fits
    /// the zero hazard when the data carry no second cause.
    #[serde(default)]
    pub cause2: Vec<LearnerSpec>,
    pub censoring: Vec<LearnerSpec>,
}

impl LibraryConfig {
    pub fn build(&self) -> Result<Libraries> {
        let build_role =
            |specs: &[LearnerSpec], target: Target| -> Result<Vec<Arc<dyn HazardLearner>>> {
                specs
                    .iter()
                    .map(|s| {
                        s.build(target)
                            .map(|b| Arc::new(b) as Arc<dyn HazardLearner>)
                    })
                    .collect()
            };
        let cause2_specs: Vec<LearnerSpec> = if self.cause2.is_empty() {
            vec![LearnerSpec::of_kind(LearnerKind::NelsonAalen)]
        } else {
            self.cause2.clone()
        };
        Ok(Libraries {
            cause1: build_role(&self.cause1, Target::Cause1)?,
            cause2: build_role(&cause2_specs, Target::Cause2)?,
            censoring: build_role(&self.censoring, Target::Censoring)?,
        })
    }
}

/// Benchmark configuration (engine level; the scenario travels
/// separately).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub scenario_name: String,
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    pub methods: Vec<Method>,
    pub libraries: LibraryConfig,
    pub k_folds: usize,
    #[serde(default = "default_cv_repetitions")]
    pub cv_repetitions: usize,
    pub tau: f64,
    pub t_star: f64,
    pub seed: u64,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
}

fn default_cv_repetitions() -> usize {
    1
}

fn default_test_size() -> usize {
    20_000
}

impl BenchmarkConfig {
    fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.repetitions == 0 || self.methods.is_empty() {
            return Err(Error::InvalidConfig(
                "benchmark needs sizes, repetitions, and methods".into(),
            ));
        }
        if self.k_folds < 2 {
            return Err(Error::InvalidConfig("k_folds must be at least 2".into()));
        }
        for &n in &self.sizes {
            if n < 2 * self.k_folds {
                return Err(Error::InvalidConfig(format!(
                    "size {n} too small for {} folds (need at least 2K)",
                    self.k_folds
                )));
            }
        }
        if self.t_star <= 0.0 || self.t_star > self.tau {
            return Err(Error::InvalidConfig("t_star must lie in (0, tau]".into()));
        }
        Ok(())
    }
}

/// One (size, repetition, method) result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub scenario: String,
    pub n: usize,
    pub repetition: usize,
    pub seed: u64,
    pub method: String,
    pub ipa: f64,
    pub brier: f64,
    pub null_brier: f64,
    /// Selected event learner (and censoring learner for jssl/ipcw).
    pub selection: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scenario: String,
    pub n: usize,
    pub method: String,
    pub mean_ipa: f64,
    pub mc_se: f64,
    pub completed: usize,
}

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub rows: Vec<BenchmarkRow>,
    pub aggregates: Vec<AggregateRow>,
}

struct CellOutcome {
    method: Method,
    ipa: f64,
    brier: f64,
    null_brier: f64,
    selection: String,
    error: Option<String>,
}

fn refit_pair(
    libs: &Libraries,
    a1: usize,
    a2: usize,
    train: &Dataset,
    cell_seed: u64,
    t_star: f64,
) -> Result<RiskPredictionModel> {
    let fit = |learner: &Arc<dyn HazardLearner>, role: &str| -> Result<FittedHazard> {
        learner.fit(
            train,
            seeding::derive_seed(cell_seed, &[tag("refit"), tag(role), tag(learner.name())]),
        )
    };
    let lambda1 = fit(&libs.cause1[a1], "cause1")?;
    let lambda2 = fit(&libs.cause2[a2], "cause2")?;
    Ok(RiskPredictionModel::new(
        Arc::new(lambda1),
        Arc::new(lambda2),
        t_star,
    ))
}

fn run_cell_method(
    method: Method,
    libs: &Libraries,
    train: &Dataset,
    test: &Dataset,
    config: &BenchmarkConfig,
    cell_seed: u64,
) -> Result<(f64, f64, f64, String)> {
    let plan = make_folds(
        train.len(),
        config.k_folds,
        config.cv_repetitions,
        seeding::derive_seed(cell_seed, &[tag("folds")]),
    )?;
    match method {
        Method::Jssl => {
            let (best, _table) = select_discrete_jssl(libs, train, &plan, config.tau)?;
            let model = refit_pair(libs, best.a1, best.a2, train, cell_seed, config.t_star)?;
            let report = ipa(&model, test, config.t_star, method.label())?;
            let names = libs.names(best);
            Ok((
                report.ipa,
                report.brier,
                report.null_brier,
                format!("{}+{}+{}", names[0], names[1], names[2]),
            ))
        }
        Method::IpcwKm | Method::IpcwCox => {
            let kind = if method == Method::IpcwKm {
                CensorKind::Km
            } else {
                CensorKind::Cox
            };
            let selection = select_ipcw_sl(
                &libs.cause1,
                kind,
                train,
                &plan,
                config.t_star,
                &IpcwOptions::default(),
            )?;
            let model = refit_pair(libs, selection.selected, 0, train, cell_seed, config.t_star)?;
            let report = ipa(&model, test, config.t_star, method.label())?;
            Ok((
                report.ipa,
                report.brier,
                report.null_brier,
                libs.cause1[selection.selected].name().to_string(),
            ))
        }
        Method::Oracle => {
            let candidates: Vec<RiskPredictionModel> = (0..libs.cause1.len())
                .map(|a1| refit_pair(libs, a1, 0, train, cell_seed, config.t_star))
                .collect::<Result<_>>()?;
            let (best, reports) =
                crate::evaluation::oracle_select(&candidates, test, config.t_star)?;
            let r = &reports[best];
            Ok((
                r.ipa,
                r.brier,
                r.null_brier,
                libs.cause1[best].name().to_string(),
            ))
        }
    }
}

/// Shared uncensored evaluation set: latent event times and causes.
pub fn simulate_test_set(scenario: &SimulationScenario, size: usize, seed: u64) -> Result<Dataset> {
    let (_, latent) = simulate_dataset(scenario, size, seed)?;
    Dataset::new(
        latent
            .iter()
            .map(|r| crate::data::Observation {
                time: r.event_time,
                status: r.cause,
                covariates: r.covariates.clone(),
            })
            .collect(),
        scenario.covariate_names(),
    )
}

/// Run the full benchmark grid. Cells execute concurrently; outputs are
/// reduced in (size, repetition, method) order so results are
/// byte-identical for any thread count.
pub fn run_benchmark(
    scenario: &SimulationScenario,
    config: &BenchmarkConfig,
) -> Result<BenchmarkResult> {
    config.validate()?;
    let scenario = scenario.clone().validated()?;
    if config.tau > scenario.admin_time() {
        return Err(Error::InvalidConfig(
            "tau exceeds the scenario's administrative censoring time".into(),
        ));
    }
    let libs = config.libraries.build()?;
    let test = simulate_test_set(
        &scenario,
        config.test_size,
        seeding::derive_seed(config.seed, &[tag("test")]),
    )?;

    let cells: Vec<(usize, usize)> = config
        .sizes
        .iter()
        .flat_map(|&n| (0..config.repetitions).map(move |r| (n, r)))
        .collect();

    let cell_rows: Vec<(usize, usize, u64, Vec<CellOutcome>)> = cells
        .par_iter()
        .map(|&(n, repetition)| {
            let cell_seed =
                seeding::derive_seed(config.seed, &[tag("cell"), n as u64, repetition as u64]);
            let outcomes = match simulate_dataset(&scenario, n, cell_seed) {
                Ok((train, _)) => config
                    .methods
                    .iter()
                    .map(|&method| {
                        match run_cell_method(method, &libs, &train, &test, config, cell_seed) {
                            Ok((ipa, brier, null_brier, selection)) => CellOutcome {
                                method,
                                ipa,
                                brier,
                                null_brier,
                                selection,
                                error: None,
                            },
                            Err(e) => CellOutcome {
                                method,
                                ipa: f64::NAN,
                                brier: f64::NAN,
                                null_brier: f64::NAN,
                                selection: String::new(),
                                error: Some(e.to_string()),
                            },
                        }
                    })
                    .collect(),
                Err(e) => config
                    .methods
                    .iter()
                    .map(|&method| CellOutcome {
                        method,
                        ipa: f64::NAN,
                        brier: f64::NAN,
                        null_brier: f64::NAN,
                        selection: String::new(),
                        error: Some(e.to_string()),
                    })
                    .collect(),
            };
            (n, repetition, cell_seed, outcomes)
        })
        .collect();

    let mut rows = Vec::with_capacity(cell_rows.len() * config.methods.len());
    for (n, repetition, cell_seed, outcomes) in cell_rows {
        for o in outcomes {
            rows.push(BenchmarkRow {
                scenario: config.scenario_name.clone(),
                n,
                repetition,
                seed: cell_seed,
                method: o.method.label().to_string(),
                ipa: o.ipa,
                brier: o.brier,
                null_brier: o.null_brier,
                selection: o.selection,
                error: o.error,
            });
        }
    }

    let mut aggregates = Vec::new();
    for &n in &config.sizes {
        for &method in &config.methods {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n && r.method == method.label() && r.error.is_none())
                .map(|r| r.ipa)
                .collect();
            let completed = values.len();
            let (mean, se) = if completed > 0 {
                let m = values.iter().sum::<f64>() / completed as f64;
                let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
                    / (completed.max(2) - 1) as f64;
                (m, (var / completed as f64).sqrt())
            } else {
                (f64::NAN, f64::NAN)
            };
            aggregates.push(AggregateRow {
                scenario: config.scenario_name.clone(),
                n,
                method: method.label().to_string(),
                mean_ipa: mean,
                mc_se: se,
                completed,
            });
        }
    }

    Ok(BenchmarkResult { rows, aggregates })
}

impl BenchmarkResult {
    pub fn write_rows_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
        w.write_record([
            "scenario",
            "n",
            "repetition",
            "seed",
            "method",
            "ipa",
            "brier",
            "null_brier",
            "selection",
            "error",
        ])?;
        for r in &self.rows {
            w.write_record(&[
                r.scenario.clone(),
                r.n.to_string(),
                r.repetition.to_string(),
                r.seed.to_string(),
                r.method.clone(),
                r.ipa.to_string(),
                r.brier.to_string(),
                r.null_brier.to_string(),
                r.selection.clone(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
        Ok(())
    }

    pub fn write_aggregate_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
        w.write_record(["scenario", "n", "method", "mean_ipa", "mc_se", "completed"])?;
        for r in &self.aggregates {
            w.write_record(&[
                r.scenario.clone(),
                r.n.to_string(),
                r.method.clone(),
                r.mean_ipa.to_string(),
                r.mc_se.to_string(),
                r.completed.to_string(),
            ])?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
        Ok(())
    }
}

/// On-disk benchmark description: a scenario (inline or by path,
/// relative to the config file) plus the engine configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkFile {
    pub scenario: ScenarioRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(flatten)]
    pub config: BenchmarkConfigFile,
}

/// BenchmarkConfig without the scenario name (derived at load time).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfigFile {
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    pub methods: Vec<Method>,
    pub libraries: LibraryConfig,
    pub k_folds: usize,
    #[serde(default = "default_cv_repetitions")]
    pub cv_repetitions: usize,
    pub tau: f64,
    pub t_star: f64,
    pub seed: u64,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Path(PathBuf),
    Inline(Box<SimulationScenario>),
}

impl BenchmarkFile {
    pub fn load(path: &Path) -> Result<(SimulationScenario, BenchmarkConfig, Option<PathBuf>)> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let file: BenchmarkFile = serde_json::from_str(&text)?;
        let (scenario, name) = match &file.scenario {
            ScenarioRef::Inline(s) => (s.as_ref().clone().validated()?, "inline".to_string()),
            ScenarioRef::Path(rel) => {
                let base = path.parent().unwrap_or_else(|| Path::new("."));
                let scenario_path = if rel.is_absolute() {
                    rel.clone()
                } else {
                    base.join(rel)
                };
                let name = scenario_path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "scenario".to_string());
                (SimulationScenario::from_json_file(&scenario_path)?, name)
            }
        };
        let c = file.config;
        let config = BenchmarkConfig {
            scenario_name: name,
            sizes: c.sizes,
            repetitions: c.repetitions,
            methods: c.methods,
            libraries: c.libraries,
            k_folds: c.k_folds,
            cv_repetitions: c.cv_repetitions,
            tau: c.tau,
            t_star: c.t_star,
            seed: c.seed,
            test_size: c.test_size,
        };
        Ok((scenario, config, file.output_dir))
    }
}
