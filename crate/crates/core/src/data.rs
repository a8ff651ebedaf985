//! Core domain types: observations, datasets, fold plans, state labels.

use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::seeding;

/// One right-censored competing-risks record.
///
/// `status` codes: 0 censored, 1 cause 1, 2 cause 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub status: u8,
    pub covariates: Vec<f64>,
}

impl Observation {
    pub fn new(time: f64, status: u8, covariates: Vec<f64>) -> Result<Self> {
        if !time.is_finite() || time < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "observation time must be finite and non-negative, got {time}"
            )));
        }
        if status > 2 {
            return Err(Error::InvalidConfig(format!(
                "status must be 0, 1 or 2, got {status}"
            )));
        }
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "covariates must be finite".to_string(),
            ));
        }
        Ok(Self {
            time,
            status,
            covariates,
        })
    }

    /// 1 if an event of any cause was observed.
    pub fn event_indicator(&self) -> u8 {
        u8::from(self.status != 0)
    }
}

/// Observed state of a record at a point in time: censored (-1),
/// event-free (0), cause 1 (1) or cause 2 (2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateLabel {
    Censored,
    AtRisk,
    Cause1,
    Cause2,
}

impl StateLabel {
    pub const ALL: [StateLabel; 4] = [
        StateLabel::Censored,
        StateLabel::AtRisk,
        StateLabel::Cause1,
        StateLabel::Cause2,
    ];

    pub fn value(self) -> i8 {
        match self {
            StateLabel::Censored => -1,
            StateLabel::AtRisk => 0,
            StateLabel::Cause1 => 1,
            StateLabel::Cause2 => 2,
        }
    }

    pub fn from_value(v: i8) -> Option<StateLabel> {
        match v {
            -1 => Some(StateLabel::Censored),
            0 => Some(StateLabel::AtRisk),
            1 => Some(StateLabel::Cause1),
            2 => Some(StateLabel::Cause2),
            _ => None,
        }
    }

    /// State occupied once the record's endpoint has been reached.
    pub fn terminal(status: u8) -> StateLabel {
        match status {
            0 => StateLabel::Censored,
            1 => StateLabel::Cause1,
            _ => StateLabel::Cause2,
        }
    }

    /// Index into per-state arrays, in the order of [`StateLabel::ALL`].
    pub fn index(self) -> usize {
        match self {
            StateLabel::Censored => 0,
            StateLabel::AtRisk => 1,
            StateLabel::Cause1 => 2,
            StateLabel::Cause2 => 3,
        }
    }
}

/// An ordered collection of observations sharing a covariate layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    observations: Vec<Observation>,
    covariate_names: Vec<String>,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>, covariate_names: Vec<String>) -> Result<Self> {
        let p = covariate_names.len();
        for (i, o) in observations.iter().enumerate() {
            if o.covariates.len() != p {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!("expected {p} covariates, found {}", o.covariates.len()),
                });
            }
        }
        Ok(Self {
            observations,
            covariate_names,
        })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn observation(&self, i: usize) -> &Observation {
        &self.observations[i]
    }

    /// Subset by observation index, preserving order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            observations: indices
                .iter()
                .map(|&i| self.observations[i].clone())
                .collect(),
            covariate_names: self.covariate_names.clone(),
        }
    }

    /// Write the dataset as CSV with the given time/status column names.
    pub fn write_csv(&self, path: &Path, time_col: &str, status_col: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
        let mut header = vec![time_col.to_string(), status_col.to_string()];
        header.extend(self.covariate_names.iter().cloned());
        w.write_record(&header)?;
        for o in &self.observations {
            let mut rec = vec![o.time.to_string(), o.status.to_string()];
            rec.extend(o.covariates.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
        Ok(())
    }
}

/// Column mapping for CSV ingestion.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub time_column: String,
    pub status_column: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time_column: "time".to_string(),
            status_column: "status".to_string(),
        }
    }
}

/// Load a dataset from a CSV file with a header row.
///
/// Every column other than the time and status columns is treated as a
/// covariate; row numbers in errors are 1-based data rows (header
/// excluded). Missing values are rejected.
pub fn load_dataset(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    load_dataset_from_reader(file, schema)
}

pub fn load_dataset_from_reader<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyInput("CSV file has no header row".to_string()));
    }
    let find = |name: &str| headers.iter().position(|h| h == name);
    let time_idx = find(&schema.time_column)
        .ok_or_else(|| Error::MissingColumn(schema.time_column.clone()))?;
    let status_idx = find(&schema.status_column)
        .ok_or_else(|| Error::MissingColumn(schema.status_column.clone()))?;

    let mut covariate_names = Vec::new();
    let mut covariate_idx = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if i != time_idx && i != status_idx {
            covariate_names.push(h.to_string());
            covariate_idx.push(i);
        }
    }

    let mut observations = Vec::new();
    for (row_no, record) in rdr.records().enumerate() {
        let row = row_no + 1;
        let record = record?;
        let parse_field = |idx: usize, what: &str| -> Result<f64> {
            let raw = record.get(idx).ok_or_else(|| Error::Parse {
                row,
                message: format!("missing {what} field"),
            })?;
            raw.trim().parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("{what} `{raw}` is not numeric"),
            })
        };
        let time = parse_field(time_idx, "time")?;
        if !time.is_finite() || time < 0.0 {
            return Err(Error::Parse {
                row,
                message: format!("time {time} must be finite and non-negative"),
            });
        }
        let status_raw = parse_field(status_idx, "status")?;
        let status = if status_raw == 0.0 {
            0
        } else if status_raw == 1.0 {
            1
        } else if status_raw == 2.0 {
            2
        } else {
            return Err(Error::Parse {
                row,
                message: format!("status `{status_raw}` is not one of 0, 1, 2"),
            });
        };
        let mut covariates = Vec::with_capacity(covariate_idx.len());
        for (&idx, name) in covariate_idx.iter().zip(&covariate_names) {
            let v = parse_field(idx, name)?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("covariate {name} is not finite"),
                });
            }
            covariates.push(v);
        }
        observations.push(Observation {
            time,
            status,
            covariates,
        });
    }
    if observations.is_empty() {
        return Err(Error::EmptyInput(
            "CSV file contains no data rows".to_string(),
        ));
    }
    Dataset::new(observations, covariate_names)
}

/// Exchange the roles of censoring and outcome: censored records become
/// events (status 1) and any observed event becomes a censoring.
///
/// Times and covariates are untouched. Not idempotent: a second
/// application collapses the original causes.
pub fn reverse_roles(d: &Dataset) -> Dataset {
    let observations = d
        .observations
        .iter()
        .map(|o| Observation {
            time: o.time,
            status: u8::from(o.status == 0),
            covariates: o.covariates.clone(),
        })
        .collect();
    Dataset {
        observations,
        covariate_names: d.covariate_names.clone(),
    }
}

/// Cross-validation fold assignments for `repetitions` independent splits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// One assignment vector per repetition; entries are fold indices in 1..=k.
    pub repetitions: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FoldOptions {
    /// Permute within status strata so each fold mirrors the status mix.
    pub stratify_by_status: bool,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.repetitions.first().map_or(0, Vec::len)
    }

    pub fn n_repetitions(&self) -> usize {
        self.repetitions.len()
    }

    /// Indices of the training and held-out sets for (repetition, fold).
    /// Folds are 1-based.
    pub fn split(&self, repetition: usize, fold: u32) -> (Vec<usize>, Vec<usize>) {
        let assignment = &self.repetitions[repetition];
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in assignment.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Build a fold plan: each repetition draws an independent permutation
/// and slices it into K contiguous blocks whose sizes differ by at most one.
pub fn make_folds(n: usize, k: usize, repetitions: usize, seed: u64) -> Result<FoldPlan> {
    make_folds_with(n, k, repetitions, seed, FoldOptions::default(), None)
}

/// As [`make_folds`], with options. Stratification requires the statuses
/// of the observations being split.
pub fn make_folds_with(
    n: usize,
    k: usize,
    repetitions: usize,
    seed: u64,
    options: FoldOptions,
    statuses: Option<&[u8]>,
) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::InvalidConfig(format!(
            "fold count K={k} must satisfy 2 <= K <= n ({n})"
        )));
    }
    if repetitions == 0 {
        return Err(Error::InvalidConfig(
            "repetitions must be at least 1".to_string(),
        ));
    }
    if options.stratify_by_status && statuses.is_none() {
        return Err(Error::InvalidConfig(
            "stratified folds require observation statuses".to_string(),
        ));
    }

    let mut reps = Vec::with_capacity(repetitions);
    for r in 0..repetitions {
        let mut rng = seeding::rng_from(seed, &[seeding::tag("folds"), r as u64]);
        let mut assignment = vec![0u32; n];
        if options.stratify_by_status {
            // Permute each status stratum, then deal the strata
            // round-robin across folds so both the global sizes and the
            // per-stratum counts differ by at most one.
            let statuses = statuses.unwrap();
            let mut strata: Vec<Vec<usize>> = vec![Vec::new(); 3];
            for (i, &s) in statuses.iter().enumerate() {
                strata[s as usize].push(i);
            }
            let mut pos = 0usize;
            for stratum in &mut strata {
                stratum.shuffle(&mut rng);
                for &obs in stratum.iter() {
                    assignment[obs] = (pos % k + 1) as u32;
                    pos += 1;
                }
            }
        } else {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let base = n / k;
            let remainder = n % k;
            let mut pos = 0;
            for fold in 0..k {
                let size = base + usize::from(fold < remainder);
                for &obs in &order[pos..pos + size] {
                    assignment[obs] = (fold + 1) as u32;
                }
                pos += size;
            }
        }
        reps.push(assignment);
    }
    Ok(FoldPlan {
        k,
        seed,
        repetitions: reps,
    })
}
