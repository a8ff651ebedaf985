//! Selected-triple manifest: the chosen learner names plus their models
//! refit on the full dataset, serialized for later prediction.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{io_err, Result};
use crate::learners::{FittedHazard, HazardLearner};
use crate::prediction::RiskPredictionModel;
use crate::scoring::{Libraries, TripleKey};
use crate::seeding::{self, tag};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionManifest {
    pub tau: f64,
    pub covariate_names: Vec<String>,
    pub selected: SelectedNames,
    pub models: SelectedModels,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectedNames {
    pub cause1: String,
    pub cause2: String,
    pub censoring: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectedModels {
    pub cause1: FittedHazard,
    pub cause2: FittedHazard,
    pub censoring: FittedHazard,
}

impl SelectionManifest {
    /// Refit the selected triple on the full dataset with seeds derived
    /// from the master seed.
    pub fn from_selection(
        libs: &Libraries,
        key: TripleKey,
        d: &Dataset,
        tau: f64,
        seed: u64,
    ) -> Result<SelectionManifest> {
        let fit = |learner: &Arc<dyn HazardLearner>, role: &str| -> Result<FittedHazard> {
            learner.fit(
                d,
                seeding::derive_seed(seed, &[tag("final"), tag(role), tag(learner.name())]),
            )
        };
        let names = libs.names(key);
        Ok(SelectionManifest {
            tau,
            covariate_names: d.covariate_names().to_vec(),
            selected: SelectedNames {
                cause1: names[0].clone(),
                cause2: names[1].clone(),
                censoring: names[2].clone(),
            },
            models: SelectedModels {
                cause1: fit(&libs.cause1[key.a1], "cause1")?,
                cause2: fit(&libs.cause2[key.a2], "cause2")?,
                censoring: fit(&libs.censoring[key.b], "censoring")?,
            },
        })
    }

    pub fn risk_model(&self) -> RiskPredictionModel {
        RiskPredictionModel::new(
            Arc::new(self.models.cause1.clone()),
            Arc::new(self.models.cause2.clone()),
            self.tau,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<SelectionManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
