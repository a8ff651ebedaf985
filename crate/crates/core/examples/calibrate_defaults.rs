//! Regenerate the checked-in default scenarios by calibrating the
//! prostate-style template to the target marginal rates.
//!
//! Run from the workspace root:
//!   cargo run -p jssl --example calibrate_defaults -- scenarios/

use std::path::PathBuf;

use jssl::simulation::{
    calibrate_scenario, simulate_dataset, CalibrationTargets, CensoringMode, CovariateDef,
    CovariateSpec, SimulationScenario, WeibullParams,
};

fn template() -> SimulationScenario {
    SimulationScenario {
        covariates: vec![
            CovariateDef {
                name: "psa".into(),
                spec: CovariateSpec::Gaussian {
                    mean: 2.3,
                    sd: 0.75,
                },
            },
            CovariateDef {
                name: "gss".into(),
                spec: CovariateSpec::Categorical {
                    probabilities: vec![0.30, 0.35, 0.20, 0.10, 0.05],
                    values: Some(vec![6.0, 7.0, 8.0, 9.0, 10.0]),
                },
            },
            CovariateDef {
                name: "rd".into(),
                spec: CovariateSpec::Gaussian {
                    mean: 70.0,
                    sd: 6.0,
                },
            },
            CovariateDef {
                name: "ht".into(),
                spec: CovariateSpec::Bernoulli { p: 0.35 },
            },
            CovariateDef {
                name: "cs".into(),
                spec: CovariateSpec::Categorical {
                    probabilities: vec![0.28, 0.27, 0.20, 0.12, 0.08, 0.05],
                    values: Some(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
                },
            },
        ],
        cause1: WeibullParams {
            scale: 1e-6,
            shape: 1.3,
            coefficients: vec![0.33, 0.18, -0.03, -0.22, 0.12],
        },
        cause2: None,
        censoring: WeibullParams {
            scale: 1e-6,
            shape: 1.4,
            coefficients: vec![0.0, 0.0, 0.18, 0.0, 0.0],
        },
        censoring_mode: CensoringMode::Dependent,
        tau: 36.0,
        admin_censoring_time: None,
    }
}

fn report(label: &str, scenario: &SimulationScenario) {
    let (_, latent) = simulate_dataset(scenario, 50_000, 2024).unwrap();
    let n = latent.len() as f64;
    let event = latent.iter().filter(|r| r.event_time <= 36.0).count() as f64 / n;
    let censor = latent.iter().filter(|r| r.censoring_time <= 36.0).count() as f64 / n;
    let observed_event = latent
        .iter()
        .filter(|r| r.observed.status != 0 && r.observed.time <= 36.0)
        .count() as f64
        / n;
    println!(
        "{label}: latent event {event:.4}, latent censor {censor:.4}, observed events by 36: {observed_event:.4}"
    );
    println!(
        "  cause1 scale {:e}, censoring scale {:e}",
        scenario.cause1.scale, scenario.censoring.scale
    );
}

fn main() {
    let out_dir: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "scenarios".into())
        .into();
    std::fs::create_dir_all(&out_dir).unwrap();

    let dependent = calibrate_scenario(
        CalibrationTargets {
            event_rate: 0.246,
            censor_rate: 0.619,
            horizon: 36.0,
        },
        &template(),
        20240901,
    )
    .unwrap();
    report("dependent", &dependent);
    dependent
        .to_json_file(&out_dir.join("prostate_dependent.json"))
        .unwrap();

    let mut ind_template = template();
    ind_template.censoring_mode = CensoringMode::Independent;
    let independent = calibrate_scenario(
        CalibrationTargets {
            event_rate: 0.246,
            censor_rate: 0.387,
            horizon: 36.0,
        },
        &ind_template,
        20240901,
    )
    .unwrap();
    report("independent", &independent);
    independent
        .to_json_file(&out_dir.join("prostate_independent.json"))
        .unwrap();
}
