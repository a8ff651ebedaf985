//! Quick Monte Carlo probe of the benchmark orderings on the default
//! dependent-censoring scenario. Development aid, not part of the test
//! suite.
//!
//!   cargo run -p jssl --example ordering_probe -- <reps> <n> [test_size]

use jssl::benchmark::{run_benchmark, BenchmarkConfig, LibraryConfig, Method};
use jssl::learners::{LearnerKind, LearnerSpec};
use jssl::simulation::SimulationScenario;
use std::path::Path;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let reps: usize = args.get(1).map_or(20, |s| s.parse().unwrap());
    let n: usize = args.get(2).map_or(1000, |s| s.parse().unwrap());
    let test_size: usize = args.get(3).map_or(5000, |s| s.parse().unwrap());
    let cv_reps: usize = args.get(4).map_or(1, |s| s.parse().unwrap());

    let scenario =
        SimulationScenario::from_json_file(Path::new("scenarios/prostate_dependent.json")).unwrap();
    let mut forest = LearnerSpec::of_kind(LearnerKind::SurvivalForest);
    forest
        .hyperparameters
        .insert("n_trees".into(), serde_json::json!(100));
    let library = vec![
        LearnerSpec::of_kind(LearnerKind::NelsonAalen),
        LearnerSpec::of_kind(LearnerKind::Cox),
        forest,
    ];
    let config = BenchmarkConfig {
        scenario_name: "dependent".into(),
        sizes: vec![n],
        repetitions: reps,
        methods: vec![
            Method::Jssl,
            Method::IpcwKm,
            Method::IpcwCox,
            Method::Oracle,
        ],
        libraries: LibraryConfig {
            cause1: library.clone(),
            cause2: vec![],
            censoring: library,
        },
        k_folds: 5,
        cv_repetitions: cv_reps,
        tau: 36.0,
        t_star: 36.0,
        seed: 7,
        test_size,
    };
    let start = std::time::Instant::now();
    let result = run_benchmark(&scenario, &config).unwrap();
    println!("elapsed: {:.1?} for {} cells", start.elapsed(), reps);

    for agg in &result.aggregates {
        println!(
            "n={} {:10}  mean IPA {:+.4}  se {:.4}  ({} reps)",
            agg.n, agg.method, agg.mean_ipa, agg.mc_se, agg.completed
        );
    }
    // Per-method selection tallies.
    for method in ["jssl", "ipcw_km", "ipcw_cox", "oracle"] {
        let mut counts = std::collections::BTreeMap::new();
        for r in result.rows.iter().filter(|r| r.method == method) {
            *counts.entry(r.selection.clone()).or_insert(0usize) += 1;
        }
        println!("{method}: {counts:?}");
    }
    // Oracle agreement: jssl's event learner vs oracle pick.
    let mut agree = 0;
    for rep in 0..reps {
        let jssl_sel = result
            .rows
            .iter()
            .find(|r| r.repetition == rep && r.method == "jssl")
            .and_then(|r| r.selection.split('+').next().map(str::to_string));
        let oracle_sel = result
            .rows
            .iter()
            .find(|r| r.repetition == rep && r.method == "oracle")
            .map(|r| r.selection.clone());
        if jssl_sel.as_deref() == oracle_sel.as_deref() {
            agree += 1;
        }
    }
    println!("oracle agreement: {agree}/{reps}");
}
