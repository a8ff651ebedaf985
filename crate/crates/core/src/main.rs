//! Command-line interface for the joint survival super learner.
//!
//! Exit codes: 0 success, 2 usage error, 3 data/schema error,
//! 4 numerical failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use jssl::benchmark::{run_benchmark, BenchmarkFile, LibraryConfig};
use jssl::data::{load_dataset, make_folds_with, CsvSchema, FoldOptions};
use jssl::error::{Error, Result};
use jssl::hazard::CumulativeHazard;
use jssl::manifest::SelectionManifest;
use jssl::prediction::{censoring_survival, event_free_survival};
use jssl::scoring::select_discrete_jssl;
use jssl::simulation::{simulate_dataset, SimulationScenario};
use jssl::verification::verify_scoring_rule;

#[derive(Parser)]
#[command(
    name = "jssl",
    version,
    about = "Joint survival super learner: simulate, select, predict, benchmark, verify"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic right-censored dataset from a scenario file.
    Simulate(SimulateArgs),
    /// Rank all hazard-learner triples by cross-validated integrated
    /// Brier score and write the ranking plus a selected-triple manifest.
    Select(SelectArgs),
    /// Predict cause-specific risks and survival from a manifest.
    Predict(PredictArgs),
    /// Monte Carlo comparison of jssl, IPCW baselines, and the oracle.
    Benchmark(BenchmarkArgs),
    /// Monte Carlo verification of the scoring rule (properness and the
    /// excess-risk identity).
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Number of records to draw.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV for the observed data.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV with the latent event/censoring times.
    #[arg(long)]
    latent: Option<PathBuf>,
    #[arg(long, default_value = "time")]
    time_col: String,
    #[arg(long, default_value = "status")]
    status_col: String,
}

#[derive(Args)]
struct SelectArgs {
    /// Training data CSV.
    #[arg(long)]
    data: PathBuf,
    /// Library config JSON: {"cause1": [...], "cause2": [...], "censoring": [...]}.
    #[arg(long)]
    library: PathBuf,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Cross-validation repetitions.
    #[arg(long, default_value_t = 5)]
    r: usize,
    /// Evaluation horizon.
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stratify folds by status.
    #[arg(long)]
    stratify: bool,
    /// Ranked table CSV (rank, cause1, cause2, censoring, loss, sd).
    #[arg(long)]
    out_table: PathBuf,
    /// Selected-triple manifest JSON (refit on the full data).
    #[arg(long)]
    out_manifest: PathBuf,
    /// Optional ranked table JSON with per-repetition detail.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Optional fold-plan JSON export.
    #[arg(long)]
    out_folds: Option<PathBuf>,
    #[arg(long, default_value = "time")]
    time_col: String,
    #[arg(long, default_value = "status")]
    status_col: String,
}

#[derive(Args)]
struct PredictArgs {
    /// Manifest JSON written by `select`.
    #[arg(long)]
    manifest: PathBuf,
    /// Query CSV: covariate columns plus a time column.
    #[arg(long)]
    query: PathBuf,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// Name of the time column in the query file.
    #[arg(long, default_value = "t")]
    t_col: String,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Benchmark config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Simulated observations for the paired score gaps.
    #[arg(long, default_value_t = 10_000)]
    observations: usize,
    /// Covariate draws for the distance estimates.
    #[arg(long, default_value_t = 2_000)]
    norm_draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

/// JSSL_SEED overrides any configured seed.
fn effective_seed(configured: u64) -> Result<u64> {
    match std::env::var("JSSL_SEED") {
        Ok(text) => text.trim().parse::<u64>().map_err(|_| {
            Error::InvalidConfig(format!(
                "JSSL_SEED must be a 64-bit unsigned integer, got `{text}`"
            ))
        }),
        Err(_) => Ok(configured),
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Select(args) => cmd_select(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    if args.n == 0 {
        return Err(Error::InvalidConfig("--n must be positive".into()));
    }
    let seed = effective_seed(args.seed)?;
    let scenario = SimulationScenario::from_json_file(&args.scenario)?;
    let (dataset, latent) = simulate_dataset(&scenario, args.n, seed)?;
    dataset.write_csv(&args.out, &args.time_col, &args.status_col)?;

    if let Some(latent_path) = &args.latent {
        let mut w = csv::Writer::from_path(latent_path).map_err(Error::from)?;
        w.write_record(["T", "D", "C"])?;
        for r in &latent {
            w.write_record(&[
                r.event_time.to_string(),
                r.cause.to_string(),
                r.censoring_time.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: latent_path.display().to_string(),
            source: e,
        })?;
    }

    let n = latent.len() as f64;
    let horizon = scenario.tau;
    let event = latent.iter().filter(|r| r.event_time <= horizon).count() as f64 / n;
    let censor = latent
        .iter()
        .filter(|r| r.censoring_time <= horizon)
        .count() as f64
        / n;
    let observed = latent
        .iter()
        .filter(|r| r.observed.status != 0 && r.observed.time <= horizon)
        .count() as f64
        / n;
    println!(
        "n={} horizon={horizon}: latent event rate {event:.4}, latent censoring rate {censor:.4}, observed event fraction {observed:.4}",
        latent.len()
    );
    Ok(0)
}

fn cmd_select(args: SelectArgs) -> Result<i32> {
    let seed = effective_seed(args.seed)?;
    let schema = CsvSchema {
        time_column: args.time_col.clone(),
        status_column: args.status_col.clone(),
    };
    let data = load_dataset(&args.data, &schema)?;
    let library_text = std::fs::read_to_string(&args.library).map_err(|e| Error::Io {
        path: args.library.display().to_string(),
        source: e,
    })?;
    let library: LibraryConfig = serde_json::from_str(&library_text)?;
    let libs = library.build()?;

    let statuses: Vec<u8> = data.observations().iter().map(|o| o.status).collect();
    let plan = make_folds_with(
        data.len(),
        args.k,
        args.r,
        seed,
        FoldOptions {
            stratify_by_status: args.stratify,
        },
        Some(&statuses),
    )?;
    if let Some(folds_path) = &args.out_folds {
        let json = serde_json::json!({
            "seed": plan.seed,
            "K": plan.k,
            "repetitions": plan.repetitions,
        });
        std::fs::write(folds_path, serde_json::to_string(&json)?).map_err(|e| Error::Io {
            path: folds_path.display().to_string(),
            source: e,
        })?;
    }

    let (best, table) = select_discrete_jssl(&libs, &data, &plan, args.tau)?;
    let file = std::fs::File::create(&args.out_table).map_err(|e| Error::Io {
        path: args.out_table.display().to_string(),
        source: e,
    })?;
    table.write_csv(file)?;
    if let Some(json_path) = &args.out_json {
        std::fs::write(json_path, serde_json::to_string(&table)?).map_err(|e| Error::Io {
            path: json_path.display().to_string(),
            source: e,
        })?;
    }

    let manifest = SelectionManifest::from_selection(&libs, best, &data, args.tau, seed)?;
    manifest.save(&args.out_manifest)?;
    println!(
        "selected: cause1={} cause2={} censoring={} (loss {:.6})",
        manifest.selected.cause1,
        manifest.selected.cause2,
        manifest.selected.censoring,
        table.rows[0].loss
    );
    Ok(0)
}

fn cmd_predict(args: PredictArgs) -> Result<i32> {
    let manifest = SelectionManifest::load(&args.manifest)?;
    let risk_model = manifest.risk_model();

    let mut rdr = csv::Reader::from_path(&args.query).map_err(Error::from)?;
    let headers = rdr.headers()?.clone();
    let t_idx = headers
        .iter()
        .position(|h| h == args.t_col)
        .ok_or_else(|| Error::MissingColumn(args.t_col.clone()))?;
    let mut covariate_idx = Vec::new();
    for name in &manifest.covariate_names {
        let idx = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?;
        covariate_idx.push(idx);
    }

    let mut w = csv::Writer::from_path(&args.out).map_err(Error::from)?;
    w.write_record([
        "row_id",
        "t",
        "risk_cause1",
        "risk_cause2",
        "event_free_survival",
        "censoring_survival",
    ])?;

    let mut any_failed = false;
    for (row_no, record) in rdr.records().enumerate() {
        let row = row_no + 1;
        let record = record?;
        let parse = |idx: usize, what: &str| -> Result<f64> {
            record
                .get(idx)
                .ok_or_else(|| Error::Parse {
                    row,
                    message: format!("missing {what}"),
                })?
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse {
                    row,
                    message: format!("{what} is not numeric"),
                })
        };
        let t = parse(t_idx, "time")?;
        let mut x = Vec::with_capacity(covariate_idx.len());
        for (&idx, name) in covariate_idx.iter().zip(&manifest.covariate_names) {
            x.push(parse(idx, name)?);
        }
        let outcome = (|| -> Result<[f64; 4]> {
            let r1 = risk_model.risk(t, &x, 1)?;
            let r2 = risk_model.risk(t, &x, 2)?;
            let efs = event_free_survival(
                &manifest.models.cause1 as &dyn CumulativeHazard,
                &manifest.models.cause2,
                t,
                &x,
            );
            let cs = censoring_survival(&manifest.models.censoring, t, &x);
            Ok([r1, r2, efs, cs])
        })();
        match outcome {
            Ok([r1, r2, efs, cs]) => {
                w.write_record(&[
                    row.to_string(),
                    t.to_string(),
                    r1.to_string(),
                    r2.to_string(),
                    efs.to_string(),
                    cs.to_string(),
                ])?;
            }
            Err(e) => {
                any_failed = true;
                eprintln!("row {row}: {e}");
                w.write_record(&[
                    row.to_string(),
                    t.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io {
        path: args.out.display().to_string(),
        source: e,
    })?;
    Ok(if any_failed { 4 } else { 0 })
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<i32> {
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(Error::InvalidConfig("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    let (scenario, mut config, out_dir) = BenchmarkFile::load(&args.config)?;
    config.seed = effective_seed(config.seed)?;
    let out_dir = args
        .out_dir
        .or(out_dir)
        .ok_or_else(|| Error::InvalidConfig("no output directory configured".into()))?;
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;

    let result = run_benchmark(&scenario, &config)?;
    result.write_rows_csv(&out_dir.join("results.csv"))?;
    result.write_aggregate_csv(&out_dir.join("aggregate.csv"))?;

    let failures = result.rows.iter().filter(|r| r.error.is_some()).count();
    for agg in &result.aggregates {
        println!(
            "n={} {:10} mean IPA {:+.4} (se {:.4}, {} runs)",
            agg.n, agg.method, agg.mean_ipa, agg.mc_se, agg.completed
        );
    }
    if failures > 0 {
        eprintln!("{failures} method cells failed; see results.csv error column");
    }
    println!("wrote {}", out_dir.display());
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let seed = effective_seed(args.seed)?;
    let scenario = SimulationScenario::from_json_file(&args.scenario)?;
    let outcome = verify_scoring_rule(&scenario, args.observations, args.norm_draws, seed)?;
    println!(
        "scoring-rule verification: {} observations, {} norm draws, seed {seed}",
        outcome.n_observations, outcome.n_norm_draws
    );
    println!(
        "{:<18} {:>12} {:>10} {:>12} {:>10}  {:>8} {:>8}",
        "perturbation", "excess", "se", "norm^2", "se", "proper", "identity"
    );
    for row in &outcome.rows {
        println!(
            "{:<18} {:>12.6} {:>10.6} {:>12.6} {:>10.6}  {:>8} {:>8}",
            row.label,
            row.mean_excess,
            row.excess_se,
            row.norm_sq,
            row.norm_se,
            if row.properness_holds() {
                "pass"
            } else {
                "FAIL"
            },
            if row.excess_identity_holds() {
                "pass"
            } else {
                "FAIL"
            },
        );
    }
    let ok = outcome.all_proper() && outcome.all_identities_hold();
    println!(
        "{}",
        if ok {
            "all checks passed"
        } else {
            "CHECKS FAILED"
        }
    );
    Ok(if ok { 0 } else { 4 })
}
