//! Config-driven entry point behind the `mmot` binary.
//!
//! A run is described by a single self-describing JSON config; command
//! line flags only override config fields. Tasks:
//!
//! * `solve` — optimal value and plan for each input measure (exact LP
//!   by default, entropic scaling on request);
//! * `dual` — Kantorovich potential for a truncated cost, canonicalized;
//! * `verify` — the full theorem battery on each input measure;
//! * `campaign` — randomized verification campaign with report, plot
//!   data, and reproducer files for any failing instance;
//! * `continuity` — optimal values along a weight-perturbation sequence
//!   shrinking toward the input measure.
//!
//! Every artifact is JSON (plus two-column `.dat` plot files), written
//! with sorted keys, explicit seeds, and the `"inf"` token for infinite
//! values, so identical configs reproduce byte-identical outputs.
//! `MMOT_WORKERS` caps campaign parallelism without affecting output.

use crate::analysis::{
    run_campaign, run_continuity_experiment, verify_instance, AnalysisError, CampaignConfig,
    VerifyOptions,
};
use crate::costs::{CostError, RepulsiveCost};
use crate::duality::{canonicalize, solve_dual, DualityError};
use crate::extreal::ExtReal;
use crate::measures::{DiscreteMeasure, MeasureError};
use crate::solver::{solve_entropic, solve_exact, SolveResult, SolverError, SolverOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config invalid: {0}")]
    Config(#[from] serde_json::Error),
    #[error("config field `measures` lists no sources")]
    NoMeasures,
    #[error("config field `cost.truncation` must be set for the dual task")]
    TruncationRequired,
    #[error("config field `measures` must be a generator spec for the campaign task")]
    CampaignNeedsGenerator,
    #[error("budget exceeded ({needed} variables > {budget}); lower `measures` size or switch `solver.method` to \"entropic\"")]
    Budget { needed: u128, budget: usize },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Solver(SolverError),
    #[error(transparent)]
    Duality(#[from] DualityError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::BudgetExceeded { needed, budget } => CliError::Budget { needed, budget },
            other => CliError::Solver(other),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Solve,
    Dual,
    Verify,
    Campaign,
    Continuity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Exact,
    Entropic,
}

/// Where the marginals come from: explicit files plus the marginal
/// count, or the seeded instance generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSource {
    Files { files: Vec<PathBuf>, n: usize },
    Generator { generator: GeneratorSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    /// Explicit seed; there is no wall-clock fallback.
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    /// Atom count; defaults to the generator's range for `n`.
    #[serde(default)]
    pub m: Option<usize>,
    /// How many instances (campaign size / solve batch).
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_count() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: SolveMode,
    pub budget: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub support_threshold: f64,
    pub probe_points: usize,
    pub probe_pairs: usize,
    pub continuity_terms: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolveMode::Exact,
            budget: 2_000_000,
            epsilon: 0.1,
            max_iters: 200_000,
            support_threshold: 1e-9,
            probe_points: 1000,
            probe_pairs: 200,
            continuity_terms: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub measures: MeasureSource,
    pub cost: RepulsiveCost,
    #[serde(default)]
    pub solver: SolverConfig,
    pub outputs: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Flag-level overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub task: Option<Task>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(task) = self.task {
            config.task = task;
        }
        if let Some(out) = &self.out {
            config.outputs.dir = out.clone();
        }
        if let Some(budget) = self.budget {
            config.solver.budget = budget;
        }
        if let Some(seed) = self.seed {
            if let MeasureSource::Generator { generator } = &mut config.measures {
                generator.seed = seed;
            }
        }
    }
}

/// Outcome of a run, mapped to the process exit code by the binary:
/// 0 when every pass-required check passed, 2 otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    AllPassed,
    ChecksFailed,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::AllPassed => 0,
            RunStatus::ChecksFailed => 2,
        }
    }
}

fn effective_seed(config: &ExperimentConfig) -> u64 {
    match &config.measures {
        MeasureSource::Generator { generator } => generator.seed,
        MeasureSource::Files { .. } => 0x6d6d6f74,
    }
}

fn load_measures(config: &ExperimentConfig) -> Result<(Vec<DiscreteMeasure>, usize), CliError> {
    match &config.measures {
        MeasureSource::Files { files, n } => {
            if files.is_empty() {
                return Err(CliError::NoMeasures);
            }
            let mut out = Vec::with_capacity(files.len());
            for path in files {
                let text = fs::read_to_string(path).map_err(|source| CliError::Read {
                    path: path.clone(),
                    source,
                })?;
                out.push(serde_json::from_str(&text)?);
            }
            Ok((out, *n))
        }
        MeasureSource::Generator { generator } => {
            let mut rng = ChaCha8Rng::seed_from_u64(generator.seed);
            let mut out = Vec::with_capacity(generator.count.max(1));
            for _ in 0..generator.count.max(1) {
                let measure = match generator.m {
                    Some(m) => crate::analysis::random_instance_sized(
                        &mut rng,
                        generator.d,
                        generator.n,
                        m,
                    )?,
                    None => crate::analysis::random_instance(&mut rng, generator.d, generator.n)?,
                };
                out.push(measure);
            }
            Ok((out, generator.n))
        }
    }
}

fn verify_options(config: &ExperimentConfig) -> VerifyOptions {
    VerifyOptions {
        solver: SolverOptions {
            budget: config.solver.budget,
            support_threshold: config.solver.support_threshold,
        },
        probe_points: config.solver.probe_points,
        probe_pairs: config.solver.probe_pairs,
        mass_threshold: config.solver.support_threshold,
        seed: effective_seed(config) ^ 0x5bd1e995,
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}

fn plan_json(result: &SolveResult, n: usize, measure: &DiscreteMeasure) -> serde_json::Value {
    let measure_json = serde_json::to_value(measure).expect("measure serializes");
    let entries: Vec<serde_json::Value> = result
        .plan
        .as_ref()
        .map(|plan| {
            plan.entries()
                .iter()
                .map(
                    |(indices, weight)| serde_json::json!({ "indices": indices, "weight": weight }),
                )
                .collect()
        })
        .unwrap_or_default();
    serde_json::json!({
        "n": n,
        "dimension": measure_json["dimension"],
        "atoms": measure_json["atoms"],
        "entries": entries,
        "value": result.value,
        "method": result.method,
        "residuals": result.diagnostics,
    })
}

/// Executes the configured task: computes, writes artifacts under the
/// output directory, prints a short summary per step, and reports
/// whether every pass-required check passed.
pub fn run(config: &ExperimentConfig) -> Result<RunStatus, CliError> {
    let dir = config.outputs.dir.clone();
    match config.task {
        Task::Solve => {
            let (measures, n) = load_measures(config)?;
            let options = SolverOptions {
                budget: config.solver.budget,
                support_threshold: config.solver.support_threshold,
            };
            for (k, measure) in measures.iter().enumerate() {
                let result = match config.solver.method {
                    SolveMode::Exact => solve_exact(measure, n, &config.cost, &options)?,
                    SolveMode::Entropic => solve_entropic(
                        measure,
                        n,
                        &config.cost,
                        config.solver.epsilon,
                        config.solver.max_iters,
                        &options,
                    )?,
                };
                let path = write_json(
                    &dir,
                    &format!("plan_{k:03}.json"),
                    &plan_json(&result, n, measure),
                )?;
                println!("solve[{k}]: value = {} -> {}", result.value, path.display());
            }
            Ok(RunStatus::AllPassed)
        }
        Task::Dual => {
            if !config.cost.is_truncated() {
                return Err(CliError::TruncationRequired);
            }
            let (measures, n) = load_measures(config)?;
            for (k, measure) in measures.iter().enumerate() {
                if !measure.has_small_concentration(n) {
                    println!(
                        "dual[{k}]: warning: largest atom mass {} is not below 1/(n(n-1)^2)",
                        measure.max_weight()
                    );
                }
                let dual = solve_dual(measure, n, &config.cost)?;
                let canonical = canonicalize(&dual.potential, &config.cost)?;
                let path = write_json(&dir, &format!("potential_{k:03}.json"), &canonical)?;
                println!(
                    "dual[{k}]: objective = {} (gap {:.3e}) -> {}",
                    canonical.objective(),
                    dual.gap,
                    path.display()
                );
            }
            Ok(RunStatus::AllPassed)
        }
        Task::Verify => {
            let (measures, n) = load_measures(config)?;
            let opts = verify_options(config);
            let mut reports = Vec::with_capacity(measures.len());
            let mut all_pass = true;
            for measure in &measures {
                let report = verify_instance(measure, n, &config.cost, &opts)?;
                all_pass &= report.all_pass();
                reports.push(report);
            }
            let path = write_json(&dir, "report.json", &reports)?;
            let mut scatter = String::new();
            for report in &reports {
                for check in &report.checks {
                    if let (ExtReal::Finite(c), ExtReal::Finite(m)) =
                        (check.claimed, check.measured)
                    {
                        scatter.push_str(&format!("{c} {m}\n"));
                    }
                }
            }
            write_text(&dir, "bound_scatter.dat", &scatter)?;
            for report in &reports {
                for check in &report.checks {
                    let verdict = match check.pass {
                        Some(true) => "pass",
                        Some(false) => "FAIL",
                        None => "skip",
                    };
                    println!(
                        "verify[{}] {:28} {} (margin {})",
                        report.instance.hash, check.name, verdict, check.margin
                    );
                }
            }
            println!("report -> {}", path.display());
            Ok(if all_pass {
                RunStatus::AllPassed
            } else {
                RunStatus::ChecksFailed
            })
        }
        Task::Campaign => {
            let generator = match &config.measures {
                MeasureSource::Generator { generator } => generator.clone(),
                MeasureSource::Files { .. } => return Err(CliError::CampaignNeedsGenerator),
            };
            let campaign = CampaignConfig {
                seed: generator.seed,
                instances: generator.count.max(1),
                dimensions: vec![generator.d],
                marginals: vec![generator.n],
                cost: config.cost.clone(),
                verify: verify_options(config),
                workers: workers_from_env(),
                continuity_terms: config.solver.continuity_terms,
                include_divergent_family: true,
            };
            let outcome = run_campaign(&campaign)?;
            let path = write_json(&dir, "report.json", &outcome.report)?;
            let mut continuity = String::new();
            for (k, v) in &outcome.continuity_plot {
                continuity.push_str(&format!("{k} {v}\n"));
            }
            write_text(&dir, "continuity.dat", &continuity)?;
            let mut scatter = String::new();
            for (c, m) in &outcome.scatter_plot {
                scatter.push_str(&format!("{c} {m}\n"));
            }
            write_text(&dir, "bound_scatter.dat", &scatter)?;
            for reproducer in &outcome.reproducers {
                write_json(
                    &dir.join("failures"),
                    &format!("instance_{}.json", reproducer.hash),
                    reproducer,
                )?;
            }
            let summary = &outcome.report.summary;
            println!(
                "campaign: {} passed, {} failed, {} skipped -> {}",
                summary.passed,
                summary.failed,
                summary.skipped,
                path.display()
            );
            Ok(if summary.failed == 0 {
                RunStatus::AllPassed
            } else {
                RunStatus::ChecksFailed
            })
        }
        Task::Continuity => {
            let (measures, n) = load_measures(config)?;
            let limit = measures.first().ok_or(CliError::NoMeasures)?;
            let mut rng = ChaCha8Rng::seed_from_u64(effective_seed(config) ^ 0xc0ffee);
            let terms = config.solver.continuity_terms.max(3);
            let sequence: Vec<DiscreteMeasure> = (1..=terms)
                .map(|k| {
                    crate::analysis::perturbed_weights(limit, n, 2e-3 / (k * k) as f64, &mut rng)
                })
                .collect::<Result<_, _>>()?;
            let report = run_continuity_experiment(
                &sequence,
                limit,
                n,
                &config.cost,
                1e-3,
                &verify_options(config),
            )?;
            let path = write_json(&dir, "continuity.json", &report)?;
            let mut rows = String::new();
            for (k, v) in report.values.iter().enumerate() {
                rows.push_str(&format!("{} {v}\n", k + 1));
            }
            write_text(&dir, "continuity.dat", &rows)?;
            println!(
                "continuity: limit value {}, tail pass {:?} -> {}",
                report.limit_value,
                report.tail_pass,
                path.display()
            );
            Ok(match report.tail_pass {
                Some(false) => RunStatus::ChecksFailed,
                _ => RunStatus::AllPassed,
            })
        }
    }
}

fn workers_from_env() -> usize {
    std::env::var("MMOT_WORKERS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&w| w >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get().min(4))
                .unwrap_or(1)
        })
}

/// Loads the config, applies overrides, runs, and maps the outcome to
/// the documented exit codes (0 pass, 1 error, 2 check failures).
pub fn run_cli(config_path: &Path, overrides: &Overrides) -> i32 {
    let mut config = match ExperimentConfig::from_path(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    overrides.apply(&mut config);
    match run(&config) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
