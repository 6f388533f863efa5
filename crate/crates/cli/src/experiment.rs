use std::fs::{self, File};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::Serialize;
use spdfp_core::{
    stack_identity, AdmmConfig, ProblemSpec, ProxSpec, Run, RunRecord, SolverConfig, SolverKind,
    SparseMatrix, StepSchedule,
};

use crate::config::{ExperimentConfig, GraphSource, LambdaSetting, ProblemSource, SolverEntry};
use crate::error::{CliError, Result};
use crate::graph::{build_graph_matrix, load_coordinate};
use crate::libsvm::load_libsvm;
use crate::synth::synth_fused_lasso;
use crate::truth::{cached_ground_truth, pdfp_config, GroundTruth};

/// A problem instance with its reference optimum.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    pub spec: ProblemSpec,
    pub prox: ProxSpec,
    /// `1/ρ_max(BBᵀ)`
    pub lambda_limit: f64,
    pub truth: GroundTruth,
    /// Constant features left out of a correlation graph.
    pub skipped_features: Vec<usize>,
}

pub fn build_spec(cfg: &ExperimentConfig) -> Result<(ProblemSpec, Vec<usize>)> {
    match &cfg.problem {
        ProblemSource::Synthetic(params) => Ok((synth_fused_lasso(params)?.spec, Vec::new())),
        ProblemSource::Libsvm(data) => {
            let mut dataset = load_libsvm(&data.path, data.n_features)?;
            if let Some(positive) = data.positive_label {
                dataset = dataset.with_binary_labels(positive);
            }
            let d = dataset.n_features();
            let (g, skipped) = match &data.graph {
                GraphSource::Threshold(t) => {
                    let built = build_graph_matrix(&dataset, *t)?;
                    (built.matrix, built.skipped_features)
                }
                GraphSource::File(path) => (load_coordinate(path, Some(d))?, Vec::new()),
                GraphSource::Empty => (SparseMatrix::zeros(0, d), Vec::new()),
            };
            let b = if data.stack_identity { stack_identity(&g)? } else { g };
            let spec = ProblemSpec::new(data.loss, dataset, cfg.l2_weight, cfg.composite_weight, b)?;
            Ok((spec, skipped))
        }
    }
}

pub fn prepare_problem(cfg: &ExperimentConfig) -> Result<PreparedProblem> {
    let (spec, skipped_features) = build_spec(cfg)?;
    let prox = ProxSpec::l1(spec.composite_weight())?;
    let t = &cfg.truth;
    let truth_cfg = pdfp_config(&spec, t.gamma, t.gamma_scale, t.lambda_frac, t.iterations, t.tolerance)?;
    let truth = cached_ground_truth(&spec, &prox, &truth_cfg, t.iterations, t.cache.as_deref())?;
    let lambda_limit = SolverConfig::lambda_limit(spec.operator())?;
    Ok(PreparedProblem {
        spec,
        prox,
        lambda_limit,
        truth,
        skipped_features,
    })
}

/// Per-repetition seeds drawn from a generator seeded with `master`. Every
/// solver sees the same seed for a given repetition.
pub fn repetition_seeds(master: u64, repetitions: usize) -> Vec<u64> {
    let mut rng = Pcg64::seed_from_u64(master);
    (0..repetitions).map(|_| rng.next_u64()).collect()
}

pub fn solver_config(
    entry: &SolverEntry,
    spec: &ProblemSpec,
    lambda_limit: f64,
    seed: u64,
    epochs: usize,
) -> Result<SolverConfig> {
    let lambda = match entry.lambda {
        LambdaSetting::Absolute(l) => l,
        LambdaSetting::Fraction(f) if lambda_limit.is_finite() => f * lambda_limit,
        LambdaSetting::Fraction(_) => 1.0,
    };
    let batch_size = match entry.kind {
        SolverKind::Pdfp => spec.n_samples(),
        _ => entry.batch.unwrap_or(spec.n_samples()),
    };
    if batch_size > spec.n_samples() {
        return Err(CliError::config(
            format!("solver.{}.batch", entry.label),
            format!("exceeds the sample count {}", spec.n_samples()),
        ));
    }
    let schedule = match entry.kind {
        SolverKind::StocAdmm => StepSchedule::new(entry.zeta_c, entry.alpha)?,
        _ => StepSchedule::new(entry.c, entry.alpha)?,
    };
    Ok(SolverConfig {
        schedule,
        lambda,
        batch_size,
        seed,
        max_epochs: epochs,
        stop_tolerance: 0.0,
    })
}

/// One CSV row: a [`RunRecord`] plus the solver's hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub solver: String,
    pub kind: &'static str,
    pub repetition: usize,
    pub seed: u64,
    pub epoch: usize,
    pub iteration: usize,
    pub wall_time: f64,
    pub objective: f64,
    pub rel_objective_error: Option<f64>,
    pub iterate_error: Option<f64>,
    pub joint_error: Option<f64>,
    pub c: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub batch_size: usize,
}

/// Per-epoch means across repetitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub solver: String,
    pub kind: &'static str,
    pub epoch: usize,
    pub iteration: usize,
    pub repetitions: usize,
    pub wall_time: f64,
    pub objective: f64,
    pub rel_objective_error: Option<f64>,
    pub iterate_error: Option<f64>,
    pub joint_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ExperimentRow>,
    pub aggregate: Vec<AggregateRow>,
    pub rows_path: PathBuf,
    pub aggregate_path: PathBuf,
}

pub fn run_entry(
    problem: &PreparedProblem,
    entry: &SolverEntry,
    repetition: usize,
    seed: u64,
    epochs: usize,
) -> Result<Vec<ExperimentRow>> {
    let spec = &problem.spec;
    let cfg = solver_config(entry, spec, problem.lambda_limit, seed, epochs)?;
    let reference = problem.truth.reference();
    let mut run = Run::new(entry.kind, spec, &problem.prox, &cfg).reference(&reference);
    if entry.kind == SolverKind::StocAdmm {
        run = run.admm(AdmmConfig::new(entry.beta, cfg.schedule)?);
    }
    let out = run.execute()?;
    let to_row = |r: &RunRecord| ExperimentRow {
        solver: entry.label.clone(),
        kind: entry.kind.name(),
        repetition,
        seed,
        epoch: r.epoch,
        iteration: r.iteration,
        wall_time: r.wall_time,
        objective: r.objective,
        rel_objective_error: r.rel_objective_error,
        iterate_error: r.iterate_error,
        joint_error: r.joint_error,
        c: entry.c,
        alpha: entry.alpha,
        lambda: cfg.lambda,
        batch_size: cfg.batch_size,
    };
    Ok(out.records.iter().map(to_row).collect())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

fn mean_opt<'a>(rows: &'a [&'a ExperimentRow], f: impl Fn(&ExperimentRow) -> Option<f64>) -> Option<f64> {
    let vals: Option<Vec<f64>> = rows.iter().map(|r| f(r)).collect();
    vals.map(|v| mean(v.into_iter()))
}

/// Groups rows by (solver, epoch) in first-seen order and averages them.
pub fn aggregate(rows: &[ExperimentRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(&str, usize)> = Vec::new();
    for r in rows {
        let key = (r.solver.as_str(), r.epoch);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(solver, epoch)| {
            let group: Vec<&ExperimentRow> =
                rows.iter().filter(|r| r.solver == solver && r.epoch == epoch).collect();
            AggregateRow {
                solver: solver.to_string(),
                kind: group[0].kind,
                epoch,
                iteration: group[0].iteration,
                repetitions: group.len(),
                wall_time: mean(group.iter().map(|r| r.wall_time)),
                objective: mean(group.iter().map(|r| r.objective)),
                rel_objective_error: mean_opt(&group, |r| r.rel_objective_error),
                iterate_error: mean_opt(&group, |r| r.iterate_error),
                joint_error: mean_opt(&group, |r| r.joint_error),
            }
        })
        .collect()
}

/// `runs/sweep.csv` → `runs/sweep_mean.csv`
pub fn aggregate_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
    output.with_file_name(format!("{stem}_mean.csv"))
}

pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Runs every (solver, repetition) pair of `cfg` on `problem`. Runs execute
/// in parallel; rows come back ordered by solver, repetition and epoch.
pub fn run_prepared(cfg: &ExperimentConfig, problem: &PreparedProblem) -> Result<Vec<ExperimentRow>> {
    let seeds = repetition_seeds(cfg.master_seed, cfg.repetitions);
    let jobs: Vec<(&SolverEntry, usize, u64)> = cfg
        .solvers
        .iter()
        .flat_map(|e| seeds.iter().enumerate().map(move |(r, &s)| (e, r, s)))
        .collect();
    let per_job: Vec<Result<Vec<ExperimentRow>>> = jobs
        .par_iter()
        .map(|&(entry, rep, seed)| run_entry(problem, entry, rep, seed, cfg.epochs))
        .collect();
    let mut rows = Vec::new();
    for job in per_job {
        rows.extend(job?);
    }
    Ok(rows)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let problem = prepare_problem(cfg)?;
    let rows = run_prepared(cfg, &problem)?;
    let aggregate = aggregate(&rows);
    let aggregate_path = aggregate_path(&cfg.output);
    write_csv(&rows, &cfg.output)?;
    write_csv(&aggregate, &aggregate_path)?;
    Ok(ExperimentOutput {
        rows,
        aggregate,
        rows_path: cfg.output.clone(),
        aggregate_path,
    })
}
