//! Reference optima from long PDFP runs, cached as JSON.

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use spdfp_core::{
    fixed_point_residual, largest_gram_eigenvalue, Loss, ProblemSpec, ProximalMap, Reference, Run,
    SolverConfig, SolverKind, StepSchedule,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub x: Vec<f64>,
    /// Dual on the subgradient scale.
    pub v: Vec<f64>,
    pub objective: f64,
    /// PDFP fixed-point residual at `(x, v)`, the quality certificate.
    pub residual: f64,
    pub iterations: usize,
    pub gamma: f64,
    pub lambda: f64,
    /// Hash of the problem and settings the truth was computed for.
    pub fingerprint: u64,
}

impl GroundTruth {
    pub fn reference(&self) -> Reference {
        Reference {
            x: Array1::from(self.x.clone()),
            v: Array1::from(self.v.clone()),
            objective: self.objective,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Lipschitz constant of `∇f2` for square and logistic losses:
/// `ρ_max(AᵀA)/n` (a quarter of that for logistic) plus `ν`.
pub fn smooth_lipschitz(spec: &ProblemSpec) -> Result<f64> {
    let (rho, _) = largest_gram_eigenvalue(spec.dataset().samples(), 1e-10, 100_000)?;
    let data = rho / spec.n_samples() as f64;
    let scale = match spec.loss() {
        Loss::Square => 1.0,
        Loss::Logistic => 0.25,
        Loss::Hinge => {
            return Err(spdfp_core::Error::Unsupported(
                "hinge loss has no Lipschitz gradient; set the PDFP step explicitly".into(),
            )
            .into())
        }
    };
    Ok(scale * data + spec.l2_weight())
}

/// PDFP settings with `γ = gamma_scale / L` and `λ = lambda_frac / ρ_max(BBᵀ)`.
pub fn pdfp_config(
    spec: &ProblemSpec,
    gamma: Option<f64>,
    gamma_scale: f64,
    lambda_frac: f64,
    max_epochs: usize,
    stop_tolerance: f64,
) -> Result<SolverConfig> {
    if !(lambda_frac > 0.0 && lambda_frac < 1.0) {
        return Err(CliError::config(
            "truth.lambda_frac",
            format!("must lie in (0, 1), got {lambda_frac}"),
        ));
    }
    let gamma = match gamma {
        Some(g) => g,
        None => gamma_scale / smooth_lipschitz(spec)?,
    };
    let limit = SolverConfig::lambda_limit(spec.operator())?;
    let lambda = if limit.is_finite() { lambda_frac * limit } else { 1.0 };
    Ok(SolverConfig {
        schedule: StepSchedule::new(gamma, 1.0)?,
        lambda,
        batch_size: spec.n_samples(),
        seed: 0,
        max_epochs,
        stop_tolerance,
    })
}

/// Runs PDFP for up to `iters` iterations (stopping earlier once the
/// fixed-point residual reaches `cfg.stop_tolerance`).
pub fn compute_ground_truth<P: ProximalMap + ?Sized>(
    spec: &ProblemSpec,
    prox: &P,
    cfg: &SolverConfig,
    iters: usize,
) -> Result<GroundTruth> {
    let cfg = SolverConfig {
        max_epochs: iters,
        ..*cfg
    };
    let out = Run::new(SolverKind::Pdfp, spec, prox, &cfg).execute()?;
    let gamma = cfg.schedule.c();
    let residual = match out.fixed_point_residual {
        Some(r) => r,
        None => fixed_point_residual(
            spec,
            prox,
            gamma,
            cfg.lambda,
            out.x.view(),
            out.native_dual.view(),
        )?,
    };
    let objective = spec.objective_value(out.x.view())?;
    Ok(GroundTruth {
        x: out.x.to_vec(),
        v: out.dual.to_vec(),
        objective,
        residual,
        iterations: out.records.last().map_or(0, |r| r.iteration - 1),
        gamma,
        lambda: cfg.lambda,
        fingerprint: fingerprint(spec, &cfg, iters),
    })
}

/// Loads the cached truth when its fingerprint matches, otherwise computes
/// and stores it.
pub fn cached_ground_truth<P: ProximalMap + ?Sized>(
    spec: &ProblemSpec,
    prox: &P,
    cfg: &SolverConfig,
    iters: usize,
    cache: Option<&Path>,
) -> Result<GroundTruth> {
    let expected = fingerprint(spec, cfg, iters);
    if let Some(path) = cache {
        if path.exists() {
            if let Ok(truth) = GroundTruth::load(path) {
                if truth.fingerprint == expected {
                    return Ok(truth);
                }
            }
        }
    }
    let truth = compute_ground_truth(spec, prox, cfg, iters)?;
    if let Some(path) = cache {
        truth.save(path)?;
    }
    Ok(truth)
}

fn fingerprint(spec: &ProblemSpec, cfg: &SolverConfig, iters: usize) -> u64 {
    let mut h = DefaultHasher::new();
    spec.loss().to_string().hash(&mut h);
    for v in [spec.l2_weight(), spec.composite_weight(), cfg.schedule.c(), cfg.lambda, cfg.stop_tolerance] {
        v.to_bits().hash(&mut h);
    }
    iters.hash(&mut h);
    for m in [spec.dataset().samples(), spec.operator()] {
        (m.n_rows(), m.n_cols()).hash(&mut h);
        for (r, c, v) in m.triplets() {
            (r, c, v.to_bits()).hash(&mut h);
        }
    }
    for b in spec.dataset().labels() {
        b.to_bits().hash(&mut h);
    }
    h.finish()
}
