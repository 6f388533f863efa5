use std::time::Instant;

use ndarray::{Array1, ArrayView1};

use super::{
    fixed_point_residual, pdfp_dual_to_subgradient, pdfp_step, solver_rng, spdfp_step_alg1,
    spdfp_step_alg2, AdmmConfig, AdmmState, IterState, SolverConfig, SolverKind, StocAdmm,
};
use crate::error::{check_len, Error, Result};
use crate::grad::BatchPlan;
use crate::problem::ProblemSpec;
use crate::prox::ProximalMap;

/// Reference optimum used to score a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x: Array1<f64>,
    /// Dual on the subgradient scale, `v* ∈ ∂f1(Bx*)`.
    pub v: Array1<f64>,
    pub objective: f64,
}

impl Reference {
    /// `(F(x) - F*) / max(|F*|, 1e-12)`
    pub fn relative_objective_error(&self, objective: f64) -> f64 {
        (objective - self.objective) / self.objective.abs().max(1e-12)
    }
}

/// One row of a solver trace, emitted after every epoch (and once for the
/// initial point at epoch 0).
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub solver: SolverKind,
    pub seed: u64,
    pub epoch: usize,
    /// Index `k` of the iterate `x_k` the record describes.
    pub iteration: usize,
    /// Cumulative time spent stepping, in seconds.
    pub wall_time: f64,
    pub objective: f64,
    pub rel_objective_error: Option<f64>,
    /// `‖x_k - x*‖²`
    pub iterate_error: Option<f64>,
    /// `‖x_k - x*‖² + (γ_k²/λ)‖v_k - v*‖²` for a single run.
    pub joint_error: Option<f64>,
}

impl RunRecord {
    /// Same record with the timing column cleared, for replay comparisons.
    pub fn without_timing(&self) -> RunRecord {
        RunRecord {
            wall_time: 0.0,
            ..self.clone()
        }
    }
}

/// Iterate snapshot handed to the per-epoch observer.
#[derive(Debug, Clone, Copy)]
pub struct EpochView<'a> {
    pub epoch: usize,
    pub iteration: usize,
    pub x: ArrayView1<'a, f64>,
    /// Dual on the subgradient scale.
    pub dual: ArrayView1<'a, f64>,
    /// `γ_k` for primal-dual runs; `ζ` for ADMM.
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub x: Array1<f64>,
    /// Final dual on the subgradient scale.
    pub dual: Array1<f64>,
    /// Solver-native dual (PDFP scale for PDFP, the multiplier for ADMM).
    pub native_dual: Array1<f64>,
    /// Last PDFP fixed-point residual, when it was evaluated.
    pub fixed_point_residual: Option<f64>,
    pub stopped_early: bool,
}

/// A configured solver run.
pub struct Run<'a, P: ?Sized> {
    kind: SolverKind,
    spec: &'a ProblemSpec,
    prox: &'a P,
    config: &'a SolverConfig,
    admm: Option<AdmmConfig>,
    reference: Option<&'a Reference>,
    initial: Option<(Array1<f64>, Array1<f64>)>,
}

impl<'a, P: ProximalMap + ?Sized> Run<'a, P> {
    pub fn new(
        kind: SolverKind,
        spec: &'a ProblemSpec,
        prox: &'a P,
        config: &'a SolverConfig,
    ) -> Self {
        Run {
            kind,
            spec,
            prox,
            config,
            admm: None,
            reference: None,
            initial: None,
        }
    }

    pub fn admm(mut self, admm: AdmmConfig) -> Self {
        self.admm = Some(admm);
        self
    }

    pub fn reference(mut self, reference: &'a Reference) -> Self {
        self.reference = Some(reference);
        self
    }

    /// Overrides `x₁ = 0, v₁ = 0`. For ADMM the dual seeds the multiplier.
    pub fn initial(mut self, x: Array1<f64>, v: Array1<f64>) -> Self {
        self.initial = Some((x, v));
        self
    }

    pub fn execute(self) -> Result<RunOutput> {
        self.execute_with(|_| {})
    }

    pub fn execute_with<F>(self, mut observer: F) -> Result<RunOutput>
    where
        F: FnMut(&EpochView<'_>),
    {
        let spec = self.spec;
        let cfg = self.config;
        if self.kind != SolverKind::StocAdmm {
            cfg.validate(spec)?;
        } else if cfg.batch_size == 0 || cfg.batch_size > spec.n_samples() {
            return Err(Error::InvalidArgument(format!(
                "batch size must lie in 1..={}, got {}",
                spec.n_samples(),
                cfg.batch_size
            )));
        }
        if let Some(r) = self.reference {
            check_len("reference primal", spec.dim(), r.x.len())?;
            check_len("reference dual", spec.operator().n_rows(), r.v.len())?;
        }
        match self.kind {
            SolverKind::StocAdmm => self.run_admm(&mut observer),
            _ => self.run_primal_dual(&mut observer),
        }
    }

    fn record(
        &self,
        epoch: usize,
        iteration: usize,
        wall_time: f64,
        x: ArrayView1<'_, f64>,
        dual: Option<(ArrayView1<'_, f64>, f64)>,
    ) -> Result<RunRecord> {
        let objective = self.spec.objective_value(x)?;
        let mut rec = RunRecord {
            solver: self.kind,
            seed: self.config.seed,
            epoch,
            iteration,
            wall_time,
            objective,
            rel_objective_error: None,
            iterate_error: None,
            joint_error: None,
        };
        if let Some(r) = self.reference {
            let dx = &x - &r.x;
            let ex = dx.dot(&dx);
            rec.rel_objective_error = Some(r.relative_objective_error(objective));
            rec.iterate_error = Some(ex);
            if let Some((v, gamma)) = dual {
                let dv = &v - &r.v;
                rec.joint_error = Some(ex + gamma * gamma / self.config.lambda * dv.dot(&dv));
            }
        }
        Ok(rec)
    }

    /// Subgradient-scale dual of a primal-dual state.
    fn subgradient_dual(&self, state: &IterState) -> Array1<f64> {
        let lambda = self.config.lambda;
        let schedule = &self.config.schedule;
        match self.kind {
            SolverKind::Pdfp => pdfp_dual_to_subgradient(state.v.view(), schedule.c(), lambda),
            SolverKind::Spdfp2 if state.k >= 2 => &state.v * (lambda / schedule.gamma(state.k - 1)),
            _ => state.v.clone(),
        }
    }

    fn run_primal_dual(self, observer: &mut dyn FnMut(&EpochView<'_>)) -> Result<RunOutput> {
        let spec = self.spec;
        let cfg = self.config;
        let stochastic = self.kind.is_stochastic();
        let gamma_of = |k: usize| {
            if stochastic {
                cfg.schedule.gamma(k)
            } else {
                cfg.schedule.c()
            }
        };

        let mut state = IterState::zeros(spec, gamma_of(1));
        if let Some((x, v)) = &self.initial {
            state.x = x.clone();
            state.v = v.clone();
        }
        let plan = BatchPlan::new(spec.n_samples(), cfg.batch_size)?;
        let steps_per_epoch = if stochastic { plan.len() } else { 1 };
        let mut rng = solver_rng(cfg.seed);

        let mut records = Vec::with_capacity(cfg.max_epochs + 1);
        let mut wall = 0.0;
        let mut residual = None;
        let mut stopped_early = false;

        let mut emit = |this: &Self, epoch: usize, wall: f64, state: &IterState| -> Result<RunRecord> {
            let dual = this.subgradient_dual(state);
            let view = EpochView {
                epoch,
                iteration: state.k,
                x: state.x.view(),
                dual: dual.view(),
                gamma: state.gamma,
            };
            observer(&view);
            this.record(epoch, state.k, wall, state.x.view(), Some((dual.view(), state.gamma)))
        };

        records.push(emit(&self, 0, wall, &state)?);
        for epoch in 1..=cfg.max_epochs {
            let start = Instant::now();
            for _ in 0..steps_per_epoch {
                state = match self.kind {
                    SolverKind::Pdfp => pdfp_step(spec, self.prox, cfg, &state)?,
                    SolverKind::Spdfp1 => {
                        spdfp_step_alg1(spec, self.prox, cfg, &plan, &state, &mut rng)?
                    }
                    SolverKind::Spdfp2 => {
                        spdfp_step_alg2(spec, self.prox, cfg, &plan, &state, &mut rng)?
                    }
                    SolverKind::StocAdmm => unreachable!("ADMM runs through run_admm"),
                };
            }
            wall += start.elapsed().as_secs_f64();
            records.push(emit(&self, epoch, wall, &state)?);

            if self.kind == SolverKind::Pdfp && cfg.stop_tolerance > 0.0 {
                let r = fixed_point_residual(
                    spec,
                    self.prox,
                    cfg.schedule.c(),
                    cfg.lambda,
                    state.x.view(),
                    state.v.view(),
                )?;
                residual = Some(r);
                if r <= cfg.stop_tolerance {
                    stopped_early = epoch < cfg.max_epochs;
                    break;
                }
            }
        }

        let dual = self.subgradient_dual(&state);
        Ok(RunOutput {
            records,
            x: state.x,
            dual,
            native_dual: state.v,
            fixed_point_residual: residual,
            stopped_early,
        })
    }

    fn run_admm(self, observer: &mut dyn FnMut(&EpochView<'_>)) -> Result<RunOutput> {
        let spec = self.spec;
        let cfg = self.config;
        let admm_cfg = self.admm.ok_or_else(|| {
            Error::InvalidArgument("stochastic ADMM needs an AdmmConfig".into())
        })?;
        let mut solver = StocAdmm::new(spec, admm_cfg);
        let mut state = AdmmState::zeros(spec);
        if let Some((x, v)) = &self.initial {
            check_len("initial primal", spec.dim(), x.len())?;
            check_len("initial multiplier", spec.operator().n_rows(), v.len())?;
            state.x = x.clone();
            state.y = spec.operator().matvec(x.view())?;
            state.multiplier = v.clone();
        }
        let plan = BatchPlan::new(spec.n_samples(), cfg.batch_size)?;
        let mut rng = solver_rng(cfg.seed);

        let mut records = Vec::with_capacity(cfg.max_epochs + 1);
        let mut wall = 0.0;
        let mut emit = |this: &Self, epoch: usize, wall: f64, state: &AdmmState| -> Result<RunRecord> {
            // the multiplier converges to -v*
            let dual = -&state.multiplier;
            observer(&EpochView {
                epoch,
                iteration: state.k,
                x: state.x.view(),
                dual: dual.view(),
                gamma: admm_cfg.zeta_schedule.gamma(state.k),
            });
            this.record(epoch, state.k, wall, state.x.view(), None)
        };

        records.push(emit(&self, 0, wall, &state)?);
        for epoch in 1..=cfg.max_epochs {
            let start = Instant::now();
            for _ in 0..plan.len() {
                state = solver.step(spec, self.prox, &plan, &state, &mut rng)?;
            }
            wall += start.elapsed().as_secs_f64();
            records.push(emit(&self, epoch, wall, &state)?);
        }

        Ok(RunOutput {
            records,
            dual: -&state.multiplier,
            x: state.x,
            native_dual: state.multiplier,
            fixed_point_residual: None,
            stopped_early: false,
        })
    }
}

/// Runs `kind` from zero initial iterates without a reference optimum.
pub fn run_solver<P: ProximalMap + ?Sized>(
    kind: SolverKind,
    spec: &ProblemSpec,
    prox: &P,
    cfg: &SolverConfig,
    admm: Option<AdmmConfig>,
) -> Result<RunOutput> {
    let mut run = Run::new(kind, spec, prox, cfg);
    if let Some(a) = admm {
        run = run.admm(a);
    }
    run.execute()
}
