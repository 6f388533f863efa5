use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Array1;
use spdfp_cli::{synth_fused_lasso, SynthParams};
use spdfp_core::{
    make_batch_plan, pdfp_step, solver_rng, spdfp_step_alg1, spdfp_step_alg2, AdmmConfig,
    AdmmState, IterState, ProblemSpec, ProxSpec, ProximalMap, SolverConfig, StepSchedule,
    StocAdmm,
};

fn desk() -> (ProblemSpec, ProxSpec, SolverConfig) {
    let spec = synth_fused_lasso(&SynthParams::default()).unwrap().spec;
    let prox = ProxSpec::l1(spec.composite_weight()).unwrap();
    let lambda = 0.9 * SolverConfig::lambda_limit(spec.operator()).unwrap();
    let cfg = SolverConfig {
        schedule: StepSchedule::new(1.0, 1.0).unwrap(),
        lambda,
        batch_size: 100,
        seed: 0,
        max_epochs: 1,
        stop_tolerance: 0.0,
    };
    (spec, prox, cfg)
}

fn operators(c: &mut Criterion) {
    let (spec, _, _) = desk();
    let a = spec.dataset().samples();
    let b = spec.operator();
    let x = Array1::from_elem(spec.dim(), 0.5);
    let y = Array1::from_elem(b.n_rows(), 0.5);
    let mut group = c.benchmark_group("matvec");
    group.bench_function("samples", |bench| bench.iter(|| a.matvec(x.view()).unwrap()));
    group.bench_function("difference", |bench| bench.iter(|| b.matvec(x.view()).unwrap()));
    group.bench_function("difference_transpose", |bench| bench.iter(|| b.matvec_transpose(y.view()).unwrap()));
    group.finish();
}

fn prox(c: &mut Criterion) {
    let l1 = ProxSpec::l1(0.1).unwrap();
    let y = Array1::linspace(-2.0, 2.0, 1000);
    let mut group = c.benchmark_group("prox");
    group.bench_function("l1", |bench| bench.iter(|| l1.prox(0.3, y.view()).unwrap()));
    group.bench_function("l1_residual", |bench| bench.iter(|| l1.prox_residual(0.3, y.view()).unwrap()));
    group.finish();
}

fn steps(c: &mut Criterion) {
    let (spec, prox, cfg) = desk();
    let plan = make_batch_plan(spec.n_samples(), cfg.batch_size).unwrap();
    let start = IterState::zeros(&spec, cfg.schedule.gamma(1));
    let mut group = c.benchmark_group("step");

    let mut full = cfg;
    full.batch_size = spec.n_samples();
    group.bench_function("pdfp", |bench| bench.iter(|| pdfp_step(&spec, &prox, &full, &start).unwrap()));

    let mut rng = solver_rng(1);
    group.bench_function("spdfp_alg1", |bench| {
        bench.iter(|| spdfp_step_alg1(&spec, &prox, &cfg, &plan, &start, &mut rng).unwrap())
    });
    group.bench_function("spdfp_alg2", |bench| {
        bench.iter(|| spdfp_step_alg2(&spec, &prox, &cfg, &plan, &start, &mut rng).unwrap())
    });

    let admm_cfg = AdmmConfig::with_sqrt_decay(10.0, 0.2).unwrap();
    group.bench_function("stoc_admm", |bench| {
        bench.iter_batched(
            || (StocAdmm::new(&spec, admm_cfg), AdmmState::zeros(&spec)),
            |(mut admm, state)| admm.step(&spec, &prox, &plan, &state, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, operators, prox, steps);
criterion_main!(benches);
