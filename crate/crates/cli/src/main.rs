use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spdfp_cli::{
    prepare_problem, run_experiment, save_coordinate, save_libsvm, synth_fused_lasso,
    CliError, ExperimentConfig, SynthParams,
};
use spdfp_core::{check_recursion_bound, default_bound_grid};

#[derive(Parser)]
#[command(name = "spdfp", version, about = "Stochastic primal-dual fixed-point experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic fused-lasso instance as PREFIX.svm (data),
    /// PREFIX.coo (operator B) and PREFIX.x0 (generating coefficients)
    Synth {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        d: usize,
        #[arg(long, default_value_t = 0.05)]
        perturb_frac: f64,
        #[arg(long, default_value_t = 0.1)]
        noise_sd: f64,
        #[arg(long, default_value_t = 1.0)]
        perturb_sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the reference optimum of an experiment's problem
    Truth {
        #[arg(long)]
        config: PathBuf,
        /// Where to write the JSON (defaults to truth.cache)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment and write per-run and averaged CSVs
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the extremal recursion with its closed-form bound on the
    /// standard parameter grid
    BoundCheck {
        #[arg(long, default_value_t = 5000)]
        k_max: usize,
    },
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Synth {
            n,
            d,
            perturb_frac,
            noise_sd,
            perturb_sd,
            seed,
            out,
        } => {
            let params = SynthParams {
                n,
                d,
                perturb_frac,
                noise_sd,
                perturb_sd,
                seed,
                ..SynthParams::default()
            };
            let problem = synth_fused_lasso(&params)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.into(), source: e })?;
            }
            let data = with_suffix(&out, ".svm");
            let op = with_suffix(&out, ".coo");
            let x0 = with_suffix(&out, ".x0");
            save_libsvm(problem.spec.dataset(), &data)?;
            save_coordinate(problem.spec.operator(), &op)?;
            let x0_text: String = problem.x0.iter().map(|v| format!("{v}\n")).collect();
            fs::write(&x0, x0_text).map_err(|e| CliError::Io { path: x0.clone(), source: e })?;
            println!("wrote {}, {}, {}", data.display(), op.display(), x0.display());
        }
        Command::Truth { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                cfg.truth.cache = Some(out);
            }
            let problem = prepare_problem(&cfg)?;
            for f in &problem.skipped_features {
                eprintln!("warning: feature {} is constant and was left out of the graph", f + 1);
            }
            let t = &problem.truth;
            println!(
                "objective {:.12e}  residual {:.3e}  iterations {}  gamma {}  lambda {}",
                t.objective, t.residual, t.iterations, t.gamma, t.lambda
            );
            if let Some(path) = &cfg.truth.cache {
                println!("cached at {}", path.display());
            }
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_experiment(&cfg)?;
            println!(
                "{} rows -> {}\n{} rows -> {}",
                out.rows.len(),
                out.rows_path.display(),
                out.aggregate.len(),
                out.aggregate_path.display()
            );
        }
        Command::BoundCheck { k_max } => {
            let mut failed = 0;
            println!("alpha      c    tau  s_init  k0  checked  violations  worst_ratio  at_k");
            for params in default_bound_grid() {
                let check = check_recursion_bound(&params, k_max)?;
                println!(
                    "{:5} {:6} {:6} {:7} {:3} {:8} {:11} {:12.6} {:5}",
                    params.alpha(),
                    params.c(),
                    params.tau(),
                    params.s_init(),
                    params.k0(),
                    check.checked,
                    check.violations,
                    check.worst_ratio,
                    check.worst_k
                );
                if !check.passed() {
                    failed += 1;
                }
            }
            if failed > 0 {
                println!("{failed} grid points violate the bound");
                return Ok(ExitCode::from(1));
            }
            println!("all grid points satisfy the bound");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
