//! Flat `key = value` experiment files. Keys mirror the field paths of
//! [`ExperimentConfig`]; solvers are declared as
//! `solver.<label> = kind=spdfp2 c=2 alpha=0.7 lambda_frac=0.9 batch=100`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use spdfp_core::{Loss, SolverKind};

use crate::error::{CliError, Result};
use crate::synth::SynthParams;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Synthetic(SynthParams),
    Libsvm(DataSettings),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSettings {
    pub path: PathBuf,
    pub loss: Loss,
    pub n_features: Option<usize>,
    /// Labels equal to this value map to +1, all others to -1.
    pub positive_label: Option<f64>,
    pub graph: GraphSource,
    /// Use `[G; I]` instead of `G`.
    pub stack_identity: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Threshold(f64),
    File(PathBuf),
    /// No graph rows; with `stack_identity` this gives `B = I`.
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSetting {
    Absolute(f64),
    /// Fraction of `1/ρ_max(BBᵀ)`.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverEntry {
    pub label: String,
    pub kind: SolverKind,
    pub c: f64,
    /// Step exponent; for STOC-ADMM the exponent of the ζ schedule.
    pub alpha: f64,
    pub lambda: LambdaSetting,
    /// `None` means the full sample count.
    pub batch: Option<usize>,
    /// STOC-ADMM penalty `β̃`.
    pub beta: f64,
    /// STOC-ADMM schedule constant, `ζ_{k+1} = zeta_c / k^alpha`.
    pub zeta_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSettings {
    pub iterations: usize,
    /// Absolute PDFP step; when absent `gamma_scale / L` is used.
    pub gamma: Option<f64>,
    pub gamma_scale: f64,
    pub lambda_frac: f64,
    pub tolerance: f64,
    pub cache: Option<PathBuf>,
}

impl Default for TruthSettings {
    fn default() -> Self {
        TruthSettings {
            iterations: 3000,
            gamma: None,
            gamma_scale: 0.3,
            lambda_frac: 0.9,
            tolerance: 0.0,
            cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    pub l2_weight: f64,
    pub composite_weight: f64,
    pub solvers: Vec<SolverEntry>,
    pub repetitions: usize,
    pub epochs: usize,
    pub master_seed: u64,
    pub output: PathBuf,
    pub truth: TruthSettings,
}

fn parse_value<T: FromStr>(field: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| CliError::config(field, format!("cannot parse `{raw}`")))
}

fn parse_bool(field: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::config(field, format!("expected true or false, got `{raw}`"))),
    }
}

fn parse_solver(label: &str, raw: &str) -> Result<SolverEntry> {
    let field = format!("solver.{label}");
    let mut kind = None;
    let mut alpha_given = false;
    let mut entry = SolverEntry {
        label: label.to_string(),
        kind: SolverKind::Spdfp2,
        c: 1.0,
        alpha: 1.0,
        lambda: LambdaSetting::Fraction(0.9),
        batch: None,
        beta: 1.0,
        zeta_c: 1.0,
    };
    for item in raw.split_whitespace() {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::config(&field, format!("expected key=value, got `{item}`")))?;
        let sub = format!("{field}.{key}");
        match key {
            "kind" => kind = Some(parse_value::<SolverKind>(&sub, value).map_err(|_| {
                CliError::config(&sub, format!("unknown solver kind `{value}`"))
            })?),
            "c" => entry.c = parse_value(&sub, value)?,
            "alpha" => {
                entry.alpha = parse_value(&sub, value)?;
                alpha_given = true;
            }
            "lambda" => entry.lambda = LambdaSetting::Absolute(parse_value(&sub, value)?),
            "lambda_frac" => entry.lambda = LambdaSetting::Fraction(parse_value(&sub, value)?),
            "batch" => entry.batch = Some(parse_value(&sub, value)?),
            "beta" => entry.beta = parse_value(&sub, value)?,
            "zeta_c" => entry.zeta_c = parse_value(&sub, value)?,
            _ => return Err(CliError::config(&sub, "unknown solver setting")),
        }
    }
    entry.kind = kind.ok_or_else(|| CliError::config(&field, "missing kind="))?;
    if entry.kind == SolverKind::StocAdmm && !alpha_given {
        // ζ_{k+1} = c/√k
        entry.alpha = 0.5;
    }
    if !(entry.c > 0.0) {
        return Err(CliError::config(format!("{field}.c"), "must be positive"));
    }
    if !(entry.alpha > 0.0 && entry.alpha <= 1.0) {
        return Err(CliError::config(format!("{field}.alpha"), "must lie in (0, 1]"));
    }
    match entry.lambda {
        LambdaSetting::Absolute(l) if !(l > 0.0) => {
            return Err(CliError::config(format!("{field}.lambda"), "must be positive"))
        }
        LambdaSetting::Fraction(f) if !(f > 0.0 && f < 1.0) => {
            return Err(CliError::config(format!("{field}.lambda_frac"), "must lie in (0, 1)"))
        }
        _ => {}
    }
    if entry.batch == Some(0) {
        return Err(CliError::config(format!("{field}.batch"), "must be at least 1"));
    }
    Ok(entry)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: BTreeMap<String, String> = BTreeMap::new();
        let mut solvers = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Parse {
                source_name: "config".into(),
                line: line_no + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(label) = key.strip_prefix("solver.") {
                if solvers.iter().any(|s: &SolverEntry| s.label == label) {
                    return Err(CliError::config(key, "solver label declared twice"));
                }
                solvers.push(parse_solver(label, value)?);
            } else if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::config(key, "key given twice"));
            }
        }

        let mut take = |key: &str| values.remove(key);
        fn num<T: FromStr>(key: &str, raw: Option<String>, default: T) -> Result<T> {
            raw.map_or(Ok(default), |r| parse_value(key, &r))
        }

        let l2_weight: f64 = num("l2_weight", take("l2_weight"), 0.0)?;
        let composite_weight: f64 = num("composite_weight", take("composite_weight"), 0.1)?;
        let master_seed: u64 = num("master_seed", take("master_seed"), 0)?;

        let problem = match take("problem").as_deref().unwrap_or("synthetic") {
            "synthetic" => {
                let base = SynthParams::default();
                ProblemSource::Synthetic(SynthParams {
                    n: num("synth.n", take("synth.n"), base.n)?,
                    d: num("synth.d", take("synth.d"), base.d)?,
                    perturb_frac: num("synth.perturb_frac", take("synth.perturb_frac"), base.perturb_frac)?,
                    noise_sd: num("synth.noise_sd", take("synth.noise_sd"), base.noise_sd)?,
                    perturb_sd: num("synth.perturb_sd", take("synth.perturb_sd"), base.perturb_sd)?,
                    composite_weight,
                    l2_weight,
                    seed: num("synth.seed", take("synth.seed"), master_seed)?,
                })
            }
            "libsvm" => {
                let path = take("data.path").ok_or_else(|| CliError::config("data.path", "required for problem = libsvm"))?;
                let loss = match take("data.loss") {
                    Some(raw) => raw
                        .parse::<Loss>()
                        .map_err(|_| CliError::config("data.loss", format!("unknown loss `{raw}`")))?,
                    None => Loss::Logistic,
                };
                let graph = match (take("graph.threshold"), take("graph.path")) {
                    (Some(_), Some(_)) => {
                        return Err(CliError::config("graph.path", "give graph.threshold or graph.path, not both"))
                    }
                    (Some(t), None) => GraphSource::Threshold(parse_value("graph.threshold", &t)?),
                    (None, Some(p)) => GraphSource::File(PathBuf::from(p)),
                    (None, None) => GraphSource::Empty,
                };
                let n_features = take("data.n_features").map(|r| parse_value("data.n_features", &r)).transpose()?;
                let positive_label = take("data.positive_label").map(|r| parse_value("data.positive_label", &r)).transpose()?;
                let stack_identity = match take("graph.stack_identity") {
                    Some(raw) => parse_bool("graph.stack_identity", &raw)?,
                    None => true,
                };
                ProblemSource::Libsvm(DataSettings {
                    path: PathBuf::from(path),
                    loss,
                    n_features,
                    positive_label,
                    graph,
                    stack_identity,
                })
            }
            other => return Err(CliError::config("problem", format!("expected synthetic or libsvm, got `{other}`"))),
        };

        let base = TruthSettings::default();
        let truth = TruthSettings {
            iterations: num("truth.iterations", take("truth.iterations"), base.iterations)?,
            gamma: take("truth.gamma").map(|r| parse_value("truth.gamma", &r)).transpose()?,
            gamma_scale: num("truth.gamma_scale", take("truth.gamma_scale"), base.gamma_scale)?,
            lambda_frac: num("truth.lambda_frac", take("truth.lambda_frac"), base.lambda_frac)?,
            tolerance: num("truth.tolerance", take("truth.tolerance"), base.tolerance)?,
            cache: take("truth.cache").map(PathBuf::from),
        };

        let repetitions: usize = num("repetitions", take("repetitions"), 10)?;
        let epochs: usize = num("epochs", take("epochs"), 20)?;
        let output = take("output").map(PathBuf::from).ok_or_else(|| CliError::config("output", "required"))?;

        if let Some(key) = values.keys().next() {
            return Err(CliError::config(key.clone(), "unknown key"));
        }
        if repetitions == 0 {
            return Err(CliError::config("repetitions", "must be at least 1"));
        }
        if solvers.is_empty() {
            return Err(CliError::config("solver", "declare at least one solver.<label>"));
        }
        Ok(ExperimentConfig {
            problem,
            l2_weight,
            composite_weight,
            solvers,
            repetitions,
            epochs,
            master_seed,
            output,
            truth,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.output);
        if let Some(c) = cfg.truth.cache.as_mut() {
            rebase(c);
        }
        if let ProblemSource::Libsvm(data) = &mut cfg.problem {
            rebase(&mut data.path);
            if let GraphSource::File(p) = &mut data.graph {
                rebase(p);
            }
        }
        Ok(cfg)
    }
}
