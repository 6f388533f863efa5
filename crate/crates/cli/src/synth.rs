use ndarray::Array1;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rand_pcg::Pcg64;
use spdfp_core::{build_difference_matrix, Dataset, Loss, ProblemSpec, SparseMatrix};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub n: usize,
    pub d: usize,
    pub perturb_frac: f64,
    pub noise_sd: f64,
    /// Standard deviation of the perturbation added to the chosen entries
    /// of `x0`.
    pub perturb_sd: f64,
    pub composite_weight: f64,
    pub l2_weight: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n: 1000,
            d: 50,
            perturb_frac: 0.05,
            noise_sd: 0.1,
            perturb_sd: 1.0,
            composite_weight: 0.1,
            l2_weight: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthProblem {
    pub spec: ProblemSpec,
    /// Coefficient vector the labels were generated from.
    pub x0: Array1<f64>,
}

/// Square-loss fused lasso: `A` has i.i.d. standard normal entries, `x0` is
/// all ones with `⌊perturb_frac·d⌋` random entries perturbed, `b = A x0 + ε`
/// and `B` is the `(d-1)×d` difference operator.
pub fn synth_fused_lasso(params: &SynthParams) -> Result<SynthProblem> {
    let SynthParams {
        n,
        d,
        perturb_frac,
        noise_sd,
        perturb_sd,
        ..
    } = *params;
    if n < 2 || d < 2 {
        return Err(CliError::config("synth", format!("need n, d >= 2, got n = {n}, d = {d}")));
    }
    if !(0.0..=1.0).contains(&perturb_frac) {
        return Err(CliError::config(
            "synth.perturb_frac",
            format!("must lie in [0, 1], got {perturb_frac}"),
        ));
    }
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(CliError::config("synth.noise_sd", format!("must be >= 0, got {noise_sd}")));
    }
    if !(perturb_sd >= 0.0) || !perturb_sd.is_finite() {
        return Err(CliError::config("synth.perturb_sd", format!("must be >= 0, got {perturb_sd}")));
    }

    let mut rng = Pcg64::seed_from_u64(params.seed);
    let entries: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();

    let mut x0 = Array1::ones(d);
    let n_perturbed = (perturb_frac * d as f64).floor() as usize;
    let mut chosen = sample(&mut rng, d, n_perturbed).into_vec();
    chosen.sort_unstable();
    let perturb = Normal::new(0.0, perturb_sd).expect("validated above");
    for i in chosen {
        x0[i] += perturb.sample(&mut rng);
    }

    let noise = Normal::new(0.0, noise_sd).expect("validated above");
    let labels: Array1<f64> = (0..n)
        .map(|r| {
            let row = &entries[r * d..(r + 1) * d];
            row.iter().zip(x0.iter()).map(|(a, x)| a * x).sum::<f64>() + noise.sample(&mut rng)
        })
        .collect();

    let triplets = (0..n).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| (r, c, entries[r * d + c]));
    let a = SparseMatrix::from_triplets(n, d, triplets)?;
    let spec = ProblemSpec::new(
        Loss::Square,
        Dataset::new(a, labels)?,
        params.l2_weight,
        params.composite_weight,
        build_difference_matrix(d)?,
    )?;
    Ok(SynthProblem { spec, x0 })
}
