//! Rate machinery: the `φ_c` family, the closed-form bound on sequences
//! obeying `s_{k+1} ≤ (1 - η_k)s_k + τη_k²` with `η_k = c/k^α`, and
//! empirical rate estimates from error traces.

use ndarray::{Array1, ArrayView1};

use crate::error::{check_len, Error, Result};
use crate::solvers::StepSchedule;

/// `φ_c(t) = (t^c - 1)/c` for `c ≠ 0`, `log t` for `c = 0`.
pub fn phi_c(c: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::OutOfDomain(format!("phi_c needs t > 0, got {t}")));
    }
    let log_t = t.ln();
    if c == 0.0 {
        return Ok(log_t);
    }
    Ok((c * log_t).exp_m1() / c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionParams {
    alpha: f64,
    c: f64,
    tau: f64,
    s_init: f64,
    k0: usize,
}

impl RecursionParams {
    /// `s_init` is `s_1`; `k0` is derived as the smallest `k` with `η_k ≤ 1`.
    pub fn new(alpha: f64, c: f64, tau: f64, s_init: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("c must be positive, got {c}")));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        if !(s_init >= 0.0) || !s_init.is_finite() {
            return Err(Error::InvalidArgument(format!("s_init must be nonnegative, got {s_init}")));
        }
        let eta = |k: usize| c / (k as f64).powf(alpha);
        let mut k0 = (c.powf(1.0 / alpha).ceil() as usize).max(1);
        // correct the float estimate in either direction
        while k0 > 1 && eta(k0 - 1) <= 1.0 {
            k0 -= 1;
        }
        while eta(k0) > 1.0 {
            k0 += 1;
        }
        Ok(RecursionParams {
            alpha,
            c,
            tau,
            s_init,
            k0,
        })
    }

    /// Same parameters with noise constant zero, which the closed form
    /// allows as a limit even though the recursion setting asks for `τ > 0`.
    pub fn noiseless(alpha: f64, c: f64, s_init: f64) -> Result<Self> {
        let mut p = Self::new(alpha, c, 1.0, s_init)?;
        p.tau = 0.0;
        Ok(p)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn s_init(&self) -> f64 {
        self.s_init
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    /// `η_k = c / k^α`
    pub fn eta(&self, k: usize) -> f64 {
        self.c / (k as f64).powf(self.alpha)
    }

    /// Smallest `k` for which [`lemma_bound`] is defined.
    pub fn first_valid_k(&self) -> usize {
        if self.alpha < 1.0 {
            (2 * self.k0).max(3)
        } else {
            2 * self.k0
        }
    }
}

/// Extremal sequence `s_{k+1} = max(0, (1 - η_k)s_k + τη_k²)` starting at
/// `s_1 = s_init`; element `i` holds `s_{i+1}`.
pub fn simulate_recursion(params: &RecursionParams, k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max);
    if k_max == 0 {
        return out;
    }
    let mut s = params.s_init;
    out.push(s);
    for k in 1..k_max {
        let eta = params.eta(k);
        s = ((1.0 - eta) * s + params.tau * eta * eta).max(0.0);
        out.push(s);
    }
    out
}

/// Closed-form bound on `s_{k+1}` for `k ≥ 2k₀`, anchored at the extremal
/// sequence's value `s_{k₀}`.
pub fn lemma_bound(params: &RecursionParams, k: usize) -> Result<f64> {
    let s_k0 = *simulate_recursion(params, params.k0)
        .last()
        .expect("k0 >= 1");
    lemma_bound_from(params, s_k0, k)
}

/// Closed-form bound on `s_{k+1}` given the observed anchor `s_{k₀}`:
///
/// for `α ∈ (0, 1)`
/// ```text
/// (τc²φ_{1-2α}(k) + s_{k₀} exp(c k₀^{1-α}/(1-α))) exp(-c(1 - 2^{α-1})(k+1)^{1-α}/(1-α))
///     + τ 2^α c / (k-2)^α
/// ```
/// and for `α = 1`
/// ```text
/// s_{k₀}(k₀/(k+1))^c + τc²/(k+1)^c (1 + 1/k₀)^c φ_{c-1}(k)
/// ```
pub fn lemma_bound_from(params: &RecursionParams, s_k0: f64, k: usize) -> Result<f64> {
    let first = params.first_valid_k();
    if k < first {
        return Err(Error::OutOfDomain(format!(
            "bound holds for k >= {first} (k0 = {}), got {k}",
            params.k0
        )));
    }
    let RecursionParams { alpha, c, tau, k0, .. } = *params;
    let kf = k as f64;
    let k0f = k0 as f64;

    if alpha < 1.0 {
        let one_minus = 1.0 - alpha;
        let decay = -c * (1.0 - 2f64.powf(alpha - 1.0)) * (kf + 1.0).powf(one_minus) / one_minus;
        let growth = c * k0f.powf(one_minus) / one_minus;
        let noise = tau * c * c * phi_c(1.0 - 2.0 * alpha, kf)? * decay.exp();
        // combine exponents before exponentiating to avoid overflow
        let anchor = if s_k0 == 0.0 { 0.0 } else { s_k0 * (growth + decay).exp() };
        let tail = tau * 2f64.powf(alpha) * c / (kf - 2.0).powf(alpha);
        Ok(noise + anchor + tail)
    } else {
        let anchor = s_k0 * (k0f / (kf + 1.0)).powf(c);
        let noise = tau * c * c / (kf + 1.0).powf(c) * (1.0 + 1.0 / k0f).powf(c) * phi_c(c - 1.0, kf)?;
        Ok(anchor + noise)
    }
}

/// Outcome of comparing the extremal recursion with [`lemma_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub params: RecursionParams,
    /// Number of indices `k` at which `s_{k+1} ≤ bound(k)` was tested.
    pub checked: usize,
    pub violations: usize,
    /// Largest `s_{k+1} / bound(k)` seen and the `k` where it occurred.
    pub worst_ratio: f64,
    pub worst_k: usize,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `s_{k+1} ≤ bound(k)` for every valid `k` up to `k_max`.
pub fn check_recursion_bound(params: &RecursionParams, k_max: usize) -> Result<BoundCheck> {
    let s = simulate_recursion(params, k_max + 1);
    let s_k0 = s[params.k0 - 1];
    let mut check = BoundCheck {
        params: *params,
        checked: 0,
        violations: 0,
        worst_ratio: 0.0,
        worst_k: 0,
    };
    for k in params.first_valid_k()..=k_max {
        let bound = lemma_bound_from(params, s_k0, k)?;
        let next = s[k];
        check.checked += 1;
        if next > bound {
            check.violations += 1;
        }
        let ratio = if bound > 0.0 {
            next / bound
        } else if next > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > check.worst_ratio {
            check.worst_ratio = ratio;
            check.worst_k = k;
        }
    }
    Ok(check)
}

/// The grid α ∈ {0.3, 0.6, 0.9, 1}, c ∈ {0.5, 2}, τ ∈ {0.1, 1}, s₁ ∈ {0, 1}.
pub fn default_bound_grid() -> Vec<RecursionParams> {
    let mut grid = Vec::with_capacity(32);
    for alpha in [0.3, 0.6, 0.9, 1.0] {
        for c in [0.5, 2.0] {
            for tau in [0.1, 1.0] {
                for s_init in [0.0, 1.0] {
                    grid.push(RecursionParams::new(alpha, c, tau, s_init).expect("grid is valid"));
                }
            }
        }
    }
    grid
}

/// Per-iteration values `(k, a_k)` of an error metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrace {
    points: Vec<(usize, f64)>,
}

impl ErrorTrace {
    pub fn new(points: Vec<(usize, f64)>) -> Result<Self> {
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidArgument(format!(
                    "trace iterations must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(k, a)) = points.iter().find(|(_, a)| !(*a >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative or NaN error {a} at k = {k}")));
        }
        Ok(ErrorTrace { points })
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Multiplies every value by `t > 0`.
    pub fn scaled(&self, t: f64) -> ErrorTrace {
        ErrorTrace {
            points: self.points.iter().map(|&(k, a)| (k, a * t)).collect(),
        }
    }
}

/// Least-squares slope of `log a_k` against `log k` over the final
/// `tail_fraction` of the trace.
pub fn fit_rate(trace: &ErrorTrace, tail_fraction: f64) -> Result<f64> {
    if trace.len() < 20 {
        return Err(Error::DegenerateTrace(format!(
            "need at least 20 points, got {}",
            trace.len()
        )));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let count = ((trace.len() as f64 * tail_fraction).ceil() as usize).clamp(2, trace.len());
    let tail = &trace.points()[trace.len() - count..];
    if let Some(&(k, a)) = tail.iter().find(|(k, a)| *a <= 0.0 || *k == 0) {
        return Err(Error::DegenerateTrace(format!(
            "cannot take logs of a_k = {a} at k = {k}"
        )));
    }
    let xs: Vec<f64> = tail.iter().map(|(k, _)| (*k as f64).ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, a)| a.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateTrace("tail has a single iteration index".into()));
    }
    Ok(sxy / sxx)
}

/// Iterate pair recorded at step `k`; `v` is on the subgradient scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub k: usize,
    pub x: Array1<f64>,
    pub v: Array1<f64>,
}

/// `a_k = E(‖x_k - x*‖² + (γ_k²/λ)‖v_k - v*‖²)` with the expectation
/// replaced by the mean over repetitions. Every repetition must record the
/// same iteration indices.
pub fn joint_error(
    repetitions: &[Vec<TracePoint>],
    x_star: ArrayView1<'_, f64>,
    v_star: ArrayView1<'_, f64>,
    schedule: &StepSchedule,
    lambda: f64,
) -> Result<ErrorTrace> {
    let first = repetitions
        .first()
        .ok_or_else(|| Error::InvalidArgument("no repetitions".into()))?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let reps = repetitions.len() as f64;
    let mut points = Vec::with_capacity(first.len());
    for (idx, head) in first.iter().enumerate() {
        let k = head.k;
        let gamma = schedule.gamma(k);
        let mut total = 0.0;
        for rep in repetitions {
            let p = rep.get(idx).filter(|p| p.k == k).ok_or_else(|| {
                Error::InvalidArgument(format!("repetitions disagree at trace position {idx}"))
            })?;
            check_len("trace primal", x_star.len(), p.x.len())?;
            check_len("trace dual", v_star.len(), p.v.len())?;
            let dx = &p.x - &x_star;
            let dv = &p.v - &v_star;
            total += dx.dot(&dx) + gamma * gamma / lambda * dv.dot(&dv);
        }
        points.push((k, total / reps));
    }
    ErrorTrace::new(points)
}
