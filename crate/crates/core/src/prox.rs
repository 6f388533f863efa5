//! Proximal maps of the composite term `f1`.

use ndarray::{Array1, ArrayView1, ArrayViewMut1, Zip};

use crate::error::{Error, Result};

/// A closed convex function with a computable proximal map.
///
/// Implementors provide `prox_into`; the checked entry points and the
/// derived maps come for free.
pub trait ProximalMap {
    /// `f(y)`
    fn value(&self, y: ArrayView1<'_, f64>) -> f64;

    /// `out = argmin_x τ f(x) + ½‖x - y‖²` for `τ ≥ 0`. Callers validate `τ`.
    fn prox_into(&self, tau: f64, y: ArrayView1<'_, f64>, out: ArrayViewMut1<'_, f64>);

    fn prox(&self, tau: f64, y: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        check_tau(tau)?;
        let mut out = Array1::zeros(y.len());
        self.prox_into(tau, y, out.view_mut());
        Ok(out)
    }

    /// `(I - Prox_{τf})(y)`
    fn prox_residual(&self, tau: f64, y: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let p = self.prox(tau, y)?;
        Ok(&y - &p)
    }

    /// Prox of `h(x) = r f(x / r)`, evaluated as `r Prox_{f/r}(y / r)`.
    fn prox_scaled(&self, r: f64, y: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scale must be positive and finite, got {r}"
            )));
        }
        let scaled = &y / r;
        let mut out = Array1::zeros(y.len());
        self.prox_into(1.0 / r, scaled.view(), out.view_mut());
        out *= r;
        Ok(out)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "prox step must be finite and nonnegative, got {tau}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxKind {
    /// `weight · ‖·‖₁`
    L1,
    /// `f ≡ 0`
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxSpec {
    kind: ProxKind,
    weight: f64,
}

impl ProxSpec {
    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "l1 weight must be finite and nonnegative, got {weight}"
            )));
        }
        Ok(ProxSpec {
            kind: ProxKind::L1,
            weight,
        })
    }

    pub fn zero() -> Self {
        ProxSpec {
            kind: ProxKind::Zero,
            weight: 0.0,
        }
    }

    pub fn kind(&self) -> ProxKind {
        self.kind
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// `sign(y)·max(|y| - t, 0)`; `|y| == t` maps to zero.
#[inline]
pub fn soft_threshold(y: f64, t: f64) -> f64 {
    let mag = y.abs() - t;
    if mag > 0.0 {
        mag.copysign(y)
    } else {
        0.0
    }
}

impl ProximalMap for ProxSpec {
    fn value(&self, y: ArrayView1<'_, f64>) -> f64 {
        match self.kind {
            ProxKind::L1 => self.weight * y.iter().map(|v| v.abs()).sum::<f64>(),
            ProxKind::Zero => 0.0,
        }
    }

    fn prox_into(&self, tau: f64, y: ArrayView1<'_, f64>, mut out: ArrayViewMut1<'_, f64>) {
        match self.kind {
            ProxKind::L1 => {
                let t = tau * self.weight;
                Zip::from(&mut out).and(&y).for_each(|o, &v| *o = soft_threshold(v, t));
            }
            ProxKind::Zero => out.assign(&y),
        }
    }
}
