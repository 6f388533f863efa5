//! Problem instances `min (1/n) Σ φ_j(x) + (ν/2)‖x‖² + μ‖Bx‖₁`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};

use crate::error::{check_len, Error, Result};
use crate::sparse::SparseMatrix;

/// Per-sample loss `φ_j(x) = ℓ(a_jᵀx, b_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    /// `½(z - b)²`
    Square,
    /// `log(1 + exp(-b z))`
    Logistic,
    /// `max(0, 1 - b z)`
    Hinge,
}

impl Loss {
    pub fn is_classification(self) -> bool {
        matches!(self, Loss::Logistic | Loss::Hinge)
    }

    /// Loss value at margin input `z = aᵀx` with label `b`.
    #[inline]
    pub fn value(self, z: f64, b: f64) -> f64 {
        match self {
            Loss::Square => 0.5 * (z - b) * (z - b),
            Loss::Logistic => softplus(-b * z),
            Loss::Hinge => (1.0 - b * z).max(0.0),
        }
    }

    /// Derivative in `z`, so that `∇φ_j(x) = derivative(a_jᵀx, b_j) a_j`.
    /// The hinge kink `b z = 1` takes the subgradient 0.
    #[inline]
    pub fn derivative(self, z: f64, b: f64) -> f64 {
        match self {
            Loss::Square => z - b,
            Loss::Logistic => -b * sigmoid(-b * z),
            Loss::Hinge => {
                if b * z < 1.0 {
                    -b
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Square => "square",
            Loss::Logistic => "logistic",
            Loss::Hinge => "hinge",
        })
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "square" => Ok(Loss::Square),
            "logistic" => Ok(Loss::Logistic),
            "hinge" => Ok(Loss::Hinge),
            other => Err(Error::InvalidArgument(format!("unknown loss '{other}'"))),
        }
    }
}

#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Samples `a_j` (rows of a sparse `n x d` matrix) with labels `b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: SparseMatrix,
    labels: Array1<f64>,
}

impl Dataset {
    pub fn new(samples: SparseMatrix, labels: Array1<f64>) -> Result<Self> {
        if samples.n_rows() == 0 {
            return Err(Error::InvalidDimension("dataset has no samples".into()));
        }
        check_len("dataset labels", samples.n_rows(), labels.len())?;
        if let Some(bad) = labels.iter().find(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite label {bad}")));
        }
        Ok(Dataset { samples, labels })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.samples.n_cols()
    }

    pub fn samples(&self) -> &SparseMatrix {
        &self.samples
    }

    pub fn labels(&self) -> &Array1<f64> {
        &self.labels
    }

    /// Relabels to `{-1, +1}`: `+1` where the label equals `positive`.
    pub fn with_binary_labels(mut self, positive: f64) -> Self {
        self.labels.mapv_inplace(|b| if b == positive { 1.0 } else { -1.0 });
        self
    }

    fn has_sign_labels(&self) -> bool {
        self.labels.iter().all(|&b| b == 1.0 || b == -1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    loss: Loss,
    dataset: Dataset,
    l2_weight: f64,
    composite_weight: f64,
    operator: SparseMatrix,
}

impl ProblemSpec {
    pub fn new(
        loss: Loss,
        dataset: Dataset,
        l2_weight: f64,
        composite_weight: f64,
        operator: SparseMatrix,
    ) -> Result<Self> {
        if !(l2_weight >= 0.0) || !l2_weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "l2 weight must be a finite nonnegative number, got {l2_weight}"
            )));
        }
        if !(composite_weight >= 0.0) || !composite_weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "composite weight must be a finite nonnegative number, got {composite_weight}"
            )));
        }
        check_len("operator columns", dataset.n_features(), operator.n_cols())?;
        if loss.is_classification() && !dataset.has_sign_labels() {
            return Err(Error::InvalidArgument(format!(
                "{loss} loss needs labels in {{-1, +1}}"
            )));
        }
        Ok(ProblemSpec {
            loss,
            dataset,
            l2_weight,
            composite_weight,
            operator,
        })
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    /// `ν`
    pub fn l2_weight(&self) -> f64 {
        self.l2_weight
    }

    /// `μ`, the weight on `‖Bx‖₁`.
    pub fn composite_weight(&self) -> f64 {
        self.composite_weight
    }

    /// `B`
    pub fn operator(&self) -> &SparseMatrix {
        &self.operator
    }

    pub fn dim(&self) -> usize {
        self.dataset.n_features()
    }

    pub fn n_samples(&self) -> usize {
        self.dataset.n_samples()
    }

    /// Mean sample loss without regularizers.
    pub(crate) fn mean_loss(&self, x: ArrayView1<'_, f64>) -> f64 {
        let a = self.dataset.samples();
        let b = self.dataset.labels();
        let total: f64 = (0..a.n_rows())
            .map(|j| self.loss.value(a.row_dot(j, x), b[j]))
            .sum();
        total / a.n_rows() as f64
    }

    /// `f2(x) = (1/n) Σ φ_j(x) + (ν/2)‖x‖²`
    pub fn smooth_value(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        check_len("objective argument", self.dim(), x.len())?;
        Ok(self.mean_loss(x) + 0.5 * self.l2_weight * x.dot(&x))
    }

    /// Full objective `f2(x) + μ‖Bx‖₁`.
    pub fn objective_value(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        let smooth = self.smooth_value(x)?;
        let composite = if self.composite_weight == 0.0 {
            0.0
        } else {
            let bx = self.operator.matvec(x)?;
            self.composite_weight * bx.iter().map(|v| v.abs()).sum::<f64>()
        };
        Ok(smooth + composite)
    }
}
