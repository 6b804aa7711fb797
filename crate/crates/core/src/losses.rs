//! Loss functions that turn prediction records into calibration losses.

use std::fmt;
use std::str::FromStr;

use crate::error::{LalError, Result};

/// Probabilities below this floor are treated as the floor by the
/// categorical negative log-likelihood, and the record is flagged.
pub const NLL_PROB_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Absolute,
    Squared,
    Overshoot,
    Undershoot,
    MisclassificationProb,
    CategoricalNll,
    GaussianNll,
}

impl LossKind {
    pub const ALL: [LossKind; 7] = [
        LossKind::Absolute,
        LossKind::Squared,
        LossKind::Overshoot,
        LossKind::Undershoot,
        LossKind::MisclassificationProb,
        LossKind::CategoricalNll,
        LossKind::GaussianNll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Absolute => "absolute",
            LossKind::Squared => "squared",
            LossKind::Overshoot => "overshoot",
            LossKind::Undershoot => "undershoot",
            LossKind::MisclassificationProb => "misclassification",
            LossKind::CategoricalNll => "categorical-nll",
            LossKind::GaussianNll => "gaussian-nll",
        }
    }

    pub fn is_regression(self) -> bool {
        matches!(
            self,
            LossKind::Absolute | LossKind::Squared | LossKind::Overshoot | LossKind::Undershoot
        )
    }

    pub fn is_classification(self) -> bool {
        matches!(
            self,
            LossKind::MisclassificationProb | LossKind::CategoricalNll
        )
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = LalError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let alias = match norm.as_str() {
            "misclassification-prob" => "misclassification",
            "nll" => "categorical-nll",
            other => other,
        };
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == alias)
            .ok_or_else(|| LalError::domain(format!("unknown loss kind `{s}`")))
    }
}

/// Fitted Gaussian density `N(mean, cov)` with a cached Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    mean: Vec<f64>,
    /// Lower-triangular factor, row-major, `dim * dim`.
    chol: Vec<f64>,
    log_det: f64,
}

impl GaussianModel {
    /// `cov` is row-major with `mean.len()` rows and columns.
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(LalError::Arity(
                "gaussian model needs at least one dimension".into(),
            ));
        }
        if cov.len() != d * d {
            return Err(LalError::Arity(format!(
                "covariance has {} entries, expected {}",
                cov.len(),
                d * d
            )));
        }
        if mean.iter().chain(&cov).any(|x| !x.is_finite()) {
            return Err(LalError::domain("gaussian parameters must be finite"));
        }
        let scale = cov.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        for i in 0..d {
            for j in 0..i {
                if (cov[i * d + j] - cov[j * d + i]).abs() > 1e-12 * scale {
                    return Err(LalError::NotPositiveDefinite);
                }
            }
        }
        let mut chol = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let dot: f64 = (0..j).map(|p| chol[i * d + p] * chol[j * d + p]).sum();
                let v = cov[i * d + j] - dot;
                if i == j {
                    if v <= 0.0 {
                        return Err(LalError::NotPositiveDefinite);
                    }
                    chol[i * d + i] = v.sqrt();
                } else {
                    chol[i * d + j] = v / chol[j * d + j];
                }
            }
        }
        let log_det = 2.0 * (0..d).map(|i| chol[i * d + i].ln()).sum::<f64>();
        Ok(Self {
            mean,
            chol,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `(z - mean)^T cov^{-1} (z - mean) + ln |cov|`, i.e. `-2 ln N(z)`
    /// without the `d ln 2 pi` constant.
    pub fn nll(&self, z: &[f64]) -> Result<f64> {
        let d = self.dim();
        if z.len() != d {
            return Err(LalError::Arity(format!(
                "point has {} coordinates, expected {d}",
                z.len()
            )));
        }
        // Forward substitution L w = z - mean.
        let mut w = vec![0.0; d];
        for i in 0..d {
            let dot: f64 = (0..i).map(|p| self.chol[i * d + p] * w[p]).sum();
            w[i] = (z[i] - self.mean[i] - dot) / self.chol[i * d + i];
        }
        Ok(w.iter().map(|x| x * x).sum::<f64>() + self.log_det)
    }
}

/// Which loss to apply, with any parameters it needs.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    Absolute,
    Squared,
    Overshoot,
    Undershoot,
    MisclassificationProb,
    CategoricalNll,
    GaussianNll(GaussianModel),
}

impl LossSpec {
    pub fn kind(&self) -> LossKind {
        match self {
            LossSpec::Absolute => LossKind::Absolute,
            LossSpec::Squared => LossKind::Squared,
            LossSpec::Overshoot => LossKind::Overshoot,
            LossSpec::Undershoot => LossKind::Undershoot,
            LossSpec::MisclassificationProb => LossKind::MisclassificationProb,
            LossSpec::CategoricalNll => LossKind::CategoricalNll,
            LossSpec::GaussianNll(_) => LossKind::GaussianNll,
        }
    }

    /// Spec for a parameter-free kind. Gaussian NLL needs
    /// [`GaussianModel`] and is rejected here.
    pub fn simple(kind: LossKind) -> Result<Self> {
        Ok(match kind {
            LossKind::Absolute => LossSpec::Absolute,
            LossKind::Squared => LossSpec::Squared,
            LossKind::Overshoot => LossSpec::Overshoot,
            LossKind::Undershoot => LossSpec::Undershoot,
            LossKind::MisclassificationProb => LossSpec::MisclassificationProb,
            LossKind::CategoricalNll => LossSpec::CategoricalNll,
            LossKind::GaussianNll => {
                return Err(LalError::SpecMismatch(
                    "gaussian-nll needs a mean vector and covariance matrix".into(),
                ))
            }
        })
    }
}

/// One model prediction paired with what was observed. Class labels are
/// 0-indexed.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Regression { y: f64, y_hat: f64 },
    Classification { probs: Vec<f64>, label: usize },
    Density { z: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loss {
    pub value: f64,
    /// Set when the NLL probability floor was applied.
    pub saturated: bool,
}

impl Loss {
    fn plain(value: f64) -> Self {
        Loss {
            value,
            saturated: false,
        }
    }
}

fn class_probability(probs: &[f64], label: usize) -> Result<f64> {
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(LalError::ProbabilityOutOfRange(p));
    }
    probs.get(label).copied().ok_or(LalError::LabelOutOfRange {
        label,
        classes: probs.len(),
    })
}

pub fn compute_loss(spec: &LossSpec, record: &Record) -> Result<Loss> {
    match (spec, record) {
        (LossSpec::Absolute, Record::Regression { y, y_hat }) => Ok(Loss::plain((y - y_hat).abs())),
        (LossSpec::Squared, Record::Regression { y, y_hat }) => {
            Ok(Loss::plain((y - y_hat).powi(2)))
        }
        (LossSpec::Overshoot, Record::Regression { y, y_hat }) => {
            Ok(Loss::plain((y_hat - y).max(0.0)))
        }
        (LossSpec::Undershoot, Record::Regression { y, y_hat }) => {
            Ok(Loss::plain((y - y_hat).max(0.0)))
        }
        (LossSpec::MisclassificationProb, Record::Classification { probs, label }) => {
            Ok(Loss::plain(1.0 - class_probability(probs, *label)?))
        }
        (LossSpec::CategoricalNll, Record::Classification { probs, label }) => {
            let p = class_probability(probs, *label)?;
            if p < NLL_PROB_FLOOR {
                Ok(Loss {
                    value: -NLL_PROB_FLOOR.ln(),
                    saturated: true,
                })
            } else {
                Ok(Loss::plain(-p.ln()))
            }
        }
        (LossSpec::GaussianNll(model), Record::Density { z }) => Ok(Loss::plain(model.nll(z)?)),
        (spec, record) => Err(LalError::Arity(format!(
            "{} loss cannot be applied to a {} record",
            spec.kind(),
            match record {
                Record::Regression { .. } => "regression",
                Record::Classification { .. } => "classification",
                Record::Density { .. } => "density",
            }
        ))),
    }
}
