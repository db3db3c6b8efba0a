//! Informativeness scores for a candidate observation.
//!
//! * Hotelling T²: Mahalanobis distance from the labeled set's mean under
//!   its sample covariance.
//! * QBC ambiguity: population variance of the committee's predictions.
//! * Expected model change: mean norm of the squared-loss gradient step
//!   `(fᵢ(x) − f(x))·x̃` where each committee prediction stands in for the
//!   unknown label. The gradient's constant factor 2 is dropped; it does not
//!   change rankings or quantile thresholds.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::regression::{Committee, LinearModel};
use crate::{Error, Result};

/// Diagonal loading applied to the labeled-set covariance by default.
pub const DEFAULT_COV_REG: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CriterionKind {
    #[serde(rename = "rnd")]
    Random,
    #[serde(rename = "hot")]
    HotellingT2,
    #[serde(rename = "qbc")]
    QbcAmbiguity,
    #[serde(rename = "emc")]
    ExpectedModelChange,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 4] = [
        CriterionKind::Random,
        CriterionKind::HotellingT2,
        CriterionKind::QbcAmbiguity,
        CriterionKind::ExpectedModelChange,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            CriterionKind::Random => "rnd",
            CriterionKind::HotellingT2 => "hot",
            CriterionKind::QbcAmbiguity => "qbc",
            CriterionKind::ExpectedModelChange => "emc",
        }
    }

    pub fn needs_committee(self) -> bool {
        matches!(
            self,
            CriterionKind::QbcAmbiguity | CriterionKind::ExpectedModelChange
        )
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rnd" => Ok(CriterionKind::Random),
            "hot" => Ok(CriterionKind::HotellingT2),
            "qbc" => Ok(CriterionKind::QbcAmbiguity),
            "emc" => Ok(CriterionKind::ExpectedModelChange),
            other => Err(Error::InvalidParameter(format!(
                "unknown criterion `{other}` (expected rnd, hot, qbc or emc)"
            ))),
        }
    }
}

/// Sample mean and covariance of a point cloud, with the inverse of the
/// regularized covariance cached for repeated T² evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    inverse_covariance: DMatrix<f64>,
    regularization: f64,
}

impl GaussianSummary {
    /// Mean and covariance (divisor n−1) of the rows of `x`; the inverse is
    /// taken of `S + reg·I` through a Cholesky factorization.
    pub fn fit(x: &DMatrix<f64>, reg: f64) -> Result<Self> {
        let (n, d) = x.shape();
        if n < 2 {
            return Err(Error::NotEnoughData {
                what: "rows for a covariance estimate",
                needed: 2,
                got: n,
            });
        }
        if !(reg >= 0.0) {
            return Err(Error::InvalidParameter(format!("regularization must be >= 0, got {reg}")));
        }
        let mean = DVector::from_iterator(d, x.column_iter().map(|c| c.mean()));
        let mut centered = x.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let mut covariance = centered.transpose() * &centered / (n - 1) as f64;
        // symmetrize away rounding
        covariance = (&covariance + covariance.transpose()) * 0.5;
        let mut loaded = covariance.clone();
        for j in 0..d {
            loaded[(j, j)] += reg;
        }
        let chol = loaded
            .cholesky()
            .ok_or(Error::NotPositiveDefinite("regularized covariance"))?;
        let inverse_covariance = chol.inverse();
        Ok(Self {
            mean,
            covariance,
            inverse_covariance,
            regularization: reg,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn inverse_covariance(&self) -> &DMatrix<f64> {
        &self.inverse_covariance
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `(x − x̄)ᵀ (S + reg·I)⁻¹ (x − x̄)`.
pub fn hotelling_t2(g: &GaussianSummary, x: &DVector<f64>) -> Result<f64> {
    if x.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: x.len(),
        });
    }
    let diff = x - &g.mean;
    let q = diff.dot(&(&g.inverse_covariance * &diff));
    Ok(q.max(0.0))
}

/// `(1/K) Σ (fᵢ(x) − ȳ_K(x))²` over committee members.
pub fn qbc_ambiguity(c: &Committee, x: &DVector<f64>) -> Result<f64> {
    let preds = c.predictions(x)?;
    let k = preds.len() as f64;
    let mean = preds.iter().sum::<f64>() / k;
    Ok(preds.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / k)
}

/// `(1/K) Σ ‖(fᵢ(x) − f(x))·x̃‖₂` with `x̃ = (1, x)`, `f` the current model.
pub fn emc_score(c: &Committee, m: &LinearModel, x: &DVector<f64>) -> Result<f64> {
    if m.feature_dim() != c.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: c.feature_dim(),
            got: m.feature_dim(),
        });
    }
    let preds = c.predictions(x)?;
    let fx = m.predict_unchecked(x);
    let mut xt = DVector::from_element(x.len() + 1, 1.0);
    xt.rows_mut(1, x.len()).copy_from(x);
    let total: f64 = preds.iter().map(|fi| ((fi - fx) * &xt).norm()).sum();
    Ok(total / preds.len() as f64)
}

/// Whatever state a criterion needs to score a point.
#[derive(Default)]
pub struct CriterionState<'a> {
    pub summary: Option<&'a GaussianSummary>,
    pub committee: Option<&'a Committee>,
    pub model: Option<&'a LinearModel>,
    pub rng: Option<&'a mut dyn RngCore>,
}

/// Dispatches to the scoring function for `kind`. `Random` consumes one
/// uniform(0,1) draw from the state's generator.
pub fn score(kind: CriterionKind, state: &mut CriterionState<'_>, x: &DVector<f64>) -> Result<f64> {
    match kind {
        CriterionKind::Random => {
            let rng = state.rng.as_mut().ok_or(Error::MissingState("random generator"))?;
            Ok(rng.random::<f64>())
        }
        CriterionKind::HotellingT2 => {
            hotelling_t2(state.summary.ok_or(Error::MissingState("Gaussian summary"))?, x)
        }
        CriterionKind::QbcAmbiguity => {
            qbc_ambiguity(state.committee.ok_or(Error::MissingState("committee"))?, x)
        }
        CriterionKind::ExpectedModelChange => emc_score(
            state.committee.ok_or(Error::MissingState("committee"))?,
            state.model.ok_or(Error::MissingState("linear model"))?,
            x,
        ),
    }
}
