//! Ordinary least squares with an intercept, and bootstrap committees.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dataset::fmt_f64;
use crate::{Error, Result};

/// Ridge used to refit a bootstrap resample whose design is rank-deficient.
pub const FALLBACK_RIDGE: f64 = 1e-6;

/// Default committee size.
pub const DEFAULT_COMMITTEE_SIZE: usize = 10;

// Relative size of the smallest R diagonal below which the design is
// treated as rank-deficient.
const RANK_TOL: f64 = 1e-10;

/// `f(x) = β₀ + Σ βⱼ xⱼ`, intercept stored first.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    beta: DVector<f64>,
}

impl LinearModel {
    pub fn new(beta: DVector<f64>) -> Result<Self> {
        if beta.len() < 2 {
            return Err(Error::InvalidParameter(
                "a linear model needs an intercept and at least one slope".into(),
            ));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFiniteValue("coefficients".into()));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn intercept(&self) -> f64 {
        self.beta[0]
    }

    pub fn feature_dim(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn predict(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &DVector<f64>) -> f64 {
        self.beta[0] + self.beta.rows(1, x.len()).dot(x)
    }

    /// Predictions for every row of `x`.
    pub fn predict_rows(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.ncols() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                got: x.ncols(),
            });
        }
        let slopes = self.beta.rows(1, x.ncols());
        Ok(x * slopes + DVector::from_element(x.nrows(), self.beta[0]))
    }

    /// Mean squared error `(1/n) Σ (yᵢ − f(xᵢ))²`.
    pub fn loss(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
        if x.nrows() == 0 {
            return Err(Error::NotEnoughData {
                what: "rows to evaluate the loss",
                needed: 1,
                got: 0,
            });
        }
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        let r = y - self.predict_rows(x)?;
        Ok(r.norm_squared() / x.nrows() as f64)
    }

    pub fn rmse(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
        self.loss(x, y).map(f64::sqrt)
    }

    /// One-row CSV with header `intercept,b1,...,bd`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["intercept".to_string()];
        header.extend((1..=self.feature_dim()).map(|j| format!("b{j}")));
        w.write_record(&header)?;
        w.write_record(self.beta.iter().map(|&b| fmt_f64(b)))?;
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Least squares with intercept via Householder QR of the design matrix.
///
/// Minimizes `Σ (yᵢ − β₀ − βᵀxᵢ)² + ridge·Σⱼ≥₁ βⱼ²`; the intercept is not
/// penalized. The ridge term is folded in by appending `√ridge·I` rows.
pub fn fit_ols(x: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> Result<LinearModel> {
    let (n, d) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if d == 0 {
        return Err(Error::InvalidParameter("no features".into()));
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(Error::InvalidParameter(format!("ridge must be >= 0, got {ridge}")));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue("regression inputs".into()));
    }
    let extra = if ridge > 0.0 { d } else { 0 };
    let rows = n + extra;
    if rows < d + 1 {
        return Err(Error::NotEnoughData {
            what: "rows for an unpenalized fit",
            needed: d + 1,
            got: n,
        });
    }
    if n == 0 {
        return Err(Error::NotEnoughData {
            what: "rows for a fit",
            needed: 1,
            got: 0,
        });
    }

    let mut design = DMatrix::zeros(rows, d + 1);
    let mut rhs = DVector::zeros(rows);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        for j in 0..d {
            design[(i, j + 1)] = x[(i, j)];
        }
        rhs[i] = y[i];
    }
    let sr = ridge.sqrt();
    for j in 0..extra {
        design[(n + j, j + 1)] = sr;
    }

    let qr = design.qr();
    let r = qr.r();
    let diag: Vec<f64> = r.diagonal().iter().map(|v| v.abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > RANK_TOL * max) {
        return Err(Error::RankDeficient {
            condition: if min > 0.0 { max / min } else { f64::INFINITY },
        });
    }
    qr.q_tr_mul(&mut rhs);
    let top = rhs.rows(0, d + 1).into_owned();
    let beta = r
        .solve_upper_triangular(&top)
        .ok_or(Error::RankDeficient {
            condition: f64::INFINITY,
        })?;
    LinearModel::new(beta)
}

/// `K` linear models fit on bootstrap resamples of one training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Committee {
    members: Vec<LinearModel>,
}

impl Committee {
    pub fn new(members: Vec<LinearModel>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::InvalidParameter("empty committee".into()));
        };
        let d = first.feature_dim();
        if let Some(m) = members.iter().find(|m| m.feature_dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.feature_dim(),
            });
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[LinearModel] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.members[0].feature_dim()
    }

    pub fn predictions(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        if x.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                got: x.len(),
            });
        }
        Ok(self.members.iter().map(|m| m.predict_unchecked(x)).collect())
    }
}

/// Fits `k` members on resamples of `n` rows drawn uniformly with
/// replacement. A resample whose design is rank-deficient is refit with
/// ridge `max(ridge, FALLBACK_RIDGE)`, so the committee always has `k`
/// members.
pub fn bootstrap_committee<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    k: usize,
    ridge: f64,
    rng: &mut R,
) -> Result<Committee> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::NotEnoughData {
            what: "rows to bootstrap",
            needed: 2,
            got: n,
        });
    }
    if k < 2 {
        return Err(Error::InvalidParameter(format!("committee size must be >= 2, got {k}")));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let mut members = Vec::with_capacity(k);
    for _ in 0..k {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let xb = x.select_rows(&idx);
        let yb = DVector::from_iterator(n, idx.iter().map(|&i| y[i]));
        let model = match fit_ols(&xb, &yb, ridge) {
            Ok(m) => m,
            Err(Error::RankDeficient { .. }) | Err(Error::NotEnoughData { .. }) => {
                fit_ols(&xb, &yb, ridge.max(FALLBACK_RIDGE))?
            }
            Err(e) => return Err(e),
        };
        members.push(model);
    }
    Committee::new(members)
}
