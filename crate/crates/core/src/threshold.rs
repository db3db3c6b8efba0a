//! Upper control limit on criterion scores.
//!
//! Historical scores `J₁..Jₘ` are smoothed with a Gaussian kernel of
//! bandwidth `h` (Scott's rule, `h = σ̂·m^(−1/5)`), and the limit is the
//! value `u` with `P̂(J ≥ u) = α`, i.e. `F̂(u) = 1 − α` where
//! `F̂(u) = (1/m) Σ Φ((u − Jⱼ)/h)`. `F̂` has no closed-form inverse, so the
//! root is found by bisection on `[min J − 10h, max J + 10h]`.

use libm::erfc;

use crate::criteria::CriterionKind;
use crate::{Error, Result};

/// Default sampling rate.
pub const DEFAULT_ALPHA: f64 = 0.05;

const BISECTION_TOL: f64 = 1e-9;
const BRACKET_WIDTHS: f64 = 10.0;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn mean_and_std(scores: &[f64]) -> (f64, f64) {
    let m = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / m;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

/// One-dimensional Scott bandwidth `σ̂·m^(−1/5)` with the n−1 sample
/// standard deviation. A zero-variance sample gets `max(|mean|, 1)·1e−3`.
pub fn scott_bandwidth(scores: &[f64]) -> Result<f64> {
    if scores.len() < 2 {
        return Err(Error::NotEnoughData {
            what: "scores for a bandwidth",
            needed: 2,
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteValue("criterion scores".into()));
    }
    let (mean, sd) = mean_and_std(scores);
    if sd > 0.0 {
        Ok(sd * (scores.len() as f64).powf(-0.2))
    } else {
        Ok(mean.abs().max(1.0) * 1e-3)
    }
}

/// Gaussian-kernel estimate of `P(J ≤ u)`.
pub fn kde_cdf(scores: &[f64], h: f64, u: f64) -> f64 {
    let s: f64 = scores.iter().map(|j| normal_cdf((u - j) / h)).sum();
    s / scores.len() as f64
}

/// The root of `kde_cdf(scores, h, u) = p`, by bisection.
pub fn kde_quantile(scores: &[f64], h: f64, p: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::NotEnoughData {
            what: "scores for a quantile",
            needed: 1,
            got: 0,
        });
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("quantile level must be in (0,1), got {p}")));
    }
    let lo0 = scores.iter().cloned().fold(f64::INFINITY, f64::min) - BRACKET_WIDTHS * h;
    let hi0 = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + BRACKET_WIDTHS * h;
    let (mut lo, mut hi) = (lo0, hi0);
    // Each step halves the bracket; 200 steps is far past f64 resolution.
    for _ in 0..200 {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kde_cdf(scores, h, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A solved threshold for one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLimit {
    pub kind: CriterionKind,
    pub scores: Vec<f64>,
    pub bandwidth: f64,
    pub alpha: f64,
    pub ucl: f64,
}

impl ControlLimit {
    /// Calibrates on historical scores with a Scott bandwidth.
    pub fn calibrate(kind: CriterionKind, scores: Vec<f64>, alpha: f64) -> Result<Self> {
        let h = scott_bandwidth(&scores)?;
        let mut cl = solve_ucl(&scores, h, alpha)?;
        cl.kind = kind;
        Ok(cl)
    }

    /// `j ≥ ucl`; ties are accepted.
    pub fn exceeds(&self, j: f64) -> bool {
        j >= self.ucl
    }

    /// Writes the calibration scores as a one-column CSV.
    pub fn write_scores_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["score"])?;
        for s in &self.scores {
            w.write_record([crate::dataset::fmt_f64(*s)])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Solves `F̂(ucl) = 1 − alpha`.
///
/// A single score is accepted here (the bandwidth is supplied by the
/// caller). When every score is identical the limit is set to that common
/// value, so that tied stream scores are all accepted instead of never.
/// The returned limit has kind [`CriterionKind::Random`]; use
/// [`ControlLimit::calibrate`] to attach a kind.
pub fn solve_ucl(scores: &[f64], h: f64, alpha: f64) -> Result<ControlLimit> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must be in (0,1), got {alpha}")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteValue("criterion scores".into()));
    }
    let degenerate = scores.len() >= 2 && scores.iter().all(|&s| s == scores[0]);
    let ucl = if degenerate {
        scores[0]
    } else {
        kde_quantile(scores, h, 1.0 - alpha)?
    };
    Ok(ControlLimit {
        kind: CriterionKind::Random,
        scores: scores.to_vec(),
        bandwidth: h,
        alpha,
        ucl,
    })
}

/// Convenience wrapper around [`ControlLimit::exceeds`].
pub fn exceeds(cl: &ControlLimit, j: f64) -> bool {
    cl.exceeds(j)
}
