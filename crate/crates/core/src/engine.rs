//! The online query loop.
//!
//! 1. Fit a standardizer on the historical pool `H` and encode `H`, the
//!    labeled set `L` and the test set (identity encoding without an
//!    autoencoder). `H`'s encodings are cached; the encoder is frozen.
//! 2. Fit the linear model on `L` (plus a bootstrap committee for QBC/EMC,
//!    or a Gaussian summary for T²).
//! 3. Score every row of `H` and solve the UCL.
//! 4. Walk the stream. An observation whose score is `≥ UCL` has its label
//!    bought and appended to `L`; the model, committee or summary, and the
//!    UCL are then rebuilt. Everything else is discarded.
//!
//! The loop ends after exactly `budget` acquisitions or when the stream is
//! exhausted. A zero budget walks the whole stream as a dry run and never
//! queries.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, CriterionKind, CriterionState, GaussianSummary};
use crate::dataset::{fmt_f64, RawDataset, Standardizer, StreamSource};
use crate::oae::OaeModel;
use crate::regression::{bootstrap_committee, fit_ols, Committee, LinearModel};
use crate::threshold::ControlLimit;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub criterion: CriterionKind,
    pub alpha: f64,
    pub budget: usize,
    pub committee_size: usize,
    pub ridge: f64,
    pub cov_reg: f64,
    /// Labels held before the stream loop starts; `None` means `d + 2`.
    pub initial_labels: Option<usize>,
    pub seed: u64,
    pub use_oae: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            criterion: CriterionKind::Random,
            alpha: crate::threshold::DEFAULT_ALPHA,
            budget: 100,
            committee_size: crate::regression::DEFAULT_COMMITTEE_SIZE,
            ridge: 0.0,
            cov_reg: criteria::DEFAULT_COV_REG,
            initial_labels: None,
            seed: 0,
            use_oae: true,
        }
    }
}

/// One streamed observation and the decision taken on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub index: usize,
    pub score: f64,
    pub ucl: f64,
    pub queried: bool,
}

/// Test error after a (re)fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Labels bought inside the stream loop so far.
    pub acquisitions: usize,
    /// Size of the labeled set the model was fit on.
    pub labeled: usize,
    pub test_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub steps: Vec<StepRecord>,
    pub curve: Vec<CurvePoint>,
    pub initial_model: LinearModel,
    pub model: LinearModel,
    /// Stream observations consumed to seed the labeled set.
    pub seeded: usize,
}

impl RunTrace {
    pub fn acquisitions(&self) -> usize {
        self.steps.iter().filter(|s| s.queried).count()
    }

    /// `step,index,score,ucl,queried`
    pub fn write_trace_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["step", "index", "score", "ucl", "queried"])?;
        for s in &self.steps {
            w.write_record([
                s.step.to_string(),
                s.index.to_string(),
                fmt_f64(s.score),
                fmt_f64(s.ucl),
                u8::from(s.queried).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// `n_labels,test_rmse`, where `n_labels` counts labels queried in the
    /// stream loop (0 is the initial fit).
    pub fn write_curve_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["n_labels", "test_rmse"])?;
        for c in &self.curve {
            w.write_record([c.acquisitions.to_string(), fmt_f64(c.test_rmse)])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Takes the next `n0` stream observations and queries all of their labels.
pub fn seed_initial_labels(stream: &mut StreamSource, n0: usize) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
    if stream.remaining() < n0 {
        return Err(Error::NotEnoughData {
            what: "stream observations to seed the labeled set",
            needed: n0,
            got: stream.remaining(),
        });
    }
    let mut xs = Vec::with_capacity(n0);
    let mut ys = Vec::with_capacity(n0);
    for _ in 0..n0 {
        let (i, x) = stream.next_observation().expect("checked remaining");
        xs.push(x.clone());
        ys.push(stream.query(i)?);
    }
    Ok((xs, ys))
}

/// Standardization followed by the optional frozen encoder.
struct FeatureMap<'a> {
    standardizer: Standardizer,
    oae: Option<&'a OaeModel>,
}

impl FeatureMap<'_> {
    fn dim(&self) -> usize {
        self.oae.map_or(self.standardizer.dim(), OaeModel::bottleneck_dim)
    }

    fn encode(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let s = self.standardizer.apply_vec(x)?;
        match self.oae {
            Some(m) => m.encode(&s),
            None => Ok(s),
        }
    }

    fn encode_rows(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut s = x.clone();
        for (j, mut col) in s.column_iter_mut().enumerate() {
            let (m, sc) = (self.standardizer.means()[j], self.standardizer.scales()[j]);
            col.apply(|v| *v = (*v - m) / sc);
        }
        match self.oae {
            Some(m) => m.encode_rows(&s),
            None => Ok(s),
        }
    }
}

/// Model-side state the criteria read.
struct Learner {
    model: LinearModel,
    committee: Option<Committee>,
    summary: Option<GaussianSummary>,
}

impl Learner {
    fn fit(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &EngineConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let model = fit_ols(x, y, cfg.ridge)?;
        let committee = if cfg.criterion.needs_committee() {
            Some(bootstrap_committee(x, y, cfg.committee_size, cfg.ridge, rng)?)
        } else {
            None
        };
        let summary = if cfg.criterion == CriterionKind::HotellingT2 {
            Some(GaussianSummary::fit(x, cfg.cov_reg)?)
        } else {
            None
        };
        Ok(Self {
            model,
            committee,
            summary,
        })
    }

    fn score(&self, kind: CriterionKind, z: &DVector<f64>, rng: &mut ChaCha8Rng) -> Result<f64> {
        let mut state = CriterionState {
            summary: self.summary.as_ref(),
            committee: self.committee.as_ref(),
            model: Some(&self.model),
            rng: Some(rng),
        };
        criteria::score(kind, &mut state, z)
    }

    fn calibrate(&self, cfg: &EngineConfig, pool: &[DVector<f64>], rng: &mut ChaCha8Rng) -> Result<ControlLimit> {
        let scores = pool
            .iter()
            .map(|z| self.score(cfg.criterion, z, rng))
            .collect::<Result<Vec<_>>>()?;
        ControlLimit::calibrate(cfg.criterion, scores, cfg.alpha)
    }
}

fn stack(rows: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j])
}

/// Runs the query loop; see the module docs.
///
/// `historical` is unlabeled; `labeled` may be empty or absent, in which
/// case the first stream observations are bought unconditionally until
/// `initial_labels` rows are held. `test` must carry a response and is only
/// used to record the learning curve.
pub fn run(
    historical: &RawDataset,
    labeled: Option<&RawDataset>,
    stream: &mut StreamSource,
    test: &RawDataset,
    oae: Option<&OaeModel>,
    cfg: &EngineConfig,
) -> Result<RunTrace> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must be in (0,1), got {}", cfg.alpha)));
    }
    if cfg.use_oae != oae.is_some() {
        return Err(Error::InvalidParameter(
            "an autoencoder must be supplied exactly when use_oae is set".into(),
        ));
    }
    let p = historical.n_features();
    for other in labeled.into_iter().chain(std::iter::once(test)) {
        if other.n_features() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: other.n_features(),
            });
        }
    }
    if let Some(m) = oae {
        if m.input_dim() != p {
            return Err(Error::DimensionMismatch {
                expected: m.input_dim(),
                got: p,
            });
        }
    }
    let test_y = test.response().ok_or(Error::MissingColumn("test response".into()))?;

    let features = FeatureMap {
        standardizer: Standardizer::fit(historical)?,
        oae,
    };
    let d = features.dim();
    let n0 = cfg.initial_labels.unwrap_or(d + 2);
    if n0 < d + 2 {
        return Err(Error::InvalidParameter(format!(
            "initial_labels must be at least feature_dim + 2 = {}, got {n0}",
            d + 2
        )));
    }
    if cfg.criterion.needs_committee() && cfg.committee_size < 2 {
        return Err(Error::InvalidParameter("committee_size must be >= 2".into()));
    }

    let pool_m = features.encode_rows(historical.features())?;
    let pool: Vec<DVector<f64>> = pool_m.row_iter().map(|r| r.transpose()).collect();
    let test_z = features.encode_rows(test.features())?;

    let mut lab_z: Vec<DVector<f64>> = Vec::new();
    let mut lab_y: Vec<f64> = Vec::new();
    if let Some(l) = labeled {
        let y = l.response().ok_or(Error::MissingColumn("labeled response".into()))?;
        let z = features.encode_rows(l.features())?;
        lab_z.extend(z.row_iter().map(|r| r.transpose()));
        lab_y.extend(y.iter());
    }
    let mut seeded = 0;
    if lab_z.len() < n0 {
        let need = n0 - lab_z.len();
        let (xs, ys) = seed_initial_labels(stream, need)?;
        for x in &xs {
            lab_z.push(features.encode(x)?);
        }
        lab_y.extend(ys);
        seeded = need;
    }

    let mut fit_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut score_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_7F4A_7C15);

    let mut learner = Learner::fit(&stack(&lab_z, d), &DVector::from_vec(lab_y.clone()), cfg, &mut fit_rng)?;
    let initial_model = learner.model.clone();
    let mut limit = learner.calibrate(cfg, &pool, &mut score_rng)?;
    let mut curve = vec![CurvePoint {
        acquisitions: 0,
        labeled: lab_z.len(),
        test_rmse: learner.model.rmse(&test_z, test_y)?,
    }];

    let mut steps = Vec::with_capacity(stream.remaining());
    let mut acquired = 0usize;
    let mut step = 0usize;
    loop {
        if cfg.budget > 0 && acquired >= cfg.budget {
            break;
        }
        let Some((index, x)) = stream.next_observation() else {
            break;
        };
        let z = features.encode(x)?;
        let score = learner.score(cfg.criterion, &z, &mut score_rng)?;
        let queried = cfg.budget > 0 && limit.exceeds(score);
        steps.push(StepRecord {
            step,
            index,
            score,
            ucl: limit.ucl,
            queried,
        });
        if queried {
            lab_z.push(z);
            lab_y.push(stream.query(index)?);
            acquired += 1;
            let refit = |rng: &mut ChaCha8Rng| {
                Learner::fit(&stack(&lab_z, d), &DVector::from_vec(lab_y.clone()), cfg, rng)
            };
            learner = refit(&mut fit_rng).map_err(|e| Error::Refit {
                step,
                source: Box::new(e),
            })?;
            limit = learner
                .calibrate(cfg, &pool, &mut score_rng)
                .map_err(|e| Error::Refit {
                    step,
                    source: Box::new(e),
                })?;
            curve.push(CurvePoint {
                acquisitions: acquired,
                labeled: lab_z.len(),
                test_rmse: learner.model.rmse(&test_z, test_y)?,
            });
        }
        step += 1;
    }

    Ok(RunTrace {
        steps,
        curve,
        initial_model,
        model: learner.model,
        seeded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, split, ProcessSpec};

    fn setup(seed: u64) -> (RawDataset, StreamSource, RawDataset) {
        let d = generate(&ProcessSpec::default().with_seed(seed), 1200).unwrap();
        let s = split(&d, (0.4, 0.5, 0.1), true, 0).unwrap();
        (s.historical, StreamSource::from_dataset(&s.stream).unwrap(), s.test)
    }

    fn raw_cfg(kind: CriterionKind, budget: usize) -> EngineConfig {
        EngineConfig {
            criterion: kind,
            budget,
            use_oae: false,
            ..Default::default()
        }
    }

    #[test]
    fn zero_budget_is_a_dry_run() {
        let (h, mut s, t) = setup(1);
        let len = s.len();
        let trace = run(&h, None, &mut s, &t, None, &raw_cfg(CriterionKind::QbcAmbiguity, 0)).unwrap();
        assert_eq!(trace.acquisitions(), 0);
        assert_eq!(trace.model, trace.initial_model);
        assert_eq!(trace.steps.len(), len - trace.seeded);
        assert_eq!(trace.seeded, 18);
        assert_eq!(trace.curve.len(), 1);
    }

    #[test]
    fn provided_labels_skip_seeding() {
        let (h, s, t) = setup(2);
        let lab = t.slice_rows(0, 30).unwrap();
        let mut s2 = s.clone();
        let trace = run(&h, Some(&lab), &mut s2, &t, None, &raw_cfg(CriterionKind::HotellingT2, 0)).unwrap();
        assert_eq!(trace.seeded, 0);
        assert_eq!(trace.steps.len(), s.len());
    }

    #[test]
    fn budget_and_threshold_consistency() {
        for kind in CriterionKind::ALL {
            let (h, mut s, t) = setup(3);
            let trace = run(&h, None, &mut s, &t, None, &raw_cfg(kind, 10)).unwrap();
            assert!(trace.acquisitions() <= 10);
            for r in &trace.steps {
                assert_eq!(r.queried, r.score >= r.ucl, "{kind}: {r:?}");
            }
            assert_eq!(trace.curve.len(), trace.acquisitions() + 1);
            for w in trace.curve.windows(2) {
                assert_eq!(w[1].labeled, w[0].labeled + 1);
            }
        }
    }

    #[test]
    fn random_runs_are_reproducible() {
        let (h, s, t) = setup(4);
        let cfg = raw_cfg(CriterionKind::Random, 15);
        let a = run(&h, None, &mut s.clone(), &t, None, &cfg).unwrap();
        let b = run(&h, None, &mut s.clone(), &t, None, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_inconsistent_inputs() {
        let (h, s, t) = setup(5);
        let mut cfg = raw_cfg(CriterionKind::Random, 5);
        cfg.use_oae = true;
        assert!(run(&h, None, &mut s.clone(), &t, None, &cfg).is_err());
        let mut cfg = raw_cfg(CriterionKind::Random, 5);
        cfg.initial_labels = Some(3);
        assert!(run(&h, None, &mut s.clone(), &t, None, &cfg).is_err());
        let mut cfg = raw_cfg(CriterionKind::Random, 5);
        cfg.alpha = 1.5;
        assert!(run(&h, None, &mut s.clone(), &t, None, &cfg).is_err());
    }

    #[test]
    fn seeding_needs_enough_stream() {
        let xs = vec![DVector::zeros(2); 3];
        let mut s = StreamSource::new(xs, vec![1.0; 3]).unwrap();
        assert!(seed_initial_labels(&mut s, 4).is_err());
        let (x, y) = seed_initial_labels(&mut s, 0).unwrap();
        assert!(x.is_empty() && y.is_empty());
        let (x, _) = seed_initial_labels(&mut s, 3).unwrap();
        assert_eq!(x.len(), 3);
        assert!(s.is_exhausted());
    }
}
