//! Multi-seed comparison of query strategies.
//!
//! Run `r` uses seed `base_seed + r` for the process data, the autoencoder
//! and the engine. Within a run every method sees the same split and the
//! same autoencoder, so differences between methods are paired.

mod plot;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::CriterionKind;
use crate::dataset::{fmt_f64, load_csv, RawDataset, Standardizer, StreamSource};
use crate::datagen::{generate, split, ProcessConfig};
use crate::engine::{self, EngineConfig, RunTrace};
use crate::oae::{self, OaeArchitecture, OaeModel, TrainConfig};
use crate::{Error, Result};

pub use plot::{emit_plot, render_svg};

/// A criterion paired with a feature space, written `<tag>_oae` or
/// `<tag>_raw` in configs and CSV files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Method {
    pub criterion: CriterionKind,
    pub use_oae: bool,
}

impl Method {
    pub const fn new(criterion: CriterionKind, use_oae: bool) -> Self {
        Self { criterion, use_oae }
    }

    /// `<tag>_oae` or `<tag>_raw`.
    pub fn label(&self) -> String {
        format!("{}_{}", self.criterion.tag(), if self.use_oae { "oae" } else { "raw" })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl TryFrom<String> for Method {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.label()
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (tag, space) = s.split_once('_').unwrap_or((s, "oae"));
        let use_oae = match space {
            "oae" => true,
            "raw" => false,
            other => return Err(Error::InvalidParameter(format!("unknown feature space `{other}`"))),
        };
        Ok(Self::new(tag.parse()?, use_oae))
    }
}

/// Where each run's data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    /// Fresh synthetic series per run; the process seed is overridden.
    Generator {
        #[serde(default)]
        process: ProcessConfig,
        n_samples: usize,
        /// Historical, stream and test fractions, split contiguously.
        fractions: (f64, f64, f64),
    },
    /// The same files for every run; only the seeds change.
    Csv {
        historical: PathBuf,
        stream: PathBuf,
        test: PathBuf,
        response_column: String,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Generator {
            process: ProcessConfig::default(),
            n_samples: 10_000,
            fractions: (0.15, 0.75, 0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub n_runs: usize,
    pub budget: usize,
    pub alpha: f64,
    pub base_seed: u64,
    pub committee_size: usize,
    pub ridge: f64,
    pub cov_reg: f64,
    pub architecture: OaeArchitecture,
    pub training: TrainConfig,
    pub data: DataSource,
    /// A method fails the benchmark when more than this fraction of its
    /// runs error out.
    pub max_failure_rate: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        use CriterionKind::*;
        Self {
            methods: vec![
                Method::new(Random, false),
                Method::new(Random, true),
                Method::new(HotellingT2, true),
                Method::new(QbcAmbiguity, true),
                Method::new(ExpectedModelChange, true),
            ],
            n_runs: 50,
            budget: 100,
            alpha: crate::threshold::DEFAULT_ALPHA,
            base_seed: 0,
            committee_size: crate::regression::DEFAULT_COMMITTEE_SIZE,
            ridge: 0.0,
            cov_reg: crate::criteria::DEFAULT_COV_REG,
            architecture: OaeArchitecture::default(),
            training: TrainConfig::default(),
            data: DataSource::default(),
            max_failure_rate: 0.2,
        }
    }
}

impl BenchConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::InvalidParameter("n_runs must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods to compare".into()));
        }
        if let Some((i, m)) = self.methods.iter().enumerate().find(|(i, m)| self.methods[..*i].contains(m)) {
            return Err(Error::InvalidParameter(format!("method {m} listed twice (position {i})")));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        self.architecture.validate()
    }

    /// Engine settings for one method in the run seeded with `seed`.
    pub fn engine_config(&self, method: Method, seed: u64) -> EngineConfig {
        EngineConfig {
            criterion: method.criterion,
            alpha: self.alpha,
            budget: self.budget,
            committee_size: self.committee_size,
            ridge: self.ridge,
            cov_reg: self.cov_reg,
            initial_labels: None,
            seed,
            use_oae: method.use_oae,
        }
    }
}

/// Per-run data after splitting.
pub struct RunData {
    pub historical: RawDataset,
    pub stream: RawDataset,
    pub test: RawDataset,
}

/// Loads or generates the data for run seed `seed`.
pub fn run_data(source: &DataSource, seed: u64) -> Result<RunData> {
    match source {
        DataSource::Generator {
            process,
            n_samples,
            fractions,
        } => {
            let spec = ProcessConfig {
                seed,
                ..process.clone()
            }
            .build()?;
            let data = generate(&spec, *n_samples)?;
            let s = split(&data, *fractions, true, seed)?;
            Ok(RunData {
                historical: s.historical,
                stream: s.stream,
                test: s.test,
            })
        }
        DataSource::Csv {
            historical,
            stream,
            test,
            response_column,
        } => Ok(RunData {
            historical: load_csv(historical, None)?,
            stream: load_csv(stream, Some(response_column))?,
            test: load_csv(test, Some(response_column))?,
        }),
    }
}

/// Trains the autoencoder on the standardized historical pool.
pub fn train_feature_extractor(
    historical: &RawDataset,
    arch: &OaeArchitecture,
    cfg: &TrainConfig,
) -> Result<OaeModel> {
    let s = Standardizer::fit(historical)?;
    let z = s.apply(historical)?;
    oae::train(z.features(), arch, cfg)
}

/// One (run, method) outcome. Errors are kept as strings so results stay
/// cloneable and comparable.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run: usize,
    pub method: Method,
    pub trace: std::result::Result<RunTrace, String>,
}

/// Mean ± std learning curve of one method over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub method: Method,
    /// Acquisition counts `0..=budget`.
    pub grid: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Number of successful runs aggregated.
    pub n_runs: usize,
    /// Aligned per-run curves, one row per successful run.
    pub per_run: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub curves: Vec<LearningCurve>,
    pub outcomes: Vec<RunOutcome>,
}

impl BenchResult {
    pub fn curve(&self, method: Method) -> Option<&LearningCurve> {
        self.curves.iter().find(|c| c.method == method)
    }
}

/// Maps a run's curve onto `0..=budget`: the value at `c` is the test RMSE
/// after the `c`-th acquisition. A run that ran out of stream early keeps
/// its last value.
pub fn align_curve(trace: &RunTrace, budget: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(budget + 1);
    let mut it = trace.curve.iter().peekable();
    let mut last = trace.curve[0].test_rmse;
    for c in 0..=budget {
        while let Some(p) = it.peek() {
            if p.acquisitions <= c {
                last = p.test_rmse;
                it.next();
            } else {
                break;
            }
        }
        out.push(last);
    }
    out
}

/// Column-wise mean and standard deviation (divisor R−1; 0 for R = 1).
pub fn aggregate(per_run: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let r = per_run.len();
    if r == 0 {
        return (Vec::new(), Vec::new());
    }
    let len = per_run[0].len();
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for j in 0..len {
        let m = per_run.iter().map(|c| c[j]).sum::<f64>() / r as f64;
        mean[j] = m;
        if r > 1 {
            let ss: f64 = per_run.iter().map(|c| (c[j] - m).powi(2)).sum();
            std[j] = (ss / (r - 1) as f64).sqrt();
        }
    }
    (mean, std)
}

fn run_one(cfg: &BenchConfig, run: usize) -> Vec<RunOutcome> {
    let seed = cfg.base_seed + run as u64;
    let fail_all = |msg: String| {
        cfg.methods
            .iter()
            .map(|&method| RunOutcome {
                run,
                method,
                trace: Err(msg.clone()),
            })
            .collect::<Vec<_>>()
    };
    let data = match run_data(&cfg.data, seed) {
        Ok(d) => d,
        Err(e) => return fail_all(e.to_string()),
    };
    let oae = if cfg.methods.iter().any(|m| m.use_oae) {
        let training = TrainConfig {
            seed,
            ..cfg.training.clone()
        };
        match train_feature_extractor(&data.historical, &cfg.architecture, &training) {
            Ok(m) => Some(m),
            Err(e) => return fail_all(format!("autoencoder training: {e}")),
        }
    } else {
        None
    };
    let stream = match StreamSource::from_dataset(&data.stream) {
        Ok(s) => s,
        Err(e) => return fail_all(e.to_string()),
    };
    cfg.methods
        .iter()
        .map(|&method| {
            let mut s = stream.clone();
            let model = if method.use_oae { oae.as_ref() } else { None };
            let trace = engine::run(
                &data.historical,
                None,
                &mut s,
                &data.test,
                model,
                &cfg.engine_config(method, seed),
            )
            .map_err(|e| e.to_string());
            RunOutcome { run, method, trace }
        })
        .collect()
}

/// Runs every (run, method) pair and aggregates the learning curves.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let outcomes: Vec<RunOutcome> = (0..cfg.n_runs)
        .into_par_iter()
        .flat_map_iter(|r| run_one(cfg, r))
        .collect();

    let mut curves = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let mine: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.method == method).collect();
        let failures: Vec<&String> = mine.iter().filter_map(|o| o.trace.as_ref().err()).collect();
        if failures.len() as f64 > cfg.max_failure_rate * cfg.n_runs as f64 || failures.len() == mine.len() {
            return Err(Error::BenchmarkFailed {
                method: method.label(),
                failed: failures.len(),
                total: mine.len(),
                first: failures.first().map(|s| s.to_string()).unwrap_or_default(),
            });
        }
        let per_run: Vec<Vec<f64>> = mine
            .iter()
            .filter_map(|o| o.trace.as_ref().ok())
            .map(|t| align_curve(t, cfg.budget))
            .collect();
        let (mean, std) = aggregate(&per_run);
        curves.push(LearningCurve {
            method,
            grid: (0..=cfg.budget).collect(),
            mean,
            std,
            n_runs: per_run.len(),
            per_run,
        });
    }
    Ok(BenchResult { curves, outcomes })
}

/// `method,n_labels,mean_rmse,std_rmse`
pub fn write_curves_csv(curves: &[LearningCurve], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "n_labels", "mean_rmse", "std_rmse"])?;
    for c in curves {
        for (i, &n) in c.grid.iter().enumerate() {
            w.write_record([c.method.label(), n.to_string(), fmt_f64(c.mean[i]), fmt_f64(c.std[i])])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a `curves.csv` back; per-run data is not stored there.
pub fn read_curves_csv(path: impl AsRef<Path>) -> Result<Vec<LearningCurve>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut curves: Vec<LearningCurve> = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = |i: usize, name: &str| -> Result<&str> {
            rec.get(i).ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let num = |i: usize, name: &str| -> Result<f64> {
            let t = field(i, name)?;
            t.trim().parse().map_err(|_| Error::Parse {
                row: row + 1,
                column: name.to_string(),
                value: t.to_string(),
            })
        };
        let method: Method = field(0, "method")?.parse()?;
        let n: usize = field(1, "n_labels")?.trim().parse().map_err(|_| Error::Parse {
            row: row + 1,
            column: "n_labels".into(),
            value: rec.get(1).unwrap_or("").to_string(),
        })?;
        let (mean, std) = (num(2, "mean_rmse")?, num(3, "std_rmse")?);
        match curves.iter_mut().find(|c| c.method == method) {
            Some(c) => {
                c.grid.push(n);
                c.mean.push(mean);
                c.std.push(std);
            }
            None => curves.push(LearningCurve {
                method,
                grid: vec![n],
                mean: vec![mean],
                std: vec![std],
                n_runs: 0,
                per_run: Vec::new(),
            }),
        }
    }
    Ok(curves)
}

/// Writes `figure2a.svg` (random sampling, raw vs encoded features) and
/// `figure2b.svg` (every method on encoded features) into `out`. A figure
/// with no matching curves is skipped.
pub fn write_figures(curves: &[LearningCurve], out: &Path) -> Result<()> {
    let fig_a: Vec<LearningCurve> = curves
        .iter()
        .filter(|c| c.method.criterion == CriterionKind::Random)
        .cloned()
        .collect();
    if !fig_a.is_empty() {
        emit_plot(&fig_a, out.join("figure2a.svg"), "Random sampling: raw vs encoded features")?;
    }
    let fig_b: Vec<LearningCurve> = curves.iter().filter(|c| c.method.use_oae).cloned().collect();
    if !fig_b.is_empty() {
        emit_plot(&fig_b, out.join("figure2b.svg"), "Query criteria on encoded features")?;
    }
    Ok(())
}

/// Writes `curves.csv`, `figure2a.svg` (random sampling, raw vs encoded
/// features), `figure2b.svg` (all criteria on encoded features) and one
/// `trace.csv`/`curve.csv` pair per successful run under
/// `runs/run_XXX/<method>/`.
pub fn write_outputs(result: &BenchResult, out_dir: impl AsRef<Path>) -> Result<()> {
    let out = out_dir.as_ref();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_curves_csv(&result.curves, out.join("curves.csv"))?;
    write_figures(&result.curves, out)?;
    for o in &result.outcomes {
        if let Ok(trace) = &o.trace {
            let dir = out.join(format!("runs/run_{:03}/{}", o.run, o.method.label()));
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            trace.write_trace_csv(dir.join("trace.csv"))?;
            trace.write_curve_csv(dir.join("curve.csv"))?;
        }
    }
    Ok(())
}
