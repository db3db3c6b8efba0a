//! Synthetic correlated process data.
//!
//! A handful of AR(1) latent drivers `t` (unit stationary variance) are
//! mixed into `p` observed variables through a linear map plus quadratic
//! and interaction terms, with per-variable measurement noise:
//!
//! ```text
//! tⱼ = φ·tⱼ₋₁ + √(1−φ²)·ηⱼ
//! xᵢ = Σₖ Aᵢₖ tₖ + Σ cᵢ·t_a·t_b + σᵢ·εᵢ
//! y  = Σₖ wₖ·tanh(s·tₖ)/s + γ·t₀·t₁ + σ_y·ε
//! ```
//!
//! The observed variables are strongly collinear and nonlinearly related,
//! and the response saturates in every driver (`s = 0` makes it linear).
//! A linear model on the raw variables is therefore misspecified.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::RawDataset;
use crate::{Error, Result};

/// Names of the sixteen monitored Tennessee Eastman variables, in order.
pub const TEP_VARIABLES: [&str; 16] = [
    "XMEAS_1", "XMEAS_2", "XMEAS_3", "XMEAS_4", "XMEAS_5", "XMEAS_6", "XMEAS_9", "XMEAS_10",
    "XMEAS_11", "XMEAS_13", "XMEAS_14", "XMEAS_16", "XMEAS_18", "XMEAS_19", "XMEAS_21", "XMEAS_22",
];

/// Human-readable descriptions matching [`TEP_VARIABLES`].
pub const TEP_DESCRIPTIONS: [&str; 16] = [
    "A Feed (Stream 1)",
    "D Feed (Stream 2)",
    "E Feed (Stream 3)",
    "A and C Feed (Stream 4)",
    "Recycle Flow (Stream 8)",
    "Reactor Feed Rate (Stream 6)",
    "Reactor Temperature",
    "Purge Rate (Stream 9)",
    "Separator Temperature",
    "Separator Pressure",
    "Product Separator Underflow (Stream 10)",
    "Stripper Pressure",
    "Stripper Temperature",
    "Stripper Steam Flow",
    "Reactor Cooling Water Outlet Temperature",
    "Separator Cooling Water Outlet Temperature",
];

/// Name of the response column in generated files.
pub const RESPONSE_NAME: &str = "y";

/// `coefficient · t[a] · t[b]` added to observed variable `variable`
/// (`a == b` gives a quadratic term).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearTerm {
    pub variable: usize,
    pub latents: (usize, usize),
    pub coefficient: f64,
}

/// Fully explicit generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub latent_dim: usize,
    pub observed_dim: usize,
    pub ar_coefficient: f64,
    /// `observed_dim` rows of `latent_dim` coefficients.
    pub mixing: Vec<Vec<f64>>,
    pub terms: Vec<NonlinearTerm>,
    pub noise_std: Vec<f64>,
    pub response_weights: Vec<f64>,
    /// Slope `s` of the saturating response; 0 gives a linear response.
    pub response_saturation: f64,
    /// Coefficient of `t₀·t₁` in the response.
    pub response_interaction: f64,
    pub response_noise_std: f64,
    pub seed: u64,
}

/// Compact knobs from which a [`ProcessSpec`] is drawn. This is what
/// configuration files carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessConfig {
    pub latent_dim: usize,
    pub observed_dim: usize,
    pub ar_coefficient: f64,
    /// Scale of the quadratic and interaction coefficients.
    pub nonlinearity: f64,
    pub noise_std: f64,
    pub response_saturation: f64,
    pub response_interaction: f64,
    pub response_noise_std: f64,
    /// Seeds the mixing coefficients; the plant stays fixed across runs.
    pub structure_seed: u64,
    /// Seeds the time series.
    pub seed: u64,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        Self {
            latent_dim: 4,
            observed_dim: 16,
            ar_coefficient: 0.9,
            nonlinearity: 0.6,
            noise_std: 0.3,
            response_saturation: 2.0,
            response_interaction: 0.0,
            response_noise_std: 0.5,
            structure_seed: 1_000_003,
            seed: 0,
        }
    }
}

impl ProcessConfig {
    /// Draws mixing coefficients from `structure_seed`. Every observed
    /// variable gets one quadratic and one interaction term.
    pub fn build(&self) -> Result<ProcessSpec> {
        let (q, p) = (self.latent_dim, self.observed_dim);
        if q < 2 || p < 1 {
            return Err(Error::InvalidParameter(
                "need at least two latents and one observed variable".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.structure_seed);
        let mixing: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..q).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let mut terms = Vec::with_capacity(2 * p);
        for i in 0..p {
            let a = rng.random_range(0..q);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            terms.push(NonlinearTerm {
                variable: i,
                latents: (a, a),
                coefficient: sign * self.nonlinearity * rng.random_range(0.5..1.0),
            });
            let b = rng.random_range(0..q);
            let c = (b + rng.random_range(1..q)) % q;
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            terms.push(NonlinearTerm {
                variable: i,
                latents: (b.min(c), b.max(c)),
                coefficient: sign * self.nonlinearity * rng.random_range(0.5..1.0),
            });
        }
        let response_weights = (0..q).map(|_| rng.random_range(0.5..1.5)).collect();
        let spec = ProcessSpec {
            latent_dim: q,
            observed_dim: p,
            ar_coefficient: self.ar_coefficient,
            mixing,
            terms,
            noise_std: vec![self.noise_std; p],
            response_weights,
            response_saturation: self.response_saturation,
            response_interaction: self.response_interaction,
            response_noise_std: self.response_noise_std,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Default for ProcessSpec {
    fn default() -> Self {
        ProcessConfig::default().build().expect("default process config is valid")
    }
}

impl ProcessSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (q, p) = (self.latent_dim, self.observed_dim);
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if q == 0 || p == 0 {
            return bad("dimensions must be positive");
        }
        if !(self.ar_coefficient >= 0.0 && self.ar_coefficient < 1.0) {
            return bad("AR coefficient must lie in [0, 1)");
        }
        if self.mixing.len() != p || self.mixing.iter().any(|r| r.len() != q) {
            return bad("mixing must be observed_dim × latent_dim");
        }
        if self.noise_std.len() != p || self.noise_std.iter().any(|s| !(*s > 0.0)) {
            return bad("noise_std must have observed_dim positive entries");
        }
        if self.response_weights.len() != q {
            return bad("response_weights must have latent_dim entries");
        }
        if !(self.response_saturation >= 0.0 && self.response_saturation.is_finite()) {
            return bad("response saturation must be finite and >= 0");
        }
        if !(self.response_noise_std >= 0.0) {
            return bad("response noise must be >= 0");
        }
        if q < 2 && self.response_interaction != 0.0 {
            return bad("the response interaction needs two latents");
        }
        for t in &self.terms {
            if t.variable >= p || t.latents.0 >= q || t.latents.1 >= q {
                return bad("nonlinear term index out of range");
            }
        }
        Ok(())
    }

    pub fn feature_names(&self) -> Vec<String> {
        if self.observed_dim == TEP_VARIABLES.len() {
            TEP_VARIABLES.iter().map(|s| s.to_string()).collect()
        } else {
            (1..=self.observed_dim).map(|j| format!("x{j}")).collect()
        }
    }
}

/// Observed data and the latent drivers that produced it.
#[derive(Debug, Clone)]
pub struct GeneratedProcess {
    pub data: RawDataset,
    /// n × q latent trajectories.
    pub latents: DMatrix<f64>,
}

/// Draws `n` consecutive samples; see the module docs for the model.
pub fn generate(spec: &ProcessSpec, n: usize) -> Result<RawDataset> {
    Ok(generate_with_latents(spec, n)?.data)
}

pub fn generate_with_latents(spec: &ProcessSpec, n: usize) -> Result<GeneratedProcess> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::NotEnoughData {
            what: "samples to generate",
            needed: 1,
            got: 0,
        });
    }
    let (q, p) = (spec.latent_dim, spec.observed_dim);
    let phi = spec.ar_coefficient;
    let innov = (1.0 - phi * phi).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut latents = DMatrix::zeros(n, q);
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    let mut t = vec![0.0; q];
    for row in 0..n {
        for (k, tk) in t.iter_mut().enumerate() {
            let eta: f64 = StandardNormal.sample(&mut rng);
            *tk = if row == 0 { eta } else { phi * *tk + innov * eta };
            latents[(row, k)] = *tk;
        }
        for i in 0..p {
            let lin: f64 = spec.mixing[i].iter().zip(&t).map(|(a, tk)| a * tk).sum();
            let eps: f64 = StandardNormal.sample(&mut rng);
            x[(row, i)] = lin + spec.noise_std[i] * eps;
        }
        for term in &spec.terms {
            x[(row, term.variable)] += term.coefficient * t[term.latents.0] * t[term.latents.1];
        }
        let lin: f64 = spec
            .response_weights
            .iter()
            .zip(&t)
            .map(|(w, tk)| w * saturate(*tk, spec.response_saturation))
            .sum();
        let inter = if q >= 2 { spec.response_interaction * t[0] * t[1] } else { 0.0 };
        let eps: f64 = StandardNormal.sample(&mut rng);
        y[row] = lin + inter + spec.response_noise_std * eps;
    }
    Ok(GeneratedProcess {
        data: RawDataset::new(x, spec.feature_names(), Some(y))?,
        latents,
    })
}

/// `tanh(s·t)/s`, or `t` when `s = 0`.
pub fn saturate(t: f64, s: f64) -> f64 {
    if s == 0.0 {
        t
    } else {
        (s * t).tanh() / s
    }
}

/// Historical pool (unlabeled), stream and test sets.
#[derive(Debug, Clone)]
pub struct Splits {
    pub historical: RawDataset,
    pub stream: RawDataset,
    pub test: RawDataset,
}

/// Splits `data` into `floor(n·f)` rows for each of the three fractions.
///
/// Contiguous splits take consecutive blocks in time order (historical
/// first). Otherwise rows are drawn from a seeded permutation, and each
/// block is kept in time order. The historical block loses its response.
pub fn split(data: &RawDataset, fractions: (f64, f64, f64), contiguous: bool, seed: u64) -> Result<Splits> {
    let (fh, fs, ft) = fractions;
    if [fh, fs, ft].iter().any(|f| !(*f > 0.0)) || fh + fs + ft > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "split fractions must be positive and sum to at most 1, got {fractions:?}"
        )));
    }
    if data.response().is_none() {
        return Err(Error::MissingColumn(RESPONSE_NAME.into()));
    }
    let n = data.n_rows();
    let count = |f: f64| ((n as f64) * f + 1e-9).floor() as usize;
    let (nh, ns, nt) = (count(fh), count(fs), count(ft));
    if nh == 0 || ns == 0 || nt == 0 {
        return Err(Error::NotEnoughData {
            what: "rows in every split",
            needed: 1,
            got: nh.min(ns).min(nt),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if !contiguous {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let take = |start: usize, len: usize| {
        let mut idx = order[start..start + len].to_vec();
        idx.sort_unstable();
        data.select_rows(&idx)
    };
    Ok(Splits {
        historical: take(0, nh)?.without_response(),
        stream: take(nh, ns)?,
        test: take(nh + ns, nt)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag1_autocorrelation(v: &[f64]) -> f64 {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let c0: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
        let c1: f64 = v.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        c1 / c0
    }

    #[test]
    fn latent_autocorrelation_matches_phi() {
        for phi in [0.0, 0.9] {
            let spec = ProcessConfig {
                ar_coefficient: phi,
                seed: 17,
                ..Default::default()
            }
            .build()
            .unwrap();
            let g = generate_with_latents(&spec, 5000).unwrap();
            for col in g.latents.column_iter() {
                let v: Vec<f64> = col.iter().copied().collect();
                let r = lag1_autocorrelation(&v);
                assert!((r - phi).abs() < 0.05, "phi {phi}: got {r}");
            }
        }
    }

    #[test]
    fn stationary_latent_variance() {
        let spec = ProcessSpec::default().with_seed(5);
        let g = generate_with_latents(&spec, 20000).unwrap();
        for col in g.latents.column_iter() {
            let m = col.mean();
            let var = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
            assert!((var - 1.0).abs() < 0.1, "variance {var}");
        }
    }

    #[test]
    fn linear_noiseless_mixing_has_latent_rank() {
        let mut spec = ProcessConfig {
            nonlinearity: 0.0,
            noise_std: 1e-12,
            ..Default::default()
        }
        .build()
        .unwrap();
        spec.terms.clear();
        let d = generate(&spec, 500).unwrap();
        let x = d.features();
        let mut centered = x.clone();
        let means: Vec<f64> = x.column_iter().map(|c| c.mean()).collect();
        for mut row in centered.row_iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v -= means[j];
            }
        }
        let mut sv: Vec<f64> = centered.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(sv[spec.latent_dim] < 1e-8 * sv[0]);
        assert!(sv[spec.latent_dim - 1] > 1e-3 * sv[0]);
    }

    fn r_squared(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
        let m = crate::regression::fit_ols(x, y, 0.0).unwrap();
        let ss_res = m.loss(x, y).unwrap() * y.len() as f64;
        let mean = y.mean();
        let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        1.0 - ss_res / ss_tot
    }

    #[test]
    fn response_is_driven_by_latents() {
        let cfg = ProcessConfig {
            response_noise_std: 0.1,
            seed: 9,
            ..Default::default()
        };
        let spec = cfg.build().unwrap();
        let g = generate_with_latents(&spec, 5000).unwrap();
        let y = g.data.response().unwrap();
        let s = spec.response_saturation;
        let basis = g.latents.map(|t| saturate(t, s));
        assert!(r_squared(&basis, y) > 0.9);
        // the saturation is strong enough that a linear fit on the drivers loses accuracy
        let linear = r_squared(&g.latents, y);
        assert!(linear > 0.5 && linear < r_squared(&basis, y) - 0.05, "{linear}");
    }

    #[test]
    fn default_response_noise_matches_residual() {
        let spec = ProcessSpec::default().with_seed(4);
        let g = generate_with_latents(&spec, 20_000).unwrap();
        let y = g.data.response().unwrap();
        let basis = g.latents.map(|t| saturate(t, spec.response_saturation));
        let m = crate::regression::fit_ols(&basis, y, 0.0).unwrap();
        let rmse = m.rmse(&basis, y).unwrap();
        assert!((rmse - spec.response_noise_std).abs() < 0.02 * spec.response_noise_std, "{rmse}");
    }

    #[test]
    fn zero_saturation_is_linear() {
        let cfg = ProcessConfig {
            response_saturation: 0.0,
            response_noise_std: 0.0,
            ..Default::default()
        };
        let g = generate_with_latents(&cfg.build().unwrap(), 500).unwrap();
        assert!(r_squared(&g.latents, g.data.response().unwrap()) > 1.0 - 1e-12);
        assert_eq!(saturate(0.7, 0.0), 0.7);
        assert!((saturate(0.7, 2.0) - (1.4f64).tanh() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_and_named() {
        let spec = ProcessSpec::default().with_seed(3);
        let a = generate(&spec, 50).unwrap();
        assert_eq!(a, generate(&spec, 50).unwrap());
        assert_ne!(a, generate(&spec.clone().with_seed(4), 50).unwrap());
        assert_eq!(a.feature_names()[6], "XMEAS_9");
        assert_eq!(a.n_features(), 16);
    }

    #[test]
    fn every_variable_has_both_term_kinds() {
        let spec = ProcessSpec::default();
        for i in 0..spec.observed_dim {
            let mine: Vec<_> = spec.terms.iter().filter(|t| t.variable == i).collect();
            assert!(mine.iter().any(|t| t.latents.0 == t.latents.1));
            assert!(mine.iter().any(|t| t.latents.0 != t.latents.1));
        }
    }

    #[test]
    fn invalid_specs() {
        let s = ProcessSpec {
            ar_coefficient: 1.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let mut s = ProcessSpec::default();
        s.noise_std[0] = 0.0;
        assert!(s.validate().is_err());
        assert!(generate(&ProcessSpec::default(), 0).is_err());
    }

    #[test]
    fn contiguous_split_sizes() {
        let d = generate(&ProcessSpec::default(), 1000).unwrap();
        let s = split(&d, (0.5, 0.4, 0.1), true, 0).unwrap();
        assert_eq!(s.historical.n_rows(), 500);
        assert_eq!(s.stream.n_rows(), 400);
        assert_eq!(s.test.n_rows(), 100);
        assert!(s.historical.response().is_none());
        assert_eq!(s.historical.row(0), d.row(0));
        assert_eq!(s.stream.row(0), d.row(500));
        assert_eq!(s.test.row(99), d.row(999));
        assert!(split(&d, (0.5, 0.6, 0.1), true, 0).is_err());
        assert!(split(&d, (0.0, 0.6, 0.1), true, 0).is_err());
    }

    #[test]
    fn shuffled_split_is_a_disjoint_cover() {
        let d = generate(&ProcessSpec::default(), 200).unwrap();
        let s = split(&d, (0.3, 0.3, 0.2), false, 11).unwrap();
        let mut seen = Vec::new();
        for part in [&s.historical, &s.stream, &s.test] {
            for i in 0..part.n_rows() {
                let r = part.row(i);
                let idx = (0..200).find(|&j| d.row(j) == r).unwrap();
                seen.push(idx);
            }
        }
        let total = seen.len();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), total);
        assert_eq!(total, 160);
    }
}
