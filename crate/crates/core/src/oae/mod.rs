//! Orthogonal autoencoder.
//!
//! A fully connected encoder `p → … → k` and its mirror-image decoder
//! `k → … → p`. Hidden layers use a smooth nonlinearity (tanh by default);
//! the bottleneck and the reconstruction layers are linear.
//!
//! The training objective on a batch `X` (b × p) with bottleneck codes
//! `Z` (b × k) is
//!
//! ```text
//! recon = ‖X − X̂‖²_F / (b·p)
//! orth  = ‖ZᵀZ / b − I_k‖²_F
//! total = recon + λ·orth
//! ```
//!
//! The orthogonality term pushes the bottleneck features towards being
//! uncorrelated with unit second moment. `Z` is not centered.

mod format;
mod train;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use format::{from_text, load_model, save_model, to_text};
pub use train::{train, EpochLog, TrainConfig};

/// Default encoder widths, input to bottleneck.
pub const DEFAULT_LAYER_SIZES: [usize; 6] = [16, 160, 80, 40, 20, 10];

/// Default orthogonality weight.
pub const DEFAULT_LAMBDA: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Linear => v,
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::InvalidParameter(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OaeArchitecture {
    /// Encoder widths from input to bottleneck; the decoder mirrors them.
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
}

impl Default for OaeArchitecture {
    fn default() -> Self {
        Self {
            layer_sizes: DEFAULT_LAYER_SIZES.to_vec(),
            hidden_activation: Activation::Tanh,
        }
    }
}

impl OaeArchitecture {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        let arch = Self {
            layer_sizes,
            hidden_activation: Activation::Tanh,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidParameter(
                "an autoencoder needs at least an input and a bottleneck width".into(),
            ));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::InvalidParameter("layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn bottleneck_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// `(fan_in, fan_out, activation)` for every layer, encoder then decoder.
    fn layer_specs(&self) -> Vec<(usize, usize, Activation)> {
        let s = &self.layer_sizes;
        let n = s.len() - 1;
        let mut specs = Vec::with_capacity(2 * n);
        for i in 0..n {
            let act = if i + 1 == n { Activation::Linear } else { self.hidden_activation };
            specs.push((s[i], s[i + 1], act));
        }
        for i in (0..n).rev() {
            let act = if i == 0 { Activation::Linear } else { self.hidden_activation };
            specs.push((s[i + 1], s[i], act));
        }
        specs
    }
}

/// One fully connected layer: `a = σ(W·x + b)`, with `W` of shape out × in.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize, activation: Activation) -> Self {
        Self {
            weights: DMatrix::zeros(fan_out, fan_in),
            bias: DVector::zeros(fan_out),
            activation,
        }
    }

    /// Forward pass on a batch stored column-wise (features × samples).
    fn forward(&self, input: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = &self.weights * input;
        for mut col in out.column_iter_mut() {
            col += &self.bias;
            col.apply(|v| *v = self.activation.apply(*v));
        }
        out
    }

    pub fn fan_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.nrows()
    }
}

/// Gradient (or any per-parameter quantity) with the same layout as the
/// model's layers, encoder first.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(DMatrix<f64>, DVector<f64>)>,
}

impl Gradients {
    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .map(|(w, b)| w.amax().max(b.amax()))
            .fold(0.0, f64::max)
    }
}

/// Loss components on one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthoLoss {
    pub total: f64,
    pub recon: f64,
    pub orth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OaeModel {
    architecture: OaeArchitecture,
    lambda: f64,
    layers: Vec<Dense>,
    train_log: Vec<EpochLog>,
}

struct ForwardCache {
    /// `acts[0]` is the input, `acts[i+1]` the output of layer `i`.
    acts: Vec<DMatrix<f64>>,
}

impl OaeModel {
    /// All parameters zero.
    pub fn zeros(architecture: OaeArchitecture, lambda: f64) -> Result<Self> {
        architecture.validate()?;
        check_lambda(lambda)?;
        let layers = architecture
            .layer_specs()
            .into_iter()
            .map(|(i, o, a)| Dense::zeros(i, o, a))
            .collect();
        Ok(Self {
            architecture,
            lambda,
            layers,
            train_log: Vec::new(),
        })
    }

    /// Weights uniform in `±√(6/(fan_in+fan_out))`, biases zero.
    pub fn random(architecture: OaeArchitecture, lambda: f64, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(architecture, lambda)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut model.layers {
            let limit = (6.0 / (layer.fan_in() + layer.fan_out()) as f64).sqrt();
            layer
                .weights
                .apply(|w| *w = rng.random_range(-limit..=limit));
        }
        Ok(model)
    }

    pub fn architecture(&self) -> &OaeArchitecture {
        &self.architecture
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        check_lambda(lambda)?;
        self.lambda = lambda;
        Ok(())
    }

    /// Encoder layers followed by decoder layers.
    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn n_encoder_layers(&self) -> usize {
        self.layers.len() / 2
    }

    pub fn train_log(&self) -> &[EpochLog] {
        &self.train_log
    }

    pub(crate) fn set_train_log(&mut self, log: Vec<EpochLog>) {
        self.train_log = log;
    }

    pub fn input_dim(&self) -> usize {
        self.architecture.input_dim()
    }

    pub fn bottleneck_dim(&self) -> usize {
        self.architecture.bottleneck_dim()
    }

    fn check_input(&self, p: usize) -> Result<()> {
        if p != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: p,
            });
        }
        Ok(())
    }

    fn run_layers(&self, range: std::ops::Range<usize>, input: DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut a = input;
        for i in range {
            a = self.layers[i].forward(&a);
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue(format!("output of layer {i}")));
            }
        }
        Ok(a)
    }

    /// Bottleneck code of one observation.
    pub fn encode(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_input(x.len())?;
        let out = self.run_layers(0..self.n_encoder_layers(), DMatrix::from_column_slice(x.len(), 1, x.as_slice()))?;
        Ok(out.column(0).into_owned())
    }

    /// Decoder output for one observation.
    pub fn reconstruct(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_input(x.len())?;
        let out = self.run_layers(0..self.layers.len(), DMatrix::from_column_slice(x.len(), 1, x.as_slice()))?;
        Ok(out.column(0).into_owned())
    }

    /// Encodes every row of `x` (n × p), returning n × k.
    pub fn encode_rows(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_input(x.ncols())?;
        Ok(self.run_layers(0..self.n_encoder_layers(), x.transpose())?.transpose())
    }

    /// Reconstructs every row of `x` (n × p).
    pub fn reconstruct_rows(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_input(x.ncols())?;
        Ok(self.run_layers(0..self.layers.len(), x.transpose())?.transpose())
    }

    fn forward_cached(&self, batch_cols: DMatrix<f64>) -> ForwardCache {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(batch_cols);
        for layer in &self.layers {
            let next = layer.forward(acts.last().unwrap());
            acts.push(next);
        }
        ForwardCache { acts }
    }

    fn loss_from_cache(&self, cache: &ForwardCache) -> OrthoLoss {
        let x = &cache.acts[0];
        let xhat = cache.acts.last().unwrap();
        let (p, b) = x.shape();
        let recon = (xhat - x).norm_squared() / (b * p) as f64;
        let z = &cache.acts[self.n_encoder_layers()];
        let orth = gram_minus_identity(z).norm_squared();
        OrthoLoss {
            total: recon + self.lambda * orth,
            recon,
            orth,
        }
    }

    /// Loss components on a batch of rows (b × p), b ≥ 2.
    pub fn ortho_loss(&self, batch: &DMatrix<f64>) -> Result<OrthoLoss> {
        self.check_batch(batch)?;
        let cache = self.forward_cached(batch.transpose());
        let loss = self.loss_from_cache(&cache);
        if !loss.total.is_finite() {
            return Err(Error::NonFiniteValue("ortho loss".into()));
        }
        Ok(loss)
    }

    fn check_batch(&self, batch: &DMatrix<f64>) -> Result<()> {
        if batch.nrows() < 2 {
            return Err(Error::NotEnoughData {
                what: "rows in a batch",
                needed: 2,
                got: batch.nrows(),
            });
        }
        self.check_input(batch.ncols())
    }

    /// Exact gradient of the total loss with respect to every weight and
    /// bias, together with the loss itself.
    pub fn backprop(&self, batch: &DMatrix<f64>) -> Result<(OrthoLoss, Gradients)> {
        self.check_batch(batch)?;
        let cache = self.forward_cached(batch.transpose());
        let loss = self.loss_from_cache(&cache);
        if !loss.total.is_finite() {
            return Err(Error::NonFiniteValue("ortho loss".into()));
        }
        Ok((loss, self.backward(&cache)))
    }

    fn backward(&self, cache: &ForwardCache) -> Gradients {
        let acts = &cache.acts;
        let n_layers = self.layers.len();
        let bottleneck = self.n_encoder_layers();
        let (p, b) = acts[0].shape();

        // d recon / d X̂
        let mut grad = (&acts[n_layers] - &acts[0]) * (2.0 / (b * p) as f64);
        let mut out = vec![(DMatrix::zeros(0, 0), DVector::zeros(0)); n_layers];
        for l in (0..n_layers).rev() {
            if l + 1 == bottleneck && self.lambda != 0.0 {
                // d orth / d Z = (4/b)(ZZᵀ/b − I) Z with Z stored k × b
                let z = &acts[bottleneck];
                grad += (gram_minus_identity(z) * z) * (4.0 * self.lambda / b as f64);
            }
            let layer = &self.layers[l];
            let a_out = &acts[l + 1];
            if layer.activation != Activation::Linear {
                grad.zip_apply(a_out, |g, a| *g *= layer.activation.derivative_from_output(a));
            }
            let dw = &grad * acts[l].transpose();
            let db = DVector::from_iterator(grad.nrows(), grad.row_iter().map(|r| r.sum()));
            if l > 0 {
                grad = layer.weights.transpose() * &grad;
            }
            out[l] = (dw, db);
        }
        Gradients { layers: out }
    }
}

/// `ZZᵀ/b − I` for codes stored column-wise (k × b).
fn gram_minus_identity(z: &DMatrix<f64>) -> DMatrix<f64> {
    let (k, b) = z.shape();
    let mut g = z * z.transpose() / b as f64;
    for i in 0..k {
        g[(i, i)] -= 1.0;
    }
    g
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}
