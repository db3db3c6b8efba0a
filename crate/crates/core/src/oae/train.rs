//! Mini-batch Adam training with early stopping on a held-out tail.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Gradients, OaeArchitecture, OaeModel};
use crate::{Error, Result};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            learning_rate: 1e-3,
            max_epochs: 1000,
            patience: 10,
            validation_fraction: 0.20,
            lambda: super::DEFAULT_LAMBDA,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.patience < 1 {
            return Err(Error::InvalidParameter("patience must be >= 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidParameter("batch size must be >= 2".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "validation fraction must be in (0,1), got {}",
                self.validation_fraction
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

struct Adam {
    m: Gradients,
    v: Gradients,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(model: &OaeModel, lr: f64) -> Self {
        let zeros = Gradients {
            layers: model
                .layers()
                .iter()
                .map(|l| (DMatrix::zeros(l.fan_out(), l.fan_in()), DVector::zeros(l.fan_out())))
                .collect(),
        };
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
            lr,
        }
    }

    fn step(&mut self, model: &mut OaeModel, g: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let lr = self.lr;
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
        };
        for (i, layer) in model.layers_mut().iter_mut().enumerate() {
            let (gw, gb) = &g.layers[i];
            let (mw, mb) = &mut self.m.layers[i];
            let (vw, vb) = &mut self.v.layers[i];
            for k in 0..gw.len() {
                update(&mut layer.weights.as_mut_slice()[k], &mut mw.as_mut_slice()[k], &mut vw.as_mut_slice()[k], gw.as_slice()[k]);
            }
            for k in 0..gb.len() {
                update(&mut layer.bias[k], &mut mb[k], &mut vb[k], gb[k]);
            }
        }
    }
}

/// Trains an autoencoder on the rows of `data` (already standardized).
///
/// The last `validation_fraction` of rows, in index order, is held out.
/// Training stops once the validation loss has not improved for
/// `patience` epochs, and the parameters of the best validation epoch are
/// returned.
pub fn train(data: &DMatrix<f64>, arch: &OaeArchitecture, cfg: &TrainConfig) -> Result<OaeModel> {
    cfg.validate()?;
    arch.validate()?;
    let (n, p) = data.shape();
    if p != arch.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: arch.input_dim(),
            got: p,
        });
    }
    let n_val = ((n as f64) * cfg.validation_fraction).round() as usize;
    let n_train = n.saturating_sub(n_val);
    if n_val < 2 || n_train < 2 {
        return Err(Error::NotEnoughData {
            what: "rows for a training/validation split",
            needed: 4,
            got: n,
        });
    }
    let train_rows = data.rows(0, n_train).into_owned();
    let val_rows = data.rows(n_train, n_val).into_owned();

    let mut model = OaeModel::random(arch.clone(), cfg.lambda, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5EED));
    let mut adam = Adam::new(&model, cfg.learning_rate);
    let mut order: Vec<usize> = (0..n_train).collect();

    let mut best = model.clone();
    let mut best_val = model.ortho_loss(&val_rows)?.total;
    let mut since_best = 0usize;
    let mut log = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut count = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let batch = train_rows.select_rows(chunk);
            let (loss, grad) = model
                .backprop(&batch)
                .map_err(|_| Error::Diverged { epoch, loss: f64::NAN })?;
            adam.step(&mut model, &grad);
            sum += loss.total * chunk.len() as f64;
            count += chunk.len();
        }
        let val = model
            .ortho_loss(&val_rows)
            .map(|l| l.total)
            .unwrap_or(f64::NAN);
        if !val.is_finite() {
            return Err(Error::Diverged { epoch, loss: val });
        }
        log.push(EpochLog {
            epoch,
            train_loss: sum / count as f64,
            val_loss: val,
        });
        if val < best_val {
            best_val = val;
            best = model.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    best.set_train_log(log);
    Ok(best)
}
