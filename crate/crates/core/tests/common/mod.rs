//! Independent reference implementations shared by the integration tests.
//! Everything here is written with plain loops over `Vec<f64>` so that it
//! shares no code path with the library.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use softsense::bench::{BenchConfig, DataSource};
use softsense::datagen::{generate, split, ProcessConfig, ProcessSpec};
use softsense::engine::{self, EngineConfig, RunTrace};
use softsense::oae::{Activation, OaeModel};
use softsense::{CriterionKind, OaeArchitecture, RawDataset, StreamSource, TrainConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(rng))
}

pub fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Solves `A v = b` by Gauss–Jordan elimination with partial pivoting.
pub fn gauss_jordan(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for k in 0..n {
            a[col][k] /= p;
        }
        b[col] /= p;
        for row in 0..n {
            if row != col {
                let f = a[row][col];
                if f != 0.0 {
                    for k in 0..n {
                        a[row][k] -= f * a[col][k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
    }
    b
}

/// `(X̃ᵀX̃ + ridge·D) β = X̃ᵀy` with `X̃ = [1 | X]` and `D` the identity
/// with a zero in the intercept slot.
pub fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> Vec<f64> {
    let (n, d) = x.shape();
    let row = |i: usize| -> Vec<f64> {
        let mut r = vec![1.0];
        r.extend((0..d).map(|j| x[(i, j)]));
        r
    };
    let mut a = vec![vec![0.0; d + 1]; d + 1];
    let mut b = vec![0.0; d + 1];
    for i in 0..n {
        let r = row(i);
        for p in 0..=d {
            b[p] += r[p] * y[i];
            for q in 0..=d {
                a[p][q] += r[p] * r[q];
            }
        }
    }
    for j in 1..=d {
        a[j][j] += ridge;
    }
    gauss_jordan(a, b)
}

fn act(kind: Activation, v: f64) -> f64 {
    match kind {
        Activation::Tanh => v.tanh(),
        Activation::Linear => v,
    }
}

/// Per-neuron forward pass: returns every layer's output for one input.
pub fn forward_oracle(model: &OaeModel, x: &[f64]) -> Vec<Vec<f64>> {
    let mut outs = Vec::new();
    let mut a: Vec<f64> = x.to_vec();
    for layer in model.layers() {
        let mut next = Vec::with_capacity(layer.bias.len());
        for o in 0..layer.bias.len() {
            let mut s = layer.bias[o];
            for (i, ai) in a.iter().enumerate() {
                s += layer.weights[(o, i)] * ai;
            }
            next.push(act(layer.activation, s));
        }
        outs.push(next.clone());
        a = next;
    }
    outs
}

/// Bottleneck code and reconstruction from the loop oracle.
pub fn encode_reconstruct(model: &OaeModel, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let outs = forward_oracle(model, x);
    let k = model.n_encoder_layers();
    (outs[k - 1].clone(), outs.last().unwrap().clone())
}

/// Mean absolute off-diagonal entry of `(1/n) ZᵀZ` for an n × k code matrix.
pub fn mean_abs_off_diagonal(z: &DMatrix<f64>) -> f64 {
    let (n, k) = z.shape();
    let mut sum = 0.0;
    for a in 0..k {
        for b in 0..k {
            if a != b {
                let g: f64 = (0..n).map(|i| z[(i, a)] * z[(i, b)]).sum::<f64>() / n as f64;
                sum += g.abs();
            }
        }
    }
    sum / (k * (k - 1)) as f64
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A benchmark small enough for debug-speed tests: a narrow autoencoder,
/// few epochs and a short series.
pub fn small_bench(n_runs: usize, budget: usize) -> BenchConfig {
    BenchConfig {
        n_runs,
        budget,
        architecture: OaeArchitecture::new(vec![16, 12, 6]).unwrap(),
        training: TrainConfig {
            max_epochs: 8,
            ..Default::default()
        },
        data: DataSource::Generator {
            process: ProcessConfig::default(),
            n_samples: 2000,
            fractions: (0.25, 0.65, 0.1),
        },
        ..Default::default()
    }
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// A small historical/stream/test split from the default generator.
pub fn small_split(seed: u64, n: usize) -> (RawDataset, RawDataset, RawDataset) {
    let d = generate(&ProcessSpec::default().with_seed(seed), n).unwrap();
    let s = split(&d, (0.3, 0.6, 0.1), true, seed).unwrap();
    (s.historical, s.stream, s.test)
}

pub fn stream_parts(data: &RawDataset) -> (Vec<DVector<f64>>, Vec<f64>) {
    let xs = (0..data.n_rows()).map(|i| data.row(i)).collect();
    (xs, data.response().unwrap().iter().copied().collect())
}

/// Checks budget safety, threshold consistency and stream order on one
/// trace. Returns a description of the first violation.
pub fn contract_violation(trace: &RunTrace, stream_len: usize, budget: usize) -> Option<String> {
    let seeded = trace.seeded;
    let acquired = trace.acquisitions();
    if acquired > budget {
        return Some(format!("{acquired} acquisitions exceed budget {budget}"));
    }
    if acquired < budget && budget > 0 && trace.steps.len() != stream_len - seeded {
        return Some("stopped short of the budget before the stream ran out".into());
    }
    let mut bought = 0;
    for (i, s) in trace.steps.iter().enumerate() {
        if s.step != i || s.index != seeded + i {
            return Some(format!("step {i} reports step {} index {}", s.step, s.index));
        }
        if s.queried && s.score < s.ucl {
            return Some(format!("step {i} queried below the UCL"));
        }
        if !s.queried && budget > 0 && bought < budget && s.score >= s.ucl {
            return Some(format!("step {i} cleared the UCL but was discarded"));
        }
        if i > 0 && !trace.steps[i - 1].queried && trace.steps[i - 1].ucl != s.ucl {
            return Some(format!("UCL changed at step {i} without a query"));
        }
        if s.queried {
            bought += 1;
        }
    }
    if trace.curve.len() != acquired + 1 || trace.curve.iter().enumerate().any(|(c, p)| p.acquisitions != c) {
        return Some("curve is not indexed by acquisition count".into());
    }
    if budget > 0 && acquired == budget && !trace.steps.last().unwrap().queried {
        return Some("kept reading the stream after the budget was spent".into());
    }
    None
}

/// Replaces every stream observation after position `cut` with unrelated
/// values and checks that the trace up to and including `cut` is unchanged.
pub fn lookahead_violation(
    historical: &RawDataset,
    stream: &RawDataset,
    test: &RawDataset,
    oae: Option<&OaeModel>,
    cfg: &EngineConfig,
    cut: usize,
    rng: &mut ChaCha8Rng,
) -> Option<String> {
    let (xs, ys) = stream_parts(stream);
    let mut s = StreamSource::new(xs.clone(), ys.clone()).unwrap();
    let base = engine::run(historical, None, &mut s, test, oae, cfg).unwrap();
    let (mut xs2, mut ys2) = (xs, ys);
    for i in cut + 1..xs2.len() {
        xs2[i] = normal_vector(rng, xs2[i].len()) * 4.0;
        ys2[i] = rng.random_range(-50.0..50.0);
    }
    let mut s2 = StreamSource::new(xs2, ys2).unwrap();
    let other = engine::run(historical, None, &mut s2, test, oae, cfg).unwrap();
    let upto = cut.saturating_sub(base.seeded) + 1;
    let a: Vec<_> = base.steps.iter().take(upto).collect();
    let b: Vec<_> = other.steps.iter().take(upto).collect();
    if a != b {
        return Some(format!("steps before stream position {cut} depend on later observations"));
    }
    let bought = a.iter().filter(|s| s.queried).count();
    if base.curve[..=bought] != other.curve[..=bought] {
        return Some("learning curve depends on later observations".into());
    }
    None
}

pub fn random_kind(rng: &mut ChaCha8Rng) -> CriterionKind {
    CriterionKind::ALL[rng.random_range(0..4)]
}

pub fn uniform_batch(seed: u64, b: usize, p: usize) -> DMatrix<f64> {
    let mut rng = rng(seed);
    DMatrix::from_fn(b, p, |_, _| rng.random_range(-1.5..1.5))
}

/// Largest relative gap between the analytic gradient and central
/// differences with step 1e-5, over every weight and bias.
pub fn fd_max_rel_error(model: &OaeModel, x: &DMatrix<f64>) -> f64 {
    let (_, grads) = model.backprop(x).unwrap();
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    let loss = |m: &OaeModel| m.ortho_loss(x).unwrap().total;
    let mut check = |analytic: f64, fd: f64| {
        let scale = analytic.abs().max(fd.abs()).max(1e-6);
        worst = worst.max((analytic - fd).abs() / scale);
    };
    for l in 0..model.layers().len() {
        for k in 0..model.layers()[l].weights.len() {
            let orig = probe.layers()[l].weights.as_slice()[k];
            probe.layers_mut()[l].weights.as_mut_slice()[k] = orig + step;
            let up = loss(&probe);
            probe.layers_mut()[l].weights.as_mut_slice()[k] = orig - step;
            let down = loss(&probe);
            probe.layers_mut()[l].weights.as_mut_slice()[k] = orig;
            check(grads.layers[l].0.as_slice()[k], (up - down) / (2.0 * step));
        }
        for k in 0..model.layers()[l].bias.len() {
            let orig = probe.layers()[l].bias[k];
            probe.layers_mut()[l].bias[k] = orig + step;
            let up = loss(&probe);
            probe.layers_mut()[l].bias[k] = orig - step;
            let down = loss(&probe);
            probe.layers_mut()[l].bias[k] = orig;
            check(grads.layers[l].1[k], (up - down) / (2.0 * step));
        }
    }
    worst
}
