mod common;

use common::{fd_max_rel_error as max_rel_error, uniform_batch as batch};
use softsense::oae::{OaeArchitecture, OaeModel};

#[test]
fn analytic_gradient_matches_central_differences() {
    let arch = OaeArchitecture::new(vec![4, 8, 3]).unwrap();
    for seed in 0..5 {
        let mut model = OaeModel::random(arch.clone(), 0.1, seed).unwrap();
        for layer in model.layers_mut() {
            layer.bias.iter_mut().enumerate().for_each(|(i, b)| *b = 0.1 * (i as f64 - 1.0));
        }
        let err = max_rel_error(&model, &batch(100 + seed, 7, 4));
        assert!(err < 1e-5, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn deeper_net_gradient_matches_central_differences() {
    let arch = OaeArchitecture::new(vec![5, 7, 4, 2]).unwrap();
    let model = OaeModel::random(arch, 0.3, 9).unwrap();
    let err = max_rel_error(&model, &batch(3, 6, 5));
    assert!(err < 1e-5, "relative error {err:e}");
}

#[test]
fn gradient_is_affine_in_lambda() {
    let arch = OaeArchitecture::new(vec![4, 8, 3]).unwrap();
    let x = batch(1, 9, 4);
    let grads = |lambda: f64| {
        let mut m = OaeModel::random(arch.clone(), 0.0, 4).unwrap();
        m.set_lambda(lambda).unwrap();
        m.backprop(&x).unwrap()
    };
    let (l0, g0) = grads(0.0);
    assert_eq!(l0.total, l0.recon);
    let (_, g1) = grads(0.1);
    let (_, g3) = grads(0.3);
    let mut orth_part = 0.0f64;
    for l in 0..g0.layers.len() {
        let pairs = [(&g0.layers[l].0, &g1.layers[l].0, &g3.layers[l].0)];
        for (a, b, c) in pairs {
            for k in 0..a.len() {
                let (d1, d3) = (b.as_slice()[k] - a.as_slice()[k], c.as_slice()[k] - a.as_slice()[k]);
                assert!((3.0 * d1 - d3).abs() < 1e-12, "layer {l}");
                orth_part = orth_part.max(d1.abs());
            }
        }
        let (a, b) = (&g0.layers[l].1, &g1.layers[l].1);
        assert!(a.iter().zip(b.iter()).all(|(u, v)| u.is_finite() && v.is_finite()));
    }
    // decoder layers do not see the penalty
    let last = g0.layers.len() - 1;
    assert_eq!(g0.layers[last], g1.layers[last]);
    assert!(orth_part > 0.0);
}
