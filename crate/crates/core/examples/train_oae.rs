//! Trains the orthogonal autoencoder on a historical pool, saves it and
//! compares bottleneck correlations with and without the penalty.

use nalgebra::DMatrix;
use softsense::datagen::{generate, split, ProcessSpec};
use softsense::oae::{load_model, save_model, train};
use softsense::{OaeArchitecture, Standardizer, TrainConfig};

fn off_diagonal(z: &DMatrix<f64>) -> f64 {
    let g = z.transpose() * z / z.nrows() as f64;
    let k = g.nrows();
    let sum: f64 = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| g[(i, j)].abs()).sum();
    sum / (k * (k - 1)) as f64
}

fn main() -> softsense::Result<()> {
    let data = generate(&ProcessSpec::default().with_seed(1), 2500)?;
    let parts = split(&data, (0.6, 0.2, 0.2), true, 0)?;
    let s = Standardizer::fit(&parts.historical)?;
    let h = s.apply(&parts.historical)?;
    let held_out = s.apply(&parts.test)?;
    let arch = OaeArchitecture::default();

    for lambda in [0.0, 0.1] {
        let cfg = TrainConfig { lambda, seed: 4, ..Default::default() };
        let model = train(h.features(), &arch, &cfg)?;
        let loss = model.ortho_loss(held_out.features())?;
        let z = model.encode_rows(held_out.features())?;
        println!(
            "lambda {lambda:.2}: {} epochs, held-out recon {:.4}, orth {:.4}, mean |off-diagonal| {:.4}",
            model.train_log().len(),
            loss.recon,
            loss.orth,
            off_diagonal(&z)
        );
        if lambda > 0.0 {
            let path = std::env::temp_dir().join("softsense_oae.txt");
            save_model(&model, &path)?;
            let back = load_model(&path)?;
            println!("saved to {} and reloaded: identical = {}", path.display(), back.layers() == model.layers());
        }
    }
    Ok(())
}
