//! Least squares on standardized process variables, plus a bootstrap
//! committee whose spread shows where the model is unsure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use softsense::datagen::{generate, split, ProcessSpec};
use softsense::regression::{bootstrap_committee, fit_ols};
use softsense::Standardizer;

fn main() -> softsense::Result<()> {
    let data = generate(&ProcessSpec::default().with_seed(3), 2000)?;
    let parts = split(&data, (0.3, 0.6, 0.1), true, 0)?;
    let s = Standardizer::fit(&parts.historical)?;
    let train = s.apply(&parts.stream.slice_rows(0, 60)?)?;
    let test = s.apply(&parts.test)?;
    let (x, y) = (train.features(), train.response().unwrap());

    let model = fit_ols(x, y, 0.0)?;
    println!("intercept {:.4}, {} slopes", model.intercept(), model.feature_dim());
    println!("train RMSE {:.4}", model.rmse(x, y)?);
    println!("test  RMSE {:.4}", model.rmse(test.features(), test.response().unwrap())?);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let committee = bootstrap_committee(x, y, 10, 0.0, &mut rng)?;
    for i in 0..3 {
        let preds = committee.predictions(&test.row(i))?;
        let lo = preds.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = preds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("test row {i}: committee range [{lo:.3}, {hi:.3}]");
    }
    Ok(())
}
