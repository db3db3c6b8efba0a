//! Fits a KDE control limit to historical scores and checks the realised
//! sampling rate on fresh scores from the same distribution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use softsense::threshold::{kde_cdf, DEFAULT_ALPHA};
use softsense::{ControlLimit, CriterionKind};

fn main() -> softsense::Result<()> {
    // T² of a 5-dimensional Gaussian is chi-square with 5 degrees of freedom
    let chi = ChiSquared::new(5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let history: Vec<f64> = (0..2000).map(|_| chi.sample(&mut rng)).collect();

    let limit = ControlLimit::calibrate(CriterionKind::HotellingT2, history, DEFAULT_ALPHA)?;
    println!("bandwidth {:.4}, UCL {:.4}", limit.bandwidth, limit.ucl);
    println!("KDE CDF at the UCL: {:.6}", kde_cdf(&limit.scores, limit.bandwidth, limit.ucl));
    println!("exact chi-square 95% quantile: 11.0705");

    let stream = 20_000;
    let hits = (0..stream).filter(|_| limit.exceeds(chi.sample(&mut rng))).count();
    println!("queried {hits} of {stream} ({:.2}%)", 100.0 * hits as f64 / stream as f64);
    Ok(())
}
