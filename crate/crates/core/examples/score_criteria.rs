//! Scores a few stream points with each informativeness criterion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use softsense::criteria::{score, CriterionKind, CriterionState, GaussianSummary};
use softsense::datagen::{generate, ProcessSpec};
use softsense::regression::{bootstrap_committee, fit_ols};
use softsense::Standardizer;

fn main() -> softsense::Result<()> {
    let data = generate(&ProcessSpec::default().with_seed(11), 400)?;
    let s = Standardizer::fit(&data)?;
    let data = s.apply(&data)?;
    let labeled = data.slice_rows(0, 40)?;
    let (x, y) = (labeled.features(), labeled.response().unwrap());

    let model = fit_ols(x, y, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let committee = bootstrap_committee(x, y, 10, 0.0, &mut rng)?;
    let summary = GaussianSummary::fit(x, 1e-6)?;
    let mut draws = ChaCha8Rng::seed_from_u64(6);

    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "row", "rnd", "hot", "qbc", "emc");
    for i in [50, 150, 250, 350] {
        let z = data.row(i);
        let mut state = CriterionState {
            summary: Some(&summary),
            committee: Some(&committee),
            model: Some(&model),
            rng: Some(&mut draws),
        };
        let mut row = Vec::new();
        for kind in CriterionKind::ALL {
            row.push(score(kind, &mut state, &z)?);
        }
        println!("{i:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}", row[0], row[1], row[2], row[3]);
    }
    Ok(())
}
