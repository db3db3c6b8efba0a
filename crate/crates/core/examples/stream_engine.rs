//! One pass of the online loop: QBC on autoencoder features.

use softsense::bench::train_feature_extractor;
use softsense::datagen::{generate, split, ProcessSpec};
use softsense::{engine, CriterionKind, EngineConfig, OaeArchitecture, StreamSource, TrainConfig};

fn main() -> softsense::Result<()> {
    let data = generate(&ProcessSpec::default().with_seed(21), 6000)?;
    let parts = split(&data, (0.25, 0.65, 0.1), true, 0)?;
    let oae = train_feature_extractor(&parts.historical, &OaeArchitecture::default(), &TrainConfig::default())?;

    let cfg = EngineConfig {
        criterion: CriterionKind::QbcAmbiguity,
        budget: 40,
        seed: 21,
        ..Default::default()
    };
    let mut stream = StreamSource::from_dataset(&parts.stream)?;
    let trace = engine::run(&parts.historical, None, &mut stream, &parts.test, Some(&oae), &cfg)?;

    println!("{} initial labels, {} bought, {} stream points seen", trace.seeded, trace.acquisitions(), trace.steps.len());
    for p in trace.curve.iter().step_by(10) {
        println!("after {:>3} queries ({:>3} labels): test RMSE {:.4}", p.acquisitions, p.labeled, p.test_rmse);
    }
    let first = trace.steps.iter().filter(|s| s.queried).take(5);
    for s in first {
        println!("queried stream index {:>4}: score {:.4} >= UCL {:.4}", s.index, s.score, s.ucl);
    }
    Ok(())
}
