//! Runs the loop from CSV files instead of the generator, the way it would
//! be used on plant data. Pass a directory written by `generate_process`.

use softsense::dataset::load_csv;
use softsense::{engine, CriterionKind, EngineConfig, StreamSource};

fn main() -> softsense::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "generated".into());
    let historical = load_csv(format!("{dir}/historical.csv"), None)?;
    let stream = load_csv(format!("{dir}/stream.csv"), Some("y"))?;
    let test = load_csv(format!("{dir}/test.csv"), Some("y"))?;

    for kind in CriterionKind::ALL {
        let cfg = EngineConfig {
            criterion: kind,
            budget: 30,
            use_oae: false,
            ..Default::default()
        };
        let mut s = StreamSource::from_dataset(&stream)?;
        let trace = engine::run(&historical, None, &mut s, &test, None, &cfg)?;
        let last = trace.curve.last().unwrap();
        println!("{:<4} {:>3} labels after {:>4} steps, test RMSE {:.4}", kind.tag(), last.labeled, trace.steps.len(), last.test_rmse);
    }
    Ok(())
}
