//! Draws a synthetic process, splits it and writes the three CSV files.
//!
//! ```text
//! cargo run --example generate_process -- [out_dir]
//! ```

use softsense::datagen::{generate_with_latents, split, ProcessConfig, RESPONSE_NAME, TEP_DESCRIPTIONS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "generated".into());
    let spec = ProcessConfig { seed: 7, ..Default::default() }.build()?;
    let process = generate_with_latents(&spec, 4000)?;
    let data = &process.data;

    for (name, desc) in data.feature_names().iter().zip(TEP_DESCRIPTIONS).take(4) {
        let j = data.feature_names().iter().position(|n| n == name).unwrap();
        let col = data.features().column(j);
        println!("{name:<9} {desc:<28} mean {:>7.3}  sd {:.3}", col.mean(), col.variance().sqrt());
    }

    let parts = split(data, (0.3, 0.6, 0.1), true, 0)?;
    std::fs::create_dir_all(&out)?;
    parts.historical.write_csv(format!("{out}/historical.csv"), RESPONSE_NAME)?;
    parts.stream.write_csv(format!("{out}/stream.csv"), RESPONSE_NAME)?;
    parts.test.write_csv(format!("{out}/test.csv"), RESPONSE_NAME)?;
    println!(
        "historical {} rows (unlabeled), stream {}, test {} -> {out}/",
        parts.historical.n_rows(),
        parts.stream.n_rows(),
        parts.test.n_rows()
    );
    Ok(())
}
