//! A small multi-seed comparison of every criterion, with CSV and SVG
//! output.
//!
//! ```text
//! cargo run --release --example benchmark -- [out_dir] [runs]
//! ```

use softsense::bench::{run_benchmark, write_outputs, BenchConfig};

fn main() -> softsense::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "bench_out".into());
    let cfg = BenchConfig {
        n_runs: args.next().and_then(|r| r.parse().ok()).unwrap_or(5),
        budget: 60,
        ..Default::default()
    };
    let result = run_benchmark(&cfg)?;
    write_outputs(&result, &out)?;

    println!("{:<8} {:>9} {:>9} {:>9}", "method", "c=10", "c=30", "c=60");
    for c in &result.curves {
        println!("{:<8} {:>9.4} {:>9.4} {:>9.4}", c.method.label(), c.mean[10], c.mean[30], c.mean[60]);
    }
    println!("curves.csv, figure2a.svg and figure2b.svg written to {out}/");
    Ok(())
}
