use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use softsense::bench::{self, BenchConfig, DataSource, Method};
use softsense::dataset::fmt_f64;
use softsense::datagen::{generate, split, RESPONSE_NAME};
use softsense::oae::{self, OaeModel, TrainConfig};
use softsense::{engine, CriterionKind, StreamSource};

#[derive(Parser)]
#[command(name = "softsense", version, about = "Stream-based active learning for soft sensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML file with benchmark, engine, training and generator settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of the run (for `bench`, the base seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sampling rate of the control limit.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Number of labels to buy after the initial fit.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Query criterion for `run`.
    #[arg(long, global = true, value_parser = ["rnd", "hot", "qbc", "emc"])]
    criterion: Option<String>,
    /// Use the raw standardized variables instead of autoencoder features.
    #[arg(long, global = true)]
    no_oae: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic process and its historical/stream/test split.
    Generate,
    /// Train the orthogonal autoencoder on the historical pool.
    TrainOae,
    /// Run the online query loop once.
    Run {
        /// Autoencoder to use instead of training one.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Compare query strategies over many seeded runs.
    Bench {
        /// Number of runs (overrides the config).
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Redraw the figures from an existing curves.csv.
    Plot {
        /// Defaults to `<out>/curves.csv`.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<BenchConfig> {
    let mut cfg = match &common.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if let Some(alpha) = common.alpha {
        cfg.alpha = alpha;
    }
    if let Some(budget) = common.budget {
        cfg.budget = budget;
    }
    Ok(cfg)
}

fn training_for(cfg: &BenchConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        ..cfg.training.clone()
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_generate(cfg: &BenchConfig, out: &Path) -> Result<()> {
    let DataSource::Generator {
        process,
        n_samples,
        fractions,
    } = &cfg.data
    else {
        bail!("`generate` needs a generator data source in the config");
    };
    let seed = cfg.base_seed;
    let spec = softsense::datagen::ProcessConfig {
        seed,
        ..process.clone()
    }
    .build()?;
    let data = generate(&spec, *n_samples)?;
    let parts = split(&data, *fractions, true, seed)?;
    create_dir(out)?;
    data.write_csv(out.join("process.csv"), RESPONSE_NAME)?;
    parts.historical.write_csv(out.join("historical.csv"), RESPONSE_NAME)?;
    parts.stream.write_csv(out.join("stream.csv"), RESPONSE_NAME)?;
    parts.test.write_csv(out.join("test.csv"), RESPONSE_NAME)?;
    println!(
        "wrote {} samples (historical {}, stream {}, test {}) to {}",
        data.n_rows(),
        parts.historical.n_rows(),
        parts.stream.n_rows(),
        parts.test.n_rows(),
        out.display()
    );
    Ok(())
}

fn write_train_log(model: &OaeModel, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "train_loss", "val_loss"])?;
    for e in model.train_log() {
        w.write_record([e.epoch.to_string(), fmt_f64(e.train_loss), fmt_f64(e.val_loss)])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_train_oae(cfg: &BenchConfig, out: &Path) -> Result<()> {
    let data = bench::run_data(&cfg.data, cfg.base_seed)?;
    let model = bench::train_feature_extractor(&data.historical, &cfg.architecture, &training_for(cfg, cfg.base_seed))?;
    create_dir(out)?;
    oae::save_model(&model, out.join("oae.txt"))?;
    write_train_log(&model, &out.join("train_log.csv"))?;
    let last = model.train_log().last();
    println!(
        "trained {} epochs, best validation loss {}",
        model.train_log().len(),
        model
            .train_log()
            .iter()
            .map(|e| e.val_loss)
            .fold(f64::INFINITY, f64::min)
    );
    if let Some(e) = last {
        println!("last epoch {}: train {:.6} val {:.6}", e.epoch, e.train_loss, e.val_loss);
    }
    Ok(())
}

fn cmd_run(cfg: &BenchConfig, common: &Common, model_path: Option<&Path>, out: &Path) -> Result<()> {
    let criterion: CriterionKind = common.criterion.as_deref().unwrap_or("rnd").parse()?;
    let method = Method::new(criterion, !common.no_oae);
    let seed = cfg.base_seed;
    let data = bench::run_data(&cfg.data, seed)?;
    let model = match (method.use_oae, model_path) {
        (false, _) => None,
        (true, Some(p)) => Some(oae::load_model(p)?),
        (true, None) => Some(bench::train_feature_extractor(
            &data.historical,
            &cfg.architecture,
            &training_for(cfg, seed),
        )?),
    };
    let mut stream = StreamSource::from_dataset(&data.stream)?;
    let trace = engine::run(
        &data.historical,
        None,
        &mut stream,
        &data.test,
        model.as_ref(),
        &cfg.engine_config(method, seed),
    )?;
    create_dir(out)?;
    trace.write_trace_csv(out.join("trace.csv"))?;
    trace.write_curve_csv(out.join("curve.csv"))?;
    trace.model.write_csv(out.join("model.csv"))?;
    let first = trace.curve.first().map(|c| c.test_rmse).unwrap_or(f64::NAN);
    let last = trace.curve.last().map(|c| c.test_rmse).unwrap_or(f64::NAN);
    println!(
        "{method}: {} labels bought over {} stream steps, test RMSE {first:.4} -> {last:.4}",
        trace.acquisitions(),
        trace.steps.len()
    );
    Ok(())
}

fn cmd_bench(mut cfg: BenchConfig, runs: Option<usize>, out: &Path) -> Result<()> {
    if let Some(r) = runs {
        cfg.n_runs = r;
    }
    let result = bench::run_benchmark(&cfg)?;
    bench::write_outputs(&result, out)?;
    for c in &result.curves {
        let last = c.mean.len() - 1;
        println!(
            "{:<8} runs {:>3}  RMSE at {:>3} labels: {:.4} ± {:.4}",
            c.method.label(),
            c.n_runs,
            c.grid[last],
            c.mean[last],
            c.std[last]
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_plot(curves_path: Option<&Path>, out: &Path) -> Result<()> {
    let path = curves_path.map(Path::to_path_buf).unwrap_or_else(|| out.join("curves.csv"));
    let curves = bench::read_curves_csv(&path)?;
    if curves.is_empty() {
        bail!("{} holds no curves", path.display());
    }
    create_dir(out)?;
    bench::write_figures(&curves, out)?;
    println!("plotted {} curves into {}", curves.len(), out.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli.common)?;
    let out = cli.common.out.clone();
    match &cli.command {
        Command::Generate => cmd_generate(&cfg, &out),
        Command::TrainOae => cmd_train_oae(&cfg, &out),
        Command::Run { model } => cmd_run(&cfg, &cli.common, model.as_deref(), &out),
        Command::Bench { runs } => cmd_bench(cfg, *runs, &out),
        Command::Plot { curves } => cmd_plot(curves.as_deref(), &out),
    }
}
