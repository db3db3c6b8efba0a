use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"
n_runs = 2
budget = 8
methods = ["rnd_raw", "rnd_oae", "qbc_oae"]

[architecture]
layer_sizes = [16, 12, 6]

[training]
max_epochs = 5

[data]
kind = "generator"
n_samples = 1500
fractions = [0.3, 0.6, 0.1]
"#;

fn softsense(dir: &Path, args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_softsense"))
        .args(["--config", "cfg.toml"])
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "{args:?} failed:\n{stdout}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

#[test]
fn subcommands_produce_their_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("cfg.toml"), CONFIG).unwrap();

    softsense(dir, &["generate", "--seed", "3", "--out", "data"]);
    for f in ["process.csv", "historical.csv", "stream.csv", "test.csv"] {
        assert!(dir.join("data").join(f).is_file(), "{f}");
    }

    softsense(dir, &["train-oae", "--out", "model"]);
    assert!(dir.join("model/oae.txt").is_file());

    let msg = softsense(
        dir,
        &["run", "--criterion", "emc", "--alpha", "0.1", "--budget", "4", "--model", "model/oae.txt", "--out", "one"],
    );
    assert!(msg.contains("4 labels bought"), "{msg}");
    let trace = std::fs::read_to_string(dir.join("one/trace.csv")).unwrap();
    assert_eq!(trace.lines().filter(|l| l.ends_with(",1")).count(), 4);

    softsense(dir, &["run", "--criterion", "hot", "--no-oae", "--out", "raw"]);
    assert!(dir.join("raw/curve.csv").is_file());

    softsense(dir, &["bench", "--out", "bench"]);
    for f in ["curves.csv", "figure2a.svg", "figure2b.svg", "runs/run_001/qbc_oae/trace.csv"] {
        assert!(dir.join("bench").join(f).is_file(), "{f}");
    }
    let curves = std::fs::read_to_string(dir.join("bench/curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 3 * 9);

    softsense(dir, &["plot", "--curves", "bench/curves.csv", "--out", "replot"]);
    assert_eq!(
        std::fs::read(dir.join("replot/figure2b.svg")).unwrap(),
        std::fs::read(dir.join("bench/figure2b.svg")).unwrap()
    );
}

#[test]
fn bad_criterion_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("cfg.toml"), CONFIG).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_softsense"))
        .args(["--config", "cfg.toml", "run", "--criterion", "xyz"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
}
