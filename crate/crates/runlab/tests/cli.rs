use std::path::Path;

use xferlab::cli::main_with_args;
use xferlab::{ExperimentConfig, ResultTable, RunError};

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("xferlab").chain(args.iter().copied()))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn config_error(text: &str) -> (String, String) {
    match ExperimentConfig::parse(text) {
        Err(RunError::ConfigInvalid { path, message }) => (path, message),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn config_errors_name_the_field() {
    assert_eq!(config_error("[data]\nbetaz = [0.5]\n").0, "data.betaz");
    assert_eq!(config_error("colour = 1\n").0, "colour");
    assert_eq!(config_error("[glm]\nks = [\"a\"]\n").0, "glm.ks[0]");
    assert_eq!(config_error("[data]\nbetas = [0.5, 1.5]\n").0, "data.betas");
    assert_eq!(config_error("seeds = []\n").0, "seeds");
    assert_eq!(config_error("[bob]\nlr = -1.0\n").0, "bob");
    assert_eq!(config_error("[layer_sweep]\nells = [0]\n").0, "layer_sweep.ells");
}

#[test]
fn config_file_round_trips() {
    let text = "experiment = \"corr_check\"\nseed = 7\nseeds = [3, 4]\n[data]\nbetas = [0.25]\n[corr_check]\nn = 500\n";
    let cfg = ExperimentConfig::parse(text).unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o").to_string_lossy().into_owned();
    let bad = write(dir.path(), "bad.toml", "[data]\nbetaz = 1\n");
    assert_eq!(run(&["--config", &bad, "--out", &out, "corr-check"]), 2);
    assert_eq!(run(&["--config", "/nonexistent/cfg.toml", "--out", &out, "corr-check"]), 2);
    assert_eq!(run(&["--jobs", "0", "--out", &out, "corr-check"]), 2);
    assert_eq!(run(&["no-such-command"]), 2);
    assert_eq!(run(&["--help"]), 0);

    // The config names one experiment, the command another.
    let other = write(dir.path(), "other.toml", "experiment = \"glm_sweep\"\n");
    assert_eq!(run(&["--config", &other, "--out", &out, "corr-check"]), 2);

    // Unreadable data file.
    let junk = write(dir.path(), "junk.xfl", "not a dataset");
    assert_eq!(run(&["corr-check", "--in", &junk]), 3);
    // Unknown IDX domain prefix.
    let idx = write(dir.path(), "idx.toml", "[data]\nleft = \"/nonexistent/mnist\"\nleft_test = \"/nonexistent/t\"\n");
    assert_eq!(run(&["--config", &idx, "--out", &out, "corr-check"]), 3);
}

#[test]
fn dataset_train_finetune_attribute_plot() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    let (train, test) = (p("train.xfl"), p("test.xfl"));
    assert_eq!(run(&["--seed", "1", "--out", &train, "make-dataset", "--beta", "0.5", "--n", "400"]), 0);
    assert_eq!(run(&["--seed", "2", "--out", &test, "make-dataset", "--beta", "0.5", "--n", "200", "--test-split"]), 0);
    assert_eq!(&std::fs::read(&train).unwrap()[..4], b"XFL1");
    assert_eq!(run(&["corr-check", "--in", &train]), 0);

    let cfg = write(dir.path(), "c.toml", "[alice]\nepochs = 1\n[bob]\nepochs = 1\n");
    let (alice, bob) = (p("alice.xfn"), p("bob.xfn"));
    let code = run(&["--config", &cfg, "--out", &p("t"), "train", "--data", &train, "--test", &test, "--save", &alice]);
    assert_eq!(code, 0);
    assert_eq!(&std::fs::read(&alice).unwrap()[..4], b"XFN1");
    let code = run(&[
        "--config", &cfg, "--out", &p("f"), "finetune", "--checkpoint", &alice, "--data", &train, "--test", &test, "--ell", "3",
        "--save", &bob,
    ]);
    assert_eq!(code, 0);
    assert_eq!(run(&["--out", &p("f"), "finetune", "--checkpoint", &alice, "--data", &train, "--ell", "9"]), 2);

    let code = run(&["--out", &p("a"), "attribute", "--checkpoint", &bob, "--data", &test, "--samples", "5", "--steps", "8"]);
    assert_eq!(code, 0);
    let sides = ResultTable::load_csv(&dir.path().join("a/attribution_sides.csv")).unwrap();
    assert_eq!(sides.rows.len(), 5);
    let hist: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a/attribution_hist.json")).unwrap()).unwrap();
    for key in ["bin_edges", "left_density", "right_density"] {
        assert!(hist[key].is_array(), "{key}");
    }

    let log = p("t/train_log.csv");
    assert_eq!(run(&["plot", "--in", &log, "--x", "epoch", "--y", "mean_loss", "--svg", &p("loss.svg")]), 0);
    assert!(std::fs::read_to_string(p("loss.svg")).unwrap().starts_with("<svg"));
    assert_eq!(run(&["plot", "--in", &log, "--x", "epoch", "--y", "nope", "--svg", &p("x.svg")]), 2);
}
