use std::fs;
use std::path::Path;

use condforest_cli::{run, EXIT_INVALID, EXIT_OK, EXIT_VERDICT};

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("condforest").chain(args.iter().copied()))
}

fn golden(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

#[test]
fn condition_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(cli(&["condition", "--law", "binary", "--k", "2", "--n", "4", "--seed", "7", "--out", out]), EXIT_OK);
    let forest = fs::read_to_string(dir.path().join("forest.json")).unwrap();
    let walk = fs::read_to_string(dir.path().join("walk.csv")).unwrap();
    assert_eq!(forest, golden("condition_binary_k2_n4_seed7/forest.json"));
    assert_eq!(walk, golden("condition_binary_k2_n4_seed7/walk.csv"));
}

#[test]
fn infeasible_conditioning_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(cli(&["condition", "--law", "binary", "--k", "1", "--n", "2", "--seed", "1", "--out", out]), EXIT_INVALID);
    assert!(!dir.path().join("forest.json").exists());
}

#[test]
fn help_and_bad_flags() {
    assert_eq!(cli(&["--help"]), EXIT_OK);
    assert_eq!(cli(&["condition", "--help"]), EXIT_OK);
    assert_eq!(cli(&["bogus"]), EXIT_INVALID);
    assert_eq!(cli(&["condition", "--k", "x"]), EXIT_INVALID);
    assert_eq!(cli(&[]), EXIT_INVALID);
}

#[test]
fn seed_is_mandatory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(cli(&["condition", "--law", "binary", "--k", "2", "--n", "4", "--out", out]), EXIT_INVALID);
    assert_eq!(cli(&["sample-forest", "--law", "binary", "--k", "2", "--out", out]), EXIT_INVALID);
    assert_eq!(cli(&["stable-sim", "--alpha", "1.5", "--out", out]), EXIT_INVALID);
}

#[test]
fn config_file_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    fs::write(&cfg, format!("# conditioned forest\nlaw = binary\nk = 2\nn = 4\nseed = 7\nout = {}\n", a.display())).unwrap();
    assert_eq!(cli(&["condition", "--config", cfg.to_str().unwrap()]), EXIT_OK);
    assert_eq!(fs::read_to_string(a.join("walk.csv")).unwrap(), golden("condition_binary_k2_n4_seed7/walk.csv"));
    // flags override the file
    assert_eq!(
        cli(&["condition", "--config", cfg.to_str().unwrap(), "--n", "10", "--out", b.to_str().unwrap()]),
        EXIT_OK
    );
    assert_eq!(fs::read_to_string(b.join("walk.csv")).unwrap().lines().count(), 12);
    fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(cli(&["condition", "--config", cfg.to_str().unwrap()]), EXIT_INVALID);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["x", "y"] {
        let out = dir.path().join(sub);
        let args = ["sample-forest", "--law", "pmf:0.5,0.3,0.2", "--k", "5", "--seed", "3", "--out", out.to_str().unwrap()];
        assert_eq!(cli(&args), EXIT_OK);
    }
    for file in ["forest.json", "walk.csv", "heights.csv", "contour.csv"] {
        assert_eq!(fs::read(dir.path().join("x").join(file)).unwrap(), fs::read(dir.path().join("y").join(file)).unwrap());
    }
}

#[test]
fn artifacts_feed_transform() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = first.to_str().unwrap();
    assert_eq!(cli(&["condition", "--law", "geometric", "--k", "3", "--n", "30", "--seed", "2", "--out", out]), EXIT_OK);
    for (input, sub) in [("forest.json", "from_json"), ("walk.csv", "from_csv")] {
        let target = dir.path().join(sub);
        let source = first.join(input);
        let args = [
            "transform",
            "--input",
            source.to_str().unwrap(),
            "--out",
            target.to_str().unwrap(),
            "--distances",
            "true",
        ];
        assert_eq!(cli(&args), EXIT_OK);
        assert_eq!(fs::read(first.join("walk.csv")).unwrap(), fs::read(target.join("walk.csv")).unwrap());
        assert!(target.join("distances.csv").exists());
        assert!(target.join("contour.csv").exists());
    }
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(cli(&["transform", "--input", empty.to_str().unwrap(), "--out", out]), EXIT_INVALID);
}

#[test]
fn stable_sim_writes_paths_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(cli(&["stable-sim", "--alpha", "1.5", "--s", "1", "--grid-n", "20001", "--seed", "4", "--out", out]), EXIT_OK);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary.get("g").is_some());
    assert!(dir.path().join("path.csv").exists());
    assert_eq!(cli(&["stable-sim", "--alpha", "0.5", "--seed", "4", "--out", out]), EXIT_INVALID);
}

#[test]
fn verify_and_experiment_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let ok = ["verify", "--law", "binary", "--k", "3", "--n", "41", "--trials", "2000", "--checks", "shift,commutation", "--seed", "5", "--out", out];
    assert_eq!(cli(&ok), EXIT_OK);
    assert!(dir.path().join("verify.json").exists());
    // T(0) = 0 makes the passage time far from uniform when k < n
    let bad = ["verify", "--law", "binary", "--k", "3", "--n", "41", "--trials", "5000", "--checks", "uniformity", "--seed", "5", "--out", out];
    assert_eq!(cli(&bad), EXIT_VERDICT);

    let exp = ["experiment", "--law", "geometric", "--n-values", "400,1600", "--samples", "200", "--seed", "1", "--out", out];
    assert_eq!(cli(&exp), EXIT_OK);
    for file in ["report.json", "report.csv", "ks.svg", "sup_hc.svg"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
    let strict = ["experiment", "--law", "geometric", "--n-values", "400", "--samples", "50", "--ks-max", "0.0", "--ks-min-n", "1", "--seed", "1", "--out", out];
    assert_eq!(cli(&strict), EXIT_VERDICT);
    let subcritical = ["experiment", "--law", "pmf:0.6,0.2,0.2", "--seed", "1", "--out", out];
    assert_eq!(cli(&subcritical), EXIT_INVALID);
}
