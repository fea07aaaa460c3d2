use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cornercase")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    cli(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path) {
    ok(&["synth", "--out", s(dir), "--dim", "8", "--n-train", "200", "--n-test", "100", "--shift", "6", "--seed", "4"]);
}

#[test]
fn bench_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let cfg = dir.path().join("config.toml");
    let a = ok(&["bench", "--config", s(&cfg)]);
    let b = ok(&["bench", "--config", s(&cfg)]);
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 4);
    assert!(a.starts_with("method,dataset,fpr_at_95,auroc,aupr_in,aupr_out\n"));

    let md = dir.path().join("r.md");
    ok(&["bench", "--config", s(&cfg), "--format", "markdown", "--out", s(&md)]);
    let text = std::fs::read_to_string(&md).unwrap();
    assert!(text.contains("config_sha256"));
    assert_eq!(ok(&["report", "--input", s(&md), "--format", "markdown"]), text);
    assert_eq!(ok(&["report", "--input", s(&md), "--format", "csv"]), a);
}

#[test]
fn removing_a_method_only_drops_its_rows() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let cfg = dir.path().join("config.toml");
    let full = ok(&["bench", "--config", s(&cfg)]);
    let text = std::fs::read_to_string(&cfg).unwrap();
    let cut = dir.path().join("cut.toml");
    std::fs::write(&cut, text.replace("\"knn\", ", "")).unwrap();
    let partial = ok(&["bench", "--config", s(&cut)]);
    let kept: Vec<&str> = full.lines().filter(|l| !l.starts_with("knn,")).collect();
    assert_eq!(partial.lines().collect::<Vec<_>>(), kept);
}

#[test]
fn fit_score_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let d = dir.path();
    for (cmd, model) in [("fit-gmm", "g.ccm"), ("fit-knn", "k.ccm")] {
        let m = d.join(model);
        let train = d.join("id_train.bin");
        let mut args = vec![cmd, "--train", s(&train), "--out", s(&m)];
        if cmd == "fit-knn" {
            args.extend(["--k", "10"]);
        }
        ok(&args);
        ok(&["score", "--model", s(&m), "--input", s(&d.join("id_test.bin")), "--label", "id", "--out", s(&d.join("id.jsonl"))]);
        ok(&["score", "--model", s(&m), "--input", s(&d.join("ood.bin")), "--label", "ood", "--out", s(&d.join("ood.jsonl"))]);
        let csv = ok(&["eval", "--scores", s(&d.join("id.jsonl")), s(&d.join("ood.jsonl"))]);
        assert_eq!(csv.lines().count(), 2);
        let auroc: f64 = csv.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
        assert!(auroc >= 99.0, "{cmd}: {csv}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let d = dir.path();
    assert_eq!(code(&["bench"]), 2);
    let text = std::fs::read_to_string(d.join("config.toml")).unwrap();

    let no_ood = d.join("no_ood.toml");
    let cut = text.split("[[ood]]").next().unwrap().to_string();
    std::fs::write(&no_ood, cut).unwrap();
    assert_eq!(code(&["bench", "--config", s(&no_ood)]), 2);

    let newer = d.join("newer.toml");
    std::fs::write(&newer, text.replace("schema = 1", "schema = 99")).unwrap();
    let out = cli(&["bench", "--config", s(&newer)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("newer"));

    ok(&["synth", "--out", s(&d.join("other")), "--dim", "5", "--n-train", "20", "--n-test", "10", "--seed", "1"]);
    let mismatch = d.join("mismatch.toml");
    std::fs::write(&mismatch, text.replace("path = \"ood.bin\"", &format!("path = {:?}", s(&d.join("other/ood.bin"))))).unwrap();
    let out = cli(&["bench", "--config", s(&mismatch)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains('5') && err.contains('8'), "{err}");

    let missing = d.join("missing.toml");
    std::fs::write(&missing, text.replace("ood.bin", "gone.bin")).unwrap();
    assert_eq!(code(&["bench", "--config", s(&missing)]), 4);
}

#[test]
fn image_benchmark_with_fog_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--images", "--out", s(d), "--n-train", "40", "--n-test", "20", "--seed", "2"]);
    let cfg = d.join("config.toml");
    let text = std::fs::read_to_string(&cfg).unwrap();
    std::fs::write(&cfg, text.replace("k = 40", "k = 5")).unwrap();
    let report = ok(&["bench", "--config", s(&cfg), "--format", "markdown"]);
    for needle in ["## Sweep", "## Correlations", "| fog_depth | depth_maps |", "| gmm | fog | 0.005 |", "| gmm | fog | 0.02 |"] {
        assert!(report.contains(needle), "missing {needle}:\n{report}");
    }
    assert_eq!(report, ok(&["bench", "--config", s(&cfg), "--format", "markdown"]));
}

#[test]
fn sweep_and_corrupt_write_images() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--images", "--out", s(&d.join("bench")), "--n-train", "3", "--n-test", "2", "--seed", "2"]);
    let input = d.join("bench/id_test");
    let out = d.join("swept");
    ok(&["sweep", "--input", s(&input), "--kind", "fog", "--preset", "fog-paper", "--out", s(&out), "--seed", "7"]);
    for sev in ["0.005", "0.01", "0.02"] {
        assert!(out.join("fog").join(sev).join("test-00001.png").exists());
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("fog/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["entries"].as_array().unwrap().len(), 6);
    assert_eq!(manifest["depth_source"], "ramp_300m_to_5m");
    assert_eq!(manifest["atmospheric_light"], 0.92);

    ok(&["sweep", "--input", s(&input), "--kind", "whitebox", "--grid", "0.01,0.05", "--out", s(&out)]);
    assert!(out.join("white_box/0.05/test-00000.png").exists());
    assert_eq!(code(&["sweep", "--input", s(&input), "--kind", "fog", "--grid", "0.02,0.01", "--out", s(&out)]), 2);

    let one = d.join("one.png");
    ok(&["corrupt", "--input", s(&input.join("test-00000.png")), "--kind", "noise", "--severity", "0.02", "--seed", "3", "--out", s(&one)]);
    let two = d.join("two.png");
    ok(&["corrupt", "--input", s(&input.join("test-00000.png")), "--kind", "noise", "--severity", "0.02", "--seed", "3", "--out", s(&two)]);
    assert_eq!(std::fs::read(&one).unwrap(), std::fs::read(&two).unwrap());
}

#[test]
fn pca_export() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let d = dir.path();
    let out = d.join("pca.jsonl");
    let train = format!("train={}", s(&d.join("id_train.bin")));
    let ood = format!("ood={}", s(&d.join("ood.bin")));
    ok(&["pca", "--input", &train, &ood, "--components", "3", "--out", s(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 300);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["dataset"], "train");
    assert_eq!(first["coords"].as_array().unwrap().len(), 3);
}
