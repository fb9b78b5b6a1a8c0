use std::path::Path;
use std::process::{Command, Output};

fn cxrlens(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cxrlens"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cxrlens(dir, args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    cxrlens(dir, args).status.code().unwrap()
}

const PREPARE: [&str; 11] = [
    "prepare",
    "--manifest",
    "fx/Data_Entry_2017.csv",
    "--image-root",
    "fx/images",
    "--train-list",
    "fx/train_val_list.txt",
    "--test-list",
    "fx/test_list.txt",
    "--out",
    "prep",
];

const TINY: [&str; 6] = ["--arch", "alexnet", "--width-divisor", "16", "--input-size", "63"];

fn prepared() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "--out", "fx", "--n", "30", "--size", "72"]);
    let mut args = PREPARE.to_vec();
    args.extend(["--fraction", "0.5"]);
    ok(d, &args);
    tmp
}

#[test]
fn train_evaluate_explain_with_pretrained_weights() {
    let tmp = prepared();
    let d = tmp.path();
    ok(d, &["pretrain", "--arch", "alexnet", "--steps", "10", "--width-divisor", "16", "--input-size", "63", "--weights", "w"]);
    assert!(d.join("w/alexnet-w16.safetensors").is_file());

    let mut train = vec!["train", "--data", "prep/train_mini.json", "--epochs", "2", "--weights", "w", "--out", "run", "-q"];
    train.extend(TINY);
    ok(d, &train);
    for f in ["history.jsonl", "loss_curve.png", "resolved_config.toml", "checkpoints/final/checkpoint.json", "checkpoints/epoch_001"] {
        assert!(d.join("run").join(f).exists(), "{f}");
    }

    let eval = ["evaluate", "--checkpoint", "run/checkpoints/final", "--data", "prep/test.json", "--out", "ev", "--no-pretrained-baseline"];
    let table = ok(d, &eval);
    assert!(table.contains("alexnet (random init)"), "{table}");
    let first = std::fs::read(d.join("ev/report.json")).unwrap();
    ok(d, &eval);
    assert_eq!(std::fs::read(d.join("ev/report.json")).unwrap(), first);
    assert!(d.join("ev/resolved_config.toml").is_file());

    ok(d, &["explain", "--checkpoint", "run/checkpoints/final", "--class", "Effusion", "--out", "cams", "fx/images/00000003_000.png"]);
    assert!(d.join("cams/00000003_000_Effusion_final.png").is_file());
    assert!(d.join("cams/00000003_000_Effusion_final.json").is_file());
}

#[test]
fn prepare_is_repeatable() {
    let tmp = prepared();
    let d = tmp.path();
    let before: Vec<Vec<u8>> = ["train.json", "test.json", "train_mini.json", "split_report.json"]
        .iter()
        .map(|f| std::fs::read(d.join("prep").join(f)).unwrap())
        .collect();
    let mut args = PREPARE.to_vec();
    args.extend(["--fraction", "0.5"]);
    ok(d, &args);
    for (f, b) in ["train.json", "test.json", "train_mini.json", "split_report.json"].iter().zip(before) {
        assert_eq!(std::fs::read(d.join("prep").join(f)).unwrap(), b, "{f}");
    }
}

#[test]
fn exit_codes() {
    let tmp = prepared();
    let d = tmp.path();
    assert_eq!(code(d, &["frobnicate"]), 2);
    assert_eq!(code(d, &["train", "--data", "prep/train.json", "--arch", "vgg16", "--out", "x"]), 2);
    assert_eq!(code(d, &["train", "--data", "missing.json", "--out", "x"]), 2);
    let mut args = PREPARE.to_vec();
    args.extend(["--fraction", "1.5"]);
    assert_eq!(code(d, &args), 2);

    let mut diverge = vec!["train", "--data", "prep/train_mini.json", "--epochs", "3", "--from-scratch", "--lr", "1e30", "--out", "bad", "-q"];
    diverge.extend(TINY);
    assert_eq!(code(d, &diverge), 3);
    let diag = std::fs::read_to_string(d.join("bad/diagnostics.json")).unwrap();
    assert!(diag.contains("batch_ids"));
}

#[test]
fn resume_with_a_different_learning_rate_is_refused() {
    let tmp = prepared();
    let d = tmp.path();
    let mut train = vec!["train", "--data", "prep/train_mini.json", "--epochs", "1", "--from-scratch", "--out", "run", "-q"];
    train.extend(TINY);
    ok(d, &train);
    let mut again = vec!["train", "--data", "prep/train_mini.json", "--epochs", "2", "--lr", "0.5", "--resume", "run/checkpoints/epoch_001", "--out", "run2", "-q"];
    again.extend(TINY);
    let out = cxrlens(d, &again);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("base_lr"));
}
