use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qrl_core::io::{parse_curve_csv, Checkpoint, RunManifest};
use qrl_core::ppo::{evaluate, mean_std, EvalMode, TdTargetMode};

fn qrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_writes_curve_checkpoint_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let o = qrl(&["train", "--episodes", "10", "--seed", "7", "--out", path_str(&out), "--log-every", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("seed_7/curve.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "episode,return,moving_avg_100,seconds");
    assert_eq!(parse_curve_csv(&csv).unwrap().len(), 10);
    assert!(out.join("seed_7/checkpoint.json").exists());
    assert!(out.join("summary.csv").exists());

    let m = RunManifest::load(&out.join("manifest.json")).unwrap();
    assert_eq!(m.command, "train");
    assert_eq!(m.seeds, vec![7]);
    assert_eq!(m.config.gamma, 0.98);
    assert_eq!(m.config.lam, 0.95);
    assert_eq!(m.config.clip_eps, 0.01);
    assert_eq!(m.config.lr_actor, 1e-3);
    assert_eq!(m.config.lr_critic, 1e-5);
}

#[test]
fn invalid_flags_exit_with_usage_code() {
    let o = qrl(&["train", "--clip-eps", "-1", "--episodes", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("clip_eps"));

    assert_eq!(qrl(&["train", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(qrl(&["train", "--td-target", "q"]).status.code(), Some(2));
    assert_eq!(qrl(&["baseline", "--gamma", "2"]).status.code(), Some(2));
}

#[test]
fn baseline_is_reproducible_and_has_no_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = qrl(&["baseline", "--episodes", "10", "--seed", "7", "--out", path_str(&out)]);
        assert!(o.status.success());
        out
    };
    let a = run("a");
    let b = run("b");
    let csv_a = fs::read(a.join("seed_7/curve.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("seed_7/curve.csv")).unwrap());
    assert_eq!(parse_curve_csv(std::str::from_utf8(&csv_a).unwrap()).unwrap().len(), 10);
    assert!(!a.join("seed_7/checkpoint.json").exists());
    let stats = fs::read_to_string(a.join("stats.csv")).unwrap();
    assert!(stats.lines().any(|l| l.starts_with("all,10,")));
}

#[test]
fn unwritable_output_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    fs::write(&file, "x").unwrap();
    let out = file.join("sub");
    let o = qrl(&["baseline", "--episodes", "1", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_error_paths() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(qrl(&["eval", "--checkpoint", path_str(&missing)]).status.code(), Some(1));

    let corrupt = dir.path().join("corrupt.json");
    fs::write(&corrupt, "{\"format\": 3").unwrap();
    assert_eq!(qrl(&["eval", "--checkpoint", path_str(&corrupt)]).status.code(), Some(1));

    assert_eq!(
        qrl(&["eval", "--checkpoint", path_str(&corrupt), "--episodes", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn eval_matches_library_on_saved_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(qrl(&["train", "--episodes", "3", "--seed", "5", "--out", path_str(&out), "--log-every", "0"])
        .status
        .success());
    let ckpt_path = out.join("seed_5/checkpoint.json");
    let ckpt = Checkpoint::load(&ckpt_path).unwrap();
    assert_eq!(ckpt.episode, 3);

    // save -> load -> save
    let text = fs::read_to_string(&ckpt_path).unwrap();
    assert_eq!(ckpt.to_json(), text);

    for (mode, flag) in [(EvalMode::Sample, "sample"), (EvalMode::Argmax, "argmax")] {
        let o = qrl(&["eval", "--checkpoint", path_str(&ckpt_path), "--episodes", "4", "--seed", "11", "--mode", flag]);
        assert!(o.status.success());
        let returns = evaluate(&ckpt.policy.values, 1.0, 4, 11, mode).unwrap();
        let (m, s) = mean_std(&returns);
        let stdout = String::from_utf8(o.stdout).unwrap();
        assert!(stdout.contains(&format!("mean return {m} ± {s}")), "{stdout}");
    }
}

#[test]
fn manifest_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert!(qrl(&["train", "--episodes", "4", "--seed", "3,4", "--lam", "0.9", "--out", path_str(&first), "--log-every", "0"])
        .status
        .success());
    let manifest = first.join("manifest.json");
    assert!(qrl(&["train", "--manifest", path_str(&manifest), "--out", path_str(&second), "--log-every", "0"])
        .status
        .success());
    for seed in ["seed_3", "seed_4"] {
        for f in ["curve.csv", "checkpoint.json"] {
            assert_eq!(
                fs::read(first.join(seed).join(f)).unwrap(),
                fs::read(second.join(seed).join(f)).unwrap(),
                "{seed}/{f}"
            );
        }
    }
    let m = RunManifest::load(&second.join("manifest.json")).unwrap();
    assert_eq!(m.config.lam, 0.9);
    assert_eq!(m.seeds, vec![3, 4]);
}

#[test]
fn td_target_modes_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    for mode in ["critic_v", "max_q"] {
        let out = dir.path().join(mode);
        let o = qrl(&["train", "--episodes", "2", "--td-target", mode, "--out", path_str(&out), "--log-every", "0"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m = RunManifest::load(&out.join("manifest.json")).unwrap();
        assert_eq!(m.config.td_target_mode, mode.parse::<TdTargetMode>().unwrap());
    }
}
