use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_banditlab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
horizon = 400
replications = 6
seed = 3
metrics = ["ee", "suboptimal", "statistical"]

[policy]
name = "ucb1"

[environment]
kind = "stochastic"
arms = [{ dist = "bernoulli", p = 0.9 }, { dist = "bernoulli", p = 0.6 }]
"#;

#[test]
fn run_writes_results_and_report_reads_them() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("out");
    let o = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2", "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["series.csv", "summary.json", "regret.svg"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(csv.starts_with("step,ee_mean,ee_sd,suboptimal_mean,suboptimal_sd,stat_lo_mean,stat_lo_sd,stat_hi_mean,stat_hi_sd\n"));
    assert_eq!(csv.lines().count(), 401);

    let o = run(&["report", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("ucb1"));
    assert!(text.contains("below"));
}

#[test]
fn seed_override_and_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let go = |dir: &str, extra: &[&str]| {
        let out = tmp.path().join(dir);
        let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert!(run(&args).status.success());
        std::fs::read(out.join("series.csv")).unwrap()
    };
    let a = go("a", &["--workers", "1"]);
    let b = go("b", &["--workers", "4"]);
    let c = go("c", &["--seed", "99"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn plot_redraws_the_chart() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("out");
    assert!(run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    assert!(!out.join("regret.svg").exists());
    let o = run(&["plot", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(out.join("regret.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline class=\"series\"").count(), 4);
}

#[test]
fn list_policies_covers_every_family() {
    let o = run(&["list-policies"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["epsilon-greedy", "ucb1", "kl-ucb", "thompson", "exp3", "linucb", "sw-ucb", "hoo", "mp-ts"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} not listed");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = [
        SMALL.replace("horizon = 400", "horizon = 0"),
        SMALL.replace("name = \"ucb1\"", "name = \"ucb1\"\nalpha = 2"),
        SMALL.replace("name = \"ucb1\"", "name = \"linucb\"\nalpha = 1.0"),
        SMALL.replace("name = \"ucb1\"", "name = \"hoo\""),
        "not = [valid".to_string(),
    ];
    for (i, text) in bad.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("bad{i}.toml"), text);
        let o = run(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let o = run(&["run", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    // A regular file where the output directory should go.
    let blocker = write(tmp.path(), "blocker", "");
    let o = run(&["run", cfg.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("blocker"));
    let o = run(&["report", tmp.path().join("nowhere").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn shipped_configs_run() {
    let tmp = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        // Shrink the run; the shipped horizons are for real experiments.
        let text = std::fs::read_to_string(&path).unwrap();
        let text = text
            .lines()
            .map(|l| match l.split_once('=') {
                Some((k, _)) if k.trim() == "replications" => "replications = 2".to_string(),
                _ => l.to_string(),
            })
            .collect::<Vec<_>>()
            .join("\n");
        let cfg = write(tmp.path(), path.file_name().unwrap().to_str().unwrap(), &text);
        let out = tmp.path().join(path.file_stem().unwrap());
        let o = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        seen += 1;
    }
    assert!(seen >= 8);
}
