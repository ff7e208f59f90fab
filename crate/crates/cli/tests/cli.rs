use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ranktraffic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ranktraffic"))
        .args(args)
        .output()
        .expect("spawn ranktraffic")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_config_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.cfg");
    fs::write(&good, "experiment = fixed-h-traffic\nseed = 1\n").unwrap();
    let out = ranktraffic(&["validate-config", arg(&good)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "experiment = convolved-traffic\nseed = 1\ndelta = -1\n").unwrap();
    let out = ranktraffic(&["validate-config", arg(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));

    let unseeded = dir.path().join("unseeded.cfg");
    fs::write(&unseeded, "experiment = convolved-traffic\n").unwrap();
    let out = ranktraffic(&["validate-config", arg(&unseeded)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed required for reproducibility"));
}

#[test]
fn shipped_configs_validate() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        let out = ranktraffic(&["validate-config", arg(&path)]);
        assert_eq!(out.status.code(), Some(0), "{}", path.display());
    }
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ranktraffic(&["simulate", "--N", "ten"]).status.code(), Some(1));
    let stem = dir.path().join("x");
    let out = ranktraffic(&["exact", "--N", "100", "--h", "1.5", "--output", arg(&stem)]);
    assert_eq!(out.status.code(), Some(1));
    let missing = dir.path().join("missing.csv");
    let out = ranktraffic(&["collapse", "fixed-h", "--inputs", arg(&missing), "--output", arg(&stem)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulation_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let stem = dir.path().join(format!("t{threads}"));
        let out = ranktraffic(&[
            "--threads", threads, "convolve", "--N", "3000", "--queries", "20000", "--seed", "9", "--output",
            arg(&stem),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let raw = fs::read(stem.with_extension("csv")).unwrap();
        let binned = fs::read(dir.path().join(format!("t{threads}_binned.csv"))).unwrap();
        outputs.push((raw, binned));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn graph_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    let pr = dir.path().join("pr.csv");
    let ranked = dir.path().join("rank.csv");
    let base = dir.path().join("base.csv");
    let run = |args: &[&str]| {
        let out = ranktraffic(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    run(&["generate-graph", "--nodes", "2000", "--seed", "4", "--output", arg(&graph)]);
    run(&["pagerank", "--graph", arg(&graph), "--output", arg(&pr)]);
    run(&["rank", "--scores", arg(&pr), "--output", arg(&ranked)]);
    run(&["baseline", "--model", "mixture", "--graph", arg(&graph), "--output", arg(&base)]);

    let text = fs::read_to_string(&ranked).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("node,R,score,k_est"));
    let ranks: Vec<usize> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ranks, (1..=2000).collect::<Vec<_>>());

    let text = fs::read_to_string(&base).unwrap();
    let total: f64 = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    // PageRank against in-degree grows roughly linearly.
    let text = fs::read_to_string(&pr).unwrap();
    let kp: String = text.lines().map(|l| l.split_once(',').unwrap().1.to_string() + "\n").collect();
    let kp_path = dir.path().join("kp.csv");
    fs::write(&kp_path, kp).unwrap();
    let out = run(&["fit", "--input", arg(&kp_path), "--range", "3", "100"]);
    let fit: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let slope = fit["exponent"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.3, "{slope}");
}

#[test]
fn collapse_reads_saved_curves() {
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = Vec::new();
    for (i, h) in ["0.1", "0.01"].iter().enumerate() {
        let stem = dir.path().join(format!("h{i}"));
        let out = ranktraffic(&["exact", "--N", "2000", "--h", h, "--output", arg(&stem)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        inputs.push(stem.with_extension("csv"));
    }
    let target = dir.path().join("collapse.csv");
    let out = ranktraffic(&[
        "collapse", "fixed-h", "--inputs", arg(&inputs[0]), arg(&inputs[1]), "--output", arg(&target),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&target).unwrap().starts_with("curve,Rh,t_over_h\n"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("collapse.json")).unwrap()).unwrap();
    assert!(summary["max_deviation"].as_f64().unwrap() < 0.1);
}

#[test]
fn run_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "experiment = fixed-h-traffic\nseed = 5\nn = 2000\nh_values = 0.1, 0.01\nqueries = 5000\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = ranktraffic(&["run", "--config", arg(&cfg), "--output", arg(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("manifest.json").exists());
    assert!(out_dir.join("resolved.cfg").exists());
}
