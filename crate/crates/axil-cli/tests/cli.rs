//! End-to-end runs of the `axil` binary: generate → solve → bench →
//! summarize/heatmap, plus exit-code behavior on bad input.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn axil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_axil"))
        .args(args)
        .output()
        .expect("spawning axil")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("axil_cli_{tag}_{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_str(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn generate_then_solve_round_trip() {
    let dir = workdir("gen_solve");
    let inst = dir.join("inst.json");
    let out = axil(&[
        "generate",
        "--seed",
        "7",
        "--n-apps",
        "10",
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&inst).unwrap()).unwrap();
    assert_eq!(doc["apps"].as_array().unwrap().len(), 10);
    assert_eq!(doc["gen_params"]["seed"], 7);
    assert_eq!(doc["catalog"].as_array().unwrap().len(), 21);

    let report = stdout_str(&axil(&["solve", "--instance", inst.to_str().unwrap()]));
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["status"], "heuristic_complete");
    assert_eq!(report["feasible"], true);
    let h_score = report["score"].as_f64().unwrap();

    let exact = stdout_str(&axil(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--algo",
        "S",
    ]));
    let exact: serde_json::Value = serde_json::from_str(&exact).unwrap();
    assert_eq!(exact["status"], "optimal");
    assert!(exact["score"].as_f64().unwrap() >= h_score);

    let ga = stdout_str(&axil(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--algo",
        "G_200",
    ]));
    let ga: serde_json::Value = serde_json::from_str(&ga).unwrap();
    assert!(ga["score"].as_f64().unwrap() <= exact["score"].as_f64().unwrap());

    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn solve_honors_bounds_and_initial_files() {
    let dir = workdir("bounds");
    let inst = dir.join("inst.json");
    axil(&[
        "generate",
        "--seed",
        "3",
        "--n-apps",
        "4",
        "--out",
        inst.to_str().unwrap(),
    ]);

    // Pin every app to off via bounds; the only answer is all-off.
    let bounds = dir.join("bounds.json");
    fs::write(&bounds, "[[0,0],[0,0],[0,0],[0,0]]").unwrap();
    let report = stdout_str(&axil(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--bounds",
        bounds.to_str().unwrap(),
    ]));
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["score"].as_f64().unwrap(), 0.0);
    assert_eq!(report["candidate"], serde_json::json!([0, 0, 0, 0]));

    // A feasible initial candidate is a valid starting point.
    let initial = dir.join("start.json");
    fs::write(&initial, "[0,0,0,0]").unwrap();
    let out = axil(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--initial",
        initial.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bench_summarize_heatmap_pipeline() {
    let dir = workdir("bench");
    let runs = dir.join("runs.csv");
    let out = axil(&[
        "bench",
        "--preset",
        "quick",
        "--repetitions",
        "3",
        "--out",
        runs.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&runs).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "seed,n_apps,max_modes,density,algo,score,rel_score_pct,feasible,status,elapsed_us,counters_json"
    );
    assert_eq!(text.lines().count(), 1 + 3 * 3); // header + reps x algos

    let summary = stdout_str(&axil(&["summarize", "--in", runs.to_str().unwrap()]));
    assert!(summary.starts_with("algo,n_apps,max_modes,density,n,success_rate"));
    // One row per algorithm (single cell).
    assert_eq!(summary.trim().lines().count(), 1 + 3);
    let h_row: Vec<&str> = summary
        .lines()
        .find(|l| l.starts_with("H,"))
        .unwrap()
        .split(',')
        .collect();
    assert_eq!(h_row[5], "1"); // H success rate

    let heat = stdout_str(&axil(&[
        "heatmap",
        "--in",
        runs.to_str().unwrap(),
        "--reference",
        "S",
    ]));
    let mut rows = heat.trim().lines();
    assert_eq!(
        rows.next().unwrap(),
        "n_apps,max_modes,density,reference,score_ratio,time_ratio,success_ratio,h_success_rate,ref_success_rate"
    );
    let cell: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert_eq!(cell[0], "20");
    let score_ratio: f64 = cell[4].parse().unwrap();
    assert!(score_ratio > 0.0 && score_ratio <= 1.0);

    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bench_reruns_differ_only_in_elapsed_columns() {
    let dir = workdir("determinism");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for path in [&a, &b] {
        let out = axil(&[
            "bench",
            "--preset",
            "quick",
            "--repetitions",
            "2",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let strip = |path: &PathBuf| -> Vec<String> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| {
                let mut cols: Vec<&str> = l.split(',').collect();
                // elapsed_us is column 9; counters_json may itself contain
                // commas, so blank the column by index from the left.
                if cols.len() > 9 {
                    cols[9] = "-";
                }
                cols.join(",")
            })
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bench_print_config_emits_valid_config_json() {
    let printed = stdout_str(&axil(&["bench", "--preset", "standard", "--print-config"]));
    let v: serde_json::Value = serde_json::from_str(&printed).unwrap();
    assert_eq!(v["n_apps"], serde_json::json!([20]));
    assert_eq!(v["repetitions"], 200);
    let ids: Vec<&str> = v["algos"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["kind"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"heuristic") && ids.contains(&"exact") && ids.contains(&"genetic"));

    // The printed config round-trips through --config.
    let dir = workdir("printcfg");
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, &printed).unwrap();
    let again = stdout_str(&axil(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--print-config",
    ]));
    assert_eq!(again, printed);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_errors_exit_nonzero() {
    assert!(
        !axil(&["bench", "--preset", "bogus", "--out", "/tmp/x.csv"])
            .status
            .success()
    );
    assert!(!axil(&["bench", "--out", "/tmp/x.csv"]).status.success());
    assert!(!axil(&["solve", "--instance", "/nonexistent.json"])
        .status
        .success());
    assert!(!axil(&["generate", "--density", "2.0"]).status.success());
    assert!(!axil(&["summarize", "--in", "/nonexistent.csv"])
        .status
        .success());

    // Bad config file contents also fail loudly.
    let dir = workdir("badcfg");
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, "{\"repetitions\": 0}").unwrap();
    let out = axil(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        "/tmp/x.csv",
    ]);
    assert!(!out.status.success());
    fs::remove_dir_all(&dir).unwrap();
}
