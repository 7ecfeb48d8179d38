use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn tunekit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tunekit"))
        .args(args)
        .current_dir(dir)
        .env("TUNEKIT_LOG_DIR", dir.join("logs"))
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn tunekit")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Json {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

const SPARK_MODEL: &str = r#"
base_ms = 20000

[terms."spark.task.cpus"]
weight = 2.0
optimum = 5
[terms."spark.memory.storageFraction"]
weight = 1.0
optimum = 0.72
[terms."spark.network.timeout"]
weight = 1.0
optimum = 150
[terms."spark.memory.fraction"]
weight = 0.5
optimum = 0.65
[terms."spark.shuffle.file.buffer"]
weight = 0.5
optimum = 128
[terms."spark.scheduler.listenerbus.eventqueue.capacity"]
weight = 0.2
optimum = 10000
[terms."spark.files.openCostInBytes"]
weight = 0.2
optimum = 4194304
[terms."spark.storage.memoryMapThreshold"]
weight = 0.2
optimum = 2
[terms."spark.files.maxPartitionBytes"]
weight = 0.2
optimum = 134217728
[terms."spark.default.parallelism"]
weight = 0.3
optimum = 16
[terms."spark.scheduler.mode"]
weight = 0.3
optimum = "FAIR"
"#;

fn with_model() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.cfg"), SPARK_MODEL).unwrap();
    dir
}

#[test]
fn grid_happy_path_writes_the_best_config() {
    let dir = with_model();
    let o = tunekit(
        dir.path(),
        &["tune", "--algorithm", "grid", "--space", "spark", "--model", "m.cfg", "--seed", "7", "--out", "best.json"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let written: Json = serde_json::from_str(&std::fs::read_to_string(dir.path().join("best.json")).unwrap()).unwrap();
    assert_eq!(written, json(&o));
    assert_eq!(written["best_config"]["spark.task.cpus"], "5");
    assert_eq!(written["best_config"]["spark.scheduler.mode"], "FAIR");
    assert!(written.get("improvement_pct").is_none(), "no baseline trial, no improvement");
    // default log location
    assert!(dir.path().join("logs/tunekit-grid.jsonl").exists());
}

#[test]
fn baseline_flag_reports_improvement() {
    let dir = with_model();
    let o = tunekit(
        dir.path(),
        &["tune", "--algorithm", "crs", "--space", "spark", "--model", "m.cfg", "--baseline", "--log", "run.jsonl"],
    );
    assert_eq!(code(&o), 0);
    let s = json(&o);
    let base = s["baseline_ms"].as_u64().unwrap();
    let best = s["best_time_ms"].as_u64().unwrap();
    let pct = s["improvement_pct"].as_f64().unwrap();
    assert!((pct - (base - best) as f64 / base as f64 * 100.0).abs() < 0.01);

    let b = tunekit(dir.path(), &["best", "--log", "run.jsonl", "--space", "spark"]);
    assert_eq!(code(&b), 0);
    let bj = json(&b);
    assert_eq!(bj["best_time_ms"], s["best_time_ms"]);
    assert_eq!(bj["best_config"], s["best_config"]);
    assert_eq!(bj["improvement_pct"], s["improvement_pct"]);
}

#[test]
fn conflicting_algorithms_are_usage_errors() {
    let dir = with_model();
    let o = tunekit(
        dir.path(),
        &["tune", "--algorithm", "grid", "--algorithm", "crs", "--space", "spark", "--model", "m.cfg"],
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn other_argument_errors_exit_one() {
    let dir = with_model();
    let cases: &[&[&str]] = &[
        &["tune", "--algorithm", "grid", "--space", "spark"],
        &["tune", "--algorithm", "grid", "--space", "spark", "--model", "m.cfg", "--replay", "x.jsonl"],
        &["tune", "--algorithm", "bogus", "--space", "spark", "--model", "m.cfg"],
        &["tune", "--algorithm", "grid", "--space", "nowhere.toml", "--model", "m.cfg"],
        &["tune", "--algorithm", "grid", "--space", "spark", "--model", "m.cfg", "--fix", "spark.task.cpus=99"],
        &["tune", "--algorithm", "grid", "--space", "spark", "--model", "m.cfg", "--sweep", "no.such.param"],
        &["tune", "--algorithm", "crs", "--space", "spark", "--model", "m.cfg", "--top-k", "100"],
        &["tune", "--algorithm", "crs", "--space", "spark", "--model", "missing.cfg"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(code(&tunekit(dir.path(), args)), 1, "{args:?}");
    }
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&tunekit(dir.path(), &["--help"])), 0);
    assert_eq!(code(&tunekit(dir.path(), &["--version"])), 0);
    assert_eq!(code(&tunekit(dir.path(), &["tune", "--help"])), 0);
}

#[test]
fn replay_miss_is_an_infrastructure_error() {
    let dir = tempfile::tempdir().unwrap();
    let replay = fixture("hadoop_crs.jsonl");
    let o = tunekit(
        dir.path(),
        &["tune", "--algorithm", "crs", "--space", "hadoop", "--replay", replay.to_str().unwrap(), "--log", "r.jsonl"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("lookup"));
    // the failing trial is still on record
    let text = std::fs::read_to_string(dir.path().join("r.jsonl")).unwrap();
    assert!(text.contains("\"status\":\"error\""));
}

#[test]
fn replay_of_a_complete_table_succeeds() {
    // Fixing every parameter to the recorded best leaves a one-point grid.
    let dir = tempfile::tempdir().unwrap();
    let replay = fixture("hadoop_grid.jsonl");
    let mut args =
        vec!["tune", "--algorithm", "grid", "--space", "hadoop", "--replay", replay.to_str().unwrap(), "--no-finer"];
    let fixes = ["mapreduce.map.memory.mb=512", "dfs.blocksize=192", "mapreduce.tasktracker.map.tasks.maximum=128"];
    for f in &fixes {
        args.extend(["--fix", f]);
    }
    let o = tunekit(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["best_time_ms"], 99_000);
    assert_eq!(json(&o)["trials"], 1);
}

#[test]
fn best_on_fixtures_and_edge_logs() {
    let dir = tempfile::tempdir().unwrap();
    let o = tunekit(
        dir.path(),
        &["best", "--log", fixture("spark_crs.jsonl").to_str().unwrap(), "--space", "spark"],
    );
    assert_eq!(code(&o), 0);
    let j = json(&o);
    assert_eq!(j["best_time_ms"], 26_000);
    assert_eq!(j["improvement_pct"], 77.78);
    assert_eq!(j["best_config"]["spark.network.timeout"], "137");

    std::fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    assert_eq!(code(&tunekit(dir.path(), &["best", "--log", "empty.jsonl"])), 3);

    let one = r#"{"algorithm":"grid","config":{"x":"1"},"duration_ms":5,"event":"trial","phase_tag":"grid","platform_tag":"custom","status":"ok","ts":"2021-03-01T10:00:00.000Z"}"#;
    std::fs::write(dir.path().join("one.jsonl"), format!("{one}\n")).unwrap();
    let o = tunekit(dir.path(), &["best", "--log", "one.jsonl"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["best_time_ms"], 5);

    assert_eq!(code(&tunekit(dir.path(), &["best", "--log", "absent.jsonl"])), 2);
}

#[test]
fn presets_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    for (name, n) in [("hadoop", 12), ("spark", 11)] {
        let a = tunekit(dir.path(), &["presets", "--space", name]);
        let b = tunekit(dir.path(), &["presets", "--space", name]);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout);
        let text = String::from_utf8(a.stdout).unwrap();
        assert_eq!(text.matches("[[param]]").count(), n);
    }
    assert_eq!(code(&tunekit(dir.path(), &["presets", "--space", "flink"])), 1);
}

#[test]
fn space_file_from_presets_drives_a_run() {
    let dir = with_model();
    let dump = tunekit(dir.path(), &["presets", "--space", "spark"]);
    std::fs::write(dir.path().join("space.toml"), &dump.stdout).unwrap();
    let a = tunekit(
        dir.path(),
        &["tune", "--algorithm", "crs", "--space", "space.toml", "--model", "m.cfg", "--seed", "3", "--log", "a.jsonl"],
    );
    let b = tunekit(
        dir.path(),
        &["tune", "--algorithm", "crs", "--space", "spark", "--model", "m.cfg", "--seed", "3", "--log", "b.jsonl"],
    );
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(json(&a)["best_config"], json(&b)["best_config"]);
}

fn write_stub_profile(dir: &Path, run: &str) {
    std::fs::write(dir.join("site.tmpl"), "timeout=${spark.network.timeout}\n").unwrap();
    std::fs::write(
        dir.join("profile.toml"),
        format!(
            "run = {run:?}\ntimeout_ms = 5000\npre_run = [\"true\"]\n\n[[config_targets]]\ntemplate = \"site.tmpl\"\noutput = \"site.conf\"\n"
        ),
    )
    .unwrap();
}

#[test]
fn profile_runs_real_commands() {
    let dir = tempfile::tempdir().unwrap();
    write_stub_profile(dir.path(), "grep -q timeout= site.conf");
    let o = tunekit(
        dir.path(),
        &[
            "tune",
            "--algorithm",
            "grid",
            "--space",
            "spark",
            "--profile",
            "profile.toml",
            "--sweep",
            "spark.network.timeout",
            "--no-finer",
            "--log",
            "p.jsonl",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["trials"], 5);
    assert!(std::fs::read_to_string(dir.path().join("site.conf")).unwrap().starts_with("timeout="));
}

#[test]
fn all_trials_failing_means_no_incumbent() {
    let dir = tempfile::tempdir().unwrap();
    write_stub_profile(dir.path(), "exit 1");
    let o = tunekit(
        dir.path(),
        &[
            "tune",
            "--algorithm",
            "grid",
            "--space",
            "spark",
            "--profile",
            "profile.toml",
            "--sweep",
            "spark.task.cpus",
            "--no-finer",
            "--log",
            "p.jsonl",
        ],
    );
    assert_eq!(code(&o), 3);
    let o = tunekit(
        dir.path(),
        &[
            "tune",
            "--algorithm",
            "crs",
            "--space",
            "spark",
            "--profile",
            "profile.toml",
            "--round-size",
            "3",
            "--top-k",
            "1",
            "--log",
            "c.jsonl",
        ],
    );
    assert_eq!(code(&o), 3);
}

#[test]
fn broken_template_is_an_infrastructure_error() {
    let dir = tempfile::tempdir().unwrap();
    write_stub_profile(dir.path(), "true");
    std::fs::write(dir.path().join("site.tmpl"), "x=${not.a.param}\n").unwrap();
    let o = tunekit(dir.path(), &["tune", "--algorithm", "grid", "--space", "spark", "--profile", "profile.toml"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn max_parallel_does_not_change_results() {
    let dir = with_model();
    let run = |p: &str, log: &str| {
        let o = tunekit(
            dir.path(),
            &[
                "tune",
                "--algorithm",
                "crs",
                "--space",
                "spark",
                "--model",
                "m.cfg",
                "--seed",
                "9",
                "--max-parallel",
                p,
                "--log",
                log,
            ],
        );
        assert_eq!(code(&o), 0);
        o.stdout
    };
    assert_eq!(run("1", "s.jsonl"), run("8", "p.jsonl"));
}
