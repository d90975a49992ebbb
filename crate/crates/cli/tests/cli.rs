use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn eelar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eelar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn example_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.toml")
}

const SHORT: [&str; 4] = ["--preset", "desk", "--duration_s", "20"];

#[test]
fn run_twice_gives_identical_csv() {
    let args = [
        &["run"][..],
        &SHORT[..],
        &["--format", "csv", "--protocol", "DSR", "--seed", "4"],
    ]
    .concat();
    let a = eelar(&args);
    let b = eelar(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("protocol,seed,data_sent,data_delivered,control_total"));
    assert!(lines.next().unwrap().starts_with("DSR,4,"));
}

#[test]
fn trace_twice_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a.tr", "b.tr"].iter().map(|n| dir.path().join(n)).collect();
    for p in &paths {
        let out = eelar(
            &[
                &["trace"][..],
                &SHORT[..],
                &["--protocol", "AODV", "--out", p.to_str().unwrap()],
            ]
            .concat(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(stderr(&out).contains("data_delivered"));
    }
    let a = fs::read(&paths[0]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, fs::read(&paths[1]).unwrap());
    let first = String::from_utf8(a).unwrap().lines().next().unwrap().to_string();
    assert_eq!(first.split('\t').count(), 8);
}

#[test]
fn invalid_values_exit_nonzero_naming_fields() {
    let out = eelar(&[
        "run",
        "--preset",
        "desk",
        "--tx_range_m",
        "-1",
        "--set",
        "cbr_fraction=2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("tx_range_m") && err.contains("cbr_fraction"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_field_and_bad_preset_are_rejected() {
    let out = eelar(&["run", "--set", "warp_factor=9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("warp_factor"));
    let out = eelar(&["run", "--preset", "huge"]);
    assert_eq!(out.status.code(), Some(2));
    let out = eelar(&["sweep", "overhead-vs-weather"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_file_override_preset() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.toml");
    fs::write(&file, "n_nodes = 40\nseed = 9\n").unwrap();
    let out = eelar(&[
        "config",
        "--preset",
        "desk",
        "--config",
        file.to_str().unwrap(),
        "--set",
        "seed=10",
        "--seed",
        "11",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("n_nodes = 40"));
    assert!(text.contains("seed = 11"));
    assert!(text.contains("area_w_m = 500.0"));
}

#[test]
fn shipped_example_config_runs() {
    let cfg = example_config();
    let out = eelar(&["run", "--config", cfg.to_str().unwrap(), "--duration_s", "10"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("delivery_ratio"));
}

#[test]
fn sweep_writes_csv_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let plots = dir.path().join("plots");
    let out = eelar(&[
        "sweep",
        "delivery-vs-n",
        "--duration_s",
        "10",
        "--values",
        "10,20",
        "--seeds",
        "1,2",
        "--protocols",
        "EELAR,AODV,DSR",
        "--out",
        csv.to_str().unwrap(),
        "--plot-dir",
        plots.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "experiment,protocol,param_name,param_value,seed,data_sent,data_delivered,control_total,control_overhead,delivery_ratio"
    );
    // 3 protocols x 2 values x (2 seeds + mean)
    assert_eq!(lines.len(), 1 + 18);
    assert_eq!(lines.iter().filter(|l| l.contains(",mean,")).count(), 6);
    let mut files: Vec<_> = fs::read_dir(&plots).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert_eq!(
        files,
        [
            "delivery-vs-n_AODV.dat",
            "delivery-vs-n_DSR.dat",
            "delivery-vs-n_EELAR.dat"
        ]
    );
}

#[test]
fn areas_sweep_refuses_other_protocols() {
    let out = eelar(&["sweep", "overhead-vs-areas", "--protocols", "AODV", "--seeds", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("EELAR"));
}
