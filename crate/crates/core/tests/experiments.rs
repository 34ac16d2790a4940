use std::process::Command;

use rbcert::experiments::*;

fn small(dir: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        rb_size: 3,
        n_sweep: 50,
        output_dir: dir.to_path_buf(),
        ..Default::default()
    }
}

#[test]
fn artifact_roundtrip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let a = run_offline(&cfg).unwrap();
    assert_eq!(a.e3.dim(), xvector(3));
    let back = Artifact::load(&Artifact::path_in(dir.path())).unwrap();
    assert_eq!(back, a);
    assert_eq!(back.to_json().unwrap(), a.to_json().unwrap());
}

fn xvector(n: usize) -> usize {
    1 + 3 * n + 2 * n * n
}

#[test]
fn rb_size_one_gives_d_six() {
    let cfg = ExperimentConfig {
        rb_size: 1,
        ..Default::default()
    };
    assert_eq!(build_artifact(&cfg).unwrap().e3.dim(), 6);
}

#[test]
fn sweep_csv_is_deterministic_and_parses() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let mut csv = Vec::new();
    for d in [&d1, &d2] {
        let cfg = small(d.path());
        let a = run_offline(&cfg).unwrap();
        let out = run_sweep(&a, &cfg).unwrap();
        assert!(out.plots.iter().all(|p| std::fs::read_to_string(p).unwrap().starts_with("<svg")));
        csv.push(std::fs::read(&out.csv).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
    let text = String::from_utf8(csv.pop().unwrap()).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    let rows = records_from_csv(&text).unwrap();
    assert_eq!(rows.len(), 53);
    assert!(rows.windows(2).all(|w| w[0].mu < w[1].mu));
    assert_eq!(records_to_csv(&rows), text);
    for r in &rows {
        assert!(r.true_error <= r.e1 * (1.0 + 1e-10));
        assert!(r.e1 >= 0.0 && r.e2 >= 0.0 && r.e2dd >= 0.0 && r.e3 >= 0.0);
    }
}

#[test]
fn mismatched_config_rejected() {
    let cfg = small(std::path::Path::new("unused"));
    let a = build_artifact(&cfg).unwrap();
    let other = ExperimentConfig { rb_size: 4, ..cfg.clone() };
    assert!(evaluate_sweep(&a, &other).is_err());
    let other = ExperimentConfig { n_cells: 100, ..cfg };
    assert!(evaluate_sweep(&a, &other).is_err());
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rbcert")).args(args).output().unwrap()
}

#[test]
fn cli_runs_and_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    let out = dir.path().join("out");
    std::fs::write(&conf, format!("rb_size = 2\nn_sweep = 20\noutput_dir = {}\n", out.display())).unwrap();
    let conf = conf.to_str().unwrap();

    let o = cli(&["offline", "--config", conf]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("two_prod:"));
    let o = cli(&["sweep", "--config", conf]);
    assert!(o.status.success());
    assert!(out.join(CSV_FILE).exists());
    let o = cli(&["floors", "--config", conf]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("predicted E2 floor"));

    // override with a different basis size than the artifact
    let o = cli(&["sweep", "--config", conf, "--rb-size", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["offline", "--config", conf, "--mu-min", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["offline", "--config", "/nonexistent/file.conf"]);
    assert_eq!(o.status.code(), Some(1));
}
