use std::path::Path;
use std::process::Command;

fn run(cmd: &str, config: &str, dir: &Path) -> (i32, String) {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_openbath"))
        .args([cmd, "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

const SWEEP: &str = r#"
[bath]
j = 1.0
gamma = 1000.0
[emitter]
omega = 1.0
[run.sweep]
variable = "gamma"
start = 100.0
stop = 1e5
points = 13
"#;

#[test]
fn sweep_writes_csv_manifest_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = run("sweep", SWEEP, dir.path());
    assert_eq!(code, 0);
    assert!(stdout.contains("fit_exponent: 0.33"), "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# schema_version: 1");
    assert!(lines[1].starts_with("# config_sha256: ") && lines[1].len() == 17 + 64);
    let header: Vec<&str> = lines[4].split(',').collect();
    assert_eq!(*header.last().unwrap(), "method");
    assert_eq!(lines.len(), 5 + 13);
    assert!(lines[5..].iter().all(|l| l.ends_with(",green")));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "sweep");
    assert_eq!(manifest["files"][0], "sweep.csv");
}

#[test]
fn identical_runs_give_identical_data() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run("poles", SWEEP, a.path()).0, 0);
    assert_eq!(run("poles", SWEEP, b.path()).0, 0);
    let read = |d: &Path| std::fs::read(d.join("out/poles.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run("poles", "[bath]\ngamma = 10.0\ngama = 3.0\n", dir.path());
    assert_eq!(code, 2);
    let (code, _) = run("sweep", "[bath]\ngamma = 10.0\n", dir.path());
    assert_eq!(code, 2);
}

#[test]
fn failed_sweep_points_exit_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[bath]
j = 1.0
gamma = 500.0
[emitter]
omega = 0.3
[run.sweep]
variable = "nb"
values = [1.0, 4.0, 6.0, 8.0, 10.0]
"#;
    let (code, stdout) = run("sweep", cfg, dir.path());
    assert_eq!(code, 3);
    assert!(stdout.contains("failure: nb = 1"), "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.ends_with(",finite_size")).count(), 4);
}

#[test]
fn oracle_compare_reports_deviation_per_ring() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[bath]
j = 1.0
gamma = 200.0
[emitter]
omega = 1.0
[run]
t_max = 10.0
n_times = 21
nb = [20, 150]
"#;
    let (code, stdout) = run("oracle-compare", cfg, dir.path());
    assert_eq!(code, 0);
    assert!(stdout.contains("max_deviation_nb20") && stdout.contains("alpha_nb150: 5.69"));
    let csv = std::fs::read_to_string(dir.path().join("out/oracle_compare.csv")).unwrap();
    assert!(csv.contains("t,green,oracle_nb20,oracle_nb150,method"));
}

#[test]
fn g2_and_classify_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[bath]
j = 1.0
gamma = 1000.0
[emitter]
omega = 0.3
delta = -0.3
u = 0.3
drive_eps = 1e-4
[run]
t_max = 100.0
n_times = 11
"#;
    let (code, stdout) = run("g2", cfg, dir.path());
    assert_eq!(code, 0);
    let g2: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("g2_zero: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(g2 < 0.2);
    let cfg = "[bath]\nband_kind = \"cosine_3d\"\nj = 0.0\ngamma = 100.0\n";
    let (code, stdout) = run("classify", cfg, dir.path());
    assert_eq!(code, 0);
    assert!(stdout.contains("d_over_mu: 1.5") && stdout.contains("regime: integer"));
}
