use std::path::Path;
use std::process::{Command, Output};

fn wdmsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wdmsim"))
        .args(args)
        .env_remove("WDM_WORKERS")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn avg_sweep_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "avg.toml",
        "[sweep]\nparameter = \"d_x\"\nvalues = [2.0, 3.0]\nensemble = 2\nseed = 5\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, workers) in [(&a, "1"), (&b, "4")] {
        let o = wdmsim(&["avg-sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", workers]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("d_x_m,se_svd_mean,"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn sweep_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let svg = dir.path().join("s.svg");
    let o = wdmsim(&[
        "sweep",
        "--param",
        "theta_s",
        "--range",
        "0:30:4",
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta_s_deg,se_svd,se_mmse,se_mr,se_plain,below_far_field,error");
    assert_eq!(lines.len(), 5);
    assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn pattern_prints_to_stdout() {
    let o = wdmsim(&["pattern", "--preset", "full"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "theta_deg,n19,n21,n26");
    assert_eq!(text.lines().count(), 1802);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[geometry]\nl_s = -1.0\n");
    assert_eq!(wdmsim(&["sweep", "--config", &bad]).status.code(), Some(1));
    let unknown = write(dir.path(), "unknown.toml", "[geometry]\nlength = 1.0\n");
    assert_eq!(wdmsim(&["sweep", "--config", &unknown]).status.code(), Some(1));
    assert_eq!(wdmsim(&["sweep", "--range", "1:2"]).status.code(), Some(1));
    assert_eq!(wdmsim(&["frobnicate"]).status.code(), Some(1));

    let missing = dir.path().join("nope.toml");
    assert_eq!(
        wdmsim(&["sweep", "--config", missing.to_str().unwrap()]).status.code(),
        Some(3)
    );
    // A file where the output directory should be.
    let blocker = write(dir.path(), "blocker", "");
    let out = format!("{blocker}/x.chan");
    assert_eq!(wdmsim(&["dump-channel", "--out", &out]).status.code(), Some(3));

    let tight = write(dir.path(), "tight.toml", "[quadrature]\nmax_panels = 2\n");
    let out = dir.path().join("t.chan");
    assert_eq!(
        wdmsim(&["dump-channel", "--config", &tight, "--out", out.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn failed_sweep_points_are_flagged_not_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let tight = write(dir.path(), "tight.toml", "[quadrature]\nmax_panels = 2\n");
    let o = wdmsim(&["sweep", "--config", &tight, "--range", "0:1:3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().skip(1).all(|l| !l.ends_with(',')));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        wdm_los::experiments::FileConfig::parse(&text)
            .and_then(|f| f.resolve(None))
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 6);
}
