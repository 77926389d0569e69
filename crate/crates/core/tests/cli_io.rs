use std::fs;
use std::path::Path;
use std::process::Command;

use vortex2ch::config::{parse_config, InitialDataSpec, InitialKind};
use vortex2ch::diagnostics::energy;
use vortex2ch::initial::generate_initial_data;
use vortex2ch::output::{read_snapshot, write_snapshot};
use vortex2ch::runner::execute;
use vortex2ch::{Field, Grid, SpectralWorkspace, State};

const SMALL: &str = r#"
t_final = 0.5
[grid]
n = 128
length = 60.0
[model]
preset = "vorticity"
A = 1.0
[initial]
kind = "sech2"
amplitude = 0.4
zeta_amplitude = 0.2
width = 2.0
[diagnostics]
interval = 0.1
[snapshots]
times = [0.25]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortex2ch"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(SMALL).unwrap();
    execute(&cfg, &tmp.path().join("a")).unwrap();
    execute(&cfg, &tmp.path().join("b")).unwrap();
    let a = dir_files(&tmp.path().join("a"));
    let b = dir_files(&tmp.path().join("b"));
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"manifest.json"));
    assert!(names.contains(&"timeseries.csv"));
    assert_eq!(names.iter().filter(|n| n.starts_with("snapshots")).count(), 3);
    assert_eq!(a, b);
}

#[test]
fn timeseries_has_a_row_per_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(SMALL).unwrap();
    execute(&cfg, tmp.path()).unwrap();
    let text = fs::read_to_string(tmp.path().join("timeseries.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t,E,min_ux,max_ux"));
    let times: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(times.len(), 6);
    for (k, t) in times.iter().enumerate() {
        assert!((t - 0.1 * k as f64).abs() < 1e-14);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "completed");
    assert_eq!(manifest["config_hash"], cfg.hash());
}

#[test]
fn energy_target_matches_bisection() {
    let g = Grid::new(512, 40.0 * std::f64::consts::PI).unwrap();
    let mut spec = InitialDataSpec::gaussian(1.0, 2.0);
    spec.zeta_amplitude = 0.5;
    spec.target_e0 = Some(0.1);
    let d = generate_initial_data(&spec, g).unwrap();

    let mut ws = SpectralWorkspace::new(g);
    let c = 0.5 * g.length();
    let e = |ws: &mut SpectralWorkspace, k: f64| {
        let s = State {
            t: 0.0,
            u: Field::from_fn(g, |x| k * (-((x - c) / 2.0).powi(2)).exp()),
            zeta: Field::from_fn(g, |x| 0.5 * k * (-((x - c) / 2.0).powi(2)).exp()),
        };
        energy(ws, &s)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if e(&mut ws, mid) < 0.1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((d.scale - lo).abs() < 1e-12, "{} vs {lo}", d.scale);
    assert!((d.energy - 0.1).abs() < 1e-10);
}

#[test]
fn snapshot_file_feeds_initial_data() {
    let tmp = tempfile::tempdir().unwrap();
    let g = Grid::new(64, 30.0).unwrap();
    let s = State {
        t: 1.25,
        u: Field::from_fn(g, |x| 0.3 * (-(x - 15.0f64).powi(2)).exp()),
        zeta: Field::from_fn(g, |x| -0.1 * (-(x - 14.0f64).powi(2)).exp()),
    };
    let path = tmp.path().join("snap.csv");
    write_snapshot(&s, &path).unwrap();
    assert_eq!(read_snapshot(&path, Some(g)).unwrap(), s);
    assert!(read_snapshot(&path, Some(Grid::new(64, 31.0).unwrap())).is_err());

    let mut spec = InitialDataSpec::gaussian(0.0, 1.0);
    spec.kind = InitialKind::File;
    spec.file = Some(path);
    let d = generate_initial_data(&spec, g).unwrap();
    assert_eq!(d.state.u, s.u);
    assert_eq!(d.state.zeta, s.zeta);
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_config(tmp.path(), "good.toml", SMALL);
    let st = bin()
        .args(["simulate"])
        .arg(&good)
        .arg("--out")
        .arg(tmp.path().join("run"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(tmp.path().join("run/manifest.json").exists());

    let bad = write_config(tmp.path(), "bad.toml", "[grid]\nn = 300\nlenght = 3.0\n");
    let out = bin().arg("simulate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lenght") && err.contains("grid.n"), "{err}");

    let audit = bin()
        .arg("audit")
        .arg(&good)
        .arg("--out")
        .arg(tmp.path().join("audit"))
        .status()
        .unwrap();
    assert_eq!(audit.code(), Some(0));
    assert!(tmp.path().join("audit/audit.csv").exists());
}

#[test]
fn cli_reports_breaking() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
t_final = 2.0
[grid]
n = 1024
length = 31.4
[model]
preset = "generalized-2ch"
[initial]
kind = "steep_front"
amplitude = 2.0
[step]
breaking_threshold = 8.0
"#;
    let cfg = write_config(tmp.path(), "break.toml", text);
    let st = bin()
        .arg("simulate")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("run"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "breaking_detected");
    assert!(m["breaking_time"].as_f64().unwrap() < 2.0);
}

#[test]
fn overrides_change_the_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let run = |extra: &[&str]| {
        let out = bin().arg("check-config").arg(&cfg).args(extra).output().unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let base = run(&[]);
    assert_eq!(base, run(&[]));
    let changed = run(&["--model.A", "2.0"]);
    assert_ne!(base, changed);
    assert_eq!(changed, run(&["--model.A=2.0"]));
    assert!(changed.contains("model.A = 2.0"));
}

#[test]
fn sweep_writes_an_index() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("mode = \"sweep\"\n{SMALL}[sweep]\n\"model.A\" = [0.0, 1.0]\n\"initial.amplitude\" = [0.1, 0.2]\n");
    let cfg = parse_config(&text).unwrap();
    let summary = execute(&cfg, tmp.path()).unwrap();
    assert_eq!(summary.exit_code(), 0);
    let index = fs::read_to_string(tmp.path().join("index.csv")).unwrap();
    let lines: Vec<&str> = index.lines().collect();
    assert_eq!(lines[0], "index,dir,initial.amplitude,model.A,status,final_time");
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("1,point_0001,0.1,1.0,completed"));
    for i in 0..4 {
        assert!(tmp.path().join(format!("point_{i:04}/manifest.json")).exists());
    }
}
