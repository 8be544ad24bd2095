use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn muskat(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(args)
        .env("MUSKAT_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const STABLE: &str = r#"
mode = "graph"
n_points = 64
t_final = 0.1
seed = 3
[initial_data]
kind = "cosine"
amplitude = 0.3
wavenumber = 2
"#;

#[test]
fn run_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "stable.toml", STABLE);
    let out = dir.path().join("run");
    let r = muskat(
        &["run", "--config", &cfg, "--output", out.to_str().unwrap()],
        "0",
    );
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    for f in ["config.json", "norms.csv", "status.json", "snapshots"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let header = fs::read_to_string(out.join("norms.csv")).unwrap();
    assert!(header.starts_with(
        "time,l_inf,l2,lipschitz,wiener1,hs_half,hs_one,hs_three_half,blowup_proxy\n"
    ));

    let v = muskat(&["verify", "--log", out.to_str().unwrap()], "0");
    assert_eq!(v.status.code(), Some(0));
    let verdicts: serde_json::Value = serde_json::from_slice(&v.stdout).unwrap();
    let arr = verdicts.as_array().unwrap();
    assert_eq!(arr.len(), 6);
    for item in arr {
        let keys: Vec<&String> = item.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["details", "status", "theorem_id", "worst_margin"]);
        assert_ne!(item["status"], "Violated", "{item}");
    }
}

#[test]
fn reruns_are_bitwise_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "stable.toml", STABLE);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        muskat(
            &["run", "--config", &cfg, "--output", a.to_str().unwrap()],
            "1"
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        muskat(
            &["run", "--config", &cfg, "--output", b.to_str().unwrap()],
            "4"
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        fs::read(a.join("norms.csv")).unwrap(),
        fs::read(b.join("norms.csv")).unwrap()
    );
    let mut names: Vec<_> = fs::read_dir(a.join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        let x = fs::read(a.join("snapshots").join(&n)).unwrap();
        let y = fs::read(b.join("snapshots").join(&n)).unwrap();
        assert_eq!(x, y, "{n:?}");
    }
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(
        dir.path(),
        "typo.toml",
        "mode = \"graph\"\nn_points = 64\nt_final = 1.0\nvisocity = 1.0\n",
    );
    let r = muskat(&["run", "--config", &typo], "0");
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("visocity"));

    let unstable = write(
        dir.path(),
        "neg.toml",
        "mode = \"graph\"\nn_points = 64\nt_final = 1.0\nrho_bar = -1.0\n",
    );
    let r = muskat(&["run", "--config", &unstable], "0");
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("rho_bar"));

    let r = muskat(
        &[
            "run",
            "--config",
            dir.path().join("missing.toml").to_str().unwrap(),
        ],
        "0",
    );
    assert_eq!(r.status.code(), Some(1));

    let r = muskat(&["run", "--config", &typo], "many");
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn turning_run_exits_two_and_keeps_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "turn.toml",
        "mode = \"curve\"\nn_points = 128\nt_final = 1.0\n[initial_data]\nkind = \"turning_profile\"\nsteepness = 0.98\n",
    );
    let out = dir.path().join("turn");
    let r = muskat(
        &["run", "--config", &cfg, "--output", out.to_str().unwrap()],
        "0",
    );
    assert_eq!(r.status.code(), Some(2));
    let status: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("status.json")).unwrap()).unwrap();
    assert_eq!(status["status"], "Turned");
    assert!(status["turning_time"].as_f64().unwrap() > 0.0);
    assert!(out.join("turning.csv").exists());

    let v = muskat(&["verify", "--log", out.to_str().unwrap()], "0");
    let verdicts: serde_json::Value = serde_json::from_slice(&v.stdout).unwrap();
    assert_eq!(verdicts[0]["theorem_id"], "Turning");
    assert_eq!(verdicts[0]["status"], "Holds");
}

#[test]
fn norms_and_convergence_print_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "stable.toml", STABLE);
    let r = muskat(&["norms", "--config", &cfg], "0");
    assert_eq!(r.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!((report["l_inf"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    assert!((report["wiener1"].as_f64().unwrap() - 0.6).abs() < 1e-12);

    // the flux of a single mode has a spectral tail, resolved from N = 32 on
    let fine = write(
        dir.path(),
        "fine.toml",
        &STABLE.replace("n_points = 64", "n_points = 128"),
    );
    let mut csv = String::from("x,f\n");
    for j in 0..32 {
        let x = j as f64 * 2.0 * std::f64::consts::PI / 32.0;
        csv.push_str(&format!("{x:.17e},{:.17e}\n", 0.5 * (3.0 * x).sin()));
    }
    let field = write(dir.path(), "field.csv", &csv);
    let r = muskat(&["norms", "--field", &field], "0");
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!((report["lipschitz"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    let bad = write(dir.path(), "bad.csv", "x,g\n0,1\n1,2\n");
    assert_eq!(
        muskat(&["norms", "--field", &bad], "0").status.code(),
        Some(1)
    );

    let out = dir.path().join("conv");
    let r = muskat(
        &[
            "convergence",
            "--config",
            &fine,
            "--output",
            out.to_str().unwrap(),
        ],
        "0",
    );
    assert_eq!(r.status.code(), Some(0));
    let conv: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    for e in conv["errors"].as_array().unwrap() {
        assert!(e.as_f64().unwrap() < 1e-10);
    }
    assert!(out.join("convergence.json").exists());
}
